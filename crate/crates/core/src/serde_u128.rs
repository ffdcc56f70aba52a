//! `u128` counts as decimal strings: JSON numbers beyond `u64` do not survive
//! the buffering serde does for tagged enums.

use serde::{de, Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Text(String),
    Number(u64),
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
    match Repr::deserialize(d)? {
        Repr::Text(t) => t.parse().map_err(de::Error::custom),
        Repr::Number(n) => Ok(n as u128),
    }
}
