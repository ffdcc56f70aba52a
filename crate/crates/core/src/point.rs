//! Fixed-capacity points in dimensions 2 through [`MAX_DIM`].
//!
//! Coordinates past the point's dimension are kept at zero, so norms and
//! distances can always run over the full array.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 5;

pub fn check_dim(d: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "dimension must be in 2..={MAX_DIM}, got {d}"
        )))
    }
}

#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    c: [f64; MAX_DIM],
    dim: u8,
}

impl Point {
    pub fn origin(d: usize) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&d));
        Point {
            c: [0.0; MAX_DIM],
            dim: d as u8,
        }
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        check_dim(coords.len())?;
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Point {
            c,
            dim: coords.len() as u8,
        })
    }

    /// Point with `coords` followed by zeros, padded to dimension `d`.
    pub fn padded(coords: &[f64], d: usize) -> Self {
        debug_assert!(coords.len() <= d && d <= MAX_DIM);
        let mut p = Point::origin(d);
        p.c[..coords.len()].copy_from_slice(coords);
        p
    }

    pub fn axis(d: usize, i: usize) -> Self {
        let mut p = Point::origin(d);
        p.c[i] = 1.0;
        p
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.c[..self.dim as usize]
    }

    #[inline]
    pub fn raw(&self) -> &[f64; MAX_DIM] {
        &self.c
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.c[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: f64) {
        debug_assert!(i < self.dim());
        self.c[i] = v;
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.c.iter().map(|v| v * v).sum()
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist_sq(&self, other: &Point) -> f64 {
        let mut s = 0.0;
        for i in 0..MAX_DIM {
            let t = self.c[i] - other.c[i];
            s += t * t;
        }
        s
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        self.dist_sq(other).sqrt()
    }

    #[inline]
    pub fn dot(&self, other: &Point) -> f64 {
        self.c.iter().zip(other.c.iter()).map(|(a, b)| a * b).sum()
    }

    /// `self + t * dir`
    #[inline]
    pub fn offset(&self, dir: &Point, t: f64) -> Point {
        let mut out = *self;
        for i in 0..MAX_DIM {
            out.c[i] += t * dir.c[i];
        }
        out
    }

    pub fn normalized(&self) -> Option<Point> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(*self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(mut self, rhs: Point) -> Point {
        for i in 0..MAX_DIM {
            self.c[i] += rhs.c[i];
        }
        self
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(mut self, rhs: Point) -> Point {
        for i in 0..MAX_DIM {
            self.c[i] -= rhs.c[i];
        }
        self
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(mut self, rhs: f64) -> Point {
        for v in self.c.iter_mut() {
            *v *= rhs;
        }
        self
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(deserializer)?;
        Point::from_slice(&v).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unused_coordinates_stay_zero() {
        let a = Point::from_slice(&[3.0, 4.0]).unwrap();
        let b = Point::from_slice(&[0.0, 0.0]).unwrap();
        assert_eq!(a.dist(&b), 5.0);
        assert_eq!((a * 2.0).raw()[2..], [0.0; 3]);
    }

    #[test]
    fn rejects_bad_dimension() {
        assert!(Point::from_slice(&[1.0]).is_err());
        assert!(Point::from_slice(&[0.0; 6]).is_err());
    }

    #[test]
    fn serializes_as_plain_array() {
        let p = Point::from_slice(&[0.1, -2.5, 3.0]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[0.1,-2.5,3.0]");
        let q: Point = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
