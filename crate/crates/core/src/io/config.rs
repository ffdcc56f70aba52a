use std::fs;
use std::path::Path;

use crate::builder::ChampagneConfig;
use crate::error::{Error, Result};

pub fn config_to_string(cfg: &ChampagneConfig) -> Result<String> {
    serde_json::to_string_pretty(cfg).map_err(|e| Error::invalid(format!("cannot serialize configuration: {e}")))
}

/// Parses a configuration and rebuilds its derived state: greedy designs are
/// regenerated from their seeds, and bubbles not stored in the file are
/// regenerated from the layers when they fit in memory.
pub fn config_from_str(text: &str, origin: &Path) -> Result<ChampagneConfig> {
    let mut cfg: ChampagneConfig = serde_json::from_str(text).map_err(|e| Error::Format {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    cfg.restore()?;
    cfg.materialize_if_small()?;
    Ok(cfg)
}

pub fn save_config(cfg: &ChampagneConfig, path: &Path) -> Result<()> {
    let text = config_to_string(cfg)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_config(path: &Path) -> Result<ChampagneConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    config_from_str(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build_unit_ball, geometric_radii};
    use crate::gauge::{Gauge, GaugeSet};

    #[test]
    fn round_trip_is_identity() {
        for d in [2, 3] {
            let g = GaugeSet::new(d, Gauge::PhiPower { eps: 4.0 }).unwrap();
            let cfg = build_unit_ball(&g, 1.0, &geometric_radii(2)[1..], 3).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("cfg.json");
            save_config(&cfg, &path).unwrap();
            let back = load_config(&path).unwrap();
            assert_eq!(cfg, back);
            // and the text is stable
            assert_eq!(config_to_string(&cfg).unwrap(), config_to_string(&back).unwrap());
        }
    }

    #[test]
    fn malformed_file_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{\"version\": 1}").unwrap();
        assert!(matches!(load_config(&path), Err(Error::Format { .. })));
    }
}
