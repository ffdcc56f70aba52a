use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::builder::ChampagneConfig;
use crate::error::{Error, Result};
use crate::wos::UnavoidabilityReport;

/// Columns of the per-layer report. `r` is 0 where the radius underflows;
/// `log_r` always carries it.
pub const REPORT_COLUMNS: [&str; 13] = [
    "layer",
    "R",
    "rho",
    "r",
    "count",
    "capacity_sum",
    "weighted_sum",
    "kappa_low",
    "kappa",
    "kappa_high",
    "samples",
    "epsilon",
    "log_r",
];

pub fn report_csv(cfg: &ChampagneConfig, report: &UnavoidabilityReport) -> String {
    let mut out = REPORT_COLUMNS.join(",");
    out.push('\n');
    for k in &report.layers {
        let l = &cfg.layers[k.layer];
        let (samples, eps) = k
            .probes
            .first()
            .map(|p| (p.estimate.n_samples, p.estimate.epsilon))
            .unwrap_or((0, 0.0));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            k.layer,
            l.placed_radius(),
            l.rho * l.scale,
            l.bubble_radius(),
            l.count(),
            l.capacity_sum,
            l.weighted_sum,
            k.kappa_hat,
            k.kappa_point,
            k.kappa_high,
            samples,
            eps,
            l.log_s()
        );
    }
    out
}

pub fn write_report(path: &Path, cfg: &ChampagneConfig, report: &UnavoidabilityReport) -> Result<()> {
    fs::write(path, report_csv(cfg, report)).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(format!("cannot serialize: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
