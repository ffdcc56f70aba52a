//! Files: configurations, verifier reports, run manifests and renderings.

mod config;
mod manifest;
mod report;
mod svg;

pub use config::{config_from_str, config_to_string, load_config, save_config};
pub use manifest::{FileDigest, RunManifest};
pub use report::{read_json, report_csv, write_json, write_report, REPORT_COLUMNS};
pub use svg::{render_svg, MAX_DRAWN_BUBBLES};
