//! Run manifests and the CSV result table.

use ncdist_core::qmetric::CuttingPlaneConfig;
use ncdist_core::torus::fmt_num;
use serde::Serialize;

/// Pure-state pairs behind the sampled `L1` lower bound.
pub const L1_SAMPLES: usize = 32;

pub const CSV_HEADER: &str = "instance_id,quantity,value,lower,upper,method,iterations,time_ms";

/// Tolerances in force for a run, after overrides.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub cutting_plane: CuttingPlaneConfig,
    pub first_batch: usize,
    pub plateau: f64,
    pub max_samples: usize,
    pub l1_samples: usize,
    pub polyhedral_gap: f64,
    pub level_tol: f64,
    pub chain_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the problem file, or of the argument string for commands
    /// that take no file.
    pub input_sha256: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Per-task wall-clock times; present only with `--timings`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<Vec<(String, f64)>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub instance_id: String,
    pub quantity: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: String,
    pub iterations: usize,
    pub time_ms: f64,
}

impl Row {
    #[allow(clippy::too_many_arguments)]
    pub fn new(id: &str, quantity: &str, value: f64, lower: f64, upper: f64, method: &str, iterations: usize, time_ms: f64) -> Self {
        Self {
            instance_id: id.into(),
            quantity: quantity.into(),
            value,
            lower,
            upper,
            method: method.into(),
            iterations,
            time_ms,
        }
    }
}

/// Fixed header, 12 significant digits, `inf` for infinite values.
pub fn to_csv(rows: &[Row]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.instance_id,
            r.quantity,
            fmt_num(r.value),
            fmt_num(r.lower),
            fmt_num(r.upper),
            r.method,
            r.iterations,
            fmt_num(r.time_ms)
        ));
    }
    s
}
