//! Output formatting: 12-significant-digit floats, the sweep CSV schema,
//! and the stdout-or-file sink.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use spshare::{SweepOutcome, SweepPoint};

pub const SWEEP_HEADER: &str =
    "s_avg,s_delta,s_R,s_AR,p1,p2,p3,leakage_L1,leakage_L2,leakage_total,feasible";

/// Fixed-width scientific form with 12 significant digits.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Round to 12 significant digits so serialized values match `fmt12`.
pub fn sig12(x: f64) -> f64 {
    if x.is_finite() {
        fmt12(x).parse().unwrap_or(x)
    } else {
        x
    }
}

fn opt_fmt12(x: Option<f64>) -> String {
    x.map(fmt12).unwrap_or_default()
}

/// One solved or infeasible point, in the column order of `SWEEP_HEADER`.
#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub s_avg: f64,
    pub s_delta: f64,
    pub s_r: f64,
    pub s_ar: f64,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub p3: Option<f64>,
    pub leakage_l1: Option<f64>,
    pub leakage_l2: Option<f64>,
    pub leakage_total: Option<f64>,
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infeasible_reason: Option<String>,
}

impl PointRecord {
    pub fn from_sweep(point: &SweepPoint) -> Self {
        let mut rec = PointRecord {
            s_avg: sig12(point.s_avg),
            s_delta: sig12(point.s_delta),
            s_r: sig12(point.s_r),
            s_ar: sig12(point.s_ar),
            p1: None,
            p2: None,
            p3: None,
            leakage_l1: None,
            leakage_l2: None,
            leakage_total: None,
            feasible: false,
            infeasible_reason: None,
        };
        match &point.outcome {
            SweepOutcome::Solved(r) => {
                rec.p1 = Some(sig12(r.pmf.p1()));
                rec.p2 = Some(sig12(r.pmf.p2()));
                rec.p3 = Some(sig12(r.pmf.p3()));
                rec.leakage_l1 = Some(sig12(r.leakage.l1));
                rec.leakage_l2 = Some(sig12(r.leakage.l2));
                rec.leakage_total = Some(sig12(r.leakage.total()));
                rec.feasible = true;
            }
            SweepOutcome::Infeasible { reason } => {
                rec.infeasible_reason = Some(reason.clone());
            }
        }
        rec
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt12(self.s_avg),
            fmt12(self.s_delta),
            fmt12(self.s_r),
            fmt12(self.s_ar),
            opt_fmt12(self.p1),
            opt_fmt12(self.p2),
            opt_fmt12(self.p3),
            opt_fmt12(self.leakage_l1),
            opt_fmt12(self.leakage_l2),
            opt_fmt12(self.leakage_total),
            self.feasible,
        )
    }
}

pub fn points_to_csv(points: &[PointRecord]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&p.csv_row());
        out.push('\n');
    }
    out
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Write to the given file, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display())),
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}
