//! `spshare sweep`: optimal leakage along an s_avg grid at fixed gap.
//! Points are solved in parallel; output order follows the grid, so the
//! result does not depend on the thread count.

use std::path::PathBuf;

use anyhow::bail;
use rayon::prelude::*;
use serde::Serialize;
use spshare::{sweep_leakage, FieldOrder, SourceModel};

use crate::args::{parse_field, BaseArg, FormatArg};
use crate::report::{emit, points_to_csv, sig12, to_json_pretty, PointRecord};

const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(clap::Args, Debug)]
pub struct SweepArgs {
    /// Field order: a prime (e.g. 257) or a power of two (e.g. 2^32)
    #[arg(long, value_parser = parse_field)]
    pub q: FieldOrder,

    /// Source zero fraction, 1/q < s < 1
    #[arg(long)]
    pub s: f64,

    /// Grid of s_avg values: lo:hi:step, or a single value
    #[arg(long)]
    pub grid: String,

    /// Gap s_AR - s_R applied at every grid point
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub s_delta: f64,

    /// Logarithm base for the reported leakage
    #[arg(long, value_enum, default_value = "2")]
    pub base: BaseArg,

    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,

    /// Output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Inclusive arithmetic grid. A bare number is a one-point grid.
pub fn parse_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| anyhow::anyhow!("invalid grid component {p:?} in {text:?}"))
        })
        .collect::<anyhow::Result<_>>()?;
    match nums.as_slice() {
        [v] => Ok(vec![*v]),
        [lo, hi, step] => {
            if !step.is_finite() || *step <= 0.0 {
                bail!("grid step must be positive, got {step}");
            }
            if hi < lo {
                bail!("grid upper end {hi} is below lower end {lo}");
            }
            let count = ((hi - lo) / step).round() as usize + 1;
            if count > MAX_GRID_POINTS {
                bail!("grid has about {count} points, limit is {MAX_GRID_POINTS}");
            }
            let mut grid = Vec::new();
            let mut k = 0u64;
            loop {
                let v = lo + k as f64 * step;
                if v > hi + step * 1e-9 {
                    break;
                }
                grid.push(v);
                k += 1;
            }
            Ok(grid)
        }
        _ => bail!("grid must be lo:hi:step or a single value, got {text:?}"),
    }
}

#[derive(Serialize)]
struct Config {
    q: String,
    s: f64,
    s_delta: f64,
    grid: String,
    points: usize,
    base: &'static str,
}

#[derive(Serialize)]
struct Report {
    command: &'static str,
    config: Config,
    unit: &'static str,
    note: &'static str,
    points: Vec<PointRecord>,
}

pub fn run(args: SweepArgs) -> anyhow::Result<()> {
    let src = SourceModel::new(args.q, args.s)?;
    let grid = parse_grid(&args.grid)?;
    let base = args.base.to_log_base();

    let points: Vec<PointRecord> = grid
        .par_iter()
        .map(|&v| {
            let solved = sweep_leakage(&src, args.s_delta, &[v], base);
            PointRecord::from_sweep(&solved[0])
        })
        .collect();

    match args.format {
        FormatArg::Csv => emit(args.out.as_deref(), &points_to_csv(&points)),
        FormatArg::Json => {
            let report = Report {
                command: "sweep",
                config: Config {
                    q: args.q.to_string(),
                    s: sig12(args.s),
                    s_delta: sig12(args.s_delta),
                    grid: args.grid.clone(),
                    points: points.len(),
                    base: args.base.label(),
                },
                unit: args.base.unit(),
                note: "default unit is bits (log base 2), the base under which the \
                       reference point q=256, s=0.95, s_avg=0.5, s_delta=0 evaluates \
                       to 0.0864609149",
                points,
            };
            emit(args.out.as_deref(), &to_json_pretty(&report)?)
        }
    }
}
