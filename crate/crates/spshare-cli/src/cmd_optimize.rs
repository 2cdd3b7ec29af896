//! `spshare optimize`: solve one target pair and print the optimal pad
//! distribution with its leakage split.

use std::path::PathBuf;

use serde::Serialize;
use spshare::{solve_optimal_pmf, FieldOrder, SourceModel};

use crate::args::{parse_field, BaseArg, FormatArg, TargetArgs};
use crate::report::{emit, sig12, to_json_pretty, PointRecord, SWEEP_HEADER};

#[derive(clap::Args, Debug)]
pub struct OptimizeArgs {
    /// Field order: a prime (e.g. 257) or a power of two (e.g. 2^32)
    #[arg(long, value_parser = parse_field)]
    pub q: FieldOrder,

    /// Source zero fraction, 1/q < s < 1
    #[arg(long)]
    pub s: f64,

    #[command(flatten)]
    pub targets: TargetArgs,

    /// Logarithm base for the reported leakage
    #[arg(long, value_enum, default_value = "2")]
    pub base: BaseArg,

    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,

    /// Output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Config {
    q: String,
    s: f64,
    s_r: f64,
    s_ar: f64,
    s_avg: f64,
    s_delta: f64,
    base: &'static str,
}

#[derive(Serialize)]
struct Solution {
    p1: f64,
    p2: f64,
    p3: f64,
    p1_rest: f64,
    p23_rest: f64,
    window_lo: f64,
    window_hi: f64,
    at_boundary: bool,
    realized_s_r: f64,
    realized_s_ar: f64,
    leakage_l1: f64,
    leakage_l2: f64,
    leakage_total: f64,
}

#[derive(Serialize)]
struct Report {
    command: &'static str,
    config: Config,
    unit: &'static str,
    result: Solution,
}

pub fn run(args: OptimizeArgs) -> anyhow::Result<()> {
    let src = SourceModel::new(args.q, args.s)?;
    let targets = args.targets.resolve()?;
    let base = args.base.to_log_base();
    let r = solve_optimal_pmf(&src, &targets, base)?;
    let realized = r.pmf.realized_sparsity(&src)?;

    match args.format {
        FormatArg::Json => {
            let report = Report {
                command: "optimize",
                config: Config {
                    q: args.q.to_string(),
                    s: sig12(args.s),
                    s_r: sig12(targets.s_r()),
                    s_ar: sig12(targets.s_ar()),
                    s_avg: sig12(targets.s_avg()),
                    s_delta: sig12(targets.s_delta()),
                    base: args.base.label(),
                },
                unit: args.base.unit(),
                result: Solution {
                    p1: sig12(r.pmf.p1()),
                    p2: sig12(r.pmf.p2()),
                    p3: sig12(r.pmf.p3()),
                    p1_rest: sig12(r.pmf.p1_rest()),
                    p23_rest: sig12(r.pmf.p23_rest()),
                    window_lo: sig12(r.window.0),
                    window_hi: sig12(r.window.1),
                    at_boundary: r.at_boundary,
                    realized_s_r: sig12(realized.s_r()),
                    realized_s_ar: sig12(realized.s_ar()),
                    leakage_l1: sig12(r.leakage.l1),
                    leakage_l2: sig12(r.leakage.l2),
                    leakage_total: sig12(r.leakage.total()),
                },
            };
            emit(args.out.as_deref(), &to_json_pretty(&report)?)
        }
        FormatArg::Csv => {
            let rec = PointRecord {
                s_avg: sig12(targets.s_avg()),
                s_delta: sig12(targets.s_delta()),
                s_r: sig12(targets.s_r()),
                s_ar: sig12(targets.s_ar()),
                p1: Some(sig12(r.pmf.p1())),
                p2: Some(sig12(r.pmf.p2())),
                p3: Some(sig12(r.pmf.p3())),
                leakage_l1: Some(sig12(r.leakage.l1)),
                leakage_l2: Some(sig12(r.leakage.l2)),
                leakage_total: Some(sig12(r.leakage.total())),
                feasible: true,
                infeasible_reason: None,
            };
            let content = format!("{SWEEP_HEADER}\n{}\n", rec.csv_row());
            emit(args.out.as_deref(), &content)
        }
    }
}
