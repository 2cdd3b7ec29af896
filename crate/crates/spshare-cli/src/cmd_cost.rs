//! `spshare cost`: storage cost of the sparse layout against a classical
//! erasure code, either for a built-in set of reference operating points or
//! for one configuration given on the command line.

use std::path::PathBuf;

use anyhow::bail;
use serde::Serialize;
use spshare::placement::{
    break_even_sparsity, record_bits, sparsity_threshold, storage_cost_classical,
    storage_cost_sparse,
};
use spshare::{solve_optimal_pmf, FieldOrder, LogBase, SourceModel, SparsityTargets};

use crate::args::{parse_count, parse_field, FormatArg};
use crate::report::{emit, fmt12, sig12, to_json_pretty};

/// Reference operating points: (log2 q, source s, xi, n, target s_avg,
/// published leakage fraction for that line).
const REFERENCE_ROWS: [(u32, f64, u32, u32, f64, f64); 5] = [
    (32, 0.95, 2, 60, 0.9396, 0.0135),
    (32, 0.95, 4, 60, 0.9625, 0.0502),
    (32, 0.99, 4, 60, 0.9625, 0.0206),
    (32, 0.99, 5, 100, 0.9692, 0.0206),
    (20, 0.99, 5, 100, 0.9778, 0.0176),
];

/// The reference points are stated for a 1e10 x 1e10 matrix.
const REF_ROWS: u64 = 10_000_000_000;
const REF_COLS: u64 = 10_000_000_000;

#[derive(clap::Args, Debug)]
pub struct CostArgs {
    /// Evaluate the built-in reference operating points
    #[arg(long, conflicts_with_all = ["q", "n", "xi", "rows", "cols", "s_avg", "s"])]
    pub table: bool,

    #[arg(long, value_parser = parse_field)]
    pub q: Option<FieldOrder>,

    #[arg(long)]
    pub n: Option<u32>,

    #[arg(long)]
    pub xi: Option<u32>,

    /// Source matrix rows; integers or scientific notation ("1e10")
    #[arg(long, value_parser = parse_count)]
    pub rows: Option<u64>,

    /// Source matrix columns; integers or scientific notation ("1e10")
    #[arg(long, value_parser = parse_count)]
    pub cols: Option<u64>,

    /// Zero fraction both shares are tuned to
    #[arg(long)]
    pub s_avg: Option<f64>,

    /// Source zero fraction; enables the leakage fraction column
    #[arg(long)]
    pub s: Option<f64>,

    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,

    /// Output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct CostRow {
    q: String,
    n: u32,
    xi: u32,
    rows: f64,
    cols: f64,
    s_avg: f64,
    index_bits: u32,
    value_bits: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    break_even: f64,
    /// break_even minus the s_avg this row was evaluated at; only set in
    /// table mode, where s_avg is the published operating point.
    #[serde(skip_serializing_if = "Option::is_none")]
    s_avg_delta: Option<f64>,
    sparse_node_bits: f64,
    classical_node_bits: f64,
    beneficial: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_bar_published: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_bar_delta: Option<f64>,
}

#[derive(Serialize)]
struct Report {
    command: &'static str,
    mode: &'static str,
    rows: Vec<CostRow>,
}

const CSV_HEADER: &str = "q,n,xi,rows,cols,s_avg,index_bits,value_bits,threshold,break_even,\
                          s_avg_delta,sparse_node_bits,classical_node_bits,beneficial,s,eps_bar,\
                          eps_bar_published,eps_bar_delta";

fn opt12(x: Option<f64>) -> String {
    x.map(fmt12).unwrap_or_default()
}

fn csv(rows: &[CostRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.q,
            r.n,
            r.xi,
            fmt12(r.rows),
            fmt12(r.cols),
            fmt12(r.s_avg),
            r.index_bits,
            r.value_bits,
            opt12(r.threshold),
            fmt12(r.break_even),
            opt12(r.s_avg_delta),
            fmt12(r.sparse_node_bits),
            fmt12(r.classical_node_bits),
            r.beneficial,
            opt12(r.s),
            opt12(r.eps_bar),
            opt12(r.eps_bar_published),
            opt12(r.eps_bar_delta),
        ));
    }
    out
}

/// Leakage fraction: the per-node leakage of the tuned scheme over the
/// total source entropy, computed in a base-free ratio.
fn leakage_fraction(field: FieldOrder, s: f64, s_avg: f64, n: u32, xi: u32) -> anyhow::Result<f64> {
    let src = SourceModel::new(field, s)?;
    let targets = SparsityTargets::new(s_avg, s_avg)?;
    let solved = solve_optimal_pmf(&src, &targets, LogBase::E)?;
    let entropy = src.entropy(LogBase::E);
    Ok((xi as f64 + 1.0) / n as f64 * solved.leakage.total() / entropy)
}

#[allow(clippy::too_many_arguments)]
fn cost_row(
    field: FieldOrder,
    n: u32,
    xi: u32,
    rows: u64,
    cols: u64,
    s_avg: f64,
    s: Option<f64>,
    eps_published: Option<f64>,
) -> anyhow::Result<CostRow> {
    let (index_bits, value_bits) = record_bits(rows, cols, n, &field);
    let sparse = storage_cost_sparse(s_avg, rows, cols, n, xi, &field)?;
    let classical = storage_cost_classical(rows, cols, n, xi, &field)?;
    let break_even = break_even_sparsity(n, xi, &field, rows, cols)
        .ok_or_else(|| anyhow::anyhow!("n - xi - 1 leaves no data nodes"))?;
    let eps_bar = match s {
        Some(s) => Some(sig12(leakage_fraction(field, s, s_avg, n, xi)?)),
        None => None,
    };
    Ok(CostRow {
        q: field.to_string(),
        n,
        xi,
        rows: rows as f64,
        cols: cols as f64,
        s_avg: sig12(s_avg),
        index_bits,
        value_bits,
        threshold: sparsity_threshold(n, xi, &field, rows, cols).map(sig12),
        break_even: sig12(break_even),
        s_avg_delta: eps_published.map(|_| sig12(break_even - s_avg)),
        sparse_node_bits: sig12(sparse),
        classical_node_bits: sig12(classical),
        beneficial: sparse < classical,
        s: s.map(sig12),
        eps_bar,
        eps_bar_published: eps_published.map(sig12),
        eps_bar_delta: match (eps_bar, eps_published) {
            (Some(e), Some(p)) => Some(sig12(e - p)),
            _ => None,
        },
    })
}

pub fn run(args: CostArgs) -> anyhow::Result<()> {
    let (mode, rows): (&str, Vec<CostRow>) = if args.table {
        let mut out = Vec::new();
        for &(log2_q, s, xi, n, s_avg, eps) in &REFERENCE_ROWS {
            let field = FieldOrder::binary(log2_q)?;
            out.push(cost_row(
                field,
                n,
                xi,
                REF_ROWS,
                REF_COLS,
                s_avg,
                Some(s),
                Some(eps),
            )?);
        }
        ("table", out)
    } else {
        let missing = [
            ("--q", args.q.is_none()),
            ("--n", args.n.is_none()),
            ("--xi", args.xi.is_none()),
            ("--rows", args.rows.is_none()),
            ("--cols", args.cols.is_none()),
            ("--s-avg", args.s_avg.is_none()),
        ]
        .iter()
        .filter(|(_, m)| *m)
        .map(|(f, _)| *f)
        .collect::<Vec<_>>();
        if !missing.is_empty() {
            bail!("pass --table, or supply {}", missing.join(", "));
        }
        let row = cost_row(
            args.q.unwrap(),
            args.n.unwrap(),
            args.xi.unwrap(),
            args.rows.unwrap(),
            args.cols.unwrap(),
            args.s_avg.unwrap(),
            args.s,
            None,
        )?;
        ("direct", vec![row])
    };

    match args.format {
        FormatArg::Csv => emit(args.out.as_deref(), &csv(&rows)),
        FormatArg::Json => {
            let report = Report {
                command: "cost",
                mode,
                rows,
            };
            emit(args.out.as_deref(), &to_json_pretty(&report)?)
        }
    }
}
