//! `spshare encode`: split a matrix into two sparse shares, cut them into
//! row blocks, and lay the replicas out across node directories.

use std::path::PathBuf;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;
use spshare::codec::{encode_matrix, encode_sub_share, peek_header};
use spshare::placement::{
    break_even_sparsity, partition_share, record_bits, scaled_report, sparsity_threshold,
    storage_cost_classical, storage_cost_sparse,
};
use spshare::{
    generate_source, make_shares, solve_optimal_pmf, AssignmentPlan, FieldOrder, SourceModel,
    SparseMatrix,
};

use crate::args::{parse_field, BaseArg, TargetArgs};
use crate::report::{sig12, to_json_pretty};
use crate::store;

// Distinct tags keep the source stream and the pad stream decorrelated even
// though both derive from the one user-facing seed.
const SOURCE_SEED_TAG: u64 = 0x736f_7572_6365_2d41;
const PAD_SEED_TAG: u64 = 0x7061_645f_7374_7265;

#[derive(clap::Args, Debug)]
pub struct EncodeArgs {
    /// Field order; required with --random, optional (checked) with --input
    #[arg(long, value_parser = parse_field)]
    pub q: Option<FieldOrder>,

    /// Source zero fraction the model assumes, 1/q < s < 1
    #[arg(long)]
    pub s: f64,

    #[command(flatten)]
    pub targets: TargetArgs,

    /// Number of storage nodes (even)
    #[arg(long)]
    pub n: u32,

    /// Straggler tolerance: any n - xi nodes suffice to decode
    #[arg(long)]
    pub xi: u32,

    /// Read the source matrix from this single-matrix container file
    #[arg(long, conflicts_with_all = ["random", "rows", "cols"])]
    pub input: Option<PathBuf>,

    /// Draw a random source matrix from the declared model instead
    #[arg(long, requires = "rows", requires = "cols")]
    pub random: bool,

    #[arg(long)]
    pub rows: Option<u32>,

    #[arg(long)]
    pub cols: Option<u32>,

    /// Seed for the source draw and the pad; two distinct streams are
    /// derived from it internally
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Logarithm base for the leakage figures in the manifest
    #[arg(long, value_enum, default_value = "2")]
    pub base: BaseArg,

    /// Directory to create the node layout in
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct Config {
    q: String,
    s: f64,
    s_r: f64,
    s_ar: f64,
    s_avg: f64,
    s_delta: f64,
    n: u32,
    xi: u32,
    rows: u32,
    cols: u32,
    seed: u64,
    base: &'static str,
    source: String,
}

#[derive(Serialize)]
struct PmfJson {
    p1: f64,
    p2: f64,
    p3: f64,
    p1_rest: f64,
    p23_rest: f64,
    window_lo: f64,
    window_hi: f64,
    at_boundary: bool,
}

#[derive(Serialize)]
struct LeakageJson {
    unit: &'static str,
    per_element_l1: f64,
    per_element_l2: f64,
    per_element_total: f64,
    per_matrix: f64,
    per_node: f64,
}

#[derive(Serialize)]
struct SourceCheck {
    declared_s: f64,
    observed_zero_fraction: f64,
    z_score: f64,
    warned: bool,
}

#[derive(Serialize)]
struct StorageJson {
    index_bits: u32,
    value_bits: u32,
    expected_bits_per_node: f64,
    measured_payload_bits_total: u64,
    measured_payload_bits_per_node: f64,
    classical_bits_per_node: f64,
    sparse_beats_classical: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold_zero_fraction: Option<f64>,
    break_even_zero_fraction: f64,
    files: u32,
}

#[derive(Serialize)]
struct LayoutJson {
    plan_file: &'static str,
    source_file: &'static str,
    nodes: u32,
    blocks_per_share: u32,
    replicas_per_block: u32,
}

#[derive(Serialize)]
struct Manifest {
    command: &'static str,
    config: Config,
    pmf: PmfJson,
    leakage: LeakageJson,
    source_check: SourceCheck,
    storage: StorageJson,
    layout: LayoutJson,
}

fn load_source(args: &EncodeArgs, seed: u64) -> anyhow::Result<(SparseMatrix, String)> {
    match (&args.input, args.random) {
        (Some(path), false) => {
            let bytes =
                std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
            let m = spshare::codec::decode_matrix(&bytes)
                .with_context(|| format!("cannot parse {}", path.display()))?;
            if let Some(q) = args.q {
                if q != m.field() {
                    bail!(
                        "--q {} does not match the field {} of {}",
                        q,
                        m.field(),
                        path.display()
                    );
                }
            }
            let name = path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            Ok((m, name))
        }
        (None, true) => {
            let q = args
                .q
                .ok_or_else(|| anyhow::anyhow!("--random needs --q"))?;
            let (rows, cols) = (args.rows.unwrap(), args.cols.unwrap());
            let src = SourceModel::new(q, args.s)?;
            Ok((generate_source(rows, cols, &src, seed)?, "random".into()))
        }
        (None, false) => bail!("pass --input FILE or --random --rows R --cols C"),
        (Some(_), true) => unreachable!("clap rejects --input with --random"),
    }
}

pub fn run(args: EncodeArgs) -> anyhow::Result<()> {
    let targets = args.targets.resolve()?;
    let base = args.base.to_log_base();
    let source_seed = spshare::rng::mix64(args.seed ^ SOURCE_SEED_TAG);
    let pad_seed = spshare::rng::mix64(args.seed ^ PAD_SEED_TAG);

    let (source, source_name) = load_source(&args, source_seed)?;
    let field = source.field();
    let (rows, cols) = (source.rows(), source.cols());
    let src = SourceModel::new(field, args.s)?;

    let solved = solve_optimal_pmf(&src, &targets, base)?;
    let pmf = solved.pmf;

    let z = spshare::sharing::sparsity_z_score(&source, args.s);
    let warned = z.abs() > 5.0;
    if warned {
        eprintln!(
            "warning: source zero fraction {:.6} is {:.1} sigma away from the declared s = {}",
            source.zero_fraction(),
            z,
            args.s
        );
    }

    let pair = make_shares(&source, &pmf, pad_seed)?;
    let plan = AssignmentPlan::new(args.n, args.xi)?;
    let masked_blocks = partition_share(&pair.masked, args.n)?;
    let mask_blocks = partition_share(&pair.mask, args.n)?;

    let encode_all = |blocks: &[SparseMatrix]| -> anyhow::Result<Vec<Vec<u8>>> {
        blocks
            .par_iter()
            .enumerate()
            .map(|(t, b)| Ok(encode_sub_share(b, rows as u64, args.n, t as u32)?))
            .collect()
    };
    let masked_bytes = encode_all(&masked_blocks)?;
    let mask_bytes = encode_all(&mask_blocks)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    std::fs::write(args.out_dir.join(store::PLAN_FILE), plan.export())?;
    std::fs::write(
        args.out_dir.join(store::SOURCE_FILE),
        encode_matrix(&source)?,
    )?;
    let files = store::write_share_set(&args.out_dir, &plan, &masked_bytes, &mask_bytes)?;

    let unique_payload_bits: u128 = masked_bytes
        .iter()
        .chain(mask_bytes.iter())
        .map(|b| peek_header(b).map(|h| h.payload_bits()))
        .sum::<Result<u128, _>>()?;
    let total_payload_bits = unique_payload_bits * (args.xi as u128 + 1);
    let measured_total: u64 = total_payload_bits
        .try_into()
        .map_err(|_| anyhow::anyhow!("payload bit count exceeds u64"))?;

    let (index_bits, value_bits) = record_bits(rows as u64, cols as u64, args.n, &field);
    let leak = scaled_report(&solved.leakage, rows as u64, cols as u64, args.n, args.xi)?;
    let expected_node = storage_cost_sparse(
        targets.s_avg(),
        rows as u64,
        cols as u64,
        args.n,
        args.xi,
        &field,
    )?;
    let classical_node = storage_cost_classical(rows as u64, cols as u64, args.n, args.xi, &field)?;
    let threshold = sparsity_threshold(args.n, args.xi, &field, rows as u64, cols as u64);
    let break_even = break_even_sparsity(args.n, args.xi, &field, rows as u64, cols as u64)
        .expect("plan was validated");

    let manifest = Manifest {
        command: "encode",
        config: Config {
            q: field.to_string(),
            s: sig12(args.s),
            s_r: sig12(targets.s_r()),
            s_ar: sig12(targets.s_ar()),
            s_avg: sig12(targets.s_avg()),
            s_delta: sig12(targets.s_delta()),
            n: args.n,
            xi: args.xi,
            rows,
            cols,
            seed: args.seed,
            base: args.base.label(),
            source: source_name,
        },
        pmf: PmfJson {
            p1: sig12(pmf.p1()),
            p2: sig12(pmf.p2()),
            p3: sig12(pmf.p3()),
            p1_rest: sig12(pmf.p1_rest()),
            p23_rest: sig12(pmf.p23_rest()),
            window_lo: sig12(solved.window.0),
            window_hi: sig12(solved.window.1),
            at_boundary: solved.at_boundary,
        },
        leakage: LeakageJson {
            unit: args.base.unit(),
            per_element_l1: sig12(leak.l1),
            per_element_l2: sig12(leak.l2),
            per_element_total: sig12(leak.total()),
            per_matrix: sig12(leak.per_matrix.unwrap_or(f64::NAN)),
            per_node: sig12(leak.per_node.unwrap_or(f64::NAN)),
        },
        source_check: SourceCheck {
            declared_s: sig12(args.s),
            observed_zero_fraction: sig12(source.zero_fraction()),
            z_score: sig12(z),
            warned,
        },
        storage: StorageJson {
            index_bits,
            value_bits,
            expected_bits_per_node: sig12(expected_node),
            measured_payload_bits_total: measured_total,
            measured_payload_bits_per_node: sig12(measured_total as f64 / args.n as f64),
            classical_bits_per_node: sig12(classical_node),
            sparse_beats_classical: (measured_total as f64 / args.n as f64) < classical_node,
            threshold_zero_fraction: threshold.map(sig12),
            break_even_zero_fraction: sig12(break_even),
            files,
        },
        layout: LayoutJson {
            plan_file: store::PLAN_FILE,
            source_file: store::SOURCE_FILE,
            nodes: args.n,
            blocks_per_share: args.n,
            replicas_per_block: args.xi + 1,
        },
    };

    let text = to_json_pretty(&manifest)?;
    std::fs::write(args.out_dir.join(store::MANIFEST_FILE), &text)?;
    print!("{text}");
    Ok(())
}
