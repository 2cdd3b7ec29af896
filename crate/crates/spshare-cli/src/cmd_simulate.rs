//! `spshare simulate`: fail a set of nodes, decode from the survivors, and
//! check the result against the stored source.

use std::path::PathBuf;

use anyhow::{bail, Context};
use serde::Serialize;
use spshare::codec::encode_matrix;
use spshare::placement::reconstruct_from_nodes;

use crate::args::parse_node_list;
use crate::report::to_json_pretty;
use crate::store;

#[derive(clap::Args, Debug)]
pub struct SimulateArgs {
    /// Directory written by encode
    #[arg(long)]
    pub dir: PathBuf,

    /// Comma separated ids of the nodes to fail
    #[arg(long, default_value = "")]
    pub fail_nodes: String,

    /// Also write the reconstructed matrix here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report {
    command: &'static str,
    failed: Vec<u32>,
    survivors: Vec<u32>,
    tolerance_xi: u32,
    blocks_read: u32,
    rows: u32,
    cols: u32,
    nnz: u64,
    /// None when the directory has no stored source to compare against.
    matches_source: Option<bool>,
}

pub fn run(args: SimulateArgs) -> anyhow::Result<()> {
    let plan = store::read_plan(&args.dir)?;
    let failed = parse_node_list(&args.fail_nodes)?;
    for &id in &failed {
        if id >= plan.n() {
            bail!("node {id} is out of range for a {}-node plan", plan.n());
        }
    }
    let survivors: Vec<u32> = (0..plan.n()).filter(|i| !failed.contains(i)).collect();
    if survivors.is_empty() {
        bail!("all {} nodes failed", plan.n());
    }

    let set = store::load_share_set(&args.dir, &plan, &survivors)?;
    let decoded =
        reconstruct_from_nodes(&plan, &set.masked, &set.mask, set.source_rows, &survivors)?;
    let decoded_bytes = encode_matrix(&decoded)?;

    let source_path = args.dir.join(store::SOURCE_FILE);
    let matches_source = if source_path.is_file() {
        let stored = std::fs::read(&source_path)
            .with_context(|| format!("cannot read {}", source_path.display()))?;
        if stored != decoded_bytes {
            bail!(
                "reconstruction from survivors {survivors:?} does not match {}",
                source_path.display()
            );
        }
        Some(true)
    } else {
        None
    };

    if let Some(out) = &args.out {
        std::fs::write(out, &decoded_bytes)
            .with_context(|| format!("cannot write {}", out.display()))?;
    }

    let report = Report {
        command: "simulate",
        failed,
        survivors,
        tolerance_xi: plan.xi(),
        blocks_read: set.blocks_read,
        rows: decoded.rows(),
        cols: decoded.cols(),
        nnz: decoded.nnz(),
        matches_source,
    };
    print!("{}", to_json_pretty(&report)?);
    Ok(())
}
