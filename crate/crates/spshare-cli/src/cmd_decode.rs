//! `spshare decode`: rebuild the source matrix from node directories.

use std::path::PathBuf;

use anyhow::{bail, Context};
use serde::Serialize;
use spshare::codec::encode_matrix;
use spshare::placement::reconstruct_from_nodes;

use crate::args::parse_node_list;
use crate::report::to_json_pretty;
use crate::store;

#[derive(clap::Args, Debug)]
pub struct DecodeArgs {
    /// Directory written by encode
    #[arg(long)]
    pub dir: PathBuf,

    /// Comma separated node ids to read from (default: every node
    /// directory that exists)
    #[arg(long)]
    pub nodes: Option<String>,

    /// Write the decoded matrix here (single-matrix container)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Report {
    command: &'static str,
    nodes_used: Vec<u32>,
    blocks_read: u32,
    q: String,
    rows: u32,
    cols: u32,
    nnz: u64,
}

pub fn run(args: DecodeArgs) -> anyhow::Result<()> {
    let plan = store::read_plan(&args.dir)?;
    let available = match &args.nodes {
        Some(list) => {
            let ids = parse_node_list(list)?;
            for &id in &ids {
                if id >= plan.n() {
                    bail!("node {id} is out of range for a {}-node plan", plan.n());
                }
            }
            ids
        }
        None => store::scan_available(&args.dir, plan.n()),
    };
    if available.is_empty() {
        bail!("no node directories found under {}", args.dir.display());
    }

    let set = store::load_share_set(&args.dir, &plan, &available)?;
    let decoded =
        reconstruct_from_nodes(&plan, &set.masked, &set.mask, set.source_rows, &available)?;

    let bytes = encode_matrix(&decoded)?;
    std::fs::write(&args.out, &bytes)
        .with_context(|| format!("cannot write {}", args.out.display()))?;

    let report = Report {
        command: "decode",
        nodes_used: available,
        blocks_read: set.blocks_read,
        q: decoded.field().to_string(),
        rows: decoded.rows(),
        cols: decoded.cols(),
        nnz: decoded.nnz(),
    };
    print!("{}", to_json_pretty(&report)?);
    Ok(())
}
