//! On-disk layout for an encoded share set:
//!
//! ```text
//! out-dir/
//!   plan.txt          placement plan (n, xi, per-node block sets)
//!   manifest.json     resolved configuration and measured figures
//!   source.sps        original matrix, single-matrix container
//!   node-<i>/
//!     masked_<t>.sps  sub-share t of the padded share A+R
//!     mask_<t>.sps    sub-share t of the pad share R
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use spshare::codec::{decode_sub_share, SubShareHeader};
use spshare::{AssignmentPlan, SparseMatrix};

pub const PLAN_FILE: &str = "plan.txt";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SOURCE_FILE: &str = "source.sps";

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ShareKind {
    Masked,
    Mask,
}

impl ShareKind {
    pub fn prefix(self) -> &'static str {
        match self {
            ShareKind::Masked => "masked",
            ShareKind::Mask => "mask",
        }
    }

    fn set(self, plan: &AssignmentPlan, node: u32) -> &[u32] {
        match self {
            ShareKind::Masked => plan.masked_set(node),
            ShareKind::Mask => plan.mask_set(node),
        }
    }
}

pub fn node_dir(root: &Path, node: u32) -> PathBuf {
    root.join(format!("node-{node}"))
}

pub fn sub_share_path(root: &Path, node: u32, kind: ShareKind, block: u32) -> PathBuf {
    node_dir(root, node).join(format!("{}_{block}.sps", kind.prefix()))
}

pub fn read_plan(dir: &Path) -> anyhow::Result<AssignmentPlan> {
    let path = dir.join(PLAN_FILE);
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    Ok(AssignmentPlan::parse(&text)?)
}

/// Nodes whose directory exists under `root`.
pub fn scan_available(root: &Path, n: u32) -> Vec<u32> {
    (0..n).filter(|&i| node_dir(root, i).is_dir()).collect()
}

/// Write every replica the plan assigns. `masked_bytes[t]` / `mask_bytes[t]`
/// hold the encoded sub-share for block `t`. Returns the file count.
pub fn write_share_set(
    root: &Path,
    plan: &AssignmentPlan,
    masked_bytes: &[Vec<u8>],
    mask_bytes: &[Vec<u8>],
) -> anyhow::Result<u32> {
    let mut files = 0;
    for node in 0..plan.n() {
        let dir = node_dir(root, node);
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
        for (kind, bytes) in [
            (ShareKind::Masked, masked_bytes),
            (ShareKind::Mask, mask_bytes),
        ] {
            for &t in kind.set(plan, node) {
                let path = sub_share_path(root, node, kind, t);
                std::fs::write(&path, &bytes[t as usize])
                    .with_context(|| format!("cannot write {}", path.display()))?;
                files += 1;
            }
        }
    }
    Ok(files)
}

/// All blocks of both shares, read back from the given nodes.
pub struct ShareSet {
    pub masked: Vec<SparseMatrix>,
    pub mask: Vec<SparseMatrix>,
    pub source_rows: u32,
    pub blocks_read: u32,
}

/// Read one copy of every block, taking each from the lowest-numbered
/// available node that holds it. Fails up front, listing the missing
/// blocks, when the available nodes do not cover both shares.
pub fn load_share_set(
    root: &Path,
    plan: &AssignmentPlan,
    available: &[u32],
) -> anyhow::Result<ShareSet> {
    let (missing_masked, missing_mask) = plan.missing_blocks(available)?;
    if !missing_masked.is_empty() || !missing_mask.is_empty() {
        bail!(
            "insufficient coverage: nodes {available:?} are missing padded share blocks \
             {missing_masked:?} and pad share blocks {missing_mask:?}"
        );
    }

    let mut reference: Option<SubShareHeader> = None;
    let mut blocks_read = 0;
    let mut load_all = |kind: ShareKind| -> anyhow::Result<Vec<SparseMatrix>> {
        let mut blocks = Vec::with_capacity(plan.n() as usize);
        for t in 0..plan.n() {
            let holder = available
                .iter()
                .copied()
                .find(|&i| kind.set(plan, i).contains(&t))
                .expect("coverage was checked");
            let path = sub_share_path(root, holder, kind, t);
            let bytes =
                std::fs::read(&path).with_context(|| format!("cannot read {}", path.display()))?;
            let (header, block) = decode_sub_share(&bytes)
                .with_context(|| format!("corrupt sub-share {}", path.display()))?;
            if header.index != t || header.n != plan.n() {
                bail!(
                    "sub-share {} is block {} of {} but was stored as block {t} of a {}-node plan",
                    path.display(),
                    header.index,
                    header.n,
                    plan.n()
                );
            }
            match &reference {
                None => reference = Some(header),
                Some(r) => {
                    if (header.field, header.source_rows, header.source_cols)
                        != (r.field, r.source_rows, r.source_cols)
                    {
                        bail!(
                            "sub-share {} disagrees with the others about the source shape",
                            path.display()
                        );
                    }
                }
            }
            blocks_read += 1;
            blocks.push(block);
        }
        Ok(blocks)
    };

    let masked = load_all(ShareKind::Masked)?;
    let mask = load_all(ShareKind::Mask)?;
    let header = reference.expect("n >= 2 blocks were read");
    let source_rows: u32 = header
        .source_rows
        .try_into()
        .map_err(|_| anyhow::anyhow!("source row count {} exceeds u32", header.source_rows))?;
    Ok(ShareSet {
        masked,
        mask,
        source_rows,
        blocks_read,
    })
}
