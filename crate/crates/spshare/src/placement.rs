//! Distributing the two shares across storage nodes.
//!
//! Each share is split into n row blocks; block t of the padded share and
//! block t of the pad are the pair that reconstructs source block t. The
//! plan places each block on xi+1 consecutive nodes (wrapping), with the pad
//! placements offset by n/2 so no node ever holds both halves of the same
//! block. Any n - xi nodes then cover everything, so up to xi arbitrary node
//! losses are survivable, at the price of storing every block xi+1 times.

use crate::error::{Error, Result};
use crate::field::FieldOrder;
use crate::leakage::LeakageReport;
use crate::sharing::SparseMatrix;

/// Which sub-share blocks each node stores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentPlan {
    n: u32,
    xi: u32,
    masked_sets: Vec<Vec<u32>>,
    mask_sets: Vec<Vec<u32>>,
}

impl AssignmentPlan {
    /// The rotation plan for n nodes tolerating xi losses. Requires n even
    /// and 0 <= xi <= n/2 - 1.
    pub fn new(n: u32, xi: u32) -> Result<Self> {
        check_plan_params(n, xi)?;
        let mut masked_sets = Vec::with_capacity(n as usize);
        let mut mask_sets = Vec::with_capacity(n as usize);
        for i in 0..n {
            let mut masked: Vec<u32> = (0..=xi).map(|j| (i + j) % n).collect();
            let mut mask: Vec<u32> = (0..=xi).map(|j| (n / 2 + i + j) % n).collect();
            masked.sort_unstable();
            mask.sort_unstable();
            masked_sets.push(masked);
            mask_sets.push(mask);
        }
        let plan = AssignmentPlan {
            n,
            xi,
            masked_sets,
            mask_sets,
        };
        plan.verify()?;
        Ok(plan)
    }

    /// Wrap externally chosen assignments, enforcing the same guarantees as
    /// the built-in rotation.
    pub fn from_sets(
        n: u32,
        xi: u32,
        masked_sets: Vec<Vec<u32>>,
        mask_sets: Vec<Vec<u32>>,
    ) -> Result<Self> {
        check_plan_params(n, xi)?;
        let mut plan = AssignmentPlan {
            n,
            xi,
            masked_sets,
            mask_sets,
        };
        for sets in [&mut plan.masked_sets, &mut plan.mask_sets] {
            for s in sets.iter_mut() {
                s.sort_unstable();
            }
        }
        plan.verify()?;
        Ok(plan)
    }

    /// Check the two safety properties: every block replicated exactly xi+1
    /// times in each share, and no node holding both halves of a block.
    pub fn verify(&self) -> Result<()> {
        if self.masked_sets.len() != self.n as usize || self.mask_sets.len() != self.n as usize {
            return Err(Error::InvalidPlan {
                reason: format!("expected {} node assignments", self.n),
            });
        }
        let mut masked_copies = vec![0u32; self.n as usize];
        let mut mask_copies = vec![0u32; self.n as usize];
        for node in 0..self.n as usize {
            for (sets, copies) in [
                (&self.masked_sets, &mut masked_copies),
                (&self.mask_sets, &mut mask_copies),
            ] {
                let set = &sets[node];
                for (k, &t) in set.iter().enumerate() {
                    if t >= self.n {
                        return Err(Error::InvalidPlan {
                            reason: format!("node {node} references block {t} of {}", self.n),
                        });
                    }
                    if k > 0 && set[k - 1] == t {
                        return Err(Error::InvalidPlan {
                            reason: format!("node {node} lists block {t} twice"),
                        });
                    }
                    copies[t as usize] += 1;
                }
            }
            for &t in &self.masked_sets[node] {
                if self.mask_sets[node].binary_search(&t).is_ok() {
                    return Err(Error::InvalidPlan {
                        reason: format!(
                            "node {node} holds both halves of block {t}, which would let it \
                             reconstruct that block alone"
                        ),
                    });
                }
            }
        }
        for (t, (&a, &b)) in masked_copies.iter().zip(&mask_copies).enumerate() {
            if a != self.xi + 1 || b != self.xi + 1 {
                return Err(Error::InvalidPlan {
                    reason: format!(
                        "block {t} replicated {a}/{b} times, expected {}",
                        self.xi + 1
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn xi(&self) -> u32 {
        self.xi
    }

    /// Padded-share blocks stored on `node`.
    pub fn masked_set(&self, node: u32) -> &[u32] {
        &self.masked_sets[node as usize]
    }

    /// Pad blocks stored on `node`.
    pub fn mask_set(&self, node: u32) -> &[u32] {
        &self.mask_sets[node as usize]
    }

    /// Blocks of either share that `available` nodes cannot supply.
    pub fn missing_blocks(&self, available: &[u32]) -> Result<(Vec<u32>, Vec<u32>)> {
        let mut have_masked = vec![false; self.n as usize];
        let mut have_mask = vec![false; self.n as usize];
        for &node in available {
            if node >= self.n {
                return Err(Error::InvalidPlan {
                    reason: format!("node {node} outside 0..{}", self.n),
                });
            }
            for &t in self.masked_set(node) {
                have_masked[t as usize] = true;
            }
            for &t in self.mask_set(node) {
                have_mask[t as usize] = true;
            }
        }
        let missing = |have: &[bool]| {
            have.iter()
                .enumerate()
                .filter(|(_, &h)| !h)
                .map(|(t, _)| t as u32)
                .collect::<Vec<u32>>()
        };
        Ok((missing(&have_masked), missing(&have_mask)))
    }

    /// Canonical plain-text form, one line per node.
    pub fn export(&self) -> String {
        let mut out = format!("plan n={} xi={}\n", self.n, self.xi);
        let list = |s: &[u32]| {
            s.iter()
                .map(|t| t.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        for i in 0..self.n as usize {
            out.push_str(&format!(
                "node {i}: masked={} mask={}\n",
                list(&self.masked_sets[i]),
                list(&self.mask_sets[i]),
            ));
        }
        out
    }

    /// Parse the `export` format, re-validating everything.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidPlan { reason };
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let head = lines.next().ok_or_else(|| bad("empty plan".into()))?;
        let head = head
            .strip_prefix("plan n=")
            .ok_or_else(|| bad(format!("bad header {head:?}")))?;
        let (n_str, xi_str) = head
            .split_once(" xi=")
            .ok_or_else(|| bad(format!("bad header {head:?}")))?;
        let n: u32 = n_str
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad n {n_str:?}")))?;
        let xi: u32 = xi_str
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad xi {xi_str:?}")))?;
        let parse_list = |s: &str| -> Result<Vec<u32>> {
            if s.is_empty() {
                return Ok(Vec::new());
            }
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u32>()
                        .map_err(|_| bad(format!("bad block index {t:?}")))
                })
                .collect()
        };
        let mut masked_sets = vec![Vec::new(); n as usize];
        let mut mask_sets = vec![Vec::new(); n as usize];
        let mut seen = vec![false; n as usize];
        for line in lines {
            let rest = line
                .strip_prefix("node ")
                .ok_or_else(|| bad(format!("bad line {line:?}")))?;
            let (id_str, rest) = rest
                .split_once(": masked=")
                .ok_or_else(|| bad(format!("bad line {line:?}")))?;
            let (masked_str, mask_str) = rest
                .split_once(" mask=")
                .ok_or_else(|| bad(format!("bad line {line:?}")))?;
            let id: usize = id_str
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad node id {id_str:?}")))?;
            if id >= n as usize || seen[id] {
                return Err(bad(format!("node id {id} repeated or out of range")));
            }
            seen[id] = true;
            masked_sets[id] = parse_list(masked_str.trim())?;
            mask_sets[id] = parse_list(mask_str.trim())?;
        }
        if seen.iter().any(|&s| !s) {
            return Err(bad("missing node lines".into()));
        }
        AssignmentPlan::from_sets(n, xi, masked_sets, mask_sets)
    }
}

fn check_plan_params(n: u32, xi: u32) -> Result<()> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidPlanParams {
            reason: format!("node count {n} must be even and at least 2"),
        });
    }
    if xi > n / 2 - 1 {
        return Err(Error::InvalidPlanParams {
            reason: format!("loss tolerance {xi} exceeds n/2 - 1 = {}", n / 2 - 1),
        });
    }
    Ok(())
}

/// Split a share into n row blocks. Rows are padded up to a multiple of n
/// with implicit zeros; each block keeps the full column span.
pub fn partition_share(share: &SparseMatrix, n: u32) -> Result<Vec<SparseMatrix>> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidPlanParams {
            reason: format!("block count {n} must be even and at least 2"),
        });
    }
    let padded = (share.rows() as u64).div_ceil(n as u64) * n as u64;
    if padded > u32::MAX as u64 {
        return Err(Error::InvalidPlanParams {
            reason: format!(
                "{} rows cannot be padded to a multiple of {n}",
                share.rows()
            ),
        });
    }
    let block_rows = (padded / n as u64) as u32;
    let mut blocks: Vec<Vec<crate::sharing::Entry>> = vec![Vec::new(); n as usize];
    for e in share.entries() {
        let t = e.row / block_rows;
        blocks[t as usize].push(crate::sharing::Entry {
            row: e.row - t * block_rows,
            col: e.col,
            value: e.value,
        });
    }
    blocks
        .into_iter()
        .map(|entries| SparseMatrix::new(block_rows, share.cols(), share.field(), entries))
        .collect()
}

/// Inverse of [`partition_share`]: stack blocks and drop the padding rows.
pub fn assemble_share(blocks: &[SparseMatrix], original_rows: u32) -> Result<SparseMatrix> {
    let first = blocks.first().ok_or_else(|| Error::InvalidPlanParams {
        reason: "no blocks to assemble".into(),
    })?;
    let block_rows = first.rows();
    let n = blocks.len() as u64;
    // Inverse of the partition rule block_rows = ceil(rows / n). Checking
    // ceil(rows / block_rows) == n instead would reject short matrices cut
    // into many blocks, where whole trailing blocks are padding.
    if (original_rows as u64).div_ceil(n) != block_rows as u64 {
        return Err(Error::DimensionMismatch {
            expected: (original_rows as u64, first.cols() as u64),
            got: (block_rows as u64 * n, first.cols() as u64),
        });
    }
    let mut entries = Vec::new();
    for (t, b) in blocks.iter().enumerate() {
        if b.rows() != block_rows || b.cols() != first.cols() || b.field() != first.field() {
            return Err(Error::DimensionMismatch {
                expected: (block_rows as u64, first.cols() as u64),
                got: (b.rows() as u64, b.cols() as u64),
            });
        }
        for e in b.entries() {
            let row = e.row + t as u32 * block_rows;
            if row >= original_rows {
                return Err(Error::InvalidEntry {
                    row: row as u64,
                    col: e.col as u64,
                    reason: format!("padding region of a {original_rows}-row share"),
                });
            }
            entries.push(crate::sharing::Entry {
                row,
                col: e.col,
                value: e.value,
            });
        }
    }
    SparseMatrix::new(original_rows, first.cols(), first.field(), entries)
}

/// Rebuild the source from whatever blocks the surviving nodes can serve.
/// `masked_blocks` and `mask_blocks` are the partitioned shares (block t at
/// index t); a block is only consulted if some available node stores it.
pub fn reconstruct_from_nodes(
    plan: &AssignmentPlan,
    masked_blocks: &[SparseMatrix],
    mask_blocks: &[SparseMatrix],
    original_rows: u32,
    available: &[u32],
) -> Result<SparseMatrix> {
    let n = plan.n() as usize;
    if masked_blocks.len() != n || mask_blocks.len() != n {
        return Err(Error::InvalidPlanParams {
            reason: format!(
                "expected {n} blocks per share, got {} and {}",
                masked_blocks.len(),
                mask_blocks.len()
            ),
        });
    }
    let (missing_masked, missing_mask) = plan.missing_blocks(available)?;
    if !missing_masked.is_empty() || !missing_mask.is_empty() {
        return Err(Error::InsufficientCoverage {
            missing_masked,
            missing_mask,
        });
    }
    let masked = assemble_share(masked_blocks, original_rows)?;
    let mask = assemble_share(mask_blocks, original_rows)?;
    masked.sub(&mask)
}

/// Leakage seen by one node: xi+1 block pairs, each of r*l/n elements, each
/// element leaking the per-element total.
pub fn per_node_leakage(
    per_element_total: f64,
    rows: u64,
    cols: u64,
    n: u32,
    xi: u32,
) -> Result<f64> {
    check_plan_params(n, xi)?;
    let elements = rows as u128 * cols as u128;
    Ok((xi as f64 + 1.0) * per_element_total * (elements as f64) / n as f64)
}

/// Copy a per-element report and fill in the whole-matrix and per-node
/// scales for an r x l matrix under an (n, xi) plan.
pub fn scaled_report(
    report: &LeakageReport,
    rows: u64,
    cols: u64,
    n: u32,
    xi: u32,
) -> Result<LeakageReport> {
    let elements = (rows as u128 * cols as u128) as f64;
    let mut out = *report;
    out.per_matrix = Some(report.total() * elements);
    out.per_node = Some(per_node_leakage(report.total(), rows, cols, n, xi)?);
    Ok(out)
}

/// ceil(log2 x) for a positive integer.
pub(crate) fn ceil_log2_u128(x: u128) -> u32 {
    debug_assert!(x > 0);
    if x <= 1 {
        0
    } else {
        128 - (x - 1).leading_zeros()
    }
}

/// ceil(log2(num/den)) with real-valued division.
fn ceil_log2_ratio(num: u128, den: u128) -> u32 {
    ceil_log2_u128(num.div_ceil(den))
}

/// Record width in bits for one stored nonzero of an r x l matrix split n
/// ways: a block-local linear index plus one field element.
pub fn record_bits(rows: u64, cols: u64, n: u32, field: &FieldOrder) -> (u32, u32) {
    let rl = rows as u128 * cols as u128;
    (ceil_log2_ratio(rl, n as u128), field.value_bits())
}

/// Expected bits stored per node in coordinate format, replicas included,
/// when both shares have zero fraction `s_avg`.
pub fn storage_cost_sparse(
    s_avg: f64,
    rows: u64,
    cols: u64,
    n: u32,
    xi: u32,
    field: &FieldOrder,
) -> Result<f64> {
    check_plan_params(n, xi)?;
    if !(0.0..=1.0).contains(&s_avg) {
        return Err(Error::InvalidProbability {
            name: "s_avg",
            value: s_avg,
        });
    }
    let rl = rows as u128 * cols as u128;
    let (index_bits, value_bits) = record_bits(rows, cols, n, field);
    Ok((2.0 * xi as f64 + 2.0)
        * (1.0 - s_avg)
        * (rl as f64 / n as f64)
        * (index_bits + value_bits) as f64)
}

/// Bits to store the source under a classical (n - xi - 1)-of-n erasure
/// code that ignores sparsity.
pub fn storage_cost_classical(
    rows: u64,
    cols: u64,
    n: u32,
    xi: u32,
    field: &FieldOrder,
) -> Result<f64> {
    check_plan_params(n, xi)?;
    let k = n as i64 - xi as i64 - 1;
    if k < 1 {
        return Err(Error::InvalidPlanParams {
            reason: format!("n - xi - 1 = {k} leaves no data nodes"),
        });
    }
    let rl = rows as u128 * cols as u128;
    Ok(rl as f64 / k as f64 * field.value_bits() as f64)
}

/// Zero-fraction above which the sparse layout is predicted to win, from
/// the closed-form bound. Undefined at xi = 0 (compare costs directly).
pub fn sparsity_threshold(
    n: u32,
    xi: u32,
    field: &FieldOrder,
    rows: u64,
    cols: u64,
) -> Option<f64> {
    let (index_bits, value_bits) = record_bits(rows, cols, n, field);
    sparsity_threshold_with_bits(n, xi, value_bits as f64, index_bits as f64)
}

/// Same bound with the bit widths supplied directly.
pub fn sparsity_threshold_with_bits(
    n: u32,
    xi: u32,
    value_bits: f64,
    index_bits: f64,
) -> Option<f64> {
    if xi == 0 || n <= xi {
        return None;
    }
    Some(
        1.0 - (1.0 / (2.0 * xi as f64))
            * (n as f64 / (n - xi) as f64)
            * (value_bits / (value_bits + index_bits)),
    )
}

/// Exact zero-fraction at which the two storage costs cross: above this the
/// sparse layout is strictly cheaper. This is the direct comparison of the
/// two cost formulas, solved for s_avg.
pub fn break_even_sparsity(
    n: u32,
    xi: u32,
    field: &FieldOrder,
    rows: u64,
    cols: u64,
) -> Option<f64> {
    if n as i64 - xi as i64 - 1 < 1 {
        return None;
    }
    let (index_bits, value_bits) = record_bits(rows, cols, n, field);
    let v = value_bits as f64;
    let i = index_bits as f64;
    Some(1.0 - n as f64 * v / ((2.0 * xi as f64 + 2.0) * (n - xi - 1) as f64 * (v + i)))
}
