//! Sparse matrices and the two-share construction.
//!
//! A source matrix A is hidden by drawing a pad R entrywise from the
//! conditional distribution and publishing the pair (R, A+R). Either share
//! alone reveals only the per-element mutual information quantified in
//! [`crate::leakage`]; together they reconstruct A exactly.
//!
//! All sampling is driven by per-entry counter generators, so results are
//! independent of traversal order and reproducible from the seed alone.

use crate::error::{Error, Result};
use crate::field::FieldOrder;
use crate::leakage::{ConditionalPmf, LeakageReport, LogBase, SourceModel};
use crate::rng::EntryRng;

/// Upper bound on rows*cols for any operation that visits every element.
/// Beyond this the dense pass is refused rather than attempted.
pub const MAX_DENSE_ELEMENTS: u128 = 100_000_000;

/// One nonzero element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    pub row: u32,
    pub col: u32,
    pub value: u64,
}

/// Immutable sparse matrix over a finite field, entries sorted row-major.
/// Zeros are never stored; every stored value is a nonzero field element.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: u32,
    cols: u32,
    field: FieldOrder,
    entries: Vec<Entry>,
}

impl SparseMatrix {
    pub fn new(rows: u32, cols: u32, field: FieldOrder, mut entries: Vec<Entry>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch {
                expected: (1, 1),
                got: (rows as u64, cols as u64),
            });
        }
        entries.sort_unstable_by_key(|e| (e.row, e.col));
        for (k, e) in entries.iter().enumerate() {
            if e.row >= rows || e.col >= cols {
                return Err(Error::InvalidEntry {
                    row: e.row as u64,
                    col: e.col as u64,
                    reason: format!("outside a {rows}x{cols} matrix"),
                });
            }
            if e.value == 0 {
                return Err(Error::InvalidEntry {
                    row: e.row as u64,
                    col: e.col as u64,
                    reason: "stored zero".into(),
                });
            }
            field.check_element(e.value)?;
            if k > 0 && entries[k - 1].row == e.row && entries[k - 1].col == e.col {
                return Err(Error::InvalidEntry {
                    row: e.row as u64,
                    col: e.col as u64,
                    reason: "duplicate position".into(),
                });
            }
        }
        Ok(SparseMatrix {
            rows,
            cols,
            field,
            entries,
        })
    }

    pub fn zero(rows: u32, cols: u32, field: FieldOrder) -> Result<Self> {
        SparseMatrix::new(rows, cols, field, Vec::new())
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn field(&self) -> FieldOrder {
        self.field
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn nnz(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn element_count(&self) -> u128 {
        self.rows as u128 * self.cols as u128
    }

    /// Fraction of elements equal to zero.
    pub fn zero_fraction(&self) -> f64 {
        1.0 - self.nnz() as f64 / self.element_count() as f64
    }

    pub fn get(&self, row: u32, col: u32) -> u64 {
        self.entries
            .binary_search_by_key(&(row, col), |e| (e.row, e.col))
            .map(|i| self.entries[i].value)
            .unwrap_or(0)
    }

    /// Elementwise field addition.
    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        self.combine(other, |f, a, b| f.add(a, b))
    }

    /// Elementwise field subtraction.
    pub fn sub(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        self.combine(other, |f, a, b| f.sub(a, b))
    }

    fn combine(
        &self,
        other: &SparseMatrix,
        op: impl Fn(&FieldOrder, u64, u64) -> u64,
    ) -> Result<SparseMatrix> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: (self.rows as u64, self.cols as u64),
                got: (other.rows as u64, other.cols as u64),
            });
        }
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.entries.len() || j < other.entries.len() {
            let ka = self.entries.get(i).map(|e| (e.row, e.col));
            let kb = other.entries.get(j).map(|e| (e.row, e.col));
            let (pos, a, b) = match (ka, kb) {
                (Some(x), Some(y)) if x == y => {
                    let r = (x, self.entries[i].value, other.entries[j].value);
                    i += 1;
                    j += 1;
                    r
                }
                (Some(x), Some(y)) if x < y => {
                    let r = (x, self.entries[i].value, 0);
                    i += 1;
                    r
                }
                (Some(_), Some(y)) => {
                    let r = (y, 0, other.entries[j].value);
                    j += 1;
                    r
                }
                (Some(x), None) => {
                    let r = (x, self.entries[i].value, 0);
                    i += 1;
                    r
                }
                (None, Some(y)) => {
                    let r = (y, 0, other.entries[j].value);
                    j += 1;
                    r
                }
                (None, None) => unreachable!(),
            };
            let v = op(&self.field, a, b);
            if v != 0 {
                out.push(Entry {
                    row: pos.0,
                    col: pos.1,
                    value: v,
                });
            }
        }
        Ok(SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            field: self.field,
            entries: out,
        })
    }

    fn check_dense_budget(&self) -> Result<()> {
        check_dense_budget(self.rows, self.cols)
    }
}

fn check_dense_budget(rows: u32, cols: u32) -> Result<()> {
    let count = rows as u128 * cols as u128;
    if count > MAX_DENSE_ELEMENTS {
        return Err(Error::TooManyElements {
            count,
            limit: MAX_DENSE_ELEMENTS,
        });
    }
    Ok(())
}

/// Draw a source matrix: each element independently zero with probability
/// `s`, otherwise uniform over the nonzero field elements.
pub fn generate_source(rows: u32, cols: u32, src: &SourceModel, seed: u64) -> Result<SparseMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::DimensionMismatch {
            expected: (1, 1),
            got: (rows as u64, cols as u64),
        });
    }
    check_dense_budget(rows, cols)?;
    let field = src.field();
    let s = src.s();
    let mut entries = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let mut rng = EntryRng::for_entry(seed, i as u64, j as u64);
            if rng.next_f64() >= s {
                entries.push(Entry {
                    row: i,
                    col: j,
                    value: field.sample_nonzero(&mut rng),
                });
            }
        }
    }
    Ok(SparseMatrix {
        rows,
        cols,
        field,
        entries,
    })
}

/// The two shares of one source matrix: the pad R and the padded sum A+R,
/// plus what is needed to regenerate them.
#[derive(Debug, Clone, PartialEq)]
pub struct SharePair {
    pub mask: SparseMatrix,
    pub masked: SparseMatrix,
    pub pmf: ConditionalPmf,
    pub seed: u64,
}

/// Draw the pad R for `source`, elementwise from the structured conditional
/// distribution.
pub fn sample_padding(
    source: &SparseMatrix,
    pmf: &ConditionalPmf,
    seed: u64,
) -> Result<SparseMatrix> {
    if source.field() != pmf.field() {
        return Err(Error::FieldMismatch);
    }
    source.check_dense_budget()?;
    let field = source.field();
    let (p1, p2, p3) = (pmf.p1(), pmf.p2(), pmf.p3());
    let mut entries = Vec::new();
    let mut cursor = source.entries().iter().peekable();
    for i in 0..source.rows() {
        for j in 0..source.cols() {
            let a = match cursor.peek() {
                Some(e) if e.row == i && e.col == j => {
                    let v = e.value;
                    cursor.next();
                    v
                }
                _ => 0,
            };
            let mut rng = EntryRng::for_entry(seed, i as u64, j as u64);
            let u = rng.next_f64();
            let r = if a == 0 {
                if u < p1 {
                    0
                } else {
                    field.sample_nonzero(&mut rng)
                }
            } else if u < p2 {
                0
            } else if u < p2 + p3 {
                field.neg(a)
            } else {
                field.sample_avoiding(&mut rng, &[0, field.neg(a)])
            };
            if r != 0 {
                entries.push(Entry {
                    row: i,
                    col: j,
                    value: r,
                });
            }
        }
    }
    Ok(SparseMatrix {
        rows: source.rows(),
        cols: source.cols(),
        field,
        entries,
    })
}

/// Split `source` into the share pair (R, A+R).
pub fn make_shares(source: &SparseMatrix, pmf: &ConditionalPmf, seed: u64) -> Result<SharePair> {
    let mask = sample_padding(source, pmf, seed)?;
    let masked = source.add(&mask)?;
    Ok(SharePair {
        mask,
        masked,
        pmf: *pmf,
        seed,
    })
}

/// Recover the source from both shares: A = (A+R) - R.
pub fn reconstruct(pair: &SharePair) -> Result<SparseMatrix> {
    pair.masked.sub(&pair.mask)
}

/// Signed z-score of a share's observed zero count against an expected zero
/// fraction. Useful to flag inputs that do not match a declared sparsity.
pub fn sparsity_z_score(m: &SparseMatrix, expected_zero_fraction: f64) -> f64 {
    let n = m.element_count() as f64;
    let p = expected_zero_fraction;
    let observed = n - m.nnz() as f64;
    let sigma = (n * p * (1.0 - p)).sqrt();
    if sigma == 0.0 {
        if observed == n * p {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (observed - n * p) / sigma
    }
}

const MIN_MI_SAMPLES: u64 = 10_000;

/// Plug-in mutual-information estimate of what each share reveals about the
/// source, from an actual (source, shares) triple.
///
/// Exploits the model's symmetry: conditioned on the source value, a share
/// element falls in one of at most three classes (zero, the value that makes
/// the other representation zero, anything else) and is uniform within each
/// class. Counting class occupancies therefore estimates the full mutual
/// information with an effort independent of the field order.
pub fn empirical_leakage(
    source: &SparseMatrix,
    pair: &SharePair,
    base: LogBase,
) -> Result<LeakageReport> {
    for m in [&pair.mask, &pair.masked] {
        if m.field() != source.field() {
            return Err(Error::FieldMismatch);
        }
        if m.rows() != source.rows() || m.cols() != source.cols() {
            return Err(Error::DimensionMismatch {
                expected: (source.rows() as u64, source.cols() as u64),
                got: (m.rows() as u64, m.cols() as u64),
            });
        }
    }
    let n = source.element_count();
    if n < MIN_MI_SAMPLES as u128 {
        return Err(Error::TooFewSamples {
            needed: MIN_MI_SAMPLES,
            got: n as u64,
        });
    }
    let field = source.field();
    // class counts against the pad share: share value zero / cancelling / other
    let c_mask = class_counts(source, &pair.mask, |a, _| field.neg(a));
    // ... and against the padded share, where "cancelling" means equal to a
    let c_masked = class_counts(source, &pair.masked, |a, _| a);
    let q = field.order_f64();
    let n = n as f64;
    let n_zero = n - source.nnz() as f64;
    let n_nonzero = source.nnz() as f64;
    let l1 = plugin_mi(&c_mask, n, n_zero, n_nonzero, q);
    let l2 = plugin_mi(&c_masked, n, n_zero, n_nonzero, q);
    let ln_base = base.ln_base(&field);
    Ok(LeakageReport::new(l1 / ln_base, l2 / ln_base, base))
}

/// Occupancies of the symmetry classes of one share against the source.
#[derive(Debug, Default, Clone, Copy)]
struct ClassCounts {
    /// source zero, share zero
    zz: f64,
    /// source zero, share nonzero
    zn: f64,
    /// source nonzero, share zero
    nz: f64,
    /// source nonzero, share equal to the distinguished value
    nc: f64,
    /// source nonzero, share anything else
    no: f64,
}

fn class_counts(
    source: &SparseMatrix,
    share: &SparseMatrix,
    distinguished: impl Fn(u64, u64) -> u64,
) -> ClassCounts {
    let mut c = ClassCounts::default();
    let se = source.entries();
    let he = share.entries();
    let (mut i, mut j) = (0usize, 0usize);
    while i < se.len() || j < he.len() {
        let ka = se.get(i).map(|e| (e.row, e.col));
        let kb = he.get(j).map(|e| (e.row, e.col));
        match (ka, kb) {
            (Some(x), Some(y)) if x == y => {
                let a = se[i].value;
                let v = he[j].value;
                if v == distinguished(a, v) {
                    c.nc += 1.0;
                } else {
                    c.no += 1.0;
                }
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x < y => {
                c.nz += 1.0;
                i += 1;
                let _ = x;
            }
            (Some(_), Some(_)) => {
                c.zn += 1.0;
                j += 1;
            }
            (Some(_), None) => {
                c.nz += 1.0;
                i += 1;
            }
            (None, Some(_)) => {
                c.zn += 1.0;
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    let n = source.element_count() as f64;
    c.zz = n - c.zn - c.nz - c.nc - c.no;
    c
}

/// H(share) - H(share | source) from class occupancies, in nats, using
/// within-class uniformity for both entropies.
fn plugin_mi(c: &ClassCounts, n: f64, n_zero: f64, n_nonzero: f64, q: f64) -> f64 {
    let share_zero = (c.zz + c.nz) / n;
    let h_share = cat_entropy(&[(share_zero, 1.0), (1.0 - share_zero, q - 1.0)]);
    let mut h_cond = 0.0;
    if n_zero > 0.0 {
        let p = c.zz / n_zero;
        h_cond += n_zero / n * cat_entropy(&[(p, 1.0), (1.0 - p, q - 1.0)]);
    }
    if n_nonzero > 0.0 {
        let pz = c.nz / n_nonzero;
        let pc = c.nc / n_nonzero;
        let po = c.no / n_nonzero;
        h_cond += n_nonzero / n * cat_entropy(&[(pz, 1.0), (pc, 1.0), (po, q - 2.0)]);
    }
    (h_share - h_cond).max(0.0)
}

/// Entropy of a distribution given as (total mass, number of equally likely
/// values it spreads over) groups.
fn cat_entropy(groups: &[(f64, f64)]) -> f64 {
    let mut h = 0.0;
    for &(mass, spread) in groups {
        if mass > 0.0 {
            h -= mass * (mass / spread).ln();
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leakage::total_leakage;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn f256() -> FieldOrder {
        FieldOrder::binary(8).unwrap()
    }

    fn f5() -> FieldOrder {
        FieldOrder::prime(5).unwrap()
    }

    #[test]
    fn matrix_validation() {
        let e = |row, col, value| Entry { row, col, value };
        assert!(SparseMatrix::new(2, 2, f5(), vec![e(0, 0, 1), e(1, 1, 4)]).is_ok());
        assert!(SparseMatrix::new(2, 2, f5(), vec![e(2, 0, 1)]).is_err());
        assert!(SparseMatrix::new(2, 2, f5(), vec![e(0, 0, 0)]).is_err());
        assert!(SparseMatrix::new(2, 2, f5(), vec![e(0, 0, 5)]).is_err());
        assert!(SparseMatrix::new(2, 2, f5(), vec![e(0, 0, 1), e(0, 0, 2)]).is_err());
        assert!(SparseMatrix::new(0, 2, f5(), vec![]).is_err());
    }

    #[test]
    fn entries_sorted_and_searchable() {
        let e = |row, col, value| Entry { row, col, value };
        let m = SparseMatrix::new(3, 3, f5(), vec![e(2, 1, 3), e(0, 2, 1), e(1, 0, 2)]).unwrap();
        let keys: Vec<_> = m.entries().iter().map(|e| (e.row, e.col)).collect();
        assert_eq!(keys, vec![(0, 2), (1, 0), (2, 1)]);
        assert_eq!(m.get(2, 1), 3);
        assert_eq!(m.get(1, 1), 0);
    }

    #[test]
    fn add_sub_round_trip() {
        let e = |row, col, value| Entry { row, col, value };
        let a = SparseMatrix::new(2, 3, f5(), vec![e(0, 0, 2), e(1, 2, 4)]).unwrap();
        let b = SparseMatrix::new(2, 3, f5(), vec![e(0, 0, 3), e(0, 1, 1)]).unwrap();
        let sum = a.add(&b).unwrap();
        // 2+3 = 0 over F5, so that position vanishes from storage
        assert_eq!(sum.get(0, 0), 0);
        assert_eq!(sum.get(0, 1), 1);
        assert_eq!(sum.get(1, 2), 4);
        assert_eq!(sum.sub(&b).unwrap(), a);
    }

    #[test]
    fn dimension_and_field_mismatches() {
        let a = SparseMatrix::zero(2, 2, f5()).unwrap();
        let b = SparseMatrix::zero(2, 3, f5()).unwrap();
        assert!(matches!(a.add(&b), Err(Error::DimensionMismatch { .. })));
        let c = SparseMatrix::zero(2, 2, f256()).unwrap();
        assert!(matches!(a.add(&c), Err(Error::FieldMismatch)));
    }

    #[test]
    fn generation_is_deterministic_and_seed_sensitive() {
        let src = SourceModel::new(f256(), 0.9).unwrap();
        let a = generate_source(40, 50, &src, 7).unwrap();
        let b = generate_source(40, 50, &src, 7).unwrap();
        let c = generate_source(40, 50, &src, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn generated_sparsity_within_binomial_noise() {
        let src = SourceModel::new(f256(), 0.95).unwrap();
        let m = generate_source(1000, 1000, &src, 123).unwrap();
        assert!(sparsity_z_score(&m, 0.95).abs() < 3.0);
    }

    #[test]
    fn dense_budget_enforced() {
        let src = SourceModel::new(f256(), 0.95).unwrap();
        let err = generate_source(20_000, 20_000, &src, 1);
        assert!(matches!(err, Err(Error::TooManyElements { .. })));
    }

    #[test]
    fn degenerate_pads() {
        let field = f256();
        let src = SourceModel::new(field, 0.8).unwrap();
        let a = generate_source(50, 50, &src, 3).unwrap();
        // p = (1,1,0): pad identically zero, padded share equals the source
        let pmf = ConditionalPmf::new(field, 1.0, 1.0, 0.0).unwrap();
        let pair = make_shares(&a, &pmf, 11).unwrap();
        assert_eq!(pair.mask.nnz(), 0);
        assert_eq!(pair.masked, a);
        // p = (1,0,1): pad cancels the source, padded share identically zero
        let pmf = ConditionalPmf::new(field, 1.0, 0.0, 1.0).unwrap();
        let pair = make_shares(&a, &pmf, 11).unwrap();
        assert_eq!(pair.masked.nnz(), 0);
        assert_eq!(reconstruct(&pair).unwrap(), a);
    }

    #[test]
    fn reconstruction_exhaustive_tiny_matrices() {
        // every 2x2 matrix over F5 (including the all-zero one)
        let field = f5();
        let pmf = ConditionalPmf::new(field, 0.5, 0.2, 0.3).unwrap();
        for code in 0..625u32 {
            let mut c = code;
            let mut entries = Vec::new();
            for pos in 0..4 {
                let v = (c % 5) as u64;
                c /= 5;
                if v != 0 {
                    entries.push(Entry {
                        row: pos / 2,
                        col: pos % 2,
                        value: v,
                    });
                }
            }
            let a = SparseMatrix::new(2, 2, field, entries).unwrap();
            let pair = make_shares(&a, &pmf, code as u64).unwrap();
            assert_eq!(reconstruct(&pair).unwrap(), a);
        }
    }

    #[test]
    fn realized_share_sparsity_tracks_analysis() {
        let field = f256();
        let src = SourceModel::new(field, 0.95).unwrap();
        let pmf = ConditionalPmf::new(
            field,
            0.523252751491206,
            0.0581977216670794,
            0.0581977216670794,
        )
        .unwrap();
        let a = generate_source(1000, 1000, &src, 42).unwrap();
        let pair = make_shares(&a, &pmf, 43).unwrap();
        let t = pmf.realized_sparsity(&src).unwrap();
        assert!(sparsity_z_score(&pair.mask, t.s_r()).abs() < 4.0);
        assert!(sparsity_z_score(&pair.masked, t.s_ar()).abs() < 4.0);
    }

    #[test]
    fn empirical_leakage_requires_enough_samples() {
        let field = f256();
        let src = SourceModel::new(field, 0.9).unwrap();
        let pmf = ConditionalPmf::uniform(field);
        let a = generate_source(10, 10, &src, 1).unwrap();
        let pair = make_shares(&a, &pmf, 2).unwrap();
        assert!(matches!(
            empirical_leakage(&a, &pair, LogBase::E),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn empirical_leakage_tracks_closed_form() {
        let field = f256();
        let src = SourceModel::new(field, 0.9).unwrap();
        let pmf = ConditionalPmf::new(field, 0.6, 0.15, 0.2).unwrap();
        let a = generate_source(1000, 1000, &src, 5).unwrap();
        let pair = make_shares(&a, &pmf, 6).unwrap();
        let est = empirical_leakage(&a, &pair, LogBase::E).unwrap();
        let exact = total_leakage(&pmf, &src, LogBase::E).unwrap();
        assert_abs_diff_eq!(est.l1, exact.l1, epsilon = 0.03 * exact.l1);
        assert_abs_diff_eq!(est.l2, exact.l2, epsilon = 0.03 * exact.l2);
    }

    #[test]
    fn empirical_leakage_zero_for_uniform_pad() {
        let field = f5();
        let src = SourceModel::new(field, 0.7).unwrap();
        let pmf = ConditionalPmf::uniform(field);
        let a = generate_source(400, 400, &src, 9).unwrap();
        let pair = make_shares(&a, &pmf, 10).unwrap();
        let est = empirical_leakage(&a, &pair, LogBase::E).unwrap();
        // plug-in MI of an independent pair decays like 1/N
        assert!(est.l1 < 5e-4, "l1={}", est.l1);
        assert!(est.l2 < 5e-4, "l2={}", est.l2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn reconstruction_random_matrices(
            seed in any::<u64>(),
            rows in 1u32..12,
            cols in 1u32..12,
            prime in prop::sample::select(vec![3u64, 5, 11, 257]),
        ) {
            let field = FieldOrder::prime(prime).unwrap();
            let src = SourceModel::new(field, 0.6).unwrap();
            let a = generate_source(rows, cols, &src, seed).unwrap();
            let pmf = ConditionalPmf::new(field, 0.5, 0.25, 0.25).unwrap();
            let pair = make_shares(&a, &pmf, seed ^ 0xdead_beef).unwrap();
            prop_assert_eq!(reconstruct(&pair).unwrap(), a);
        }

        #[test]
        fn padding_deterministic_in_seed(seed in any::<u64>()) {
            let field = f256();
            let src = SourceModel::new(field, 0.8).unwrap();
            let a = generate_source(20, 20, &src, seed).unwrap();
            let pmf = ConditionalPmf::new(field, 0.7, 0.1, 0.2).unwrap();
            let r1 = sample_padding(&a, &pmf, seed).unwrap();
            let r2 = sample_padding(&a, &pmf, seed).unwrap();
            prop_assert_eq!(r1, r2);
        }
    }
}
