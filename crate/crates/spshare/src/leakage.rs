//! Information leakage of the two shares.
//!
//! The source matrix entry A is zero with probability `s` and uniform over
//! the nonzero elements otherwise. The pad R is drawn from a conditional
//! distribution on A designed so both the pad and the padded value A+R stay
//! sparse. What an observer of a single share learns per element is the
//! mutual information I(A;R) (pad share) or I(A;A+R) (padded share).
//!
//! The structured family collapses each conditional column to at most three
//! weights: given A=0, R=0 with probability `p1` and uniform otherwise;
//! given A=a nonzero, R=0 with `p2`, R=-a with `p3` and uniform over the
//! remaining q-2 elements otherwise. All computations run in nats internally
//! and convert on output.

use crate::error::{Error, Result};
use crate::field::FieldOrder;

const PROB_SLACK: f64 = 1e-12;

/// Logarithm base for reported information quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    /// Bits.
    Two,
    /// Nats.
    E,
    /// log base q, the field order.
    FieldSize,
}

impl LogBase {
    /// ln(base); divide nat-valued quantities by this.
    pub fn ln_base(&self, field: &FieldOrder) -> f64 {
        match self {
            LogBase::Two => std::f64::consts::LN_2,
            LogBase::E => 1.0,
            LogBase::FieldSize => field.order_f64().ln(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            LogBase::Two => "2",
            LogBase::E => "e",
            LogBase::FieldSize => "q",
        }
    }
}

/// i.i.d. source entry distribution: zero with probability `s`, uniform over
/// the q-1 nonzero elements otherwise. Requires 1/q < s < 1, the regime
/// where the source is sparser than uniform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceModel {
    field: FieldOrder,
    s: f64,
}

impl SourceModel {
    pub fn new(field: FieldOrder, s: f64) -> Result<Self> {
        let inv_q = 1.0 / field.order_f64();
        if !s.is_finite() || s <= inv_q || s >= 1.0 {
            return Err(Error::InvalidProbability {
                name: "s",
                value: s,
            });
        }
        Ok(SourceModel { field, s })
    }

    pub fn field(&self) -> FieldOrder {
        self.field
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Entropy of one source entry.
    pub fn entropy(&self, base: LogBase) -> f64 {
        let q = self.field.order_f64();
        let s = self.s;
        let nats = -xlnx(s) - xlnx_scaled(1.0 - s, q - 1.0);
        nats / base.ln_base(&self.field)
    }
}

/// Zero-mass pair for the two shares: `s_r` for the pad, `s_ar` for the
/// padded share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityTargets {
    s_r: f64,
    s_ar: f64,
}

impl SparsityTargets {
    pub fn new(s_r: f64, s_ar: f64) -> Result<Self> {
        for (name, v) in [("s_r", s_r), ("s_ar", s_ar)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidProbability { name, value: v });
            }
        }
        Ok(SparsityTargets { s_r, s_ar })
    }

    /// Mean/gap form: `s_r = avg - delta/2`, `s_ar = avg + delta/2`.
    pub fn from_avg_delta(avg: f64, delta: f64) -> Result<Self> {
        SparsityTargets::new(avg - delta / 2.0, avg + delta / 2.0)
    }

    pub fn s_r(&self) -> f64 {
        self.s_r
    }

    pub fn s_ar(&self) -> f64 {
        self.s_ar
    }

    pub fn s_avg(&self) -> f64 {
        0.5 * (self.s_r + self.s_ar)
    }

    pub fn s_delta(&self) -> f64 {
        self.s_ar - self.s_r
    }

    pub fn swapped(&self) -> Self {
        SparsityTargets {
            s_r: self.s_ar,
            s_ar: self.s_r,
        }
    }
}

/// Structured conditional pad distribution. See the module docs for the
/// three-weight layout; `p1_rest` and `p23_rest` are the per-element masses
/// of the uniform remainders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalPmf {
    field: FieldOrder,
    p1: f64,
    p2: f64,
    p3: f64,
    p1_rest: f64,
    p23_rest: f64,
}

impl ConditionalPmf {
    pub fn new(field: FieldOrder, p1: f64, p2: f64, p3: f64) -> Result<Self> {
        for (name, v) in [("p1", p1), ("p2", p2), ("p3", p3)] {
            if !v.is_finite() || !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&v) {
                return Err(Error::InvalidProbability { name, value: v });
            }
        }
        if p2 + p3 > 1.0 + PROB_SLACK {
            return Err(Error::InvalidProbability {
                name: "p2+p3",
                value: p2 + p3,
            });
        }
        let q = field.order_f64();
        let p1 = p1.clamp(0.0, 1.0);
        let p2 = p2.clamp(0.0, 1.0);
        let p3 = (p3.clamp(0.0, 1.0)).min(1.0 - p2);
        Ok(ConditionalPmf {
            field,
            p1,
            p2,
            p3,
            p1_rest: ((1.0 - p1) / (q - 1.0)).max(0.0),
            p23_rest: ((1.0 - p2 - p3) / (q - 2.0)).max(0.0),
        })
    }

    /// Unconditionally uniform pad; both shares then reveal nothing.
    pub fn uniform(field: FieldOrder) -> Self {
        let q = field.order_f64();
        ConditionalPmf::new(field, 1.0 / q, 1.0 / q, 1.0 / q).unwrap()
    }

    pub fn field(&self) -> FieldOrder {
        self.field
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn p3(&self) -> f64 {
        self.p3
    }

    pub fn p1_rest(&self) -> f64 {
        self.p1_rest
    }

    pub fn p23_rest(&self) -> f64 {
        self.p23_rest
    }

    /// Zero masses of the two shares this pad induces: the pad share is zero
    /// when (A=0, R=0) or (A!=0, R=0); the padded share when (A=0, R=0) or
    /// (A!=0, R=-A).
    pub fn realized_sparsity(&self, src: &SourceModel) -> Result<SparsityTargets> {
        self.check_field(src)?;
        let s = src.s();
        SparsityTargets::new(
            self.p1 * s + self.p2 * (1.0 - s),
            self.p1 * s + self.p3 * (1.0 - s),
        )
    }

    /// Expand into an explicit q-by-q conditional table.
    pub fn expand(&self) -> Result<GeneralConditionalPmf> {
        let q = check_enumerable(&self.field, GENERAL_ORDER_LIMIT)?;
        let mut table = vec![0.0; q * q];
        for a in 0..q as u64 {
            let col = &mut table[(a as usize) * q..(a as usize + 1) * q];
            if a == 0 {
                for (r, slot) in col.iter_mut().enumerate() {
                    *slot = if r == 0 { self.p1 } else { self.p1_rest };
                }
            } else {
                let cancel = self.field.neg(a) as usize;
                for (r, slot) in col.iter_mut().enumerate() {
                    *slot = if r == 0 {
                        self.p2
                    } else if r == cancel {
                        self.p3
                    } else {
                        self.p23_rest
                    };
                }
            }
        }
        GeneralConditionalPmf::new(self.field, table)
    }

    fn check_field(&self, src: &SourceModel) -> Result<()> {
        if self.field == src.field() {
            Ok(())
        } else {
            Err(Error::FieldMismatch)
        }
    }
}

/// Marginal distribution of one share, collapsed to its zero mass and the
/// common mass of each nonzero element (the marginals are uniform off zero
/// by symmetry).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShareMarginal {
    pub zero: f64,
    pub each_nonzero: f64,
}

/// Per-element leakage of the two shares, in `base`. `per_matrix` and
/// `per_node` stay empty until scaled by a placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageReport {
    pub l1: f64,
    pub l2: f64,
    pub base: LogBase,
    pub per_matrix: Option<f64>,
    pub per_node: Option<f64>,
}

impl LeakageReport {
    pub fn new(l1: f64, l2: f64, base: LogBase) -> Self {
        LeakageReport {
            l1,
            l2,
            base,
            per_matrix: None,
            per_node: None,
        }
    }

    pub fn total(&self) -> f64 {
        self.l1 + self.l2
    }

    pub fn converted(&self, field: &FieldOrder, to: LogBase) -> LeakageReport {
        let f = self.base.ln_base(field) / to.ln_base(field);
        LeakageReport {
            l1: self.l1 * f,
            l2: self.l2 * f,
            base: to,
            per_matrix: self.per_matrix.map(|v| v * f),
            per_node: self.per_node.map(|v| v * f),
        }
    }
}

/// Marginals of the pad share and the padded share under `pmf`.
pub fn marginal_share_pmfs(
    pmf: &ConditionalPmf,
    src: &SourceModel,
) -> Result<(ShareMarginal, ShareMarginal)> {
    let t = pmf.realized_sparsity(src)?;
    let q = src.field().order_f64();
    Ok((
        ShareMarginal {
            zero: t.s_r(),
            each_nonzero: (1.0 - t.s_r()) / (q - 1.0),
        },
        ShareMarginal {
            zero: t.s_ar(),
            each_nonzero: (1.0 - t.s_ar()) / (q - 1.0),
        },
    ))
}

/// Closed-form leakage of the structured family.
///
/// Exploits two symmetries: the pad marginal is uniform off zero, and every
/// nonzero source column is a permutation of every other. That reduces the
/// q^2-term mutual informations to a handful of KL terms.
pub fn total_leakage(
    pmf: &ConditionalPmf,
    src: &SourceModel,
    base: LogBase,
) -> Result<LeakageReport> {
    let t = pmf.realized_sparsity(src)?;
    let q = src.field().order_f64();
    let s = src.s();
    let (p1, p2, p3) = (pmf.p1(), pmf.p2(), pmf.p3());
    let (p1r, p23r) = (pmf.p1_rest(), pmf.p23_rest());

    let sr = t.s_r();
    let sr_rest = (1.0 - sr) / (q - 1.0);
    let l1 = s * (kl_term(p1, sr) + (q - 1.0) * kl_term(p1r, sr_rest))
        + (1.0 - s) * (kl_term(p2, sr) + kl_term(p3, sr_rest) + (q - 2.0) * kl_term(p23r, sr_rest));

    let sar = t.s_ar();
    let sar_rest = (1.0 - sar) / (q - 1.0);
    let l2 = s * (kl_term(p1, sar) + (q - 1.0) * kl_term(p1r, sar_rest))
        + (1.0 - s)
            * (kl_term(p3, sar) + kl_term(p2, sar_rest) + (q - 2.0) * kl_term(p23r, sar_rest));

    let ln_base = base.ln_base(&src.field());
    Ok(LeakageReport::new(
        (l1 / ln_base).max(0.0),
        (l2 / ln_base).max(0.0),
        base,
    ))
}

pub const GENERAL_ORDER_LIMIT: u128 = 4096;

/// Arbitrary conditional pad distribution as an explicit table.
/// `table[a*q + r]` is P(R = r | A = a); columns are indexed by the
/// conditioning value a. Only enumerable orders (q <= 4096) are supported.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralConditionalPmf {
    field: FieldOrder,
    q: usize,
    table: Vec<f64>,
}

impl GeneralConditionalPmf {
    pub fn new(field: FieldOrder, table: Vec<f64>) -> Result<Self> {
        let q = check_enumerable(&field, GENERAL_ORDER_LIMIT)?;
        if table.len() != q * q {
            return Err(Error::DimensionMismatch {
                expected: (q as u64, q as u64),
                got: (table.len() as u64, 1),
            });
        }
        for (idx, &v) in table.iter().enumerate() {
            if !v.is_finite() || !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&v) {
                return Err(Error::InvalidProbability {
                    name: "table entry",
                    value: if v.is_finite() { v } else { idx as f64 },
                });
            }
        }
        let mut table = table;
        for v in table.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        for a in 0..q {
            let sum: f64 = table[a * q..(a + 1) * q].iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidProbability {
                    name: "column sum",
                    value: sum,
                });
            }
        }
        Ok(GeneralConditionalPmf { field, q, table })
    }

    pub fn field(&self) -> FieldOrder {
        self.field
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn column(&self, a: usize) -> &[f64] {
        &self.table[a * self.q..(a + 1) * self.q]
    }

    pub fn prob(&self, r: usize, a: usize) -> f64 {
        self.table[a * self.q + r]
    }
}

/// Exact leakage of an arbitrary conditional table, by direct double
/// summation with compensated accumulation. Serves as the independent check
/// on the closed forms and as the objective for the general optimizer.
pub fn general_leakage(
    g: &GeneralConditionalPmf,
    src: &SourceModel,
    base: LogBase,
) -> Result<LeakageReport> {
    if g.field() != src.field() {
        return Err(Error::FieldMismatch);
    }
    let q = g.q();
    let field = src.field();
    let s = src.s();
    let pa = |a: usize| {
        if a == 0 {
            s
        } else {
            (1.0 - s) / (q as f64 - 1.0)
        }
    };

    let mut p_r = vec![0.0; q];
    let mut p_ar = vec![0.0; q];
    for a in 0..q {
        let w = pa(a);
        let col = g.column(a);
        for (r, &p) in col.iter().enumerate() {
            p_r[r] += w * p;
            p_ar[field.add(a as u64, r as u64) as usize] += w * p;
        }
    }

    let mut l1 = KahanSum::new();
    let mut l2 = KahanSum::new();
    for a in 0..q {
        let w = pa(a);
        let col = g.column(a);
        for (r, &p) in col.iter().enumerate() {
            if p > 0.0 {
                let b = field.add(a as u64, r as u64) as usize;
                l1.add(w * p * (p / p_r[r]).ln());
                l2.add(w * p * (p / p_ar[b]).ln());
            }
        }
    }

    let ln_base = base.ln_base(&field);
    Ok(LeakageReport::new(
        (l1.total() / ln_base).max(0.0),
        (l2.total() / ln_base).max(0.0),
        base,
    ))
}

/// Compensated (Kahan) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        KahanSum::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum
    }
}

/// x ln x with the 0 ln 0 = 0 convention.
#[inline]
pub(crate) fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// x ln(x/n) summed over n equal parts: total mass x spread uniformly.
#[inline]
fn xlnx_scaled(x: f64, n: f64) -> f64 {
    if x > 0.0 {
        x * (x / n).ln()
    } else {
        0.0
    }
}

/// p ln(p/m) with the 0 ln 0 = 0 convention; m is the marginal mass.
#[inline]
fn kl_term(p: f64, m: f64) -> f64 {
    if p > 0.0 {
        p * (p / m).ln()
    } else {
        0.0
    }
}

fn check_enumerable(field: &FieldOrder, limit: u128) -> Result<usize> {
    let q = field.order();
    if q > limit {
        return Err(Error::OrderTooLarge { order: q, limit });
    }
    Ok(q as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn f256() -> FieldOrder {
        FieldOrder::binary(8).unwrap()
    }

    #[test]
    fn source_model_bounds() {
        let f = f256();
        assert!(SourceModel::new(f, 1.0 / 256.0).is_err());
        assert!(SourceModel::new(f, 1.0).is_err());
        assert!(SourceModel::new(f, f64::NAN).is_err());
        assert!(SourceModel::new(f, 0.5).is_ok());
        // 1/q < s must hold, so a denser-than-uniform "sparsity" is rejected
        let f3 = FieldOrder::prime(3).unwrap();
        assert!(SourceModel::new(f3, 0.2).is_err());
    }

    #[test]
    fn source_entropy_reference_value() {
        let src = SourceModel::new(f256(), 0.95).unwrap();
        assert_abs_diff_eq!(
            src.entropy(LogBase::E),
            0.47557842060379386,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            src.entropy(LogBase::Two),
            0.686114628958899,
            epsilon = 1e-13
        );
        // base-q entropy of a near-deterministic source is small
        let eq = src.entropy(LogBase::FieldSize);
        assert_abs_diff_eq!(eq, 0.47557842060379386 / 256f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn realized_sparsity_pairing() {
        // p2 shapes the pad share's zeros, p3 the padded share's
        let src = SourceModel::new(f256(), 0.95).unwrap();
        let pmf = ConditionalPmf::new(f256(), 0.8, 0.4, 0.2).unwrap();
        let t = pmf.realized_sparsity(&src).unwrap();
        assert_abs_diff_eq!(t.s_r(), 0.78, epsilon = 1e-15);
        assert_abs_diff_eq!(t.s_ar(), 0.77, epsilon = 1e-15);
    }

    #[test]
    fn targets_forms_agree() {
        let a = SparsityTargets::new(0.483, 0.517).unwrap();
        let b = SparsityTargets::from_avg_delta(0.5, 0.034).unwrap();
        assert_abs_diff_eq!(a.s_r(), b.s_r(), epsilon = 1e-15);
        assert_abs_diff_eq!(a.s_ar(), b.s_ar(), epsilon = 1e-15);
        assert_abs_diff_eq!(a.s_avg(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a.s_delta(), 0.034, epsilon = 1e-15);
        assert!(SparsityTargets::new(-0.1, 0.5).is_err());
        assert!(SparsityTargets::new(0.5, 1.1).is_err());
    }

    #[test]
    fn uniform_pad_leaks_nothing() {
        let f = f256();
        let src = SourceModel::new(f, 0.95).unwrap();
        let pmf = ConditionalPmf::uniform(f);
        let rep = total_leakage(&pmf, &src, LogBase::Two).unwrap();
        assert_abs_diff_eq!(rep.l1, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rep.l2, 0.0, epsilon = 1e-14);
        let t = pmf.realized_sparsity(&src).unwrap();
        assert_abs_diff_eq!(t.s_r(), 1.0 / 256.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.s_ar(), 1.0 / 256.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_pad_reveals_everything_downstream() {
        // R identically zero: the pad share carries nothing, the padded
        // share is the source itself and leaks its full entropy.
        let f = f256();
        let src = SourceModel::new(f, 0.95).unwrap();
        let pmf = ConditionalPmf::new(f, 1.0, 1.0, 0.0).unwrap();
        let rep = total_leakage(&pmf, &src, LogBase::E).unwrap();
        assert_abs_diff_eq!(rep.l1, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rep.l2, src.entropy(LogBase::E), epsilon = 1e-12);
        // and the mirror image: R = -A makes the padded share empty
        let pmf = ConditionalPmf::new(f, 1.0, 0.0, 1.0).unwrap();
        let rep = total_leakage(&pmf, &src, LogBase::E).unwrap();
        assert_abs_diff_eq!(rep.l1, src.entropy(LogBase::E), epsilon = 1e-12);
        assert_abs_diff_eq!(rep.l2, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn closed_form_matches_double_sum() {
        // the closed form and the exhaustive table evaluation are
        // independent code paths; they must agree to float precision
        for (field, s, p1, p2, p3) in [
            (FieldOrder::prime(3).unwrap(), 0.6, 0.57, 0.38, 0.38),
            (FieldOrder::prime(11).unwrap(), 0.7, 0.51, 0.14, 0.30),
            (
                f256(),
                0.95,
                0.523252751491206,
                0.0581977216670794,
                0.0581977216670794,
            ),
            (f256(), 0.95, 0.9, 0.1, 0.25),
            (FieldOrder::prime(257).unwrap(), 0.5, 0.3, 0.2, 0.1),
        ] {
            let src = SourceModel::new(field, s).unwrap();
            let pmf = ConditionalPmf::new(field, p1, p2, p3).unwrap();
            let a = total_leakage(&pmf, &src, LogBase::E).unwrap();
            let b = general_leakage(&pmf.expand().unwrap(), &src, LogBase::E).unwrap();
            assert_abs_diff_eq!(a.l1, b.l1, epsilon = 1e-12);
            assert_abs_diff_eq!(a.l2, b.l2, epsilon = 1e-12);
        }
    }

    #[test]
    fn reference_point_leakage() {
        // frozen high-precision evaluation of the closed forms
        let src = SourceModel::new(f256(), 0.95).unwrap();
        let pmf = ConditionalPmf::new(
            f256(),
            0.523252751491206,
            0.0581977216670794,
            0.0581977216670794,
        )
        .unwrap();
        let rep = total_leakage(&pmf, &src, LogBase::Two).unwrap();
        assert_abs_diff_eq!(rep.total(), 0.0864609149043609, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.l1, rep.l2, epsilon = 1e-12); // symmetric targets
    }

    #[test]
    fn base_conversion() {
        let src = SourceModel::new(f256(), 0.95).unwrap();
        let pmf = ConditionalPmf::new(f256(), 0.9, 0.2, 0.3).unwrap();
        let nats = total_leakage(&pmf, &src, LogBase::E).unwrap();
        let bits = total_leakage(&pmf, &src, LogBase::Two).unwrap();
        let baseq = total_leakage(&pmf, &src, LogBase::FieldSize).unwrap();
        assert_abs_diff_eq!(
            bits.total() * std::f64::consts::LN_2,
            nats.total(),
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(baseq.total() * 256f64.ln(), nats.total(), epsilon = 1e-13);
        let conv = nats.converted(&f256(), LogBase::Two);
        assert_abs_diff_eq!(conv.total(), bits.total(), epsilon = 1e-14);
    }

    #[test]
    fn marginals_sum_to_one() {
        let src = SourceModel::new(f256(), 0.9).unwrap();
        let pmf = ConditionalPmf::new(f256(), 0.7, 0.2, 0.25).unwrap();
        let (mr, mar) = marginal_share_pmfs(&pmf, &src).unwrap();
        assert_abs_diff_eq!(mr.zero + 255.0 * mr.each_nonzero, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mar.zero + 255.0 * mar.each_nonzero, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pmf_validation() {
        let f = f256();
        assert!(ConditionalPmf::new(f, 1.2, 0.0, 0.0).is_err());
        assert!(ConditionalPmf::new(f, 0.5, 0.7, 0.6).is_err());
        assert!(ConditionalPmf::new(f, -0.1, 0.0, 0.0).is_err());
        assert!(ConditionalPmf::new(f, f64::INFINITY, 0.0, 0.0).is_err());
        // within slack, clamped instead of rejected
        let p = ConditionalPmf::new(f, 1.0 + 5e-13, 0.5, 0.5 + 3e-13).unwrap();
        assert!(p.p1() <= 1.0 && p.p2() + p.p3() <= 1.0);
    }

    #[test]
    fn general_table_validation() {
        let f3 = FieldOrder::prime(3).unwrap();
        let uniform = vec![1.0 / 3.0; 9];
        assert!(GeneralConditionalPmf::new(f3, uniform).is_ok());
        assert!(GeneralConditionalPmf::new(f3, vec![0.5; 9]).is_err());
        assert!(GeneralConditionalPmf::new(f3, vec![1.0 / 3.0; 6]).is_err());
        let big = FieldOrder::binary(13).unwrap(); // 8192 > limit
        let err = ConditionalPmf::new(big, 0.5, 0.2, 0.2).unwrap().expand();
        assert!(matches!(err, Err(Error::OrderTooLarge { .. })));
    }

    #[test]
    fn general_leakage_zero_for_uniform() {
        let f3 = FieldOrder::prime(3).unwrap();
        let src = SourceModel::new(f3, 0.6).unwrap();
        let g = GeneralConditionalPmf::new(f3, vec![1.0 / 3.0; 9]).unwrap();
        let rep = general_leakage(&g, &src, LogBase::E).unwrap();
        assert_abs_diff_eq!(rep.total(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn binary_field_cancellation_uses_xor() {
        // over GF(2^m) the cancelling pad value equals a itself; the closed
        // form and the table path must agree there too
        let f4 = FieldOrder::binary(2).unwrap();
        let src = SourceModel::new(f4, 0.6).unwrap();
        let pmf = ConditionalPmf::new(f4, 0.5, 0.25, 0.35).unwrap();
        let a = total_leakage(&pmf, &src, LogBase::E).unwrap();
        let b = general_leakage(&pmf.expand().unwrap(), &src, LogBase::E).unwrap();
        assert_abs_diff_eq!(a.l1, b.l1, epsilon = 1e-13);
        assert_abs_diff_eq!(a.l2, b.l2, epsilon = 1e-13);
    }

    #[test]
    fn kahan_sum_compensates() {
        let mut k = KahanSum::new();
        k.add(1.0);
        for _ in 0..10_000_000 {
            k.add(1e-16);
        }
        assert_abs_diff_eq!(k.total(), 1.0 + 1e-9, epsilon = 1e-15);
    }
}
