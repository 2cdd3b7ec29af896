//! `spshare selftest`: fast built-in consistency checks covering field
//! arithmetic, the optimizer, sharing, placement, the codec, and the cost
//! model. Each check prints one `ok` line; the first failure aborts.

use anyhow::{anyhow, bail};
use spshare::codec::{crc32, decode_sub_share, encode_sub_share};
use spshare::placement::{break_even_sparsity, partition_share};
use spshare::{
    generate_source, make_shares, reconstruct, solve_optimal_pmf, AssignmentPlan, FieldOrder,
    LogBase, SourceModel, SparsityTargets,
};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn field_arithmetic() -> anyhow::Result<()> {
    let f = FieldOrder::binary(8)?;
    let (a, b) = (0xb7, 0x42);
    if f.sub(f.add(a, b), b) != a {
        bail!("GF(2^8) add/sub do not invert");
    }
    let p = FieldOrder::prime(257)?;
    if p.add(200, 100) != 43 || p.neg(0) != 0 || p.add(p.neg(77), 77) != 0 {
        bail!("GF(257) arithmetic is off");
    }
    Ok(())
}

fn entropy_reference() -> anyhow::Result<()> {
    let src = SourceModel::new(FieldOrder::binary(32)?, 0.5)?;
    let h = src.entropy(LogBase::Two);
    if !close(h, 17.0, 1e-6) {
        bail!("entropy at q=2^32, s=0.5 came out as {h}, expected about 17 bits");
    }
    Ok(())
}

fn optimizer_anchor() -> anyhow::Result<()> {
    let src = SourceModel::new(FieldOrder::binary(8)?, 0.95)?;
    let targets = SparsityTargets::new(0.5, 0.5)?;
    let r = solve_optimal_pmf(&src, &targets, LogBase::Two)?;
    let total = r.leakage.total();
    if !close(total, 0.086_460_914_904_4, 1e-9) {
        bail!("anchor leakage {total} is off the frozen value");
    }
    Ok(())
}

fn stationarity_identity() -> anyhow::Result<()> {
    let src = SourceModel::new(FieldOrder::binary(8)?, 0.95)?;
    let targets = SparsityTargets::new(0.5, 0.5)?;
    let r = solve_optimal_pmf(&src, &targets, LogBase::Two)?;
    let p = r.pmf;
    let residual = p.p1() * p.p23_rest() * p.p23_rest() - p.p1_rest() * p.p2() * p.p3();
    if r.at_boundary || residual.abs() > 1e-12 {
        bail!("interior optimum does not satisfy the stationarity identity ({residual:e})");
    }
    Ok(())
}

fn window_boundary() -> anyhow::Result<()> {
    let src = SourceModel::new(FieldOrder::binary(32)?, 0.95)?;
    let targets = SparsityTargets::new(1.0, 0.95)?;
    let r = solve_optimal_pmf(&src, &targets, LogBase::Two)?;
    if !r.at_boundary || !close(r.p1, 1.0, 1e-12) || !close(r.leakage.l1, 0.0, 1e-12) {
        bail!("degenerate all-zero pad target did not pin p1 = 1");
    }
    Ok(())
}

fn share_round_trip() -> anyhow::Result<()> {
    let src = SourceModel::new(FieldOrder::prime(257)?, 0.9)?;
    let targets = SparsityTargets::new(0.95, 0.95)?;
    let pmf = solve_optimal_pmf(&src, &targets, LogBase::Two)?.pmf;
    let source = generate_source(50, 40, &src, 1)?;
    let pair = make_shares(&source, &pmf, 2)?;
    if reconstruct(&pair)? != source {
        bail!("shares do not reconstruct the source");
    }
    Ok(())
}

fn plan_coverage() -> anyhow::Result<()> {
    let plan = AssignmentPlan::new(6, 2)?;
    plan.verify()?;
    for a in 0..6u32 {
        for b in (a + 1)..6 {
            let survivors: Vec<u32> = (0..6).filter(|&i| i != a && i != b).collect();
            let (mm, mk) = plan.missing_blocks(&survivors)?;
            if !mm.is_empty() || !mk.is_empty() {
                bail!("dropping nodes {a} and {b} loses blocks {mm:?}/{mk:?}");
            }
        }
    }
    Ok(())
}

fn codec_round_trip() -> anyhow::Result<()> {
    let src = SourceModel::new(FieldOrder::binary(12)?, 0.8)?;
    let m = generate_source(37, 23, &src, 7)?;
    let blocks = partition_share(&m, 4)?;
    for (t, b) in blocks.iter().enumerate() {
        let bytes = encode_sub_share(b, 37, 4, t as u32)?;
        let (_, back) = decode_sub_share(&bytes)?;
        if back != *b {
            bail!("sub-share {t} does not round-trip");
        }
        let mut bad = bytes.clone();
        let last = bad.len() - 1;
        bad[last] ^= 0x01;
        if decode_sub_share(&bad).is_ok() {
            bail!("checksum misses a flipped bit in sub-share {t}");
        }
    }
    Ok(())
}

fn crc_vector() -> anyhow::Result<()> {
    if crc32(b"123456789") != 0xcbf4_3926 {
        bail!("CRC-32 check value is wrong");
    }
    Ok(())
}

fn cost_break_even() -> anyhow::Result<()> {
    let f = FieldOrder::binary(32)?;
    let be = break_even_sparsity(100, 5, &f, 10_000_000_000, 10_000_000_000)
        .ok_or_else(|| anyhow!("break-even undefined"))?;
    if !close(be, 0.969_164_353_993_216_2, 1e-12) {
        bail!("break-even {be} is off the frozen value");
    }
    Ok(())
}

type Check = (&'static str, fn() -> anyhow::Result<()>);

pub fn run() -> anyhow::Result<()> {
    let checks: [Check; 10] = [
        ("field_arithmetic", field_arithmetic),
        ("entropy_reference", entropy_reference),
        ("optimizer_anchor", optimizer_anchor),
        ("stationarity_identity", stationarity_identity),
        ("window_boundary", window_boundary),
        ("share_round_trip", share_round_trip),
        ("plan_coverage", plan_coverage),
        ("codec_round_trip", codec_round_trip),
        ("crc_vector", crc_vector),
        ("cost_break_even", cost_break_even),
    ];
    let total = checks.len();
    for (name, check) in checks {
        check().map_err(|e| anyhow!("selftest {name}: {e}"))?;
        println!("ok {name}");
    }
    println!("selftest: {total} checks passed");
    Ok(())
}
