//! Argument pieces shared by several subcommands.

use anyhow::bail;
use clap::ValueEnum;
use spshare::{FieldOrder, LogBase, SparsityTargets};

pub fn parse_field(text: &str) -> Result<FieldOrder, String> {
    FieldOrder::parse(text).map_err(|e| e.to_string())
}

/// Parse a large element count given either as an integer or in scientific
/// notation ("1e10"). Counts above 2^53 lose precision as f64, so the
/// shorthand is only accepted below that.
pub fn parse_count(text: &str) -> Result<u64, String> {
    if let Ok(v) = text.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = text
        .parse()
        .map_err(|_| format!("invalid count {text:?}"))?;
    if !v.is_finite() || v < 1.0 || v.fract() != 0.0 || v > (1u64 << 53) as f64 {
        return Err(format!("invalid count {text:?}: expected a whole number"));
    }
    Ok(v as u64)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum BaseArg {
    /// Report leakage in bits
    #[value(name = "2")]
    Two,
    /// Report leakage in nats
    E,
    /// Report leakage in units of log q
    Q,
}

impl BaseArg {
    pub fn to_log_base(self) -> LogBase {
        match self {
            BaseArg::Two => LogBase::Two,
            BaseArg::E => LogBase::E,
            BaseArg::Q => LogBase::FieldSize,
        }
    }

    pub fn label(self) -> &'static str {
        self.to_log_base().label()
    }

    pub fn unit(self) -> &'static str {
        match self {
            BaseArg::Two => "bits",
            BaseArg::E => "nats",
            BaseArg::Q => "log-q units",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

/// Sparsity targets: either an average (with optional gap) or both
/// endpoints explicitly.
#[derive(clap::Args, Debug)]
pub struct TargetArgs {
    /// Average of the two share zero-fraction targets
    #[arg(long, value_name = "S_AVG", conflicts_with_all = ["s_r", "s_ar"])]
    pub s_avg: Option<f64>,

    /// Gap s_AR - s_R between the targets (default 0)
    #[arg(long, value_name = "S_DELTA", allow_negative_numbers = true,
          requires = "s_avg", conflicts_with_all = ["s_r", "s_ar"])]
    pub s_delta: Option<f64>,

    /// Zero-fraction target for the pad share R
    #[arg(long, value_name = "S_R", requires = "s_ar")]
    pub s_r: Option<f64>,

    /// Zero-fraction target for the padded share A+R
    #[arg(long, value_name = "S_AR", requires = "s_r")]
    pub s_ar: Option<f64>,
}

impl TargetArgs {
    pub fn resolve(&self) -> anyhow::Result<SparsityTargets> {
        match (self.s_avg, self.s_r, self.s_ar) {
            (Some(avg), None, None) => Ok(SparsityTargets::from_avg_delta(
                avg,
                self.s_delta.unwrap_or(0.0),
            )?),
            (None, Some(r), Some(ar)) => Ok(SparsityTargets::new(r, ar)?),
            _ => bail!(
                "sparsity targets required: pass --s-avg [--s-delta] or both --s-r and --s-ar"
            ),
        }
    }
}

/// Parse a comma separated list of node ids, rejecting duplicates.
pub fn parse_node_list(text: &str) -> anyhow::Result<Vec<u32>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let id: u32 = part
            .parse()
            .map_err(|_| anyhow::anyhow!("invalid node id {part:?}"))?;
        if out.contains(&id) {
            bail!("duplicate node id {id}");
        }
        out.push(id);
    }
    out.sort_unstable();
    Ok(out)
}
