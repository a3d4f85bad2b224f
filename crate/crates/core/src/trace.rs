//! Five-layer per-period causal trace: raw signals, coalition portfolios,
//! credit assignment, blend ratios, overlay effects. Emitted as
//! line-delimited JSON with a schema-versioned header; parse(emit(x)) = x.

use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

use crate::agents::ShapleyReport;
use crate::error::{CouncilError, Result};
use crate::overlays::OverlayTrace;
use crate::portfolio::PortfolioVector;
use crate::regime::RegimeLabel;

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema_version: u32,
    pub assets: Vec<String>,
}

/// Layer 1: the raw market signals the period was decided on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalLayer {
    pub xi: f64,
    pub xi_prev: f64,
    pub attenuated: bool,
    pub label: RegimeLabel,
    pub r_30d: f64,
    pub sigma_30d: f64,
    pub r_7d: f64,
    pub delta_btc_ew: Option<f64>,
    pub drawdown: f64,
    pub partial_window: bool,
}

/// Layer 2: one entry per coalition, singletons then pairs then grand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalitionLayer {
    pub names: Vec<String>,
    pub portfolios: Vec<PortfolioVector>,
    pub votes: Vec<RegimeLabel>,
}

/// Layer 3: credit assignment state after the ledger update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreditLayer {
    pub phi: Vec<f64>,
    pub omega: Vec<f64>,
    pub omega_tilde: Vec<f64>,
    pub pairwise: Vec<f64>,
    pub wta_active: bool,
    pub wta_index: Option<usize>,
}

/// Layer 4: blend ratios and consensus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendLayer {
    pub beta_s1: f64,
    pub beta_gc: f64,
    pub beta_gc_final: f64,
    pub kappa: f64,
    pub consensus_label: RegimeLabel,
}

/// Layer 5: the overlay cascade and what was finally executed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayLayer {
    pub steps: OverlayTrace,
    pub pre_overlay: PortfolioVector,
    pub executed: PortfolioVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub date: String,
    pub period: usize,
    pub signals: SignalLayer,
    pub coalitions: CoalitionLayer,
    pub credit: CreditLayer,
    pub blends: BlendLayer,
    pub overlays: OverlayLayer,
    /// Net return realized by the executed portfolio, absent on the final
    /// period when next-day prices do not exist.
    pub realized_return: Option<f64>,
}

impl TraceRecord {
    pub fn shapley_report(&self, coalition_values: Vec<f64>, rolling_sharpes: Vec<f64>) -> ShapleyReport {
        ShapleyReport {
            omega: self.credit.omega.clone(),
            pairwise: self.credit.pairwise.clone(),
            coalition_values,
            rolling_sharpes,
            wta_active: self.credit.wta_active,
            wta_index: self.credit.wta_index,
        }
    }
}

/// Writes the header line followed by one JSON line per record.
pub fn emit_trace<W: Write>(out: &mut W, header: &TraceHeader, records: &[TraceRecord]) -> Result<()> {
    let line = serde_json::to_string(header)
        .map_err(|e| CouncilError::Trace(format!("serialize header: {e}")))?;
    writeln!(out, "{line}")?;
    for r in records {
        let line = serde_json::to_string(r)
            .map_err(|e| CouncilError::Trace(format!("serialize record: {e}")))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Inverse of `emit_trace`; rejects unknown schema versions.
pub fn parse_trace<R: BufRead>(input: R) -> Result<(TraceHeader, Vec<TraceRecord>)> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| CouncilError::Trace("empty trace file".into()))??;
    let header: TraceHeader = serde_json::from_str(&first)
        .map_err(|e| CouncilError::Trace(format!("bad header: {e}")))?;
    if header.schema_version != TRACE_SCHEMA_VERSION {
        return Err(CouncilError::Trace(format!(
            "unsupported schema version {}",
            header.schema_version
        )));
    }
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: TraceRecord = serde_json::from_str(&line)
            .map_err(|e| CouncilError::Trace(format!("bad record: {e}")))?;
        records.push(r);
    }
    Ok((header, records))
}
