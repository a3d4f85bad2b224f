//! Deterministic reference policies behind the agent interface, plus the
//! pairwise debate operator and the grand-coalition readout. The interface
//! (decide / debate / grand_readout) is the stable contract; the built-in
//! policies are simple, signal-faithful stand-ins for the three channels:
//! technical, on-chain, macro.

use serde::{Deserialize, Serialize};

use crate::error::{CouncilError, Result};
use crate::market::MarketSnapshot;
use crate::portfolio::PortfolioVector;
use crate::regime::RegimeLabel;

pub const N_AGENTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentDecision {
    pub portfolio: PortfolioVector,
    pub vote: RegimeLabel,
    pub rationale: String,
}

/// Ledger summary handed to the readout operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyReport {
    pub omega: Vec<f64>,
    pub pairwise: Vec<f64>,
    pub coalition_values: Vec<f64>,
    pub rolling_sharpes: Vec<f64>,
    pub wta_active: bool,
    pub wta_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub w_max: f64,
    pub c_max: f64,
    /// Vote thresholds on the agent's own score, mirroring the regime
    /// label cutoffs.
    pub vote_hi: f64,
    pub vote_lo: f64,
    /// Fraction of long mass per unit disagreement moved to cash in debate.
    pub debate_caution: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            w_max: 0.40,
            c_max: 0.30,
            vote_hi: 0.30,
            vote_lo: -0.30,
            debate_caution: 0.25,
        }
    }
}

fn vote_from_score(score: f64, params: &PolicyParams) -> RegimeLabel {
    if score > params.vote_hi {
        RegimeLabel::Bull
    } else if score < params.vote_lo {
        RegimeLabel::Bear
    } else {
        RegimeLabel::Volatile
    }
}

/// Numerically stable softmax.
fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|&x| (x - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / z).collect()
}

fn trend_score(ret: f64, sigma: f64) -> f64 {
    if sigma <= 1e-12 {
        if ret > 0.0 {
            0.999
        } else if ret < 0.0 {
            -0.999
        } else {
            0.0
        }
    } else {
        (ret / sigma).tanh()
    }
}

/// Technical specialist: softmax over 30-day return-to-volatility ratios,
/// cash shrinking with positive aggregate momentum.
fn decide_technical(s: &MarketSnapshot, params: &PolicyParams) -> Result<AgentDecision> {
    let ratios: Vec<f64> = s
        .ret_30d
        .iter()
        .zip(&s.vol_30d)
        .map(|(&r, &v)| (r / v.max(1e-8)).clamp(-50.0, 50.0))
        .collect();
    let shares = softmax(&ratios);
    let momentum = s.ret_30d.iter().sum::<f64>() / s.ret_30d.len() as f64;
    let cash = 0.08 + 0.17 * (1.0 - momentum.max(0.0).tanh());
    let weights: Vec<f64> = shares.iter().map(|&x| x * (1.0 - cash)).collect();
    let portfolio = PortfolioVector::new(weights, cash).project_constraints(params.w_max, params.c_max)?;
    let score = trend_score(s.r_30d, s.sigma_30d);
    Ok(AgentDecision {
        portfolio,
        vote: vote_from_score(score, params),
        rationale: format!("trend score {score:.3}, mean 30d momentum {momentum:.4}"),
    })
}

/// On-chain specialist: softmax over on-chain activity z-scores, equal
/// weight when the feature bundle is missing; fixed moderate cash.
fn decide_onchain(s: &MarketSnapshot, params: &PolicyParams) -> Result<AgentDecision> {
    let k = s.ret_30d.len();
    let cash = 0.15;
    let shares = match &s.onchain_z {
        Some(z) => softmax(z),
        None => vec![1.0 / k as f64; k],
    };
    let weights: Vec<f64> = shares.iter().map(|&x| x * (1.0 - cash)).collect();
    let portfolio = PortfolioVector::new(weights, cash).project_constraints(params.w_max, params.c_max)?;
    // Votes on the short-horizon trend of its own basket view.
    let score = trend_score(s.r_7d, s.sigma_30d * 7.0f64.sqrt());
    Ok(AgentDecision {
        portfolio,
        vote: vote_from_score(score, params),
        rationale: match &s.onchain_z {
            Some(_) => format!("on-chain tilt, 7d trend score {score:.3}"),
            None => "on-chain features missing, equal weight".into(),
        },
    })
}

/// Macro specialist: equal-weight longs scaled by a risk-on score in
/// [0, 1]; the remainder sits in cash up to the cap.
fn decide_macro(s: &MarketSnapshot, params: &PolicyParams) -> Result<AgentDecision> {
    let k = s.ret_30d.len();
    let risk_on = match s.macro_score {
        Some(m) => 0.5 * (1.0 + m.tanh()),
        None => 0.5,
    };
    let cash = (1.0 - risk_on).min(params.c_max);
    let weights = vec![(1.0 - cash) / k as f64; k];
    let portfolio = PortfolioVector::new(weights, cash).project_constraints(params.w_max, params.c_max)?;
    let score = 2.0 * risk_on - 1.0;
    Ok(AgentDecision {
        portfolio,
        vote: vote_from_score(score, params),
        rationale: format!("macro risk-on {risk_on:.3}"),
    })
}

/// Stage-1 private observation for agent `id` in 0..3.
pub fn decide(id: usize, snapshot: &MarketSnapshot, params: &PolicyParams) -> Result<AgentDecision> {
    match id {
        0 => decide_technical(snapshot, params),
        1 => decide_onchain(snapshot, params),
        2 => decide_macro(snapshot, params),
        _ => Err(CouncilError::UnknownAgent(id)),
    }
}

/// Stage-2 pairwise combination: average the two portfolios, then move
/// `caution * D` of long mass to cash, with D the per-asset disagreement
/// `sum_k |w_i,k - w_j,k| / 2`. Votes combine to the common label or
/// volatile.
pub fn debate(a: &AgentDecision, b: &AgentDecision, params: &PolicyParams) -> Result<AgentDecision> {
    let avg = a.portfolio.mix(&b.portfolio, 0.5)?;
    let disagreement: f64 = a
        .portfolio
        .weights
        .iter()
        .zip(&b.portfolio.weights)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        / 2.0;
    let scale = 1.0 - params.debate_caution * disagreement;
    let weights: Vec<f64> = avg.weights.iter().map(|&w| w * scale).collect();
    let cash = avg.cash + avg.long_mass() * (1.0 - scale);
    let portfolio =
        PortfolioVector::new(weights, cash).project_constraints(params.w_max, params.c_max)?;
    let vote = if a.vote == b.vote {
        a.vote
    } else {
        RegimeLabel::Volatile
    };
    Ok(AgentDecision {
        portfolio,
        vote,
        rationale: format!("debate disagreement {disagreement:.4}"),
    })
}

/// Plurality of votes; ties resolve to volatile.
pub fn plurality_vote(votes: &[RegimeLabel]) -> RegimeLabel {
    let order = [RegimeLabel::Bull, RegimeLabel::Volatile, RegimeLabel::Bear];
    let counts: Vec<usize> = order
        .iter()
        .map(|&l| votes.iter().filter(|&&v| v == l).count())
        .collect();
    let best = *counts.iter().max().unwrap();
    let winners: Vec<RegimeLabel> = order
        .iter()
        .zip(&counts)
        .filter(|&(_, &c)| c == best)
        .map(|(&l, _)| l)
        .collect();
    if winners.len() == 1 {
        winners[0]
    } else {
        RegimeLabel::Volatile
    }
}

/// Stage-3 grand-coalition readout: the omega-weighted Stage-1 mix
/// averaged 50/50 with the pairwise-weighted Stage-2 mix.
pub fn grand_readout(
    stage1: &[AgentDecision],
    stage2: &[AgentDecision],
    report: &ShapleyReport,
    params: &PolicyParams,
) -> Result<AgentDecision> {
    if stage1.len() != N_AGENTS || stage2.len() != N_AGENTS {
        return Err(CouncilError::DimensionMismatch(format!(
            "grand readout needs {N_AGENTS}+{N_AGENTS} decisions, got {}+{}",
            stage1.len(),
            stage2.len()
        )));
    }
    let s1_ports: Vec<&PortfolioVector> = stage1.iter().map(|d| &d.portfolio).collect();
    let s2_ports: Vec<&PortfolioVector> = stage2.iter().map(|d| &d.portfolio).collect();
    let s1 = PortfolioVector::weighted_sum(&s1_ports, &report.omega)?;
    let s2 = PortfolioVector::weighted_sum(&s2_ports, &report.pairwise)?;
    let portfolio = s1
        .mix(&s2, 0.5)?
        .project_constraints(params.w_max, params.c_max)?;
    let votes: Vec<RegimeLabel> = stage1.iter().map(|d| d.vote).collect();
    Ok(AgentDecision {
        portfolio,
        vote: plurality_vote(&votes),
        rationale: "grand coalition readout".into(),
    })
}
