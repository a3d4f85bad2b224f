//! Stage-1/Stage-2 ensemble values, blend ratios, divergence discount, the
//! blended council portfolio, and asymmetric EMA smoothing.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::portfolio::PortfolioVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlendConfig {
    pub beta_s1_center: f64,
    pub beta_s1_scale: f64,
    pub beta_s1_tau: f64,
    pub beta_gc_center: f64,
    pub beta_gc_scale: f64,
    pub beta_gc_tau: f64,
    pub ema_build: f64,
    pub ema_derisk: f64,
}

impl Default for BlendConfig {
    fn default() -> Self {
        Self {
            beta_s1_center: 0.90,
            beta_s1_scale: 0.09,
            beta_s1_tau: 0.075,
            beta_gc_center: 0.15,
            beta_gc_scale: 0.20,
            beta_gc_tau: 0.10,
            ema_build: 0.70,
            ema_derisk: 0.78,
        }
    }
}

/// Weight-averaged characteristic values of the Stage-1 singles and the
/// Stage-2 pairs.
pub fn ensemble_values(
    omega_tilde: &[f64],
    pairwise: &[f64],
    singleton_values: &[f64],
    pair_values: &[f64],
) -> (f64, f64) {
    let s1 = omega_tilde
        .iter()
        .zip(singleton_values)
        .map(|(w, v)| w * v)
        .sum();
    let s2 = pairwise.iter().zip(pair_values).map(|(p, v)| p * v).sum();
    (s1, s2)
}

/// Performance-gap-driven blend ratios. `beta_s1` moves against the Stage-2
/// advantage, `beta_gc` with the grand-coalition advantage (clamped at 0).
pub fn blend_ratios(
    v_ens_s1: f64,
    v_ens_s2: f64,
    v_grand: f64,
    cfg: &BlendConfig,
) -> (f64, f64) {
    let delta_s2 = v_ens_s2 - v_ens_s1;
    let beta_s1 = cfg.beta_s1_center + cfg.beta_s1_scale * (-delta_s2 / cfg.beta_s1_tau).tanh();
    let delta_gc = v_grand - v_ens_s1;
    let beta_gc =
        (cfg.beta_gc_center + cfg.beta_gc_scale * (delta_gc / cfg.beta_gc_tau).tanh()).max(0.0);
    (beta_s1, beta_gc)
}

/// Consensus discount on the grand-coalition blend.
pub fn divergence_discount(beta_gc: f64, kappa: f64) -> f64 {
    beta_gc * (0.5 + 0.5 * kappa)
}

/// Convex combination of the seven coalition portfolios (cash mixed like
/// any coordinate).
pub fn compose_council(
    stage1: &[PortfolioVector; 3],
    stage2: &[PortfolioVector; 3],
    grand: &PortfolioVector,
    omega_tilde: &[f64],
    pairwise: &[f64],
    beta_s1: f64,
    beta_gc_final: f64,
) -> Result<PortfolioVector> {
    let s1_mix = PortfolioVector::weighted_sum(
        &[&stage1[0], &stage1[1], &stage1[2]],
        omega_tilde,
    )?;
    let s2_mix = PortfolioVector::weighted_sum(
        &[&stage2[0], &stage2[1], &stage2[2]],
        pairwise,
    )?;
    let inner = s1_mix.mix(&s2_mix, beta_s1)?;
    grand.mix(&inner, beta_gc_final)
}

/// Per-coordinate asymmetric EMA toward the target: a faster speed applies
/// when the coordinate is being reduced. The result is renormalized to the
/// simplex.
pub fn ema_smooth(
    target: &PortfolioVector,
    previous: &PortfolioVector,
    cfg: &BlendConfig,
) -> Result<PortfolioVector> {
    if target.n_assets() != previous.n_assets() {
        return Err(crate::error::CouncilError::DimensionMismatch(
            "ema_smooth dimension mismatch".into(),
        ));
    }
    let blend = |t: f64, p: f64| {
        let eta = if t >= p { cfg.ema_build } else { cfg.ema_derisk };
        eta * t + (1.0 - eta) * p
    };
    let weights: Vec<f64> = target
        .weights
        .iter()
        .zip(&previous.weights)
        .map(|(&t, &p)| blend(t, p))
        .collect();
    let cash = blend(target.cash, previous.cash);
    let mut out = PortfolioVector { weights, cash };
    let total = out.total();
    if total > 0.0 {
        for w in out.weights.iter_mut() {
            *w /= total;
        }
        out.cash /= total;
    }
    Ok(out)
}
