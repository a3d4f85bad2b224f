//! Bayesian adaptive weight mixing and the selective winner-takes-all
//! override that turn Shapley credit into deployed agent and pairwise
//! weights.

use serde::{Deserialize, Serialize};

use crate::shapley::truncate_normalize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureConfig {
    /// Bayesian concentration, in days.
    pub lambda: f64,
    /// Rolling-Sharpe window for the WTA test, in days.
    pub n_win: usize,
    /// Dominance ratio threshold.
    pub theta_wta: f64,
    /// Weight share handed to the dominant agent when the override fires.
    pub omega_wta: f64,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        Self {
            lambda: 30.0,
            n_win: 30,
            theta_wta: 1.8,
            omega_wta: 0.80,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightState {
    pub agent: Vec<f64>,
    /// Pairwise weights in the order (1,2), (1,3), (2,3).
    pub pairwise: Vec<f64>,
    pub period: usize,
    pub wta_active: bool,
    pub wta_index: Option<usize>,
}

impl WeightState {
    pub fn uniform(n: usize) -> Self {
        let pairs = n * (n - 1) / 2;
        Self {
            agent: vec![1.0 / n as f64; n],
            pairwise: vec![1.0 / pairs as f64; pairs],
            period: 0,
            wta_active: false,
            wta_index: None,
        }
    }
}

/// `alpha = 1 - exp(-t/lambda)`; zero evidence keeps the uniform prior.
pub fn alpha_schedule(t: usize, lambda: f64) -> f64 {
    1.0 - (-(t as f64) / lambda).exp()
}

/// `omega_i = alpha * truncated_shapley_i + (1 - alpha)/N`.
pub fn bayes_mix(omega_bar: &[f64], alpha: f64) -> Vec<f64> {
    let n = omega_bar.len() as f64;
    omega_bar
        .iter()
        .map(|&w| alpha * w + (1.0 - alpha) / n)
        .collect()
}

/// Dominance test and override. Fires only when the leader's rolling Sharpe
/// and the others' mean are both strictly positive and the ratio clears the
/// threshold; the remaining agents then share `1 - omega_wta` proportionally
/// to their incoming weights. Re-evaluated every period, so reversion is
/// automatic.
pub fn wta_override(
    omega: &[f64],
    rolling_sharpes: &[f64],
    cfg: &MixtureConfig,
) -> (Vec<f64>, Option<usize>) {
    let n = omega.len();
    if n < 2 || rolling_sharpes.len() != n {
        return (omega.to_vec(), None);
    }
    let i_star = (0..n)
        .max_by(|&a, &b| rolling_sharpes[a].total_cmp(&rolling_sharpes[b]))
        .unwrap();
    let leader = rolling_sharpes[i_star];
    let others_mean = (0..n)
        .filter(|&j| j != i_star)
        .map(|j| rolling_sharpes[j])
        .sum::<f64>()
        / (n - 1) as f64;
    if leader <= 0.0 || others_mean <= 0.0 || leader / others_mean < cfg.theta_wta {
        return (omega.to_vec(), None);
    }
    let rest: f64 = (0..n).filter(|&j| j != i_star).map(|j| omega[j]).sum();
    let mut out = vec![0.0; n];
    for j in 0..n {
        if j == i_star {
            out[j] = cfg.omega_wta;
        } else if rest > 0.0 {
            out[j] = (1.0 - cfg.omega_wta) * omega[j] / rest;
        } else {
            out[j] = (1.0 - cfg.omega_wta) / (n - 1) as f64;
        }
    }
    (out, Some(i_star))
}

/// Pairwise analogue of the agent update: truncate-normalize the three
/// pairwise coalition values, then Bayesian-mix with the uniform prior over
/// pairs at the same alpha.
pub fn pairwise_mix(pair_values: &[f64], alpha: f64) -> Vec<f64> {
    bayes_mix(&truncate_normalize(pair_values), alpha)
}
