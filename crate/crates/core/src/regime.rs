//! Continuous regime score, nominal labels, regime-aware agent multipliers,
//! Shapley-weighted vote consensus, and the dominant-dimension override.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeLabel {
    Bull,
    Volatile,
    Bear,
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegimeLabel::Bull => write!(f, "bull"),
            RegimeLabel::Volatile => write!(f, "volatile"),
            RegimeLabel::Bear => write!(f, "bear"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeConfig {
    pub xi_plus: f64,
    pub xi_minus: f64,
    /// Multiplier applied to xi on a short-term directional conflict.
    pub attenuation_factor: f64,
    /// Conflict fires when |r_7d| exceeds this fraction of |r_30d|.
    pub attenuation_ratio: f64,
    /// Saturation value replacing tanh when sigma_30d = 0.
    pub xi_sat: f64,
    /// Gain of the dominant-dimension consensus amplification.
    pub consensus_gain: f64,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        Self {
            xi_plus: 0.30,
            xi_minus: -0.30,
            attenuation_factor: 0.5,
            attenuation_ratio: 0.30,
            xi_sat: 0.999,
            consensus_gain: 0.5,
        }
    }
}

/// Per-agent multiplier values at xi = +1, 0, -1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierAnchors {
    /// (bull, neutral, bear) per agent.
    pub anchors: Vec<[f64; 3]>,
}

impl Default for MultiplierAnchors {
    fn default() -> Self {
        Self {
            anchors: vec![
                [1.50, 1.20, 0.60],
                [0.90, 1.00, 0.90],
                [0.60, 0.80, 1.50],
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeState {
    pub score: f64,
    pub label: RegimeLabel,
    pub previous_score: f64,
    pub attenuated: bool,
}

/// Momentum-to-volatility regime score with short-horizon conflict
/// attenuation. Zero volatility saturates to `sign(r_30d) * xi_sat`.
pub fn regime_score(r_30d: f64, sigma_30d: f64, r_7d: f64, cfg: &RegimeConfig) -> (f64, bool) {
    let mut xi = if sigma_30d <= 0.0 {
        if r_30d > 0.0 {
            cfg.xi_sat
        } else if r_30d < 0.0 {
            -cfg.xi_sat
        } else {
            0.0
        }
    } else {
        (r_30d / sigma_30d).tanh()
    };
    let conflict = r_7d * r_30d < 0.0 && r_7d.abs() > cfg.attenuation_ratio * r_30d.abs();
    if conflict {
        xi *= cfg.attenuation_factor;
    }
    (xi, conflict)
}

/// Bull above `xi_plus`, bear below `xi_minus`, volatile otherwise;
/// boundary values classify as volatile.
pub fn label(xi: f64, cfg: &RegimeConfig) -> RegimeLabel {
    if xi > cfg.xi_plus {
        RegimeLabel::Bull
    } else if xi < cfg.xi_minus {
        RegimeLabel::Bear
    } else {
        RegimeLabel::Volatile
    }
}

/// Piecewise-linear interpolation of the per-agent anchors at the given
/// score: between neutral and bull for xi >= 0, neutral and bear otherwise.
pub fn psi(anchors: &MultiplierAnchors, xi: f64) -> Vec<f64> {
    anchors
        .anchors
        .iter()
        .map(|&[bull, neutral, bear]| {
            if xi >= 0.0 {
                neutral + xi * (bull - neutral)
            } else {
                neutral + (-xi) * (bear - neutral)
            }
        })
        .collect()
}

/// Shapley-weighted plurality mass and the winning label. Ties resolve in
/// the fixed order bull, volatile, bear.
pub fn consensus_kappa(omega: &[f64], votes: &[RegimeLabel]) -> (f64, RegimeLabel) {
    let order = [RegimeLabel::Bull, RegimeLabel::Volatile, RegimeLabel::Bear];
    let mut best = (f64::NEG_INFINITY, RegimeLabel::Volatile);
    for &r in &order {
        let mass: f64 = omega
            .iter()
            .zip(votes)
            .filter(|(_, &v)| v == r)
            .map(|(&w, _)| w)
            .sum();
        if mass > best.0 {
            best = (mass, r);
        }
    }
    best
}

/// Regime-adjusted weights `omega_i * psi_i`, with the multiplier of every
/// plurality voter amplified by `1 + gain * (kappa - 1/N)/(1 - 1/N)`, then
/// renormalized. A uniform vote (kappa = 1/N) produces no amplification.
pub fn apply_multiplier(
    omega: &[f64],
    psi: &[f64],
    kappa: f64,
    plurality: RegimeLabel,
    votes: &[RegimeLabel],
    gain: f64,
) -> Vec<f64> {
    let n = omega.len() as f64;
    let strength = ((kappa - 1.0 / n) / (1.0 - 1.0 / n)).clamp(0.0, 1.0);
    let amp = 1.0 + gain * strength;
    let mut out: Vec<f64> = omega
        .iter()
        .zip(psi)
        .zip(votes)
        .map(|((&w, &m), &v)| {
            let m = if v == plurality { m * amp } else { m };
            w * m
        })
        .collect();
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        for x in out.iter_mut() {
            *x /= total;
        }
    } else {
        out = vec![1.0 / n; omega.len()];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg() -> RegimeConfig {
        RegimeConfig::default()
    }

    #[test]
    fn score_points() {
        let (xi, att) = regime_score(0.0, 0.02, 0.0, &cfg());
        assert_eq!(xi, 0.0);
        assert!(!att);
        let (xi, _) = regime_score(0.02, 0.02, 0.01, &cfg());
        assert_abs_diff_eq!(xi, 1.0f64.tanh(), epsilon = 1e-12);
        assert_abs_diff_eq!(xi, 0.76159, epsilon = 1e-5);
    }

    #[test]
    fn score_conflict_attenuation() {
        let (xi, att) = regime_score(0.02, 0.02, -0.008, &cfg());
        assert!(att);
        assert_abs_diff_eq!(xi, 0.5 * 1.0f64.tanh(), epsilon = 1e-12);
        assert_abs_diff_eq!(xi, 0.38080, epsilon = 1e-5);
        // Conflict below the 30% magnitude threshold does not attenuate.
        let (xi2, att2) = regime_score(0.02, 0.02, -0.005, &cfg());
        assert!(!att2);
        assert_abs_diff_eq!(xi2, 1.0f64.tanh(), epsilon = 1e-12);
    }

    #[test]
    fn score_zero_vol_saturates() {
        let (xi, _) = regime_score(0.01, 0.0, 0.0, &cfg());
        assert_eq!(xi, 0.999);
        let (xi, _) = regime_score(-0.01, 0.0, 0.0, &cfg());
        assert_eq!(xi, -0.999);
    }

    #[test]
    fn label_partition() {
        assert_eq!(label(0.5, &cfg()), RegimeLabel::Bull);
        assert_eq!(label(-0.5, &cfg()), RegimeLabel::Bear);
        assert_eq!(label(0.30, &cfg()), RegimeLabel::Volatile);
        assert_eq!(label(-0.30, &cfg()), RegimeLabel::Volatile);
        assert_eq!(label(0.0, &cfg()), RegimeLabel::Volatile);
    }

    #[test]
    fn psi_anchor_points() {
        let anchors = MultiplierAnchors::default();
        let at_bull = psi(&anchors, 1.0);
        assert_abs_diff_eq!(at_bull[0], 1.50, epsilon = 1e-12);
        let at_half = psi(&anchors, 0.5);
        assert_abs_diff_eq!(at_half[0], 1.35, epsilon = 1e-12);
        let at_neutral = psi(&anchors, 0.0);
        assert_abs_diff_eq!(at_neutral[1], 1.00, epsilon = 1e-12);
        let at_bear = psi(&anchors, -1.0);
        assert_abs_diff_eq!(at_bear[2], 1.50, epsilon = 1e-12);
    }

    #[test]
    fn psi_lipschitz_on_grid() {
        let anchors = MultiplierAnchors::default();
        let l = 0.9; // max anchor gap in the default table
        let grid: Vec<f64> = (0..=400).map(|i| -1.0 + i as f64 / 200.0).collect();
        for w in grid.windows(2) {
            let a = psi(&anchors, w[0]);
            let b = psi(&anchors, w[1]);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= l * (w[1] - w[0]) + 1e-12);
            }
        }
    }

    #[test]
    fn kappa_cases() {
        use RegimeLabel::*;
        let (k, r) = consensus_kappa(&[0.4, 0.3, 0.3], &[Bull, Bull, Bull]);
        assert_abs_diff_eq!(k, 1.0, epsilon = 1e-12);
        assert_eq!(r, Bull);
        let (k, r) = consensus_kappa(&[0.5, 0.3, 0.2], &[Bull, Bull, Bear]);
        assert_abs_diff_eq!(k, 0.8, epsilon = 1e-12);
        assert_eq!(r, Bull);
        let (k, _) = consensus_kappa(
            &[1.0 / 3.0; 3],
            &[Bull, Volatile, Bear],
        );
        assert_abs_diff_eq!(k, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn multiplier_normalizes_without_amplification() {
        use RegimeLabel::*;
        let anchors = MultiplierAnchors::default();
        let m = psi(&anchors, 1.0);
        // kappa = 1/3 means no amplification regardless of votes.
        let out = apply_multiplier(
            &[1.0 / 3.0; 3],
            &m,
            1.0 / 3.0,
            Bull,
            &[Bull, Volatile, Bear],
            0.5,
        );
        assert_abs_diff_eq!(out[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(out[2], 0.2, epsilon = 1e-12);
    }

    #[test]
    fn multiplier_neutral_when_psi_equal() {
        use RegimeLabel::*;
        let omega = [0.5, 0.3, 0.2];
        let out = apply_multiplier(
            &omega,
            &[1.0, 1.0, 1.0],
            1.0 / 3.0,
            Bull,
            &[Bull, Volatile, Bear],
            0.5,
        );
        for (a, b) in omega.iter().zip(&out) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn multiplier_scale_invariant() {
        use RegimeLabel::*;
        let omega = [0.5, 0.3, 0.2];
        let m = [1.2, 0.9, 0.8];
        let scaled: Vec<f64> = m.iter().map(|x| x * 3.7).collect();
        let votes = [Bull, Bull, Bear];
        let a = apply_multiplier(&omega, &m, 0.8, Bull, &votes, 0.5);
        let b = apply_multiplier(&omega, &scaled, 0.8, Bull, &votes, 0.5);
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(a.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }
}
