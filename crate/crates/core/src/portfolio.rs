//! Portfolio vectors on the constrained simplex: per-asset weights plus a
//! cash coordinate, with proportional-rescaling projection onto the
//! feasible set `{w >= 0, sum(w) + c = 1, w_k <= w_max, c <= c_max}`.

use serde::{Deserialize, Serialize};

use crate::error::{CouncilError, Result};

pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioVector {
    pub weights: Vec<f64>,
    pub cash: f64,
}

impl PortfolioVector {
    pub fn new(weights: Vec<f64>, cash: f64) -> Self {
        Self { weights, cash }
    }

    /// All-cash portfolio over `k` assets.
    pub fn all_cash(k: usize) -> Self {
        Self {
            weights: vec![0.0; k],
            cash: 1.0,
        }
    }

    /// Equal-weight longs with the given cash share.
    pub fn equal_weight(k: usize, cash: f64) -> Self {
        let w = (1.0 - cash) / k as f64;
        Self {
            weights: vec![w; k],
            cash,
        }
    }

    pub fn n_assets(&self) -> usize {
        self.weights.len()
    }

    pub fn long_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.long_mass() + self.cash
    }

    pub fn is_feasible(&self, w_max: f64, c_max: f64) -> bool {
        self.weights
            .iter()
            .all(|&w| w >= -SIMPLEX_TOL && w <= w_max + SIMPLEX_TOL)
            && self.cash >= -SIMPLEX_TOL
            && self.cash <= c_max + SIMPLEX_TOL
            && (self.total() - 1.0).abs() <= SIMPLEX_TOL
    }

    /// Convex combination `a*self + (1-a)*other`, coordinate-wise with cash.
    pub fn mix(&self, other: &PortfolioVector, a: f64) -> Result<PortfolioVector> {
        if self.n_assets() != other.n_assets() {
            return Err(CouncilError::DimensionMismatch(format!(
                "portfolio mix: {} vs {} assets",
                self.n_assets(),
                other.n_assets()
            )));
        }
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(&x, &y)| a * x + (1.0 - a) * y)
            .collect();
        Ok(PortfolioVector {
            weights,
            cash: a * self.cash + (1.0 - a) * other.cash,
        })
    }

    /// Weighted average of portfolios. `coeffs` need not sum to one; the
    /// result is the plain linear combination.
    pub fn weighted_sum(portfolios: &[&PortfolioVector], coeffs: &[f64]) -> Result<PortfolioVector> {
        if portfolios.is_empty() || portfolios.len() != coeffs.len() {
            return Err(CouncilError::DimensionMismatch(
                "weighted_sum: empty or mismatched inputs".into(),
            ));
        }
        let k = portfolios[0].n_assets();
        let mut weights = vec![0.0; k];
        let mut cash = 0.0;
        for (p, &a) in portfolios.iter().zip(coeffs) {
            if p.n_assets() != k {
                return Err(CouncilError::DimensionMismatch(
                    "weighted_sum: ragged asset dimension".into(),
                ));
            }
            for (acc, &w) in weights.iter_mut().zip(&p.weights) {
                *acc += a * w;
            }
            cash += a * p.cash;
        }
        Ok(PortfolioVector { weights, cash })
    }

    /// Projects onto the feasible set via proportional rescaling: clamp
    /// negatives, normalize total mass to one, then iteratively clip capped
    /// coordinates and redistribute the excess among uncapped assets
    /// pro-rata to their current weights (equal split when all uncapped
    /// weights are zero). Residual mass with no uncapped asset left goes to
    /// cash up to `c_max`.
    pub fn project_constraints(&self, w_max: f64, c_max: f64) -> Result<PortfolioVector> {
        let k = self.n_assets();
        if (k as f64) * w_max + c_max < 1.0 - SIMPLEX_TOL {
            return Err(CouncilError::InfeasibleConstraints { k, w_max, c_max });
        }
        let mut w: Vec<f64> = self.weights.iter().map(|&x| x.max(0.0)).collect();
        let mut c = self.cash.max(0.0);
        let total = w.iter().sum::<f64>() + c;
        if total <= SIMPLEX_TOL {
            c = 1.0;
        } else {
            let inv = 1.0 / total;
            for x in w.iter_mut() {
                *x *= inv;
            }
            c *= inv;
        }

        let mut capped = vec![false; k];
        // Each pass caps at least one new coordinate, so k+2 passes suffice.
        for _ in 0..k + 2 {
            let mut excess = 0.0;
            for i in 0..k {
                if w[i] > w_max + SIMPLEX_TOL / 2.0 {
                    excess += w[i] - w_max;
                    w[i] = w_max;
                    capped[i] = true;
                } else if (w[i] - w_max).abs() <= SIMPLEX_TOL / 2.0 {
                    capped[i] = true;
                }
            }
            if c > c_max {
                excess += c - c_max;
                c = c_max;
            }
            if excess <= SIMPLEX_TOL / 2.0 {
                break;
            }
            let uncapped: Vec<usize> = (0..k).filter(|&i| !capped[i]).collect();
            if uncapped.is_empty() {
                c += excess;
                if c > c_max + SIMPLEX_TOL {
                    return Err(CouncilError::InfeasibleConstraints { k, w_max, c_max });
                }
                break;
            }
            let base: f64 = uncapped.iter().map(|&i| w[i]).sum();
            if base > SIMPLEX_TOL {
                for &i in &uncapped {
                    w[i] += excess * w[i] / base;
                }
            } else {
                let share = excess / uncapped.len() as f64;
                for &i in &uncapped {
                    w[i] += share;
                }
            }
        }

        // Absorb residual float drift into the largest slack coordinate.
        let mut out = PortfolioVector { weights: w, cash: c };
        let drift = 1.0 - out.total();
        if drift.abs() > 0.0 {
            if out.cash + drift >= -SIMPLEX_TOL && out.cash + drift <= c_max + SIMPLEX_TOL {
                out.cash += drift;
            } else if let Some(i) = (0..k).find(|&i| {
                out.weights[i] + drift >= -SIMPLEX_TOL && out.weights[i] + drift <= w_max + SIMPLEX_TOL
            }) {
                out.weights[i] += drift;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn projection_redistributes_proportionally() {
        let p = PortfolioVector::new(vec![0.6, 0.2, 0.2], 0.0);
        let q = p.project_constraints(0.4, 0.3).unwrap();
        assert_abs_diff_eq!(q.weights[0], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(q.weights[1], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(q.weights[2], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(q.total(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_identity_on_feasible() {
        let p = PortfolioVector::new(vec![0.3, 0.3, 0.2], 0.2);
        let q = p.project_constraints(0.4, 0.3).unwrap();
        for (a, b) in p.weights.iter().zip(&q.weights) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p.cash, q.cash, epsilon = 1e-12);
    }

    #[test]
    fn projection_idempotent() {
        let p = PortfolioVector::new(vec![0.9, 0.5, 0.1, 0.0], 0.4);
        let q = p.project_constraints(0.4, 0.3).unwrap();
        let r = q.project_constraints(0.4, 0.3).unwrap();
        for (a, b) in q.weights.iter().zip(&r.weights) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(q.cash, r.cash, epsilon = 1e-9);
    }

    #[test]
    fn projection_infeasible_single_asset() {
        let p = PortfolioVector::new(vec![1.0], 0.0);
        let err = p.project_constraints(0.4, 0.3).unwrap_err();
        assert!(matches!(err, CouncilError::InfeasibleConstraints { .. }));
    }

    #[test]
    fn projection_clamps_negatives() {
        let p = PortfolioVector::new(vec![-0.2, 0.5, 0.5], 0.2);
        let q = p.project_constraints(0.4, 0.3).unwrap();
        assert!(q.weights.iter().all(|&w| w >= 0.0));
        assert!(q.is_feasible(0.4, 0.3));
    }

    #[test]
    fn cash_excess_redeployed_to_assets() {
        let p = PortfolioVector::new(vec![0.2, 0.2], 0.6);
        let q = p.project_constraints(0.4, 0.3).unwrap();
        assert_abs_diff_eq!(q.cash, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(q.weights[0], 0.35, epsilon = 1e-12);
        assert_abs_diff_eq!(q.weights[1], 0.35, epsilon = 1e-12);
    }
}
