//! Randomized invariant checks over the algebraic core.

use proptest::prelude::*;

use shapley_council::portfolio::{PortfolioVector, SIMPLEX_TOL};
use shapley_council::regime::{
    apply_multiplier, psi, regime_score, MultiplierAnchors, RegimeConfig, RegimeLabel,
};
use shapley_council::shapley::{
    ewp_weights, shapley_closed3, truncate_normalize, CharacteristicGame,
};
use shapley_council::weights::{alpha_schedule, bayes_mix, pairwise_mix};

fn portfolio_of(n: usize) -> impl Strategy<Value = PortfolioVector> {
    (prop::collection::vec(0.0f64..1.0, n), 0.0f64..1.0).prop_map(|(raw, cash_raw)| {
        // Normalize arbitrary nonnegative mass onto the simplex.
        let total: f64 = raw.iter().sum::<f64>() + cash_raw;
        if total < 1e-12 {
            PortfolioVector::all_cash(raw.len())
        } else {
            PortfolioVector::new(raw.iter().map(|w| w / total).collect(), cash_raw / total)
        }
    })
}

proptest! {
    #[test]
    fn projection_lands_on_feasible_simplex(p in (2usize..8).prop_flat_map(portfolio_of)) {
        let q = p.project_constraints(0.40, 0.30).unwrap();
        prop_assert!(q.is_feasible(0.40, 0.30));
        prop_assert!((q.total() - 1.0).abs() <= SIMPLEX_TOL);
    }

    #[test]
    fn projection_is_idempotent(p in (2usize..8).prop_flat_map(portfolio_of)) {
        let q = p.project_constraints(0.40, 0.30).unwrap();
        let r = q.project_constraints(0.40, 0.30).unwrap();
        for i in 0..q.n_assets() {
            prop_assert!((q.weights[i] - r.weights[i]).abs() <= 1e-12);
        }
        prop_assert!((q.cash - r.cash).abs() <= 1e-12);
    }

    #[test]
    fn mix_stays_in_convex_hull(
        (p, q) in (2usize..8).prop_flat_map(|n| (portfolio_of(n), portfolio_of(n))),
        a in 0.0f64..=1.0,
    ) {
        let m = p.mix(&q, a).unwrap();
        prop_assert!((m.total() - 1.0).abs() <= SIMPLEX_TOL);
        for i in 0..m.n_assets() {
            let lo = p.weights[i].min(q.weights[i]) - 1e-12;
            let hi = p.weights[i].max(q.weights[i]) + 1e-12;
            prop_assert!(m.weights[i] >= lo && m.weights[i] <= hi);
        }
    }

    #[test]
    fn truncate_normalize_is_a_distribution(phi in prop::collection::vec(-10.0f64..10.0, 3)) {
        let w = truncate_normalize(&phi);
        prop_assert_eq!(w.len(), 3);
        let sum: f64 = w.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        for &x in &w {
            prop_assert!(x >= 0.0);
        }
    }

    #[test]
    fn shapley_efficiency_holds(v in prop::collection::vec(-5.0f64..5.0, 7)) {
        let game = CharacteristicGame::three_player([v[0], v[1], v[2], v[3], v[4], v[5], v[6]]);
        let credit = shapley_closed3(&game).unwrap();
        let sum: f64 = credit.raw.iter().sum();
        prop_assert!((sum - game.grand_value()).abs() <= 1e-9);
    }

    #[test]
    fn ewp_weights_decay_monotonically(t in 2usize..400, h in 10.0f64..500.0) {
        let w = ewp_weights(t, h);
        prop_assert_eq!(w.len(), t);
        for pair in w.windows(2) {
            prop_assert!(pair[0] <= pair[1] + 1e-15);
        }
        prop_assert!((w[t - 1] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn alpha_schedule_is_monotone_in_unit_interval(t in 0usize..2000, lambda in 1.0f64..200.0) {
        let a = alpha_schedule(t, lambda);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(alpha_schedule(t + 1, lambda) >= a);
    }

    #[test]
    fn bayes_mix_is_a_distribution(
        phi in prop::collection::vec(-10.0f64..10.0, 3),
        t in 0usize..500,
    ) {
        let omega_bar = truncate_normalize(&phi);
        let alpha = alpha_schedule(t, 30.0);
        let omega = bayes_mix(&omega_bar, alpha);
        let sum: f64 = omega.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        for (&w, &wb) in omega.iter().zip(&omega_bar) {
            prop_assert!(w >= 0.0);
            // Mixture sits between the uniform prior and the posterior.
            let lo = wb.min(1.0 / 3.0) - 1e-12;
            let hi = wb.max(1.0 / 3.0) + 1e-12;
            prop_assert!(w >= lo && w <= hi);
        }
    }

    #[test]
    fn pairwise_mix_is_a_distribution(
        vals in prop::collection::vec(-10.0f64..10.0, 3),
        t in 0usize..500,
    ) {
        let p = pairwise_mix(&vals, alpha_schedule(t, 30.0));
        let sum: f64 = p.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn regime_score_is_bounded_and_sign_consistent(
        r in -2.0f64..2.0,
        sigma in 0.0f64..0.5,
        r7 in -1.0f64..1.0,
    ) {
        let cfg = RegimeConfig::default();
        let (xi, _) = regime_score(r, sigma, r7, &cfg);
        prop_assert!(xi.abs() <= 1.0);
        if sigma > 1e-6 && r.abs() > 1e-9 {
            prop_assert_eq!(xi.signum(), r.signum());
        }
    }

    #[test]
    fn multiplier_reweighting_stays_normalized(
        phi in prop::collection::vec(-10.0f64..10.0, 3),
        xi in -0.999f64..0.999,
        kappa in 0.34f64..1.0,
    ) {
        let omega = truncate_normalize(&phi);
        let m = psi(&MultiplierAnchors::default(), xi);
        let votes = [RegimeLabel::Bull, RegimeLabel::Bull, RegimeLabel::Bear];
        let tilted = apply_multiplier(&omega, &m, kappa, RegimeLabel::Bull, &votes, 0.5);
        let sum: f64 = tilted.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        prop_assert!(tilted.iter().all(|&x| x >= 0.0));
    }
}
