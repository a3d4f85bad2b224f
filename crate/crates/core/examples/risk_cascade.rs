//! Runs the full risk-control cascade on a sample portfolio and prints the
//! effect of each stage, from momentum tilt through the final projection.

use shapley_council::overlays::{run_cascade, AssetRoles, CascadeSignals, OverlayConfig};
use shapley_council::portfolio::PortfolioVector;
use shapley_council::regime::RegimeLabel;

fn main() {
    let assets = ["BTC", "ETH", "SOL", "LINK", "DOGE"];
    // Concentrated book entering a bear reading with a live drawdown.
    let book = PortfolioVector::new(vec![0.10, 0.30, 0.25, 0.20, 0.10], 0.05);

    let signals = CascadeSignals {
        z_scores: vec![0.9, 0.4, -0.3, -0.8, -1.2],
        xi: -0.42,
        xi_prev: -0.10,
        label: RegimeLabel::Bear,
        btc_ew_diff: Some(0.12),
        onchain_diff: Some(0.8),
        drawdown: 0.11,
    };
    let roles = AssetRoles {
        btc: Some(0),
        dominance_donors: vec![2, 3, 4],
        dominance_recipients: vec![(0, 0.7), (1, 0.3)],
        alt_season_cut: vec![0],
        alt_season_recipients: vec![2, 3, 4],
    };
    let cfg = OverlayConfig::default();

    let (executed, trace) = run_cascade(&book, &signals, &roles, &cfg).unwrap();

    for step in &trace {
        let shift: f64 = step
            .pre
            .weights
            .iter()
            .zip(&step.post.weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0;
        println!(
            "{:<18} {:<8} cash {:.4} -> {:.4}  reallocated {:.4}",
            step.name,
            if step.active { "active" } else { "skipped" },
            step.pre.cash,
            step.post.cash,
            shift,
        );
    }

    println!("\nfinal allocation:");
    for (name, w) in assets.iter().zip(&executed.weights) {
        println!("  {name:<5} {w:.4}");
    }
    println!("  cash  {:.4}", executed.cash);
    assert!(executed.is_feasible(cfg.w_max, cfg.c_max));
}
