//! Maps trend and volatility readings to a regime score, a label, and the
//! per-specialist multipliers that tilt credit toward the suited expert.

use shapley_council::regime::{
    label, psi, regime_score, MultiplierAnchors, RegimeConfig,
};

fn main() {
    let cfg = RegimeConfig::default();
    let anchors = MultiplierAnchors::default();

    let scenarios = [
        ("strong uptrend", 0.060, 0.025, 0.015),
        ("mild uptrend", 0.012, 0.020, 0.004),
        ("choppy", 0.001, 0.030, 0.000),
        ("short-term reversal", 0.020, 0.020, -0.060),
        ("steady selloff", -0.028, 0.022, -0.008),
        ("flat and dead", 0.0, 0.0, 0.0),
    ];

    println!("{:<22} {:>8} {:>6} {:>10}  multipliers (trend/flow/macro)", "scenario", "xi", "atten", "label");
    for (name, r_30d, sigma_30d, r_7d) in scenarios {
        let (xi, attenuated) = regime_score(r_30d, sigma_30d, r_7d, &cfg);
        let lab = label(xi, &cfg);
        let m = psi(&anchors, xi);
        println!(
            "{name:<22} {xi:>8.4} {:>6} {lab:>10}  [{:.3}, {:.3}, {:.3}]",
            if attenuated { "yes" } else { "no" },
            m[0], m[1], m[2],
        );
    }
}
