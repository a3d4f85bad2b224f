//! Shows how exponential recency weighting forgets early observations and
//! how the warmup schedule pulls mixtures away from the uniform prior.

use shapley_council::shapley::ewp_weights;
use shapley_council::weights::{alpha_schedule, bayes_mix};

fn main() {
    let (h, n0, t) = (60.0, 100, 400);
    let w = ewp_weights(t, h);
    let total: f64 = w.iter().sum();
    let early: f64 = w[..n0].iter().sum();
    println!("half-life style decay, horizon {h}, {t} observations:");
    println!("  influence of first {n0} observations: {:.3e}", early / total);
    println!("  equal-weight comparator would keep:   {:.3}", n0 as f64 / t as f64);

    println!("\nwarmup schedule, lambda = 30:");
    for t in [0, 10, 30, 60, 90, 110] {
        println!("  alpha({t:3}) = {:.4}", alpha_schedule(t, 30.0));
    }

    // The same posterior is trusted more as evidence accumulates.
    let posterior = [0.7, 0.2, 0.1];
    println!("\nposterior {posterior:?} blended with the uniform prior:");
    for t in [0, 15, 60, 200] {
        let mixed = bayes_mix(&posterior, alpha_schedule(t, 30.0));
        println!("  t = {t:3}: [{:.4}, {:.4}, {:.4}]", mixed[0], mixed[1], mixed[2]);
    }
}
