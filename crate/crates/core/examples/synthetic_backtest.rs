//! Full engine run over the built-in three-regime synthetic market:
//! generates prices and activity features, backtests, and summarizes
//! behavior segment by segment.

use shapley_council::backtest::run;
use shapley_council::config::RunConfig;
use shapley_council::synthetic::{generate, SyntheticConfig};

fn main() {
    let scfg = SyntheticConfig::default();
    let (prices, features) = generate(&scfg);
    let result = run(&prices, &features, &RunConfig::default()).unwrap();

    let s = scfg.days_per_segment;
    println!("{:<10} {:>10} {:>8}  labels b/v/r  dd fires", "segment", "mean cash", "mean xi");
    for (name, lo, hi) in [("bull", 0, s), ("volatile", s, 2 * s), ("bear", 2 * s, 3 * s)] {
        let n = (hi - lo) as f64;
        let cash: f64 = result.executed[lo..hi].iter().map(|p| p.cash).sum::<f64>() / n;
        let xi: f64 = result.records[lo..hi].iter().map(|r| r.signals.xi).sum::<f64>() / n;
        let count = |want: &str| {
            result.records[lo..hi]
                .iter()
                .filter(|r| r.signals.label.to_string() == want)
                .count()
        };
        let dd = result.records[lo..hi]
            .iter()
            .filter(|r| {
                r.overlays
                    .steps
                    .iter()
                    .any(|s| s.name == "drawdown_protect" && s.active)
            })
            .count();
        println!(
            "{name:<10} {cash:>10.4} {xi:>+8.3}  {:>4}/{}/{:<4}  {dd}",
            count("bull"),
            count("volatile"),
            count("bear"),
        );
    }

    let m = &result.metrics;
    println!(
        "\nCR {:.4}  SR {:.4}  MDD {:.4}  IR {:.4}",
        m.cumulative_return, m.sharpe, m.max_drawdown, m.information_ratio
    );
    println!("equity hash {}", result.equity_hash());
}
