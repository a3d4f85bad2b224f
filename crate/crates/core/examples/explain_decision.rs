//! Renders the five-layer causal trace for single decisions: what the
//! signals said, what each coalition proposed, how credit and blending
//! resolved them, and what the risk cascade changed.

use shapley_council::backtest::run;
use shapley_council::cli::render_record;
use shapley_council::config::RunConfig;
use shapley_council::synthetic::{generate, SyntheticConfig};
use shapley_council::trace::{TraceHeader, TRACE_SCHEMA_VERSION};

fn main() {
    let (prices, features) = generate(&SyntheticConfig::default());
    let result = run(&prices, &features, &RunConfig::default()).unwrap();
    let header = TraceHeader {
        schema_version: TRACE_SCHEMA_VERSION,
        assets: prices.assets.clone(),
    };

    // One decision early in the warmup and one deep in the bear segment.
    for period in [5usize, 420] {
        println!("{}", render_record(&header, &result.records[period]));
        println!();
    }
}
