//! Writes the synthetic market to CSV files so the command-line backtest
//! can be exercised end to end:
//!
//!   cargo run --example make_dataset -- data/
//!   cargo run -- backtest --prices data/prices.csv --features data/features.csv --out runs/demo

use std::env;
use std::fs;
use std::path::PathBuf;

use shapley_council::synthetic::{features_to_csv, generate, prices_to_csv, SyntheticConfig};

fn main() {
    let dir: PathBuf = env::args().nth(1).unwrap_or_else(|| "data".into()).into();
    fs::create_dir_all(&dir).unwrap();

    let (prices, features) = generate(&SyntheticConfig::default());
    fs::write(dir.join("prices.csv"), prices_to_csv(&prices)).unwrap();
    fs::write(dir.join("features.csv"), features_to_csv(&features)).unwrap();

    println!(
        "wrote {} days x {} assets to {}",
        prices.dates.len(),
        prices.assets.len(),
        dir.display()
    );
}
