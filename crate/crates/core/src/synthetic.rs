//! Deterministic synthetic market with three engineered segments: a bull
//! trend, a trendless volatile chop, and a bear decline. Used for the
//! bundled dataset, regression fixtures, and regime-conditional tests.

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::market::{FeatureTable, PriceTable};

pub const SYNTHETIC_ASSETS: [&str; 13] = [
    "BTC", "ETH", "ADA", "LINK", "DOGE", "XLM", "XRP", "BCH", "TRX", "ZEC", "PAXG", "BNB", "DOT",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub days_per_segment: usize,
    pub start: NaiveDate,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            days_per_segment: 180,
            start: NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Bull,
    Volatile,
    Bear,
}

/// Segment of a given day index under the three-thirds layout.
pub fn segment_of(day: usize, days_per_segment: usize) -> Segment {
    match day / days_per_segment {
        0 => Segment::Bull,
        1 => Segment::Volatile,
        _ => Segment::Bear,
    }
}

/// (drift, common shock scale, idiosyncratic scale) per segment.
fn segment_params(seg: Segment) -> (f64, f64, f64) {
    match seg {
        Segment::Bull => (0.0050, 0.006, 0.009),
        Segment::Volatile => (0.0000, 0.018, 0.016),
        Segment::Bear => (-0.0055, 0.010, 0.011),
    }
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller on two open-interval uniforms.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Builds the bundled price and feature tables. Fully determined by the
/// config; two calls with equal configs produce identical tables.
pub fn generate(cfg: &SyntheticConfig) -> (PriceTable, FeatureTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let k = SYNTHETIC_ASSETS.len();
    let days = 3 * cfg.days_per_segment;
    let dates: Vec<NaiveDate> = (0..days)
        .map(|d| cfg.start + Duration::days(d as i64))
        .collect();

    let mut close = vec![vec![0.0; k]; days];
    let mut prices: Vec<f64> = (0..k).map(|i| 100.0 * (1.0 + i as f64 * 0.5)).collect();
    close[0].clone_from_slice(&prices);

    // On-chain activity levels per asset, driven by the same regime with
    // BTC holding up best in the bear segment.
    let mut activity: Vec<f64> = (0..k).map(|i| 1e6 * (1.0 + i as f64 * 0.2)).collect();
    let mut columns: Vec<String> = Vec::new();
    for a in SYNTHETIC_ASSETS {
        columns.push(format!("{a}.AdrActCnt"));
        columns.push(format!("{a}.TxCnt"));
    }
    columns.push("fear_greed".into());
    columns.push("polymarket".into());
    let mut feat_rows: Vec<Vec<f64>> = Vec::with_capacity(days);

    let write_features =
        |rng: &mut ChaCha8Rng, activity: &[f64], seg: Segment, rows: &mut Vec<Vec<f64>>| {
            let mut row = Vec::with_capacity(columns.len());
            for &a in activity {
                row.push(a);
                row.push(a * 7.5 * (1.0 + 0.02 * standard_normal(rng)));
            }
            let (fg_center, pm_center) = match seg {
                Segment::Bull => (78.0, 0.72),
                Segment::Volatile => (48.0, 0.50),
                Segment::Bear => (22.0, 0.30),
            };
            row.push((fg_center + 6.0 * standard_normal(rng)).clamp(0.0, 100.0));
            row.push((pm_center + 0.04 * standard_normal(rng)).clamp(0.02, 0.98));
            rows.push(row);
        };

    write_features(&mut rng, &activity, Segment::Bull, &mut feat_rows);

    for d in 1..days {
        let seg = segment_of(d, cfg.days_per_segment);
        let (mu, sc, si) = segment_params(seg);
        let common = sc * standard_normal(&mut rng);
        for (i, p) in prices.iter_mut().enumerate() {
            let asset = SYNTHETIC_ASSETS[i];
            // PAXG tracks gold: flat, low vol, detached from the factor.
            let (drift, load, idio) = if asset == "PAXG" {
                (0.0001, 0.05, 0.002)
            } else if asset == "BTC" {
                // BTC leads in stress segments (dominance rotation).
                let extra = match seg {
                    Segment::Bull => 0.0,
                    Segment::Volatile => 0.0012,
                    Segment::Bear => 0.0030,
                };
                (mu + extra, 1.0, si * 0.8)
            } else if asset == "TRX" {
                let extra = match seg {
                    Segment::Bear => 0.0018,
                    _ => 0.0,
                };
                (mu + extra, 0.9, si)
            } else {
                (mu, 1.0, si)
            };
            let r = drift + load * common + idio * standard_normal(&mut rng);
            *p *= (1.0 + r).max(0.01);
            close[d][i] = *p;
        }
        for (i, a) in activity.iter_mut().enumerate() {
            let asset = SYNTHETIC_ASSETS[i];
            let drift = match (seg, asset) {
                (Segment::Bull, _) => 0.0020,
                (Segment::Volatile, _) => 0.0,
                (Segment::Bear, "BTC") => 0.0010,
                (Segment::Bear, _) => -0.0030,
            };
            *a *= (1.0 + drift + 0.01 * standard_normal(&mut rng)).max(0.5);
        }
        write_features(&mut rng, &activity, seg, &mut feat_rows);
    }

    let price_table = PriceTable {
        dates: dates.clone(),
        assets: SYNTHETIC_ASSETS.iter().map(|s| s.to_string()).collect(),
        close,
    };
    let first_valid = vec![Some(0); columns.len()];
    let feature_table = FeatureTable {
        dates,
        columns,
        values: feat_rows,
        first_valid,
    };
    (price_table, feature_table)
}

/// Renders a table as the `date,COL,...` text format the loaders read.
pub fn prices_to_csv(table: &PriceTable) -> String {
    let mut out = String::from("date");
    for a in &table.assets {
        out.push(',');
        out.push_str(a);
    }
    out.push('\n');
    for (d, row) in table.dates.iter().zip(&table.close) {
        out.push_str(&d.to_string());
        for v in row {
            out.push_str(&format!(",{v:.8}"));
        }
        out.push('\n');
    }
    out
}

pub fn features_to_csv(table: &FeatureTable) -> String {
    let mut out = String::from("date");
    for c in &table.columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (d, row) in table.dates.iter().zip(&table.values) {
        out.push_str(&d.to_string());
        for v in row {
            if v.is_finite() {
                out.push_str(&format!(",{v:.6}"));
            } else {
                out.push(',');
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = SyntheticConfig::default();
        let (p1, f1) = generate(&cfg);
        let (p2, f2) = generate(&cfg);
        assert_eq!(p1, p2);
        assert_eq!(f1, f2);
    }

    #[test]
    fn shape_and_positivity() {
        let cfg = SyntheticConfig {
            days_per_segment: 40,
            ..SyntheticConfig::default()
        };
        let (p, f) = generate(&cfg);
        assert_eq!(p.n_assets(), 13);
        assert_eq!(p.n_periods(), 120);
        assert_eq!(f.columns.len(), 13 * 2 + 2);
        assert!(p.close.iter().flatten().all(|&v| v > 0.0));
    }

    #[test]
    fn segments_have_engineered_direction() {
        let cfg = SyntheticConfig::default();
        let (p, _) = generate(&cfg);
        let s = cfg.days_per_segment;
        let seg_return = |k: usize, a: usize, b: usize| p.close[b][k] / p.close[a][k] - 1.0;
        // Equal-weight segment returns: bull up, bear down.
        let k = p.n_assets();
        let bull: f64 = (0..k).map(|i| seg_return(i, 0, s - 1)).sum::<f64>() / k as f64;
        let bear: f64 = (0..k).map(|i| seg_return(i, 2 * s, 3 * s - 1)).sum::<f64>() / k as f64;
        assert!(bull > 0.3, "bull segment return {bull}");
        assert!(bear < -0.3, "bear segment return {bear}");
        // BTC outperforms the altcoin basket in the bear segment.
        let btc = seg_return(0, 2 * s, 3 * s - 1);
        let alts: f64 = (1..k).map(|i| seg_return(i, 2 * s, 3 * s - 1)).sum::<f64>()
            / (k - 1) as f64;
        assert!(btc > alts);
    }

    #[test]
    fn csv_round_trip() {
        let cfg = SyntheticConfig {
            days_per_segment: 15,
            ..SyntheticConfig::default()
        };
        let (p, f) = generate(&cfg);
        let dir = tempfile::tempdir().unwrap();
        let pp = dir.path().join("prices.csv");
        let fp = dir.path().join("features.csv");
        std::fs::write(&pp, prices_to_csv(&p)).unwrap();
        std::fs::write(&fp, features_to_csv(&f)).unwrap();
        let p2 = crate::market::load_prices(&pp, None, None).unwrap();
        assert_eq!(p2.assets, p.assets);
        assert_eq!(p2.n_periods(), p.n_periods());
        for (a, b) in p2.close.iter().flatten().zip(p.close.iter().flatten()) {
            assert!((a - b).abs() < 1e-6);
        }
        let f2 = crate::market::load_features(&fp, None, None).unwrap();
        assert_eq!(f2.columns, f.columns);
    }
}
