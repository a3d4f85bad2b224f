//! Daily price and feature tables loaded from delimited text, rolling
//! window statistics, and engagement-weighted sentiment scores. Tables are
//! immutable after load; snapshots are pure functions of (table, t) and
//! never read rows past t.

use chrono::{Duration, NaiveDate};
use std::path::Path;

use crate::error::{CouncilError, Result};

/// Calendar-day forward-fill limit for both tables.
pub const FILL_LIMIT_DAYS: i64 = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub dates: Vec<NaiveDate>,
    pub assets: Vec<String>,
    /// Row-major date x asset, all cells positive after forward-fill.
    pub close: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub dates: Vec<NaiveDate>,
    pub columns: Vec<String>,
    /// Row-major date x column; NaN before a column's first valid date.
    pub values: Vec<Vec<f64>>,
    /// First row index with a valid value, per column.
    pub first_valid: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketSnapshot {
    pub t: usize,
    /// True when some window is shorter than its nominal length.
    pub partial: bool,
    pub ret_1d: Vec<f64>,
    pub ret_7d: Vec<f64>,
    pub ret_30d: Vec<f64>,
    pub log_ret_30d: Vec<f64>,
    /// Daily log-return standard deviation over the trailing 30-day window.
    pub vol_30d: Vec<f64>,
    /// Cross-sectional z-score of the 30-day simple returns.
    pub z_30d: Vec<f64>,
    /// Equal-weight basket 30-day log return.
    pub r_30d: f64,
    /// Daily standard deviation of the basket log returns over the window.
    pub sigma_30d: f64,
    /// Equal-weight basket 7-day log return.
    pub r_7d: f64,
    /// BTC 30-day log return minus the equal-weight altcoin basket's.
    pub delta_btc_ew: Option<f64>,
    /// Per-asset on-chain activity z-scores, when feature columns exist.
    pub onchain_z: Option<Vec<f64>>,
    /// Macro risk signal in [-1, +1] from `fear_greed` (0..100 scale) and
    /// `polymarket` (probability) columns, averaged over those available.
    pub macro_score: Option<f64>,
}

fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|_| CouncilError::BadCell(format!("unparseable date: {s:?}")))
}

fn split_line(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

/// Reads a `date,COL1,COL2,...` table into (dates, names, cells), where a
/// cell is None when the field is empty. Rows must be strictly increasing
/// by date; absent calendar days become all-empty rows to be filled later.
fn read_table(path: &Path) -> Result<(Vec<NaiveDate>, Vec<String>, Vec<Vec<Option<f64>>>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| CouncilError::MissingFile(path.display().to_string()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CouncilError::MalformedTable("empty file".into()))?;
    let fields = split_line(header);
    if fields.len() < 2 {
        return Err(CouncilError::MalformedTable(
            "header needs a date column and at least one series".into(),
        ));
    }
    let names: Vec<String> = fields[1..].iter().map(|s| s.to_string()).collect();
    let mut dates = Vec::new();
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for line in lines {
        let cells = split_line(line);
        if cells.len() != names.len() + 1 {
            return Err(CouncilError::MalformedTable(format!(
                "row has {} fields, expected {}",
                cells.len(),
                names.len() + 1
            )));
        }
        let date = parse_date(cells[0])?;
        if let Some(&last) = dates.last() {
            if date <= last {
                return Err(CouncilError::MalformedTable(format!(
                    "dates not strictly increasing at {date}"
                )));
            }
        }
        let mut row = Vec::with_capacity(names.len());
        for (name, cell) in names.iter().zip(&cells[1..]) {
            if cell.is_empty() {
                row.push(None);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    CouncilError::BadCell(format!("column {name} at {date}: {cell:?}"))
                })?;
                row.push(Some(v));
            }
        }
        dates.push(date);
        rows.push(row);
    }
    if dates.is_empty() {
        return Err(CouncilError::MalformedTable("no data rows".into()));
    }
    Ok((dates, names, rows))
}

/// Expands to a complete daily calendar and forward-fills each column up to
/// the fill limit. `allow_leading_gap` keeps pre-first-valid cells as None
/// (feature tables); price tables reject them.
fn fill_daily(
    dates: Vec<NaiveDate>,
    rows: Vec<Vec<Option<f64>>>,
    names: &[String],
    allow_leading_gap: bool,
) -> Result<(Vec<NaiveDate>, Vec<Vec<Option<f64>>>)> {
    let n_cols = names.len();
    let start = dates[0];
    let end = *dates.last().unwrap();
    let n_days = (end - start).num_days() as usize + 1;
    let mut out_dates = Vec::with_capacity(n_days);
    let mut out = Vec::with_capacity(n_days);
    let mut last_value: Vec<Option<(NaiveDate, f64)>> = vec![None; n_cols];
    let mut src = dates.iter().zip(rows).peekable();
    let mut day = start;
    while day <= end {
        let row = match src.peek() {
            Some((d, _)) if **d == day => Some(src.next().unwrap().1),
            _ => None,
        };
        let mut filled = Vec::with_capacity(n_cols);
        for c in 0..n_cols {
            let raw = row.as_ref().and_then(|r| r[c]);
            match raw {
                Some(v) => {
                    last_value[c] = Some((day, v));
                    filled.push(Some(v));
                }
                None => match last_value[c] {
                    Some((when, v)) => {
                        if (day - when).num_days() > FILL_LIMIT_DAYS {
                            return Err(CouncilError::GapExceedsFillLimit {
                                column: names[c].clone(),
                                date: day.to_string(),
                            });
                        }
                        filled.push(Some(v));
                    }
                    None => {
                        if allow_leading_gap {
                            filled.push(None);
                        } else {
                            return Err(CouncilError::GapExceedsFillLimit {
                                column: names[c].clone(),
                                date: day.to_string(),
                            });
                        }
                    }
                },
            }
        }
        out_dates.push(day);
        out.push(filled);
        day += Duration::days(1);
    }
    Ok((out_dates, out))
}

fn clip_range<T: Clone>(
    dates: &[NaiveDate],
    rows: &[T],
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
) -> Result<(Vec<NaiveDate>, Vec<T>)> {
    let lo = from.unwrap_or(dates[0]);
    let hi = to.unwrap_or(*dates.last().unwrap());
    let keep: Vec<usize> = (0..dates.len())
        .filter(|&i| dates[i] >= lo && dates[i] <= hi)
        .collect();
    if keep.is_empty() {
        return Err(CouncilError::EmptyRange(format!("{lo} to {hi}")));
    }
    Ok((
        keep.iter().map(|&i| dates[i]).collect(),
        keep.iter().map(|&i| rows[i].clone()).collect(),
    ))
}

/// Loads `date,ASSET1,ASSET2,...` closes, forward-filled onto a complete
/// daily calendar with the 5-day limit. Gaps beyond the limit are hard
/// errors.
pub fn load_prices(
    path: &Path,
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
) -> Result<PriceTable> {
    let (dates, assets, rows) = read_table(path)?;
    if assets.len() < 2 {
        return Err(CouncilError::MalformedTable(
            "price table needs at least 2 assets".into(),
        ));
    }
    let (dates, rows) = fill_daily(dates, rows, &assets, false)?;
    let (dates, rows) = clip_range(&dates, &rows, from, to)?;
    let mut close = Vec::with_capacity(rows.len());
    for (date, row) in dates.iter().zip(rows) {
        let mut out = Vec::with_capacity(assets.len());
        for (asset, v) in assets.iter().zip(row) {
            let v = v.expect("price cells filled");
            if !(v > 0.0) || !v.is_finite() {
                return Err(CouncilError::BadCell(format!(
                    "non-positive price for {asset} at {date}: {v}"
                )));
            }
            out.push(v);
        }
        close.push(out);
    }
    Ok(PriceTable {
        dates,
        assets,
        close,
    })
}

/// Loads a feature table. Columns may begin later than the calendar; cells
/// before a column's first valid date stay NaN.
pub fn load_features(
    path: &Path,
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
) -> Result<FeatureTable> {
    let (dates, columns, rows) = read_table(path)?;
    let (dates, rows) = fill_daily(dates, rows, &columns, true)?;
    let (dates, rows) = clip_range(&dates, &rows, from, to)?;
    let values: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|v| v.unwrap_or(f64::NAN)).collect())
        .collect();
    let first_valid = (0..columns.len())
        .map(|c| (0..values.len()).find(|&t| values[t][c].is_finite()))
        .collect();
    Ok(FeatureTable {
        dates,
        columns,
        values,
        first_valid,
    })
}

impl FeatureTable {
    /// Empty table aligned to the given calendar.
    pub fn empty(dates: Vec<NaiveDate>) -> Self {
        let n = dates.len();
        Self {
            dates,
            columns: Vec::new(),
            values: vec![Vec::new(); n],
            first_valid: Vec::new(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Value of a column at row t, None when t precedes first validity.
    pub fn value(&self, col: usize, t: usize) -> Option<f64> {
        let v = self.values.get(t)?.get(col)?;
        v.is_finite().then_some(*v)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Cross-sectional z-scores; all zeros when dispersion vanishes.
pub fn cross_sectional_z(xs: &[f64]) -> Vec<f64> {
    let m = mean(xs);
    let sd = {
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
        var.sqrt()
    };
    if sd <= 1e-12 {
        return vec![0.0; xs.len()];
    }
    xs.iter().map(|x| (x - m) / sd).collect()
}

impl PriceTable {
    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn n_periods(&self) -> usize {
        self.dates.len()
    }

    pub fn asset_index(&self, name: &str) -> Option<usize> {
        self.assets.iter().position(|a| a == name)
    }

    /// Daily simple returns realized on day t (close t-1 to close t).
    pub fn daily_returns(&self, t: usize) -> Result<Vec<f64>> {
        if t == 0 || t >= self.n_periods() {
            return Err(CouncilError::PeriodOutOfRange {
                t,
                len: self.n_periods(),
            });
        }
        Ok((0..self.n_assets())
            .map(|k| self.close[t][k] / self.close[t - 1][k] - 1.0)
            .collect())
    }

    /// Simple return over the window ending at t (at most `window` days).
    fn window_return(&self, k: usize, t: usize, window: usize) -> f64 {
        let start = t.saturating_sub(window);
        self.close[t][k] / self.close[start][k] - 1.0
    }

    /// Equal-weight basket daily log returns over the trailing window.
    fn basket_log_returns(&self, t: usize, window: usize) -> Vec<f64> {
        let start = t.saturating_sub(window);
        (start + 1..=t)
            .map(|s| {
                let r = mean(
                    &(0..self.n_assets())
                        .map(|k| self.close[s][k] / self.close[s - 1][k] - 1.0)
                        .collect::<Vec<_>>(),
                );
                (1.0 + r).ln()
            })
            .collect()
    }
}

/// Per-asset average 30-day log change of the asset's on-chain activity
/// columns (`ASSET.metric` naming), cross-sectionally z-scored. None when
/// no asset has usable columns at t.
fn onchain_scores(prices: &PriceTable, features: &FeatureTable, t: usize) -> Option<Vec<f64>> {
    let mut raw = vec![f64::NAN; prices.n_assets()];
    let mut any = false;
    for (k, asset) in prices.assets.iter().enumerate() {
        let prefix = format!("{asset}.");
        let mut changes = Vec::new();
        for (c, name) in features.columns.iter().enumerate() {
            if !name.starts_with(&prefix) {
                continue;
            }
            let now = features.value(c, t);
            let then = features.value(c, t.saturating_sub(30));
            if let (Some(a), Some(b)) = (now, then) {
                if a > 0.0 && b > 0.0 {
                    changes.push((a / b).ln());
                }
            }
        }
        if !changes.is_empty() {
            raw[k] = mean(&changes);
            any = true;
        }
    }
    if !any {
        return None;
    }
    // Assets without data sit at the cross-sectional mean (z = 0).
    let have: Vec<f64> = raw.iter().copied().filter(|v| v.is_finite()).collect();
    let m = mean(&have);
    let filled: Vec<f64> = raw
        .iter()
        .map(|&v| if v.is_finite() { v } else { m })
        .collect();
    Some(cross_sectional_z(&filled))
}

/// Computes all rolling statistics for period t from rows `<= t` only.
/// `btc` is the index of the dominance reference asset, when configured.
pub fn snapshot(
    prices: &PriceTable,
    features: &FeatureTable,
    t: usize,
    btc: Option<usize>,
) -> Result<MarketSnapshot> {
    let n = prices.n_periods();
    if t >= n {
        return Err(CouncilError::PeriodOutOfRange { t, len: n });
    }
    let k = prices.n_assets();
    let partial = t < 30;
    let win = |w: usize| t.min(w);

    let ret = |w: usize| -> Vec<f64> {
        (0..k)
            .map(|a| prices.window_return(a, t, win(w)))
            .collect()
    };
    let ret_1d = ret(1);
    let ret_7d = ret(7);
    let ret_30d = ret(30);
    let log_ret_30d: Vec<f64> = ret_30d.iter().map(|r| (1.0 + r).ln()).collect();

    let vol_30d: Vec<f64> = (0..k)
        .map(|a| {
            let start = t.saturating_sub(30);
            let logs: Vec<f64> = (start + 1..=t)
                .map(|s| (prices.close[s][a] / prices.close[s - 1][a]).ln())
                .collect();
            sample_std(&logs)
        })
        .collect();

    let z_30d = cross_sectional_z(&ret_30d);

    let basket30 = prices.basket_log_returns(t, 30);
    let r_30d: f64 = basket30.iter().sum();
    let sigma_30d = sample_std(&basket30);
    let r_7d: f64 = prices.basket_log_returns(t, 7).iter().sum();

    let delta_btc_ew = btc.and_then(|b| {
        if k < 2 {
            return None;
        }
        let btc_r = (1.0 + prices.window_return(b, t, win(30))).ln();
        let alt: Vec<f64> = (0..k)
            .filter(|&a| a != b)
            .map(|a| (1.0 + prices.window_return(a, t, win(30))).ln())
            .collect();
        Some(btc_r - mean(&alt))
    });

    let onchain_z = onchain_scores(prices, features, t);

    let mut macro_parts = Vec::new();
    if let Some(c) = features.column_index("fear_greed") {
        if let Some(v) = features.value(c, t) {
            macro_parts.push(((v - 50.0) / 50.0).clamp(-1.0, 1.0));
        }
    }
    if let Some(c) = features.column_index("polymarket") {
        if let Some(p) = features.value(c, t) {
            macro_parts.push(polymarket_score(p.clamp(0.0, 1.0)));
        }
    }
    let macro_score = (!macro_parts.is_empty()).then(|| mean(&macro_parts));

    Ok(MarketSnapshot {
        t,
        partial,
        ret_1d,
        ret_7d,
        ret_30d,
        log_ret_30d,
        vol_30d,
        z_30d,
        r_30d,
        sigma_30d,
        r_7d,
        delta_btc_ew,
        onchain_z,
        macro_score,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TweetObservation {
    /// Sentiment label in {-1, 0, +1}.
    pub label: f64,
    /// Annotator confidence in (0, 1].
    pub confidence: f64,
    pub likes: f64,
    pub reposts: f64,
    pub views: f64,
}

/// Engagement weight `w = log(1 + likes + reposts + views/100) + 1`.
pub fn engagement_weight(obs: &TweetObservation) -> f64 {
    (1.0 + obs.likes + obs.reposts + obs.views / 100.0).ln() + 1.0
}

/// Engagement-weighted average sentiment in [-1, +1].
pub fn sentiment_score(observations: &[TweetObservation]) -> Result<f64> {
    if observations.is_empty() {
        return Err(CouncilError::EmptySentiment);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for obs in observations {
        let w = engagement_weight(obs);
        num += obs.label * obs.confidence * w;
        den += w;
    }
    Ok(num / den)
}

/// Maps a mean implied probability in [0, 1] to a score in [-1, +1].
pub fn polymarket_score(p_bar: f64) -> f64 {
    (p_bar - 0.5) * 2.0
}
