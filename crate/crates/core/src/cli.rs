//! Command-line wiring: backtest over files, closed-form credit queries,
//! and per-period trace rendering.

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::io::BufReader;
use std::path::PathBuf;

use crate::backtest::{run, BacktestResult};
use crate::config::RunConfig;
use crate::error::{CouncilError, Result};
use crate::market::{load_features, load_prices, FeatureTable};
use crate::shapley::{axiom_check, shapley_closed3, truncate_normalize, CharacteristicGame};
use crate::trace::{emit_trace, parse_trace, TraceHeader, TraceRecord, TRACE_SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(name = "shapley-council", version, about = "Regime-aware council decision engine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a daily-rebalance backtest and write summary, trace, and equity
    /// artifacts.
    Backtest(BacktestArgs),
    /// Closed-form credit split for one 3-player game.
    Shapley(ShapleyArgs),
    /// Render one period of a trace file.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    /// Price table: date,ASSET1,ASSET2,...
    #[arg(long)]
    pub prices: PathBuf,
    /// Optional feature table: date,col1,col2,...
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Flat key=value config overriding compiled defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// First date, inclusive (YYYY-MM-DD).
    #[arg(long)]
    pub from: Option<NaiveDate>,
    /// Last date, inclusive (YYYY-MM-DD).
    #[arg(long)]
    pub to: Option<NaiveDate>,
    /// One-way cost in basis points per unit turnover; overrides config.
    #[arg(long)]
    pub bps: Option<f64>,
    /// Output directory for artifacts.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ShapleyArgs {
    /// Seven comma-separated coalition values: v1,v2,v3,v12,v13,v23,v123.
    #[arg(long)]
    pub game: String,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Period index within the trace.
    #[arg(long)]
    pub period: usize,
}

fn metric_line(result: &BacktestResult) -> String {
    let m = &result.metrics;
    format!(
        "CR {:.6}  SR {:.6}  MDD {:.6}  IR {:.6}",
        m.cumulative_return, m.sharpe, m.max_drawdown, m.information_ratio
    )
}

pub fn cmd_backtest(args: &BacktestArgs) -> Result<String> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|_| CouncilError::MissingFile(path.display().to_string()))?;
        cfg.apply_text(&text)?;
    }
    if let Some(bps) = args.bps {
        cfg.cost_bps = bps;
    }
    cfg.validate()?;

    let prices = load_prices(&args.prices, args.from, args.to)?;
    let features = match &args.features {
        Some(path) => load_features(path, args.from, args.to)?,
        None => FeatureTable::empty(prices.dates.clone()),
    };
    let result = run(&prices, &features, &cfg)?;

    fs::create_dir_all(&args.out)?;
    let header = TraceHeader {
        schema_version: TRACE_SCHEMA_VERSION,
        assets: prices.assets.clone(),
    };
    let mut trace_bytes = Vec::new();
    emit_trace(&mut trace_bytes, &header, &result.records)?;
    fs::write(args.out.join("trace.jsonl"), trace_bytes)?;

    let mut equity = String::from("date,return,equity\n");
    for (i, (r, e)) in result.returns.iter().zip(&result.equity).enumerate() {
        equity.push_str(&format!("{},{r:.12e},{e:.12e}\n", result.dates[i + 1]));
    }
    fs::write(args.out.join("equity.csv"), equity)?;
    fs::write(args.out.join("config.txt"), cfg.dump())?;

    let summary = serde_json::json!({
        "metrics": result.metrics,
        "coalition_metrics": result.coalition_metrics,
        "periods": result.records.len(),
        "equity_hash": result.equity_hash(),
    });
    fs::write(
        args.out.join("summary.json"),
        serde_json::to_string_pretty(&summary)
            .map_err(|e| CouncilError::Trace(format!("serialize summary: {e}")))?,
    )?;

    Ok(metric_line(&result))
}

pub fn cmd_shapley(args: &ShapleyArgs) -> Result<String> {
    let vals: Vec<f64> = args
        .game
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CouncilError::Config(format!("--game: not a number: {s:?}")))
        })
        .collect::<Result<_>>()?;
    let v: [f64; 7] = vals
        .try_into()
        .map_err(|_| CouncilError::Config("--game needs exactly 7 values".into()))?;
    let game = CharacteristicGame::three_player(v);
    let credit = shapley_closed3(&game)?;
    let omega_bar = truncate_normalize(&credit.raw);
    let axioms = axiom_check(&game, &credit)?;
    let mut out = String::new();
    out.push_str(&format!(
        "phi = [{:.6}, {:.6}, {:.6}]\n",
        credit.raw[0], credit.raw[1], credit.raw[2]
    ));
    out.push_str(&format!(
        "omega_bar = [{:.6}, {:.6}, {:.6}]\n",
        omega_bar[0], omega_bar[1], omega_bar[2]
    ));
    out.push_str(&format!("{axioms}"));
    Ok(out)
}

fn fmt_portfolio(p: &crate::portfolio::PortfolioVector, assets: &[String]) -> String {
    let mut parts: Vec<String> = p
        .weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let name = assets.get(i).map(String::as_str).unwrap_or("?");
            format!("{name} {w:.4}")
        })
        .collect();
    parts.push(format!("cash {:.4}", p.cash));
    parts.join(", ")
}

pub fn render_record(header: &TraceHeader, r: &TraceRecord) -> String {
    let mut out = String::new();
    out.push_str(&format!("period {} ({})\n", r.period, r.date));
    out.push_str(&format!(
        "[1] signals: xi {:.4} (prev {:.4}{}), label {}, r30 {:.4}, sigma30 {:.5}, drawdown {:.4}\n",
        r.signals.xi,
        r.signals.xi_prev,
        if r.signals.attenuated { ", attenuated" } else { "" },
        r.signals.label,
        r.signals.r_30d,
        r.signals.sigma_30d,
        r.signals.drawdown,
    ));
    out.push_str("[2] coalitions:\n");
    for ((name, p), vote) in r
        .coalitions
        .names
        .iter()
        .zip(&r.coalitions.portfolios)
        .zip(&r.coalitions.votes)
    {
        out.push_str(&format!(
            "    {name} votes {vote}: {}\n",
            fmt_portfolio(p, &header.assets)
        ));
    }
    out.push_str(&format!(
        "[3] credit: phi [{}], omega [{}], omega_tilde [{}], pairwise [{}]{}\n",
        fmt_vec(&r.credit.phi),
        fmt_vec(&r.credit.omega),
        fmt_vec(&r.credit.omega_tilde),
        fmt_vec(&r.credit.pairwise),
        match r.credit.wta_index {
            Some(i) => format!(", WTA on agent {}", i + 1),
            None => String::new(),
        }
    ));
    out.push_str(&format!(
        "[4] blends: beta_s1 {:.4}, beta_gc {:.4} -> {:.4}, kappa {:.4} ({})\n",
        r.blends.beta_s1,
        r.blends.beta_gc,
        r.blends.beta_gc_final,
        r.blends.kappa,
        r.blends.consensus_label,
    ));
    out.push_str("[5] overlays:\n");
    for s in &r.overlays.steps {
        out.push_str(&format!(
            "    {} {}\n",
            s.name,
            if s.active { "adjusted" } else { "pass" }
        ));
    }
    out.push_str(&format!(
        "    executed: {}\n",
        fmt_portfolio(&r.overlays.executed, &header.assets)
    ));
    if let Some(ret) = r.realized_return {
        out.push_str(&format!("    realized return {ret:+.6}\n"));
    }
    out
}

fn fmt_vec(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:.4}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn cmd_report(args: &ReportArgs) -> Result<String> {
    let file = fs::File::open(&args.trace)
        .map_err(|_| CouncilError::MissingFile(args.trace.display().to_string()))?;
    let (header, records) = parse_trace(BufReader::new(file))?;
    let record = records.get(args.period).ok_or(CouncilError::PeriodOutOfRange {
        t: args.period,
        len: records.len(),
    })?;
    Ok(render_record(&header, record))
}

/// Dispatches a parsed command; the binary maps errors to exit code 2.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Backtest(args) => cmd_backtest(args),
        Command::Shapley(args) => cmd_shapley(args),
        Command::Report(args) => cmd_report(args),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapley_command_examples() {
        let out = cmd_shapley(&ShapleyArgs {
            game: "1,2,3,4,5,6,9".into(),
        })
        .unwrap();
        assert!(out.contains("phi = [2.000000, 3.000000, 4.000000]"), "{out}");

        let out = cmd_shapley(&ShapleyArgs {
            game: "0,0,0,0,0,0,0".into(),
        })
        .unwrap();
        assert!(out.contains("phi = [0.000000, 0.000000, 0.000000]"));

        let out = cmd_shapley(&ShapleyArgs {
            game: "1,1,1,2,2,2,3".into(),
        })
        .unwrap();
        assert!(out.contains("phi = [1.000000, 1.000000, 1.000000]"));

        assert!(cmd_shapley(&ShapleyArgs {
            game: "1,2,3".into()
        })
        .is_err());
    }

    #[test]
    fn backtest_and_report_round_trip() {
        let cfg = crate::synthetic::SyntheticConfig {
            days_per_segment: 25,
            ..Default::default()
        };
        let (p, f) = crate::synthetic::generate(&cfg);
        let dir = tempfile::tempdir().unwrap();
        let prices_path = dir.path().join("prices.csv");
        let features_path = dir.path().join("features.csv");
        std::fs::write(&prices_path, crate::synthetic::prices_to_csv(&p)).unwrap();
        std::fs::write(&features_path, crate::synthetic::features_to_csv(&f)).unwrap();
        let out_dir = dir.path().join("out");
        let line = cmd_backtest(&BacktestArgs {
            prices: prices_path,
            features: Some(features_path),
            config: None,
            from: None,
            to: None,
            bps: Some(5.0),
            out: out_dir.clone(),
        })
        .unwrap();
        assert!(line.starts_with("CR "));
        for artifact in ["trace.jsonl", "equity.csv", "summary.json", "config.txt"] {
            assert!(out_dir.join(artifact).exists(), "{artifact}");
        }
        let rendered = cmd_report(&ReportArgs {
            trace: out_dir.join("trace.jsonl"),
            period: 0,
        })
        .unwrap();
        assert!(rendered.contains("[1] signals"));
        assert!(rendered.contains("[5] overlays"));
        // Cold start renders the uniform prior.
        assert!(rendered.contains("omega [0.3333, 0.3333, 0.3333]"), "{rendered}");

        assert!(cmd_report(&ReportArgs {
            trace: out_dir.join("trace.jsonl"),
            period: 10_000,
        })
        .is_err());
    }

    #[test]
    fn missing_price_file_is_reported() {
        let err = cmd_backtest(&BacktestArgs {
            prices: PathBuf::from("/nonexistent/prices.csv"),
            features: None,
            config: None,
            from: None,
            to: None,
            bps: None,
            out: std::env::temp_dir().join("unused-out"),
        })
        .unwrap_err();
        assert!(err.to_string().contains("price table not found"));
    }
}
