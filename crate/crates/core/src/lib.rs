//! Deterministic council decision engine for daily portfolio rebalancing:
//! exact Shapley credit assignment over three-agent coalitions, online
//! Bayesian weight adaptation with a winner-takes-all override, regime
//! scoring and regime-aware multipliers, multi-stage portfolio blending,
//! a seven-overlay risk-control cascade, and a backtester that emits a
//! five-layer causal trace for every period.

pub mod agents;
pub mod backtest;
pub mod cli;
pub mod config;
pub mod council;
pub mod error;
pub mod market;
pub mod overlays;
pub mod portfolio;
pub mod regime;
pub mod shapley;
pub mod synthetic;
pub mod trace;
pub mod weights;

pub use backtest::{metrics, run, BacktestResult, Metrics, ShapleyLedger};
pub use config::RunConfig;
pub use error::{CouncilError, Result};
pub use portfolio::PortfolioVector;
pub use shapley::{shapley_closed3, shapley_exact, CharacteristicGame, ShapleyCredit};
pub use trace::{parse_trace, TraceRecord};
