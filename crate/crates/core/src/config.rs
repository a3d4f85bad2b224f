//! Flat key=value run configuration with compiled defaults. Unknown keys
//! and out-of-range values are rejected before any computation. `dump`
//! emits the effective config in a form `parse` accepts unchanged.

use serde::{Deserialize, Serialize};

use crate::council::BlendConfig;
use crate::error::{CouncilError, Result};
use crate::overlays::{AssetRoles, OverlayConfig};
use crate::regime::{MultiplierAnchors, RegimeConfig};
use crate::shapley::CharValueParams;
use crate::agents::PolicyParams;
use crate::weights::MixtureConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub char_params: CharValueParams,
    pub mixture: MixtureConfig,
    pub regime: RegimeConfig,
    pub anchors: MultiplierAnchors,
    pub blend: BlendConfig,
    pub overlay: OverlayConfig,
    pub policy: PolicyParams,
    pub policy_set: String,
    pub cost_bps: f64,
    pub seed: u64,
    /// Symbol of the dominance reference asset.
    pub btc_symbol: String,
    pub dominance_donors: Vec<String>,
    /// (symbol, share) pairs; shares sum to one.
    pub dominance_recipients: Vec<(String, f64)>,
    pub alt_season_cut: Vec<String>,
    pub alt_season_recipients: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let donors: Vec<String> = ["ETH", "ADA", "LINK", "DOGE", "XLM", "XRP", "BCH"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        Self {
            char_params: CharValueParams::default(),
            mixture: MixtureConfig::default(),
            regime: RegimeConfig::default(),
            anchors: MultiplierAnchors::default(),
            blend: BlendConfig::default(),
            overlay: OverlayConfig::default(),
            policy: PolicyParams::default(),
            policy_set: "reference".into(),
            cost_bps: 0.0,
            seed: 0,
            btc_symbol: "BTC".into(),
            alt_season_recipients: donors.clone(),
            dominance_donors: donors,
            dominance_recipients: vec![
                ("BTC".into(), 0.60),
                ("TRX".into(), 0.25),
                ("ZEC".into(), 0.15),
            ],
            alt_season_cut: vec!["BTC".into(), "TRX".into()],
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse()
        .map_err(|_| CouncilError::Config(format!("key {key}: not a number: {v:?}")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| CouncilError::Config(format!("key {key}: not an integer: {v:?}")))
}

fn parse_list(v: &str) -> Vec<String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_shares(key: &str, v: &str) -> Result<Vec<(String, f64)>> {
    parse_list(v)
        .iter()
        .map(|item| {
            let (name, share) = item.split_once(':').ok_or_else(|| {
                CouncilError::Config(format!("key {key}: expected SYMBOL:SHARE, got {item:?}"))
            })?;
            Ok((name.trim().to_string(), parse_f64(key, share.trim())?))
        })
        .collect()
}

fn fmt_list(xs: &[String]) -> String {
    xs.join(",")
}

fn fmt_shares(xs: &[(String, f64)]) -> String {
    xs.iter()
        .map(|(n, s)| format!("{n}:{s}"))
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    /// Applies one `key = value` assignment; unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim();
        let v = value.trim();
        match k {
            "char.gamma_rho" => self.char_params.gamma_rho = parse_f64(k, v)?,
            "char.gamma_mu" => self.char_params.gamma_mu = parse_f64(k, v)?,
            "char.decay_period" => self.char_params.decay_period = parse_f64(k, v)?,
            "char.annualization" => self.char_params.annualization = parse_f64(k, v)?,
            "char.sr_cap" => self.char_params.sr_cap = parse_f64(k, v)?,
            "mixture.lambda" => self.mixture.lambda = parse_f64(k, v)?,
            "mixture.n_win" => self.mixture.n_win = parse_usize(k, v)?,
            "mixture.theta_wta" => self.mixture.theta_wta = parse_f64(k, v)?,
            "mixture.omega_wta" => self.mixture.omega_wta = parse_f64(k, v)?,
            "regime.xi_plus" => self.regime.xi_plus = parse_f64(k, v)?,
            "regime.xi_minus" => self.regime.xi_minus = parse_f64(k, v)?,
            "regime.attenuation_factor" => self.regime.attenuation_factor = parse_f64(k, v)?,
            "regime.attenuation_ratio" => self.regime.attenuation_ratio = parse_f64(k, v)?,
            "regime.xi_sat" => self.regime.xi_sat = parse_f64(k, v)?,
            "regime.consensus_gain" => self.regime.consensus_gain = parse_f64(k, v)?,
            "blend.beta_s1_center" => self.blend.beta_s1_center = parse_f64(k, v)?,
            "blend.beta_s1_scale" => self.blend.beta_s1_scale = parse_f64(k, v)?,
            "blend.beta_s1_tau" => self.blend.beta_s1_tau = parse_f64(k, v)?,
            "blend.beta_gc_center" => self.blend.beta_gc_center = parse_f64(k, v)?,
            "blend.beta_gc_scale" => self.blend.beta_gc_scale = parse_f64(k, v)?,
            "blend.beta_gc_tau" => self.blend.beta_gc_tau = parse_f64(k, v)?,
            "blend.ema_build" => self.blend.ema_build = parse_f64(k, v)?,
            "blend.ema_derisk" => self.blend.ema_derisk = parse_f64(k, v)?,
            "overlay.momentum_base" => self.overlay.momentum_base = parse_f64(k, v)?,
            "overlay.momentum_slope" => self.overlay.momentum_slope = parse_f64(k, v)?,
            "overlay.momentum_z_cap" => self.overlay.momentum_z_cap = parse_f64(k, v)?,
            "overlay.dominance_bandwidth" => self.overlay.dominance_bandwidth = parse_f64(k, v)?,
            "overlay.dominance_coeff_volatile" => {
                self.overlay.dominance_coeff_volatile = parse_f64(k, v)?
            }
            "overlay.dominance_coeff_bear" => self.overlay.dominance_coeff_bear = parse_f64(k, v)?,
            "overlay.alt_season_coeff" => self.overlay.alt_season_coeff = parse_f64(k, v)?,
            "overlay.recipient_cap" => self.overlay.recipient_cap = parse_f64(k, v)?,
            "overlay.btc_floor" => self.overlay.btc_floor = parse_f64(k, v)?,
            "overlay.bear_tilt_cap" => self.overlay.bear_tilt_cap = parse_f64(k, v)?,
            "overlay.bear_tilt_bandwidth" => self.overlay.bear_tilt_bandwidth = parse_f64(k, v)?,
            "overlay.bear_tilt_activation" => self.overlay.bear_tilt_activation = parse_f64(k, v)?,
            "overlay.bear_tilt_btc_cap" => self.overlay.bear_tilt_btc_cap = parse_f64(k, v)?,
            "overlay.cash_target_base" => self.overlay.cash_target_base = parse_f64(k, v)?,
            "overlay.cash_target_scale" => self.overlay.cash_target_scale = parse_f64(k, v)?,
            "overlay.cash_target_bandwidth" => {
                self.overlay.cash_target_bandwidth = parse_f64(k, v)?
            }
            "overlay.bull_cash_cap" => self.overlay.bull_cash_cap = parse_f64(k, v)?,
            "overlay.transition_depth" => self.overlay.transition_depth = parse_f64(k, v)?,
            "overlay.transition_bandwidth" => self.overlay.transition_bandwidth = parse_f64(k, v)?,
            "overlay.drawdown_bandwidth" => self.overlay.drawdown_bandwidth = parse_f64(k, v)?,
            "overlay.drawdown_coeff" => self.overlay.drawdown_coeff = parse_f64(k, v)?,
            "overlay.dd_cash_base" => self.overlay.dd_cash_base = parse_f64(k, v)?,
            "overlay.dd_cash_slope" => self.overlay.dd_cash_slope = parse_f64(k, v)?,
            "constraints.w_max" => {
                let x = parse_f64(k, v)?;
                self.overlay.w_max = x;
                self.policy.w_max = x;
            }
            "constraints.c_max" => {
                let x = parse_f64(k, v)?;
                self.overlay.c_max = x;
                self.policy.c_max = x;
            }
            "policy.vote_hi" => self.policy.vote_hi = parse_f64(k, v)?,
            "policy.vote_lo" => self.policy.vote_lo = parse_f64(k, v)?,
            "policy.debate_caution" => self.policy.debate_caution = parse_f64(k, v)?,
            "agents.policy_set" => self.policy_set = v.to_string(),
            "cost_bps" => self.cost_bps = parse_f64(k, v)?,
            "seed" => self.seed = v
                .parse()
                .map_err(|_| CouncilError::Config(format!("key {k}: not an integer: {v:?}")))?,
            "roles.btc" => self.btc_symbol = v.to_string(),
            "roles.dominance_donors" => self.dominance_donors = parse_list(v),
            "roles.dominance_recipients" => self.dominance_recipients = parse_shares(k, v)?,
            "roles.alt_season_cut" => self.alt_season_cut = parse_list(v),
            "roles.alt_season_recipients" => self.alt_season_recipients = parse_list(v),
            _ if k.starts_with("anchors.") => {
                let rest = k.strip_prefix("anchors.a").ok_or_else(|| {
                    CouncilError::Config(format!("unknown key: {k}"))
                })?;
                let (idx, field) = rest
                    .split_once('.')
                    .ok_or_else(|| CouncilError::Config(format!("unknown key: {k}")))?;
                let i: usize = idx
                    .parse::<usize>()
                    .ok()
                    .filter(|&i| (1..=self.anchors.anchors.len()).contains(&i))
                    .ok_or_else(|| CouncilError::Config(format!("unknown key: {k}")))?;
                let slot = match field {
                    "bull" => 0,
                    "neutral" => 1,
                    "bear" => 2,
                    _ => return Err(CouncilError::Config(format!("unknown key: {k}"))),
                };
                self.anchors.anchors[i - 1][slot] = parse_f64(k, v)?;
            }
            _ => return Err(CouncilError::Config(format!("unknown key: {k}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CouncilError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Effective config in `parse`-compatible form.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("char.gamma_rho", self.char_params.gamma_rho.to_string());
        kv("char.gamma_mu", self.char_params.gamma_mu.to_string());
        kv("char.decay_period", self.char_params.decay_period.to_string());
        kv("char.annualization", self.char_params.annualization.to_string());
        kv("char.sr_cap", self.char_params.sr_cap.to_string());
        kv("mixture.lambda", self.mixture.lambda.to_string());
        kv("mixture.n_win", self.mixture.n_win.to_string());
        kv("mixture.theta_wta", self.mixture.theta_wta.to_string());
        kv("mixture.omega_wta", self.mixture.omega_wta.to_string());
        kv("regime.xi_plus", self.regime.xi_plus.to_string());
        kv("regime.xi_minus", self.regime.xi_minus.to_string());
        kv("regime.attenuation_factor", self.regime.attenuation_factor.to_string());
        kv("regime.attenuation_ratio", self.regime.attenuation_ratio.to_string());
        kv("regime.xi_sat", self.regime.xi_sat.to_string());
        kv("regime.consensus_gain", self.regime.consensus_gain.to_string());
        for (i, row) in self.anchors.anchors.iter().enumerate() {
            kv(&format!("anchors.a{}.bull", i + 1), row[0].to_string());
            kv(&format!("anchors.a{}.neutral", i + 1), row[1].to_string());
            kv(&format!("anchors.a{}.bear", i + 1), row[2].to_string());
        }
        kv("blend.beta_s1_center", self.blend.beta_s1_center.to_string());
        kv("blend.beta_s1_scale", self.blend.beta_s1_scale.to_string());
        kv("blend.beta_s1_tau", self.blend.beta_s1_tau.to_string());
        kv("blend.beta_gc_center", self.blend.beta_gc_center.to_string());
        kv("blend.beta_gc_scale", self.blend.beta_gc_scale.to_string());
        kv("blend.beta_gc_tau", self.blend.beta_gc_tau.to_string());
        kv("blend.ema_build", self.blend.ema_build.to_string());
        kv("blend.ema_derisk", self.blend.ema_derisk.to_string());
        kv("overlay.momentum_base", self.overlay.momentum_base.to_string());
        kv("overlay.momentum_slope", self.overlay.momentum_slope.to_string());
        kv("overlay.momentum_z_cap", self.overlay.momentum_z_cap.to_string());
        kv("overlay.dominance_bandwidth", self.overlay.dominance_bandwidth.to_string());
        kv(
            "overlay.dominance_coeff_volatile",
            self.overlay.dominance_coeff_volatile.to_string(),
        );
        kv("overlay.dominance_coeff_bear", self.overlay.dominance_coeff_bear.to_string());
        kv("overlay.alt_season_coeff", self.overlay.alt_season_coeff.to_string());
        kv("overlay.recipient_cap", self.overlay.recipient_cap.to_string());
        kv("overlay.btc_floor", self.overlay.btc_floor.to_string());
        kv("overlay.bear_tilt_cap", self.overlay.bear_tilt_cap.to_string());
        kv("overlay.bear_tilt_bandwidth", self.overlay.bear_tilt_bandwidth.to_string());
        kv("overlay.bear_tilt_activation", self.overlay.bear_tilt_activation.to_string());
        kv("overlay.bear_tilt_btc_cap", self.overlay.bear_tilt_btc_cap.to_string());
        kv("overlay.cash_target_base", self.overlay.cash_target_base.to_string());
        kv("overlay.cash_target_scale", self.overlay.cash_target_scale.to_string());
        kv(
            "overlay.cash_target_bandwidth",
            self.overlay.cash_target_bandwidth.to_string(),
        );
        kv("overlay.bull_cash_cap", self.overlay.bull_cash_cap.to_string());
        kv("overlay.transition_depth", self.overlay.transition_depth.to_string());
        kv("overlay.transition_bandwidth", self.overlay.transition_bandwidth.to_string());
        kv("overlay.drawdown_bandwidth", self.overlay.drawdown_bandwidth.to_string());
        kv("overlay.drawdown_coeff", self.overlay.drawdown_coeff.to_string());
        kv("overlay.dd_cash_base", self.overlay.dd_cash_base.to_string());
        kv("overlay.dd_cash_slope", self.overlay.dd_cash_slope.to_string());
        kv("constraints.w_max", self.overlay.w_max.to_string());
        kv("constraints.c_max", self.overlay.c_max.to_string());
        kv("policy.vote_hi", self.policy.vote_hi.to_string());
        kv("policy.vote_lo", self.policy.vote_lo.to_string());
        kv("policy.debate_caution", self.policy.debate_caution.to_string());
        kv("agents.policy_set", self.policy_set.clone());
        kv("cost_bps", self.cost_bps.to_string());
        kv("seed", self.seed.to_string());
        kv("roles.btc", self.btc_symbol.clone());
        kv("roles.dominance_donors", fmt_list(&self.dominance_donors));
        kv("roles.dominance_recipients", fmt_shares(&self.dominance_recipients));
        kv("roles.alt_season_cut", fmt_list(&self.alt_season_cut));
        kv("roles.alt_season_recipients", fmt_list(&self.alt_season_recipients));
        out
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(CouncilError::Config(msg.to_string()))
            }
        };
        check(self.char_params.decay_period > 0.0, "char.decay_period must be > 0")?;
        check(self.char_params.annualization > 0.0, "char.annualization must be > 0")?;
        check(self.mixture.lambda > 0.0, "mixture.lambda must be > 0")?;
        check(self.mixture.n_win >= 2, "mixture.n_win must be >= 2")?;
        check(self.mixture.theta_wta > 1.0, "mixture.theta_wta must be > 1")?;
        check(
            (0.0..=1.0).contains(&self.mixture.omega_wta),
            "mixture.omega_wta must be in [0, 1]",
        )?;
        check(
            self.regime.xi_minus < self.regime.xi_plus,
            "regime.xi_minus must be below regime.xi_plus",
        )?;
        check(self.regime.xi_sat > 0.0, "regime.xi_sat must be > 0")?;
        check(
            (0.0..=1.0).contains(&self.blend.ema_build) && (0.0..=1.0).contains(&self.blend.ema_derisk),
            "blend EMA speeds must be in [0, 1]",
        )?;
        check(self.blend.beta_s1_tau > 0.0 && self.blend.beta_gc_tau > 0.0, "blend taus must be > 0")?;
        check(
            self.overlay.w_max > 0.0 && self.overlay.w_max <= 1.0,
            "constraints.w_max must be in (0, 1]",
        )?;
        check(
            self.overlay.c_max >= 0.0 && self.overlay.c_max <= 1.0,
            "constraints.c_max must be in [0, 1]",
        )?;
        check(self.cost_bps >= 0.0, "cost_bps must be >= 0")?;
        check(
            self.policy_set == "reference",
            "agents.policy_set: only \"reference\" is built in",
        )?;
        let share_sum: f64 = self.dominance_recipients.iter().map(|(_, s)| s).sum();
        check(
            self.dominance_recipients.is_empty() || (share_sum - 1.0).abs() < 1e-9,
            "roles.dominance_recipients shares must sum to 1",
        )?;
        Ok(())
    }

    /// Resolves role symbol lists against the loaded universe. Symbols not
    /// in the universe are dropped; an absent reference asset disables the
    /// overlays that need it.
    pub fn resolve_roles(&self, assets: &[String]) -> AssetRoles {
        let find = |name: &str| assets.iter().position(|a| a == name);
        AssetRoles {
            btc: find(&self.btc_symbol),
            dominance_donors: self.dominance_donors.iter().filter_map(|n| find(n)).collect(),
            dominance_recipients: {
                let kept: Vec<(usize, f64)> = self
                    .dominance_recipients
                    .iter()
                    .filter_map(|(n, s)| find(n).map(|i| (i, *s)))
                    .collect();
                let total: f64 = kept.iter().map(|(_, s)| s).sum();
                if total > 0.0 {
                    kept.into_iter().map(|(i, s)| (i, s / total)).collect()
                } else {
                    kept
                }
            },
            alt_season_cut: self.alt_season_cut.iter().filter_map(|n| find(n)).collect(),
            alt_season_recipients: self
                .alt_season_recipients
                .iter()
                .filter_map(|n| find(n))
                .collect(),
        }
    }
}
