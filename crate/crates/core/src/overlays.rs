//! Seven-overlay risk-control cascade applied in fixed order: momentum
//! tilt, BTC dominance, BTC floor, bear on-chain tilt, volatile cash
//! target, transition buffer, drawdown protection, followed by the final
//! projection onto the constraint set. Every overlay is a continuous
//! transform of its driving signals.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::Result;
use crate::portfolio::PortfolioVector;
use crate::regime::RegimeLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayConfig {
    pub momentum_base: f64,
    pub momentum_slope: f64,
    pub momentum_z_cap: f64,
    pub dominance_bandwidth: f64,
    pub dominance_coeff_volatile: f64,
    pub dominance_coeff_bear: f64,
    pub alt_season_coeff: f64,
    pub recipient_cap: f64,
    pub btc_floor: f64,
    pub bear_tilt_cap: f64,
    pub bear_tilt_bandwidth: f64,
    pub bear_tilt_activation: f64,
    pub bear_tilt_btc_cap: f64,
    pub cash_target_base: f64,
    pub cash_target_scale: f64,
    pub cash_target_bandwidth: f64,
    pub bull_cash_cap: f64,
    pub transition_depth: f64,
    pub transition_bandwidth: f64,
    pub drawdown_bandwidth: f64,
    pub drawdown_coeff: f64,
    pub dd_cash_base: f64,
    pub dd_cash_slope: f64,
    pub w_max: f64,
    pub c_max: f64,
}

impl Default for OverlayConfig {
    fn default() -> Self {
        Self {
            momentum_base: 0.08,
            momentum_slope: 0.35,
            momentum_z_cap: 1.5,
            dominance_bandwidth: 0.15,
            dominance_coeff_volatile: 0.45,
            dominance_coeff_bear: 0.30,
            alt_season_coeff: 0.20,
            recipient_cap: 0.30,
            btc_floor: 0.18,
            bear_tilt_cap: 0.08,
            bear_tilt_bandwidth: 1.5,
            bear_tilt_activation: 0.005,
            bear_tilt_btc_cap: 0.30,
            cash_target_base: 0.08,
            cash_target_scale: 0.17,
            cash_target_bandwidth: 0.12,
            bull_cash_cap: 0.08,
            transition_depth: 0.35,
            transition_bandwidth: 0.25,
            drawdown_bandwidth: 0.15,
            drawdown_coeff: 0.40,
            dd_cash_base: 0.08,
            dd_cash_slope: 0.22,
            w_max: 0.40,
            c_max: 0.30,
        }
    }
}

/// Asset-role indices resolved against the loaded universe. Missing roles
/// cause the corresponding overlay leg to be skipped.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AssetRoles {
    pub btc: Option<usize>,
    pub dominance_donors: Vec<usize>,
    /// (index, share), ordered; shares sum to one.
    pub dominance_recipients: Vec<(usize, f64)>,
    pub alt_season_cut: Vec<usize>,
    pub alt_season_recipients: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayStep {
    pub name: String,
    pub pre: PortfolioVector,
    pub post: PortfolioVector,
    pub signals: BTreeMap<String, f64>,
    pub active: bool,
}

pub type OverlayTrace = Vec<OverlayStep>;

/// Driving signals for one cascade run.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSignals {
    pub z_scores: Vec<f64>,
    pub xi: f64,
    pub xi_prev: f64,
    pub label: RegimeLabel,
    /// 30-day BTC-vs-EW-altcoin return differential.
    pub btc_ew_diff: Option<f64>,
    /// BTC-vs-alts on-chain z differential.
    pub onchain_diff: Option<f64>,
    /// Current drawdown from the rolling peak, in [0, 1).
    pub drawdown: f64,
}

fn changed(a: &PortfolioVector, b: &PortfolioVector) -> bool {
    a.weights
        .iter()
        .zip(&b.weights)
        .any(|(x, y)| (x - y).abs() > 1e-12)
        || (a.cash - b.cash).abs() > 1e-12
}

/// Removes up to `amount` of long mass pro-rata from the given indices;
/// returns what was actually removed.
fn take_pro_rata(w: &mut [f64], from: &[usize], amount: f64) -> f64 {
    let pool: f64 = from.iter().map(|&i| w[i]).sum();
    if pool <= 0.0 || amount <= 0.0 {
        return 0.0;
    }
    let taken = amount.min(pool);
    for &i in from {
        w[i] -= taken * w[i] / pool;
    }
    taken
}

/// Adds `amount` pro-rata to the given indices (equal split when all
/// current weights are zero).
fn give_pro_rata(w: &mut [f64], to: &[usize], amount: f64) {
    if to.is_empty() || amount <= 0.0 {
        return;
    }
    let pool: f64 = to.iter().map(|&i| w[i]).sum();
    if pool > 0.0 {
        for &i in to {
            w[i] += amount * w[i] / pool;
        }
    } else {
        let share = amount / to.len() as f64;
        for &i in to {
            w[i] += share;
        }
    }
}

/// Momentum tilt strength `eta(xi) = base + slope * max(0, xi)`.
pub fn momentum_tilt_strength(xi: f64, cfg: &OverlayConfig) -> f64 {
    cfg.momentum_base + cfg.momentum_slope * xi.max(0.0)
}

/// `w_k *= 1 + eta(xi) * tanh(z_k / z_cap)`; the only mass-changing step in
/// the cascade (normalization happens at the end).
pub fn momentum_overlay(
    p: &PortfolioVector,
    z_scores: &[f64],
    xi: f64,
    cfg: &OverlayConfig,
) -> PortfolioVector {
    let eta = momentum_tilt_strength(xi, cfg);
    let weights = p
        .weights
        .iter()
        .zip(z_scores)
        .map(|(&w, &z)| w * (1.0 + eta * (z / cfg.momentum_z_cap).tanh()))
        .collect();
    PortfolioVector {
        weights,
        cash: p.cash,
    }
}

/// BTC/alt season rotation driven by `d = tanh(delta / tau_d)`. BTC season
/// (d > 0, volatile or bear) shifts `d * c_d` of mass from the donor list
/// to the recipients by share, each capped; alt season (d < 0, bull) cuts
/// `|d| * coeff` from the cut list and redistributes pro-rata to the alt
/// recipients.
pub fn dominance_overlay(
    p: &PortfolioVector,
    delta_btc_ew: f64,
    label: RegimeLabel,
    roles: &AssetRoles,
    cfg: &OverlayConfig,
) -> (PortfolioVector, f64) {
    let d = (delta_btc_ew / cfg.dominance_bandwidth).tanh();
    let mut w = p.weights.clone();
    if d > 0.0 && label != RegimeLabel::Bull {
        let coeff = match label {
            RegimeLabel::Volatile => cfg.dominance_coeff_volatile,
            RegimeLabel::Bear => cfg.dominance_coeff_bear,
            RegimeLabel::Bull => unreachable!(),
        };
        let donors: Vec<usize> = roles.dominance_donors.clone();
        let shifted = take_pro_rata(&mut w, &donors, d * coeff);
        if shifted > 0.0 && !roles.dominance_recipients.is_empty() {
            let mut remaining = shifted;
            let mut alloc: Vec<f64> = roles
                .dominance_recipients
                .iter()
                .map(|&(_, share)| shifted * share)
                .collect();
            // Recipient caps that bind push residual to later recipients,
            // then to cash.
            for _ in 0..roles.dominance_recipients.len() {
                let mut spill = 0.0;
                for (slot, &(idx, _)) in roles.dominance_recipients.iter().enumerate() {
                    let headroom = (cfg.recipient_cap - w[idx]).max(0.0);
                    let give = alloc[slot].min(headroom);
                    w[idx] += give;
                    remaining -= give;
                    spill += alloc[slot] - give;
                    alloc[slot] = 0.0;
                }
                if spill <= 1e-15 || remaining <= 1e-15 {
                    break;
                }
                // Spread the spill over recipients that still have headroom.
                let open: Vec<usize> = roles
                    .dominance_recipients
                    .iter()
                    .enumerate()
                    .filter(|&(_, &(idx, _))| w[idx] < cfg.recipient_cap - 1e-15)
                    .map(|(slot, _)| slot)
                    .collect();
                if open.is_empty() {
                    break;
                }
                let share = spill / open.len() as f64;
                for slot in open {
                    alloc[slot] = share;
                }
            }
            // Whatever could not be placed goes to cash.
            return (
                PortfolioVector {
                    weights: w,
                    cash: p.cash + remaining.max(0.0),
                },
                d,
            );
        }
        // No recipients resolvable: return the mass to cash.
        return (
            PortfolioVector {
                weights: w,
                cash: p.cash + shifted,
            },
            d,
        );
    }
    if d < 0.0 && label == RegimeLabel::Bull {
        let cut = take_pro_rata(&mut w, &roles.alt_season_cut, (-d) * cfg.alt_season_coeff);
        if cut > 0.0 {
            if roles.alt_season_recipients.is_empty() {
                return (
                    PortfolioVector {
                        weights: w,
                        cash: p.cash + cut,
                    },
                    d,
                );
            }
            give_pro_rata(&mut w, &roles.alt_season_recipients, cut);
        }
    }
    (
        PortfolioVector {
            weights: w,
            cash: p.cash,
        },
        d,
    )
}

/// Volatile-regime BTC floor: lift BTC to the floor minimum, recovering the
/// shortfall pro-rata from altcoin longs and then from cash.
pub fn btc_floor(
    p: &PortfolioVector,
    label: RegimeLabel,
    roles: &AssetRoles,
    cfg: &OverlayConfig,
) -> PortfolioVector {
    let btc = match (label, roles.btc) {
        (RegimeLabel::Volatile, Some(i)) => i,
        _ => return p.clone(),
    };
    if p.weights[btc] >= cfg.btc_floor {
        return p.clone();
    }
    let mut w = p.weights.clone();
    let mut cash = p.cash;
    let need = cfg.btc_floor - w[btc];
    let alts: Vec<usize> = (0..w.len()).filter(|&i| i != btc).collect();
    let from_alts = take_pro_rata(&mut w, &alts, need);
    let from_cash = (need - from_alts).min(cash).max(0.0);
    cash -= from_cash;
    w[btc] += from_alts + from_cash;
    PortfolioVector { weights: w, cash }
}

/// Bear-regime on-chain tilt toward BTC, gated on data availability and a
/// minimum tilt size.
pub fn bear_onchain_tilt(
    p: &PortfolioVector,
    label: RegimeLabel,
    onchain_diff: Option<f64>,
    roles: &AssetRoles,
    cfg: &OverlayConfig,
) -> (PortfolioVector, Option<f64>) {
    let (btc, diff) = match (label, roles.btc, onchain_diff) {
        (RegimeLabel::Bear, Some(i), Some(d)) => (i, d),
        _ => return (p.clone(), None),
    };
    let tilt = cfg.bear_tilt_cap * (diff / cfg.bear_tilt_bandwidth).tanh();
    if tilt <= cfg.bear_tilt_activation {
        return (p.clone(), Some(tilt));
    }
    let mut w = p.weights.clone();
    let headroom = (cfg.bear_tilt_btc_cap - w[btc]).max(0.0);
    let want = tilt.min(headroom);
    let alts: Vec<usize> = (0..w.len()).filter(|&i| i != btc).collect();
    let taken = take_pro_rata(&mut w, &alts, want);
    w[btc] += taken;
    (
        PortfolioVector {
            weights: w,
            cash: p.cash,
        },
        Some(tilt),
    )
}

/// Regime-conviction cash target: a smooth target in the volatile regime,
/// a hard cap in bull, no action in bear.
pub fn volatile_cash_target(
    p: &PortfolioVector,
    xi: f64,
    label: RegimeLabel,
    cfg: &OverlayConfig,
) -> (PortfolioVector, Option<f64>) {
    let mut w = p.weights.clone();
    let mut cash = p.cash;
    match label {
        RegimeLabel::Volatile => {
            let target = cfg.cash_target_base
                + cfg.cash_target_scale * (-xi.abs() / cfg.cash_target_bandwidth).exp();
            if cash < target {
                let longs: Vec<usize> = (0..w.len()).collect();
                let raised = take_pro_rata(&mut w, &longs, target - cash);
                cash += raised;
            } else if cash > target {
                let longs: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
                if !longs.is_empty() {
                    give_pro_rata(&mut w, &longs, cash - target);
                    cash = target;
                }
            }
            (PortfolioVector { weights: w, cash }, Some(target))
        }
        RegimeLabel::Bull => {
            if cash > cfg.bull_cash_cap {
                let longs: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
                if !longs.is_empty() {
                    give_pro_rata(&mut w, &longs, cash - cfg.bull_cash_cap);
                    cash = cfg.bull_cash_cap;
                }
            }
            (PortfolioVector { weights: w, cash }, Some(cfg.bull_cash_cap))
        }
        RegimeLabel::Bear => (p.clone(), None),
    }
}

/// Transition-buffer scaling factor for a downward score drop.
pub fn transition_scale(delta_xi: f64, cfg: &OverlayConfig) -> f64 {
    1.0 - cfg.transition_depth * (delta_xi.max(0.0) / cfg.transition_bandwidth).tanh()
}

/// De-risk on a downward regime-score drop; freed mass goes to cash.
pub fn transition_buffer(
    p: &PortfolioVector,
    xi_prev: f64,
    xi_now: f64,
    cfg: &OverlayConfig,
) -> (PortfolioVector, f64) {
    let delta = (xi_prev - xi_now).max(0.0);
    let s = transition_scale(delta, cfg);
    let weights: Vec<f64> = p.weights.iter().map(|&w| s * w).collect();
    let freed = p.long_mass() * (1.0 - s);
    (
        PortfolioVector {
            weights,
            cash: p.cash + freed,
        },
        s,
    )
}

/// Drawdown-protection scaling factor.
pub fn drawdown_scale(drawdown: f64, xi: f64, cfg: &OverlayConfig) -> f64 {
    let gate = (-xi).max(0.0);
    1.0 - gate * (drawdown / cfg.drawdown_bandwidth).tanh() * cfg.drawdown_coeff
}

/// Regime-gated position reduction driven by the drawdown from the rolling
/// peak. Identity whenever `xi >= 0`. Freed mass goes to cash subject to a
/// dynamic cap; the cap only limits cash added by this overlay, so the step
/// stays continuous in its signals.
pub fn drawdown_protect(
    p: &PortfolioVector,
    drawdown: f64,
    xi: f64,
    cfg: &OverlayConfig,
) -> (PortfolioVector, f64) {
    let gate = (-xi).max(0.0);
    if gate <= 0.0 {
        return (p.clone(), 1.0);
    }
    let s = drawdown_scale(drawdown, xi, cfg);
    let mut w: Vec<f64> = p.weights.iter().map(|&x| s * x).collect();
    let freed = p.long_mass() * (1.0 - s);
    let cap = cfg.dd_cash_base + cfg.dd_cash_slope * gate;
    let mut cash = p.cash + freed;
    let limit = cap.max(p.cash);
    if cash > limit {
        let excess = cash - limit;
        cash = limit;
        let longs: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
        if !longs.is_empty() {
            give_pro_rata(&mut w, &longs, excess);
        } else {
            cash += excess;
        }
    }
    (PortfolioVector { weights: w, cash }, s)
}

/// Runs the seven overlays in fixed order, records the per-step trace, and
/// projects the result onto the constraint set.
pub fn run_cascade(
    council: &PortfolioVector,
    signals: &CascadeSignals,
    roles: &AssetRoles,
    cfg: &OverlayConfig,
) -> Result<(PortfolioVector, OverlayTrace)> {
    let mut trace = Vec::with_capacity(8);
    let mut step = |name: &str,
                    pre: PortfolioVector,
                    post: PortfolioVector,
                    signals: BTreeMap<String, f64>|
     -> PortfolioVector {
        trace.push(OverlayStep {
            name: name.to_string(),
            active: changed(&pre, &post),
            pre,
            post: post.clone(),
            signals,
        });
        post
    };

    let eta = momentum_tilt_strength(signals.xi, cfg);
    let p0 = council.clone();
    let p1 = momentum_overlay(&p0, &signals.z_scores, signals.xi, cfg);
    let mut cur = step(
        "momentum",
        p0,
        p1,
        BTreeMap::from([("eta".into(), eta), ("xi".into(), signals.xi)]),
    );

    let (next, d) = match signals.btc_ew_diff {
        Some(delta) => {
            let (p, d) = dominance_overlay(&cur, delta, signals.label, roles, cfg);
            (p, d)
        }
        None => (cur.clone(), 0.0),
    };
    cur = step(
        "dominance",
        cur.clone(),
        next,
        BTreeMap::from([
            ("d".into(), d),
            ("delta_btc_ew".into(), signals.btc_ew_diff.unwrap_or(0.0)),
        ]),
    );

    let next = btc_floor(&cur, signals.label, roles, cfg);
    cur = step(
        "btc_floor",
        cur.clone(),
        next,
        BTreeMap::from([("floor".into(), cfg.btc_floor)]),
    );

    let (next, tilt) = bear_onchain_tilt(&cur, signals.label, signals.onchain_diff, roles, cfg);
    let mut sig = BTreeMap::new();
    if let Some(t) = tilt {
        sig.insert("tilt".into(), t);
    }
    if let Some(d) = signals.onchain_diff {
        sig.insert("onchain_diff".into(), d);
    }
    cur = step("bear_onchain_tilt", cur.clone(), next, sig);

    let (next, target) = volatile_cash_target(&cur, signals.xi, signals.label, cfg);
    let mut sig = BTreeMap::new();
    if let Some(t) = target {
        sig.insert("cash_target".into(), t);
    }
    cur = step("cash_target", cur.clone(), next, sig);

    let (next, s_trans) = transition_buffer(&cur, signals.xi_prev, signals.xi, cfg);
    cur = step(
        "transition_buffer",
        cur.clone(),
        next,
        BTreeMap::from([
            ("s".into(), s_trans),
            ("delta_xi".into(), (signals.xi_prev - signals.xi).max(0.0)),
        ]),
    );

    let (next, s_dd) = drawdown_protect(&cur, signals.drawdown, signals.xi, cfg);
    cur = step(
        "drawdown_protect",
        cur.clone(),
        next,
        BTreeMap::from([
            ("s_dd".into(), s_dd),
            ("drawdown".into(), signals.drawdown),
        ]),
    );

    let projected = cur.project_constraints(cfg.w_max, cfg.c_max)?;
    let final_pv = step("projection", cur.clone(), projected, BTreeMap::new());
    Ok((final_pv, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg() -> OverlayConfig {
        OverlayConfig::default()
    }

    fn roles3() -> AssetRoles {
        // Universe [BTC, ALT1, ALT2] for compact fixtures.
        AssetRoles {
            btc: Some(0),
            dominance_donors: vec![1, 2],
            dominance_recipients: vec![(0, 1.0)],
            alt_season_cut: vec![0],
            alt_season_recipients: vec![1, 2],
        }
    }

    #[test]
    fn momentum_neutral_and_strength() {
        let p = PortfolioVector::new(vec![0.3, 0.3, 0.2], 0.2);
        let out = momentum_overlay(&p, &[0.0, 0.0, 0.0], 0.5, &cfg());
        assert_eq!(out, p);
        assert_abs_diff_eq!(momentum_tilt_strength(-0.4, &cfg()), 0.08, epsilon = 1e-12);
        assert_abs_diff_eq!(momentum_tilt_strength(0.0, &cfg()), 0.08, epsilon = 1e-12);
        assert_abs_diff_eq!(momentum_tilt_strength(1.0, &cfg()), 0.43, epsilon = 1e-12);
        let out = momentum_overlay(&PortfolioVector::new(vec![1.0], 0.0), &[1.5], 1.0, &cfg());
        assert_abs_diff_eq!(out.weights[0], 1.0 + 0.43 * 1.0f64.tanh(), epsilon = 1e-12);
        assert_abs_diff_eq!(out.weights[0], 1.32749, epsilon = 1e-5);
    }

    #[test]
    fn dominance_neutral_and_shift() {
        // BTC starts low enough that the 0.30 recipient cap stays slack.
        let p = PortfolioVector::new(vec![0.05, 0.4, 0.3], 0.25);
        let (out, d) = dominance_overlay(&p, 0.0, RegimeLabel::Volatile, &roles3(), &cfg());
        assert_eq!(d, 0.0);
        assert_eq!(out, p);

        let (_, d) = dominance_overlay(&p, 0.15, RegimeLabel::Volatile, &roles3(), &cfg());
        assert_abs_diff_eq!(d, 1.0f64.tanh(), epsilon = 1e-12);

        // d = 0.5 in volatile moves 0.225 total mass donors -> BTC.
        let delta = 0.15 * 0.5f64.atanh();
        let (out, d) = dominance_overlay(&p, delta, RegimeLabel::Volatile, &roles3(), &cfg());
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-12);
        let moved = 0.5 * 0.45;
        assert_abs_diff_eq!(out.weights[0], 0.05 + moved, epsilon = 1e-12);
        assert_abs_diff_eq!(out.weights[1] + out.weights[2], 0.7 - moved, epsilon = 1e-12);
        assert_abs_diff_eq!(out.total(), p.total(), epsilon = 1e-12);
    }

    #[test]
    fn dominance_recipient_cap_spills_to_cash() {
        // BTC near cap; excess should end in cash, conserving mass.
        let p = PortfolioVector::new(vec![0.29, 0.4, 0.3], 0.01);
        let delta = 0.15 * 0.9f64.atanh();
        let (out, _) = dominance_overlay(&p, delta, RegimeLabel::Volatile, &roles3(), &cfg());
        assert!(out.weights[0] <= 0.30 + 1e-12);
        assert_abs_diff_eq!(out.total(), p.total(), epsilon = 1e-12);
        assert!(out.cash > p.cash);
    }

    #[test]
    fn dominance_alt_season() {
        let p = PortfolioVector::new(vec![0.4, 0.3, 0.2], 0.1);
        let (out, d) = dominance_overlay(&p, -0.15, RegimeLabel::Bull, &roles3(), &cfg());
        assert!(d < 0.0);
        let cut = (-d) * 0.20;
        assert_abs_diff_eq!(out.weights[0], 0.4 - cut, epsilon = 1e-12);
        assert_abs_diff_eq!(out.total(), p.total(), epsilon = 1e-12);
    }

    #[test]
    fn floor_cases() {
        let p = PortfolioVector::new(vec![0.10, 0.4, 0.3], 0.2);
        let out = btc_floor(&p, RegimeLabel::Volatile, &roles3(), &cfg());
        assert_abs_diff_eq!(out.weights[0], 0.18, epsilon = 1e-12);
        assert_abs_diff_eq!(out.weights[1], 0.4 - 0.08 * 0.4 / 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(out.total(), 1.0, epsilon = 1e-12);

        let above = PortfolioVector::new(vec![0.25, 0.3, 0.25], 0.2);
        assert_eq!(btc_floor(&above, RegimeLabel::Volatile, &roles3(), &cfg()), above);
        assert_eq!(btc_floor(&p, RegimeLabel::Bull, &roles3(), &cfg()), p);
    }

    #[test]
    fn floor_falls_back_to_cash() {
        let p = PortfolioVector::new(vec![0.05, 0.02, 0.0], 0.93);
        let out = btc_floor(&p, RegimeLabel::Volatile, &roles3(), &cfg());
        assert_abs_diff_eq!(out.weights[0], 0.18, epsilon = 1e-12);
        assert_abs_diff_eq!(out.weights[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.cash, 0.93 - 0.11, epsilon = 1e-12);
    }

    #[test]
    fn bear_tilt_cases() {
        let p = PortfolioVector::new(vec![0.2, 0.3, 0.3], 0.2);
        let (out, tilt) =
            bear_onchain_tilt(&p, RegimeLabel::Bear, Some(1.5), &roles3(), &cfg());
        let expected = 0.08 * 1.0f64.tanh();
        assert_abs_diff_eq!(tilt.unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(tilt.unwrap(), 0.06093, epsilon = 1e-5);
        assert_abs_diff_eq!(out.weights[0], 0.2 + expected, epsilon = 1e-12);

        // Below activation threshold.
        let (out, tilt) =
            bear_onchain_tilt(&p, RegimeLabel::Bear, Some(0.05), &roles3(), &cfg());
        assert!(tilt.unwrap() <= 0.005);
        assert_eq!(out, p);

        // Missing data gate.
        let (out, tilt) = bear_onchain_tilt(&p, RegimeLabel::Bear, None, &roles3(), &cfg());
        assert_eq!(tilt, None);
        assert_eq!(out, p);
    }

    #[test]
    fn cash_target_points() {
        let c = cfg();
        let p = PortfolioVector::new(vec![0.4, 0.3, 0.2], 0.1);
        let (out, tgt) = volatile_cash_target(&p, 0.0, RegimeLabel::Volatile, &c);
        assert_abs_diff_eq!(tgt.unwrap(), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(out.cash, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(out.total(), 1.0, epsilon = 1e-12);

        let (_, tgt) = volatile_cash_target(&p, 0.30, RegimeLabel::Volatile, &c);
        assert_abs_diff_eq!(tgt.unwrap(), 0.08 + 0.17 * (-0.30f64 / 0.12).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(tgt.unwrap(), 0.0940, epsilon = 2e-4);

        // Bull redeploys cash above the cap.
        let rich = PortfolioVector::new(vec![0.45, 0.4, 0.0], 0.15);
        let (out, _) = volatile_cash_target(&rich, 0.5, RegimeLabel::Bull, &c);
        assert_abs_diff_eq!(out.cash, 0.08, epsilon = 1e-12);
        assert_abs_diff_eq!(out.total(), 1.0, epsilon = 1e-12);

        // Bear: no action.
        let (out, tgt) = volatile_cash_target(&p, -0.5, RegimeLabel::Bear, &c);
        assert_eq!(tgt, None);
        assert_eq!(out, p);
    }

    #[test]
    fn transition_points() {
        let c = cfg();
        assert_abs_diff_eq!(transition_scale(0.0, &c), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(transition_scale(0.05, &c), 0.9309, epsilon = 1e-4);
        assert_abs_diff_eq!(transition_scale(0.60, &c), 0.6557, epsilon = 1e-4);
        let p = PortfolioVector::new(vec![0.5, 0.3], 0.2);
        let (out, s) = transition_buffer(&p, 0.8, 0.2, &c);
        assert_abs_diff_eq!(out.cash, 0.2 + 0.8 * (1.0 - s), epsilon = 1e-12);
        assert_abs_diff_eq!(out.total(), 1.0, epsilon = 1e-12);
        let (same, s) = transition_buffer(&p, 0.2, 0.8, &c);
        assert_eq!(s, 1.0);
        assert_eq!(same, p);
    }

    #[test]
    fn drawdown_points() {
        let c = cfg();
        assert_abs_diff_eq!(drawdown_scale(0.15, -1.0, &c), 0.6953, epsilon = 1e-4);
        let p = PortfolioVector::new(vec![0.5, 0.3], 0.2);
        let (out, s) = drawdown_protect(&p, 0.2, 0.5, &c);
        assert_eq!(s, 1.0);
        assert_eq!(out, p);
        let (out, s) = drawdown_protect(&p, 0.15, -1.0, &c);
        assert!(s < 1.0);
        // Cash cap at g=1 is 0.30.
        assert!(out.cash <= 0.30 + 1e-12);
        assert_abs_diff_eq!(out.total(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn drawdown_cap_does_not_cut_incoming_cash() {
        let c = cfg();
        // Incoming cash already above the dynamic cap: the overlay must not
        // reduce it (continuity at the regime gate).
        let p = PortfolioVector::new(vec![0.4, 0.3], 0.3);
        let (out, _) = drawdown_protect(&p, 0.01, -0.01, &c);
        assert!(out.cash >= 0.3 - 1e-12);
    }

    #[test]
    fn cascade_neutral_is_identity_after_cash_check() {
        let c = cfg();
        let p = PortfolioVector::new(vec![0.35, 0.35, 0.22], 0.08);
        let signals = CascadeSignals {
            z_scores: vec![0.0; 3],
            xi: 0.6,
            xi_prev: 0.6,
            label: RegimeLabel::Bull,
            btc_ew_diff: Some(0.0),
            onchain_diff: None,
            drawdown: 0.0,
        };
        let (out, trace) = run_cascade(&p, &signals, &roles3(), &c).unwrap();
        for (a, b) in out.weights.iter().zip(&p.weights) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(out.cash, p.cash, epsilon = 1e-9);
        assert_eq!(trace.len(), 8);
    }

    #[test]
    fn cascade_deep_bear_raises_cash() {
        let c = cfg();
        let p = PortfolioVector::new(vec![0.35, 0.35, 0.25], 0.05);
        let signals = CascadeSignals {
            z_scores: vec![0.2, -0.1, 0.0],
            xi: -0.8,
            xi_prev: -0.2,
            label: RegimeLabel::Bear,
            btc_ew_diff: Some(0.05),
            onchain_diff: Some(0.5),
            drawdown: 0.2,
        };
        let (out, _) = run_cascade(&p, &signals, &roles3(), &c).unwrap();
        assert!(out.cash > p.cash);
        assert!(out.is_feasible(c.w_max, c.c_max));
    }

    #[test]
    fn cascade_trace_chain_consistency() {
        let c = cfg();
        let p = PortfolioVector::new(vec![0.3, 0.3, 0.2], 0.2);
        let signals = CascadeSignals {
            z_scores: vec![1.0, -0.5, 0.2],
            xi: 0.1,
            xi_prev: 0.5,
            label: RegimeLabel::Volatile,
            btc_ew_diff: Some(0.1),
            onchain_diff: Some(0.3),
            drawdown: 0.05,
        };
        let (_, trace) = run_cascade(&p, &signals, &roles3(), &c).unwrap();
        for pair in trace.windows(2) {
            assert_eq!(pair[0].post, pair[1].pre);
        }
        let last = trace.last().unwrap();
        assert_abs_diff_eq!(last.post.total(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn overlay_lipschitz_probe() {
        // Perturb each driving signal by 1e-6 and bound the output move.
        let c = cfg();
        let p = PortfolioVector::new(vec![0.3, 0.3, 0.2], 0.2);
        let base = CascadeSignals {
            z_scores: vec![0.4, -0.6, 0.1],
            xi: -0.2,
            xi_prev: 0.1,
            label: RegimeLabel::Volatile,
            btc_ew_diff: Some(0.08),
            onchain_diff: Some(0.4),
            drawdown: 0.1,
        };
        let (out0, _) = run_cascade(&p, &base, &roles3(), &c).unwrap();
        let lipschitz_bound = 20.0; // documented module-level bound
        let eps = 1e-6;
        let mut variants = Vec::new();
        let mut s = base.clone();
        s.xi += eps;
        variants.push(s);
        let mut s = base.clone();
        s.z_scores[0] += eps;
        variants.push(s);
        let mut s = base.clone();
        s.drawdown += eps;
        variants.push(s);
        let mut s = base.clone();
        s.btc_ew_diff = Some(0.08 + eps);
        variants.push(s);
        let mut s = base.clone();
        s.onchain_diff = Some(0.4 + eps);
        variants.push(s);
        for v in variants {
            let (out, _) = run_cascade(&p, &v, &roles3(), &c).unwrap();
            let dist = out
                .weights
                .iter()
                .zip(&out0.weights)
                .map(|(a, b)| (a - b).abs())
                .fold((out.cash - out0.cash).abs(), f64::max);
            assert!(dist <= lipschitz_bound * eps, "dist = {dist}");
        }
    }
}
