//! Coalition characteristic functions from exponentially discounted return
//! histories, and exact Shapley values: a general-N permutation enumerator,
//! the coalition-weight formula, and a closed-form three-player fast path,
//! with checkers for the four Shapley axioms.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CouncilError, Result};

/// Factorial-enumeration guard: 12! marginal sweeps is the practical limit.
pub const ENUMERATION_MAX_N: usize = 12;

/// A nonempty coalition encoded as a bitmask over agents `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoalitionId(pub u32);

impl CoalitionId {
    pub fn singleton(i: usize) -> Self {
        CoalitionId(1 << i)
    }

    pub fn pair(i: usize, j: usize) -> Self {
        CoalitionId((1 << i) | (1 << j))
    }

    pub fn grand(n: usize) -> Self {
        CoalitionId((1u32 << n) - 1)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn size(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn members(&self) -> Vec<usize> {
        (0..32).filter(|&i| self.contains(i)).collect()
    }
}

/// Characteristic function values for every nonempty coalition of `n`
/// players; `v(empty) = 0` by convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicGame {
    n: usize,
    /// values[mask - 1] = v(mask), mask in 1..2^n-1
    values: Vec<f64>,
}

impl CharacteristicGame {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        let expected = (1usize << n) - 1;
        if values.len() != expected {
            return Err(CouncilError::DimensionMismatch(format!(
                "characteristic game over {n} players needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    /// Three-player constructor in the order (v1, v2, v3, v12, v13, v23, v123).
    pub fn three_player(v: [f64; 7]) -> Self {
        let [v1, v2, v3, v12, v13, v23, v123] = v;
        // mask order: 001, 010, 011, 100, 101, 110, 111
        Self {
            n: 3,
            values: vec![v1, v2, v12, v3, v13, v23, v123],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, coalition: CoalitionId) -> f64 {
        if coalition.0 == 0 {
            0.0
        } else {
            self.values[(coalition.0 - 1) as usize]
        }
    }

    pub fn grand_value(&self) -> f64 {
        self.value(CoalitionId::grand(self.n))
    }

    /// Sum game v + v' (same player set).
    pub fn add(&self, other: &CharacteristicGame) -> Result<CharacteristicGame> {
        if self.n != other.n {
            return Err(CouncilError::DimensionMismatch(
                "game sum over different player counts".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(CharacteristicGame { n: self.n, values })
    }
}

/// Raw Shapley values plus their truncated, normalized weight form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyCredit {
    pub raw: Vec<f64>,
}

impl ShapleyCredit {
    pub fn truncated(&self) -> Vec<f64> {
        self.raw.iter().map(|&p| p.max(0.0)).collect()
    }

    /// Normalized nonnegative weights; uniform fallback when all raw values
    /// are nonpositive.
    pub fn normalized_weights(&self) -> Vec<f64> {
        truncate_normalize(&self.raw)
    }
}

/// `w_tau = exp(-(t - tau)/h)` for `tau = 1..t`; the latest observation has
/// weight one.
pub fn ewp_weights(t: usize, h: f64) -> Vec<f64> {
    (1..=t)
        .map(|tau| (-((t - tau) as f64) / h).exp())
        .collect()
}

/// Weighted mean and (population) standard deviation of a return history
/// under geometric decay weights.
pub fn ewp_moments(history: &[f64], h: f64) -> Result<(f64, f64)> {
    if history.is_empty() {
        return Err(CouncilError::ColdLedger);
    }
    let w = ewp_weights(history.len(), h);
    let wsum: f64 = w.iter().sum();
    let mean = w
        .iter()
        .zip(history)
        .map(|(wi, ri)| wi * ri)
        .sum::<f64>()
        / wsum;
    let var = w
        .iter()
        .zip(history)
        .map(|(wi, ri)| wi * (ri - mean).powi(2))
        .sum::<f64>()
        / wsum;
    Ok((mean, var.max(0.0).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharValueParams {
    pub gamma_rho: f64,
    pub gamma_mu: f64,
    pub decay_period: f64,
    pub annualization: f64,
    pub sr_cap: f64,
}

impl Default for CharValueParams {
    fn default() -> Self {
        Self {
            gamma_rho: 0.4,
            gamma_mu: 0.6,
            decay_period: 252.0,
            annualization: 365.0,
            sr_cap: 10.0,
        }
    }
}

/// Composite coalition utility: discounted-Sharpe term plus annualized-mean
/// term. Empty histories map to zero (the `v(empty) = 0` convention extended
/// to unobserved coalitions), and a vanishing deviation caps the Sharpe term
/// at `sign(mean) * sr_cap`.
pub fn char_value(history: &[f64], params: &CharValueParams) -> f64 {
    let (mean, std) = match ewp_moments(history, params.decay_period) {
        Ok(m) => m,
        Err(_) => return 0.0,
    };
    let sharpe_term = if std < 1e-8 {
        if mean > 0.0 {
            params.sr_cap
        } else if mean < 0.0 {
            -params.sr_cap
        } else {
            0.0
        }
    } else {
        params.annualization.sqrt() * mean / std
    };
    params.gamma_rho * sharpe_term + params.gamma_mu * params.annualization * mean
}

/// Exact Shapley values by enumerating all N! arrival orderings.
pub fn shapley_exact(game: &CharacteristicGame) -> Result<ShapleyCredit> {
    let n = game.n();
    if n > ENUMERATION_MAX_N {
        return Err(CouncilError::EnumerationGuard {
            n,
            max: ENUMERATION_MAX_N,
        });
    }
    let mut phi = vec![0.0; n];
    let mut perm: Vec<usize> = (0..n).collect();
    let mut count = 0u64;
    permute(&mut perm, 0, &mut |order| {
        let mut mask = 0u32;
        for &i in order {
            let before = game.value(CoalitionId(mask));
            mask |= 1 << i;
            phi[i] += game.value(CoalitionId(mask)) - before;
        }
        count += 1;
    });
    for p in phi.iter_mut() {
        *p /= count as f64;
    }
    Ok(ShapleyCredit { raw: phi })
}

fn permute<F: FnMut(&[usize])>(items: &mut Vec<usize>, k: usize, visit: &mut F) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Exact Shapley values via the coalition-weight formula
/// `phi_i = sum_{S not containing i} |S|!(N-|S|-1)!/N! (v(S+i) - v(S))`.
pub fn shapley_subset_formula(game: &CharacteristicGame) -> Result<ShapleyCredit> {
    let n = game.n();
    if n > ENUMERATION_MAX_N {
        return Err(CouncilError::EnumerationGuard {
            n,
            max: ENUMERATION_MAX_N,
        });
    }
    let fact: Vec<f64> = (0..=n).scan(1.0, |acc, k| {
        if k > 0 {
            *acc *= k as f64;
        }
        Some(*acc)
    })
    .collect();
    let n_fact = fact[n];
    let mut phi = vec![0.0; n];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1u32 << i;
        for mask in 0..(1u32 << n) {
            if mask & bit != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let weight = fact[s] * fact[n - s - 1] / n_fact;
            *p += weight * (game.value(CoalitionId(mask | bit)) - game.value(CoalitionId(mask)));
        }
    }
    Ok(ShapleyCredit { raw: phi })
}

/// Closed-form three-player Shapley values.
pub fn shapley_closed3(game: &CharacteristicGame) -> Result<ShapleyCredit> {
    if game.n() != 3 {
        return Err(CouncilError::WrongPlayerCount(game.n()));
    }
    let v1 = game.value(CoalitionId::singleton(0));
    let v2 = game.value(CoalitionId::singleton(1));
    let v3 = game.value(CoalitionId::singleton(2));
    let v12 = game.value(CoalitionId::pair(0, 1));
    let v13 = game.value(CoalitionId::pair(0, 2));
    let v23 = game.value(CoalitionId::pair(1, 2));
    let v123 = game.grand_value();
    let phi1 = v1 / 3.0 + (v12 - v2) / 6.0 + (v13 - v3) / 6.0 + (v123 - v23) / 3.0;
    let phi2 = v2 / 3.0 + (v12 - v1) / 6.0 + (v23 - v3) / 6.0 + (v123 - v13) / 3.0;
    let phi3 = v3 / 3.0 + (v13 - v1) / 6.0 + (v23 - v2) / 6.0 + (v123 - v12) / 3.0;
    Ok(ShapleyCredit {
        raw: vec![phi1, phi2, phi3],
    })
}

/// `max(phi_i, 0)` normalized to the simplex; uniform when everything is
/// nonpositive.
pub fn truncate_normalize(phi: &[f64]) -> Vec<f64> {
    let truncated: Vec<f64> = phi.iter().map(|&p| p.max(0.0)).collect();
    let total: f64 = truncated.iter().sum();
    if total <= 0.0 {
        vec![1.0 / phi.len() as f64; phi.len()]
    } else {
        truncated.iter().map(|&p| p / total).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub efficiency_residual: f64,
    pub efficiency_pass: bool,
    /// Detected symmetric pairs (i, j) with |phi_i - phi_j|.
    pub symmetry: Vec<(usize, usize, f64)>,
    pub symmetry_pass: bool,
    /// Detected dummy players with |phi_i|.
    pub dummies: Vec<(usize, f64)>,
    pub dummy_pass: bool,
    /// Max residual of phi^{v+v'} - phi^v - phi^{v'} over a sampled game.
    pub additivity_residual: f64,
    pub additivity_pass: bool,
}

impl std::fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "efficiency: residual {:.3e} ({})",
            self.efficiency_residual,
            if self.efficiency_pass { "pass" } else { "FAIL" }
        )?;
        writeln!(
            f,
            "symmetry: {} symmetric pair(s) ({})",
            self.symmetry.len(),
            if self.symmetry_pass { "pass" } else { "FAIL" }
        )?;
        writeln!(
            f,
            "dummy: {} dummy player(s) ({})",
            self.dummies.len(),
            if self.dummy_pass { "pass" } else { "FAIL" }
        )?;
        writeln!(
            f,
            "additivity: residual {:.3e} ({})",
            self.additivity_residual,
            if self.additivity_pass { "pass" } else { "FAIL" }
        )
    }
}

fn is_symmetric_pair(game: &CharacteristicGame, i: usize, j: usize, tol: f64) -> bool {
    let bi = 1u32 << i;
    let bj = 1u32 << j;
    for mask in 0..(1u32 << game.n()) {
        if mask & (bi | bj) != 0 {
            continue;
        }
        let vi = game.value(CoalitionId(mask | bi));
        let vj = game.value(CoalitionId(mask | bj));
        if (vi - vj).abs() > tol {
            return false;
        }
    }
    true
}

fn is_dummy(game: &CharacteristicGame, i: usize, tol: f64) -> bool {
    let bit = 1u32 << i;
    for mask in 0..(1u32 << game.n()) {
        if mask & bit != 0 {
            continue;
        }
        if (game.value(CoalitionId(mask | bit)) - game.value(CoalitionId(mask))).abs() > tol {
            return false;
        }
    }
    true
}

/// Checks the four Shapley axioms on the given game: efficiency directly,
/// symmetry and dummy on structurally detected candidates, and additivity
/// against a deterministically sampled second game.
pub fn axiom_check(game: &CharacteristicGame, credit: &ShapleyCredit) -> Result<AxiomReport> {
    let n = game.n();
    let tol = 1e-9;
    let structural_tol = 1e-12;

    let efficiency_residual = (credit.raw.iter().sum::<f64>() - game.grand_value()).abs();

    let mut symmetry = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if is_symmetric_pair(game, i, j, structural_tol) {
                symmetry.push((i, j, (credit.raw[i] - credit.raw[j]).abs()));
            }
        }
    }
    let symmetry_pass = symmetry.iter().all(|&(_, _, r)| r < 1e-12);

    let mut dummies = Vec::new();
    for i in 0..n {
        if is_dummy(game, i, structural_tol) {
            dummies.push((i, credit.raw[i].abs()));
        }
    }
    let dummy_pass = dummies.iter().all(|&(_, r)| r < 1e-12);

    // Additivity against a seeded random companion game.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ca1ab1e);
    let other_values: Vec<f64> = (0..(1usize << n) - 1)
        .map(|_| rng.gen_range(-5.0..5.0))
        .collect();
    let other = CharacteristicGame::new(n, other_values)?;
    let sum_game = game.add(&other)?;
    let phi_other = shapley_subset_formula(&other)?;
    let phi_sum = shapley_subset_formula(&sum_game)?;
    let phi_self = shapley_subset_formula(game)?;
    let additivity_residual = (0..n)
        .map(|i| (phi_sum.raw[i] - phi_self.raw[i] - phi_other.raw[i]).abs())
        .fold(0.0, f64::max);

    Ok(AxiomReport {
        efficiency_residual,
        efficiency_pass: efficiency_residual < tol,
        symmetry,
        symmetry_pass,
        dummies,
        dummy_pass,
        additivity_residual,
        additivity_pass: additivity_residual < tol,
    })
}

/// Samples a random 3-player game with values in [-5, 5].
pub fn random_game3<R: Rng>(rng: &mut R) -> CharacteristicGame {
    let mut v = [0.0; 7];
    for x in v.iter_mut() {
        *x = rng.gen_range(-5.0..5.0);
    }
    CharacteristicGame::three_player(v)
}
