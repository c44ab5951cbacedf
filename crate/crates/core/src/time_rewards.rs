//! Time-aware reward schemes.
//!
//! Two schemes turn a valuation and a vector of joining times into rewards:
//!
//! * **Reward cumulation** treats each time interval `τ` as its own game on
//!   the parties present (`N_τ = {i : tᵢ ≤ τ}`), pays absent parties their
//!   stand-alone value, and combines the per-interval Shapley values with
//!   geometric weights `β^τ / Σ β^τ'`.
//! * **Time-aware valuation** discounts every Harsanyi dividend by the
//!   smallest cooperative level `λᵢ = e^{-γ tᵢ}` among its members and pays
//!   the Shapley value of the discounted game.
//!
//! Both are also available as a single game so that Monte Carlo Shapley
//! estimation can replace exact enumeration for large party counts.


use crate::error::{Error, Result};
use crate::game::{ensure_enumerable, submasks, Coalition, Game, RewardVector, TimeVector, ENUMERATION_CEILING};
use crate::scalar::{max_of, RealScalar, Scalar};
use crate::shapley::{naive_time_division, shapley_exact, shapley_mc, shapley_on, ShapleyResult};

/// Party-count ceiling for the dividend-based validation paths.
pub const DIVIDEND_CEILING: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct CumulationConfig<S> {
    pub beta: S,
}

impl<S: Scalar> CumulationConfig<S> {
    pub fn new(beta: S) -> Result<Self> {
        if beta <= S::zero() || !beta.is_finite_value() {
            return Err(Error::InvalidInput(format!("beta must be finite and positive, got {beta:?}")));
        }
        Ok(CumulationConfig { beta })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeValuationConfig<F> {
    pub gamma: F,
}

impl<F: RealScalar> TimeValuationConfig<F> {
    pub fn new(gamma: F) -> Result<Self> {
        if !(gamma >= F::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidInput(format!("gamma must be finite and non-negative, got {gamma:?}")));
        }
        Ok(TimeValuationConfig { gamma })
    }
}

/// Interval weights `w⁽ᵗ⁾ = βᵗ / Σ_{τ≤T} β^τ` for `t = 0..=T`.
///
/// For `β > 1` numerator and denominator are divided by `βᵀ`, so the terms
/// are powers of `1/β ≤ 1` and never overflow.
pub fn interval_weights<S: Scalar>(horizon: u32, beta: &S) -> Result<Vec<S>> {
    let beta = CumulationConfig::new(beta.clone())?.beta;
    let len = horizon as usize + 1;
    let mut terms = vec![S::one(); len];
    if beta > S::one() {
        let ratio = S::one() / beta;
        for k in (0..len - 1).rev() {
            terms[k] = terms[k + 1].clone() * ratio.clone();
        }
    } else {
        for k in 1..len {
            terms[k] = terms[k - 1].clone() * beta.clone();
        }
    }
    let total = terms.iter().fold(S::zero(), |acc, t| acc + t.clone());
    Ok(terms.into_iter().map(|t| t / total.clone()).collect())
}

/// Reward cumulation with exact per-interval Shapley values.
pub fn reward_cumulation<S: Scalar>(game: &Game<S>, times: &TimeVector, beta: &S) -> Result<RewardVector<S>> {
    let n = game.n();
    times.check_len(n)?;
    ensure_enumerable("reward cumulation", n, ENUMERATION_CEILING)?;
    game.require_nonnegative_superadditive()?;
    let weights = interval_weights(times.horizon(), beta)?;
    let values = game.dense()?;
    let singles: Vec<S> = (0..n).map(|i| values[1usize << i].clone()).collect();

    let mut rewards = vec![S::zero(); n];
    // consecutive intervals with the same participant set share one Shapley computation
    let mut tau = 0u32;
    while tau <= times.horizon() {
        let present = times.joined_by(tau);
        let mut weight = S::zero();
        while tau <= times.horizon() && times.joined_by(tau) == present {
            weight += weights[tau as usize].clone();
            tau += 1;
        }
        let phi = shapley_on(&values, n, present.mask());
        for i in 0..n {
            let share = if present.contains(i) { phi[i].clone() } else { singles[i].clone() };
            rewards[i] += weight.clone() * share;
        }
    }
    Ok(RewardVector::new(rewards))
}

/// `ν(C) = Σ_τ w⁽τ⁾ [v(C ∩ N_τ) + Σ_{j ∈ C∖N_τ} v_j]`, whose Shapley values
/// equal the cumulated rewards by linearity.
pub fn cumulation_game<S: Scalar>(game: &Game<S>, times: &TimeVector, beta: &S) -> Result<Game<S>> {
    let n = game.n();
    times.check_len(n)?;
    let weights = interval_weights(times.horizon(), beta)?;
    let present: Vec<Coalition> = (0..=times.horizon()).map(|tau| times.joined_by(tau)).collect();
    let eval = {
        let game = game.clone();
        move |c: Coalition| -> Result<S> {
            let mut total = S::zero();
            for (w, joined) in weights.iter().zip(&present) {
                let mut term = game.value(c.intersection(*joined))?;
                for j in c.difference(*joined).members() {
                    term += game.singleton_value(j)?;
                }
                total += w.clone() * term;
            }
            Ok(total)
        }
    };
    if n <= ENUMERATION_CEILING {
        Game::tabulate(n, eval)
    } else {
        Ok(Game::from_fn(n, eval))
    }
}

/// Reward cumulation computed as one Shapley value of [`cumulation_game`].
pub fn reward_cumulation_via_linearity<S: Scalar>(
    game: &Game<S>,
    times: &TimeVector,
    beta: &S,
) -> Result<RewardVector<S>> {
    ensure_enumerable("reward cumulation", game.n(), ENUMERATION_CEILING)?;
    game.require_nonnegative_superadditive()?;
    let combined = cumulation_game(game, times, beta)?;
    Ok(RewardVector::new(shapley_exact(&combined)?.values))
}

/// Monte Carlo reward cumulation. The incentive guarantees hold only in
/// expectation for this variant.
pub fn reward_cumulation_mc<S: Scalar>(
    game: &Game<S>,
    times: &TimeVector,
    beta: &S,
    permutations: usize,
    seed: u64,
) -> Result<ShapleyResult<S>> {
    if game.n() <= ENUMERATION_CEILING {
        game.require_nonnegative_superadditive()?;
    }
    shapley_mc(&cumulation_game(game, times, beta)?, permutations, seed)
}

/// Harsanyi dividends indexed by coalition mask.
#[derive(Clone, Debug, PartialEq)]
pub struct HarsanyiDividends<S> {
    n: usize,
    values: Vec<S>,
}

impl<S: Scalar> HarsanyiDividends<S> {
    pub fn get(&self, c: Coalition) -> &S {
        &self.values[c.mask() as usize]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `Σ_{T ⊆ C} d(T)`, which equals `v(C)`.
    pub fn reconstruct(&self, c: Coalition) -> S {
        c.subsets().fold(S::zero(), |acc, t| acc + self.get(t).clone())
    }

    pub fn iter(&self) -> impl Iterator<Item = (Coalition, &S)> {
        let n = self.n;
        self.values
            .iter()
            .enumerate()
            .map(move |(mask, d)| (Coalition::from_mask(n, mask as u64).expect("mask in range"), d))
    }
}

/// `d(v,T) = v(T) − Σ_{S ⊊ T} d(v,S)` by direct recursion over subsets.
pub fn harsanyi_dividends<S: Scalar>(game: &Game<S>) -> Result<HarsanyiDividends<S>> {
    let n = game.n();
    ensure_enumerable("Harsanyi dividends", n, DIVIDEND_CEILING)?;
    let v = game.dense()?;
    let mut d = vec![S::zero(); v.len()];
    // proper subsets have smaller masks, so ascending order is topological
    for t in 1..v.len() as u64 {
        let mut value = v[t as usize].clone();
        for s in submasks(t).skip(1) {
            value -= d[s as usize].clone();
        }
        d[t as usize] = value;
    }
    Ok(HarsanyiDividends { n, values: d })
}

/// Cooperative levels `λᵢ = e^{-γ tᵢ}`, clamped below at the smallest
/// positive normal value.
pub fn cooperative_levels<F: RealScalar>(times: &TimeVector, gamma: F) -> Result<Vec<F>> {
    let gamma = TimeValuationConfig::new(gamma)?.gamma;
    Ok(times
        .as_slice()
        .iter()
        .map(|&t| {
            let t = F::from_u32(t).expect("time fits");
            (-(gamma * t)).exp().max(F::min_positive_value())
        })
        .collect())
}

/// Time-aware value from a dense table via the sorted-weights identity:
/// sort members by joining time, take their levels `é` in descending order
/// with a trailing 0, and sum `v(Ć[:j])(é[j] − é[j+1]) + (1 − é[j]) v(Ć[j])`.
fn time_aware_from_table<F: RealScalar>(values: &[F], levels: &[F], times: &TimeVector, c: Coalition) -> F {
    let mut order: Vec<usize> = c.members().collect();
    order.sort_by_key(|&i| (times.get(i), i));
    let mut total = F::zero();
    let mut prefix = 0u64;
    for (j, &party) in order.iter().enumerate() {
        prefix |= 1 << party;
        let e = levels[party];
        let next = order.get(j + 1).map_or(F::zero(), |&p| levels[p]);
        total = total + values[prefix as usize] * (e - next) + (F::one() - e) * values[1usize << party];
    }
    total
}

/// `v_{C,t}` for one coalition, by the sorted-weights identity.
pub fn time_aware_value<F: RealScalar>(
    game: &Game<F>,
    times: &TimeVector,
    gamma: F,
    coalition: Coalition,
) -> Result<F> {
    times.check_len(game.n())?;
    let levels = cooperative_levels(times, gamma)?;
    let mut order: Vec<usize> = coalition.members().collect();
    order.sort_by_key(|&i| (times.get(i), i));
    let mut total = F::zero();
    let mut prefix = Coalition::empty(game.n());
    for (j, &party) in order.iter().enumerate() {
        prefix = prefix.with(party);
        let e = levels[party];
        let next = order.get(j + 1).map_or(F::zero(), |&p| levels[p]);
        total = total + game.value(prefix)? * (e - next) + (F::one() - e) * game.singleton_value(party)?;
    }
    Ok(total)
}

/// `v_{C,t} = Σ_{T⊆C,|T|≥2} d(v,T) min_{i∈T} λᵢ + Σ_{i∈C} d(v,{i})`,
/// evaluated directly from the dividends.
pub fn time_aware_value_from_dividends<F: RealScalar>(
    dividends: &HarsanyiDividends<F>,
    times: &TimeVector,
    gamma: F,
    coalition: Coalition,
) -> Result<F> {
    times.check_len(dividends.n())?;
    let levels = cooperative_levels(times, gamma)?;
    let mut total = F::zero();
    for t in coalition.subsets() {
        let d = *dividends.get(t);
        match t.len() {
            0 => {}
            1 => total = total + d,
            _ => {
                let min_level = t.members().map(|i| levels[i]).fold(F::infinity(), F::min);
                total = total + d * min_level;
            }
        }
    }
    Ok(total)
}

/// The discounted game `C ↦ v_{C,t}`.
pub fn time_aware_game<F: RealScalar>(game: &Game<F>, times: &TimeVector, gamma: F) -> Result<Game<F>> {
    let n = game.n();
    times.check_len(n)?;
    let levels = cooperative_levels(times, gamma)?;
    if n <= ENUMERATION_CEILING {
        let values = game.dense()?;
        Game::tabulate(n, |c| Ok(time_aware_from_table(&values, &levels, times, c)))
    } else {
        let game = game.clone();
        let times = times.clone();
        Ok(Game::from_fn(n, move |c| time_aware_value(&game, &times, gamma, c)))
    }
}

/// Shapley values of the time-aware game.
pub fn reward_time_valuation<F: RealScalar>(game: &Game<F>, times: &TimeVector, gamma: F) -> Result<RewardVector<F>> {
    ensure_enumerable("time-aware valuation", game.n(), ENUMERATION_CEILING)?;
    game.require_nonnegative_superadditive()?;
    let discounted = time_aware_game(game, times, gamma)?;
    Ok(RewardVector::new(shapley_exact(&discounted)?.values))
}

/// Monte Carlo variant of [`reward_time_valuation`]; guarantees hold in
/// expectation only.
pub fn reward_time_valuation_mc<F: RealScalar>(
    game: &Game<F>,
    times: &TimeVector,
    gamma: F,
    permutations: usize,
    seed: u64,
) -> Result<ShapleyResult<F>> {
    if game.n() <= ENUMERATION_CEILING {
        game.require_nonnegative_superadditive()?;
    }
    shapley_mc(&time_aware_game(game, times, gamma)?, permutations, seed)
}

/// Scaled rewards `r* = ρ r` with `ρ = v(N) / maxᵢ φᵢ(v, N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledRewards<S> {
    pub rewards: RewardVector<S>,
    /// `None` when the game is degenerate.
    pub rho: Option<S>,
    /// Set when every plain Shapley value is zero and no scaling exists;
    /// the rewards are then passed through unchanged.
    pub degenerate: bool,
}

/// Scales rewards by `ρ`, which is computed from the plain Shapley values.
pub fn scale_rewards<S: Scalar>(game: &Game<S>, rewards: RewardVector<S>) -> Result<ScaledRewards<S>> {
    let phi = shapley_exact(game)?.values;
    scale_with_shapley(game.grand_value()?, &phi, rewards)
}

/// [`scale_rewards`] with precomputed plain Shapley values.
pub fn scale_with_shapley<S: Scalar>(grand: S, phi: &[S], mut rewards: RewardVector<S>) -> Result<ScaledRewards<S>> {
    if phi.len() != rewards.len() {
        return Err(Error::LengthMismatch { left: phi.len(), right: rewards.len() });
    }
    match max_of(phi) {
        Some(max) if max > S::zero() => {
            let rho = grand / max;
            rewards.scaled = Some(rewards.rewards.iter().map(|r| rho.clone() * r.clone()).collect());
            Ok(ScaledRewards { rewards, rho: Some(rho), degenerate: false })
        }
        _ => {
            rewards.scaled = Some(rewards.rewards.clone());
            Ok(ScaledRewards { rewards, rho: None, degenerate: true })
        }
    }
}

/// A deterministic rule mapping a game and joining times to rewards.
pub trait RewardScheme<S: Scalar>: Send + Sync {
    fn name(&self) -> &'static str;
    /// The scheme's tuning parameter, if it has one.
    fn param(&self) -> Option<f64>;
    fn rewards(&self, game: &Game<S>, times: &TimeVector) -> Result<RewardVector<S>>;
}

#[derive(Clone, Debug)]
pub struct Cumulation<S> {
    pub beta: S,
}

impl<S: Scalar> RewardScheme<S> for Cumulation<S> {
    fn name(&self) -> &'static str {
        "cumulation"
    }
    fn param(&self) -> Option<f64> {
        Some(self.beta.to_f64_lossy())
    }
    fn rewards(&self, game: &Game<S>, times: &TimeVector) -> Result<RewardVector<S>> {
        reward_cumulation(game, times, &self.beta)
    }
}

#[derive(Clone, Debug)]
pub struct TimeValuation<F> {
    pub gamma: F,
}

impl<F: RealScalar> RewardScheme<F> for TimeValuation<F> {
    fn name(&self) -> &'static str {
        "timeval"
    }
    fn param(&self) -> Option<f64> {
        Some(self.gamma.to_f64_lossy())
    }
    fn rewards(&self, game: &Game<F>, times: &TimeVector) -> Result<RewardVector<F>> {
        reward_time_valuation(game, times, self.gamma)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NaiveDivision;

impl<S: Scalar> RewardScheme<S> for NaiveDivision {
    fn name(&self) -> &'static str {
        "naive"
    }
    fn param(&self) -> Option<f64> {
        None
    }
    fn rewards(&self, game: &Game<S>, times: &TimeVector) -> Result<RewardVector<S>> {
        naive_time_division(game, times)
    }
}

/// Time-agnostic Shapley rewards.
#[derive(Clone, Copy, Debug)]
pub struct PlainShapley;

impl<S: Scalar> RewardScheme<S> for PlainShapley {
    fn name(&self) -> &'static str {
        "shapley"
    }
    fn param(&self) -> Option<f64> {
        None
    }
    fn rewards(&self, game: &Game<S>, times: &TimeVector) -> Result<RewardVector<S>> {
        times.check_len(game.n())?;
        Ok(RewardVector::new(shapley_exact(game)?.values))
    }
}
