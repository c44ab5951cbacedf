//! Exact and sampled Shapley values, plus the naive time-division baseline.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{ensure_enumerable, submasks, Coalition, Game, RewardVector, TimeVector, ENUMERATION_CEILING};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapleyResult<S> {
    pub values: Vec<S>,
    pub method: Method,
    /// Number of sampled permutations (Monte Carlo only).
    pub permutations_used: Option<usize>,
    /// Per-party standard error of the estimate (Monte Carlo only).
    pub std_error: Option<Vec<f64>>,
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, j| acc * (n - j) as u64 / (j + 1) as u64)
}

/// Weight of a coalition of size `k` in an `m`-player game:
/// `k!(m-k-1)!/m! = 1 / (m · C(m-1, k))`.
pub(crate) fn size_weights<S: Scalar>(m: usize) -> Vec<S> {
    (0..m)
        .map(|k| {
            let denom = m as u64 * binomial(m - 1, k);
            S::one() / S::from_u64(denom).expect("weight denominator fits")
        })
        .collect()
}

/// Shapley values of the game restricted to `players`, from a dense table.
///
/// Entries for parties outside `players` are zero. Each coalition is visited
/// once: its value is added to a per-size total and to the per-size sums of
/// its members, and the marginal-contribution sum is reassembled from those.
pub(crate) fn shapley_on<S: Scalar>(values: &[S], n: usize, players: u64) -> Vec<S> {
    let m = players.count_ones() as usize;
    let mut phi = vec![S::zero(); n];
    if m == 0 {
        return phi;
    }
    let weights: Vec<S> = size_weights(m);
    // total[k] = Σ_{|S|=k} v(S); member[i][k] = Σ_{|S|=k, i∈S} v(S)
    let mut total = vec![S::zero(); m + 1];
    let mut member = vec![vec![S::zero(); m + 1]; n];
    for s in submasks(players) {
        if s == 0 {
            continue;
        }
        let k = s.count_ones() as usize;
        let v = &values[s as usize];
        total[k] += v.clone();
        let mut rest = s;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            member[i][k] += v.clone();
        }
    }
    let mut rest = players;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let mut acc = S::zero();
        for k in 1..=m {
            // coalitions S ∋ i of size k enter with weight w_{k-1}
            acc += weights[k - 1].clone() * member[i][k].clone();
            // coalitions C ∌ i of size k < m enter with weight -w_k
            if k < m {
                acc -= weights[k].clone() * (total[k].clone() - member[i][k].clone());
            }
        }
        phi[i] = acc;
    }
    phi
}

/// Exact Shapley values by full coalition enumeration.
pub fn shapley_exact<S: Scalar>(game: &Game<S>) -> Result<ShapleyResult<S>> {
    ensure_enumerable("exact Shapley", game.n(), ENUMERATION_CEILING)?;
    let values = game.dense()?;
    let all = Coalition::grand(game.n()).mask();
    Ok(ShapleyResult {
        values: shapley_on(&values, game.n(), all),
        method: Method::Exact,
        permutations_used: None,
        std_error: None,
    })
}

/// Permutation-sampling Shapley estimate.
///
/// Each sampled ordering credits every party with its marginal contribution
/// over its predecessors. The estimate is the sample mean, and the standard
/// error is the sample standard deviation over `sqrt(permutations)`.
pub fn shapley_mc<S: Scalar>(game: &Game<S>, permutations: usize, seed: u64) -> Result<ShapleyResult<S>> {
    if permutations == 0 {
        return Err(Error::InvalidInput("at least one permutation is required".into()));
    }
    let n = game.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut sums = vec![S::zero(); n];
    // Welford accumulators for the per-party marginal variance
    let mut mean = vec![0.0f64; n];
    let mut m2 = vec![0.0f64; n];
    for draw in 1..=permutations {
        order.shuffle(&mut rng);
        let mut coalition = Coalition::empty(n);
        let mut prev = S::zero();
        for &i in &order {
            coalition = coalition.with(i);
            let cur = game.value(coalition)?;
            let marginal = cur.clone() - prev;
            let x = marginal.to_f64_lossy();
            let delta = x - mean[i];
            mean[i] += delta / draw as f64;
            m2[i] += delta * (x - mean[i]);
            sums[i] += marginal;
            prev = cur;
        }
    }
    let count = S::count(permutations);
    let values = sums.into_iter().map(|s| s / count.clone()).collect();
    let std_error = m2
        .iter()
        .map(|&q| {
            if permutations > 1 {
                (q / (permutations - 1) as f64 / permutations as f64).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Ok(ShapleyResult {
        values,
        method: Method::MonteCarlo,
        permutations_used: Some(permutations),
        std_error: Some(std_error),
    })
}

/// `φᵢ / (tᵢ + 1)`: the time-weighted Shapley baseline that breaks
/// individual rationality and necessity.
pub fn naive_time_division<S: Scalar>(game: &Game<S>, times: &TimeVector) -> Result<RewardVector<S>> {
    times.check_len(game.n())?;
    let phi = shapley_exact(game)?.values;
    Ok(RewardVector::new(
        phi.into_iter()
            .enumerate()
            .map(|(i, p)| p / S::count(times.get(i) as usize + 1))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::random_superadditive_game;
    use num_rational::BigRational;

    fn brute_force(game: &Game<f64>) -> Vec<f64> {
        // average over all orderings
        fn perms(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
            if k == items.len() {
                out.push(items.clone());
                return;
            }
            for j in k..items.len() {
                items.swap(k, j);
                perms(items, k + 1, out);
                items.swap(k, j);
            }
        }
        let n = game.n();
        let mut all = Vec::new();
        perms(&mut (0..n).collect(), 0, &mut all);
        let mut phi = vec![0.0; n];
        for p in &all {
            let mut c = Coalition::empty(n);
            for &i in p {
                let before = game.value(c).unwrap();
                c = c.with(i);
                phi[i] += game.value(c).unwrap() - before;
            }
        }
        phi.iter().map(|x| x / all.len() as f64).collect()
    }

    #[test]
    fn weights_sum_to_one_per_party() {
        for m in 1..=24 {
            let w: Vec<f64> = size_weights(m);
            let total: f64 = (0..m).map(|k| w[k] * binomial(m - 1, k) as f64).sum();
            assert!((total - 1.0).abs() < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn two_party_examples() {
        let g = Game::from_keyed(2, [("1", 0.0), ("2", 0.0), ("1,2", 1.0)]).unwrap();
        assert_eq!(shapley_exact(&g).unwrap().values, vec![0.5, 0.5]);
        let g = Game::from_keyed(2, [("1", 0.2f64), ("2", 0.2), ("1,2", 1.0)]).unwrap();
        let phi = shapley_exact(&g).unwrap().values;
        assert!((phi[0] - 0.5).abs() < 1e-15 && (phi[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn additive_game_returns_weights() {
        let a = [0.3f64, 1.25, 0.0, 2.0];
        let g: Game<f64> = Game::tabulate(4, |c| Ok(c.members().map(|i| a[i]).sum())).unwrap();
        let phi = shapley_exact(&g).unwrap().values;
        for i in 0..4 {
            assert!((phi[i] - a[i]).abs() < 1e-12);
        }
        let mc = shapley_mc(&g, 17, 3).unwrap();
        for i in 0..4 {
            assert!((mc.values[i] - a[i]).abs() < 1e-12);
            assert!(mc.std_error.as_ref().unwrap()[i] < 1e-12);
        }
    }

    #[test]
    fn matches_permutation_enumeration() {
        for seed in 0..10 {
            let g = random_superadditive_game::<f64>(5, seed);
            let exact = shapley_exact(&g).unwrap().values;
            let brute = brute_force(&g);
            for (a, b) in exact.iter().zip(&brute) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rational_shapley_is_exact() {
        let g = random_superadditive_game::<BigRational>(4, 5);
        let phi = shapley_exact(&g).unwrap().values;
        let total: BigRational = phi.iter().cloned().sum();
        assert_eq!(total, g.grand_value().unwrap());
    }

    #[test]
    fn mc_is_deterministic_per_seed() {
        let g = random_superadditive_game::<f64>(6, 2);
        let a = shapley_mc(&g, 200, 9).unwrap();
        let b = shapley_mc(&g, 200, 9).unwrap();
        assert_eq!(a, b);
        assert!(shapley_mc(&g, 0, 9).is_err());
    }

    #[test]
    fn mc_two_party_within_three_standard_errors() {
        let g = Game::from_keyed(2, [("1", 0.2f64), ("2", 0.2), ("1,2", 1.0)]).unwrap();
        let r = shapley_mc(&g, 10_000, 1).unwrap();
        let se = r.std_error.unwrap();
        for i in 0..2 {
            assert!((r.values[i] - 0.5).abs() <= 3.0 * se[i] + 1e-12);
        }
    }

    #[test]
    fn naive_division_reproduces_counterexamples() {
        let t = TimeVector::new(vec![4, 0]).unwrap();
        let g = Game::from_keyed(2, [("1", 0.2f64), ("2", 0.2), ("1,2", 1.0)]).unwrap();
        let r = naive_time_division(&g, &t).unwrap().rewards;
        assert!((r[0] - 0.1).abs() < 1e-12);
        let g = Game::from_keyed(2, [("1", 0.0f64), ("2", 0.0), ("1,2", 1.0)]).unwrap();
        let r = naive_time_division(&g, &t).unwrap().rewards;
        assert!((r[0] - 0.1).abs() < 1e-12 && (r[1] - 0.5).abs() < 1e-12);
        let zero = TimeVector::zeros(2);
        assert_eq!(naive_time_division(&g, &zero).unwrap().rewards, shapley_exact(&g).unwrap().values);
    }
}
