//! Enumerative checks of incentives F1–F8.
//!
//! | id | incentive                      | quantifier enumerated                    |
//! |----|--------------------------------|------------------------------------------|
//! | F1 | non-negativity                 | parties                                  |
//! | F2 | individual rationality         | parties                                  |
//! | F3 | equal-time symmetry            | pairs × coalitions avoiding both         |
//! | F4 | equal-time desirability        | ordered pairs × coalitions avoiding both |
//! | F5 | uselessness                    | parties × coalitions avoiding the party  |
//! | F6 | necessity                      | pairs × coalitions not containing both   |
//! | F7 | time-based monotonicity        | parties × earlier joining times          |
//! | F8 | time-based strict monotonicity | as F7, under the synergy predicate       |
//!
//! F7 and F8 recompute rewards under counterfactual joining times, so they
//! need the reward scheme itself rather than a fixed reward vector.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{ensure_enumerable, Coalition, Game, TimeVector, ENUMERATION_CEILING};
use crate::scalar::{max_of, Scalar};
use crate::time_rewards::RewardScheme;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Incentive {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
    F7,
    F8,
}

impl Incentive {
    pub const ALL: [Incentive; 8] = [
        Incentive::F1,
        Incentive::F2,
        Incentive::F3,
        Incentive::F4,
        Incentive::F5,
        Incentive::F6,
        Incentive::F7,
        Incentive::F8,
    ];

    pub fn title(&self) -> &'static str {
        match self {
            Incentive::F1 => "non-negativity",
            Incentive::F2 => "individual rationality",
            Incentive::F3 => "equal-time symmetry",
            Incentive::F4 => "equal-time desirability",
            Incentive::F5 => "uselessness",
            Incentive::F6 => "necessity",
            Incentive::F7 => "time-based monotonicity",
            Incentive::F8 => "time-based strict monotonicity",
        }
    }
}

impl fmt::Display for Incentive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

/// A concrete violation. Party indices are 1-based, matching the wire format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub parties: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<u32>>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncentiveStatus {
    pub verdict: Verdict,
    /// Number of instances whose precondition fired and were checked.
    pub instances: usize,
    pub witnesses: Vec<Witness>,
}

impl IncentiveStatus {
    fn not_applicable() -> Self {
        IncentiveStatus { verdict: Verdict::NotApplicable, instances: 0, witnesses: Vec::new() }
    }

    fn tally() -> Self {
        IncentiveStatus { verdict: Verdict::Pass, instances: 0, witnesses: Vec::new() }
    }

    fn record(&mut self, ok: bool, witness: impl FnOnce() -> Witness) {
        self.instances += 1;
        if !ok {
            self.verdict = Verdict::Fail;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(witness());
            }
        }
    }
}

const MAX_WITNESSES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncentiveReport {
    pub incentives: BTreeMap<Incentive, IncentiveStatus>,
}

impl IncentiveReport {
    fn empty() -> Self {
        IncentiveReport {
            incentives: Incentive::ALL.iter().map(|&f| (f, IncentiveStatus::not_applicable())).collect(),
        }
    }

    pub fn status(&self, incentive: Incentive) -> &IncentiveStatus {
        &self.incentives[&incentive]
    }

    pub fn verdict(&self, incentive: Incentive) -> Verdict {
        self.status(incentive).verdict
    }

    pub fn any_failed(&self) -> bool {
        self.incentives.values().any(|s| s.verdict == Verdict::Fail)
    }

    pub fn failed(&self) -> Vec<Incentive> {
        self.incentives.iter().filter(|(_, s)| s.verdict == Verdict::Fail).map(|(&f, _)| f).collect()
    }

    /// Combines two partial reports, keeping whichever side was evaluated.
    pub fn merge(mut self, other: IncentiveReport) -> Self {
        for (f, status) in other.incentives {
            if status.verdict != Verdict::NotApplicable || self.incentives[&f].verdict == Verdict::NotApplicable {
                self.incentives.insert(f, status);
            }
        }
        self
    }
}

fn approx_eq<S: Scalar>(a: &S, b: &S, tol: &S) -> bool {
    (a.clone() - b.clone()).abs() <= *tol
}

/// Marginal differences `v(C∪{i}) − v(C∪{j})` over all `C ⊆ N∖{i,j}`.
fn pair_differences<S: Scalar>(v: &[S], n: usize, i: usize, j: usize) -> Vec<S> {
    let others = Coalition::grand(n).without(i).without(j);
    others
        .subsets()
        .map(|c| v[c.with(i).mask() as usize].clone() - v[c.with(j).mask() as usize].clone())
        .collect()
}

fn is_useless<S: Scalar>(v: &[S], n: usize, i: usize, tol: &S) -> bool {
    Coalition::grand(n)
        .without(i)
        .subsets()
        .all(|c| approx_eq(&v[c.with(i).mask() as usize], &v[c.mask() as usize], tol))
}

/// True iff every coalition lacking `i` or `j` has value within `tol` of 0.
pub fn necessity_predicate<S: Scalar>(game: &Game<S>, i: usize, j: usize, tol: &S) -> Result<bool> {
    ensure_enumerable("necessity predicate", game.n(), ENUMERATION_CEILING)?;
    let v = game.dense()?;
    Ok(necessity_on(&v, game.n(), i, j, tol))
}

fn necessity_on<S: Scalar>(v: &[S], n: usize, i: usize, j: usize, tol: &S) -> bool {
    let both = Coalition::empty(n).with(i).with(j);
    Coalition::grand(n)
        .subsets()
        .filter(|c| !both.is_subset_of(c))
        .all(|c| v[c.mask() as usize].abs() <= *tol)
}

/// `Iᵢ`: some coalition of strictly earlier parties gains more than `tol`
/// over the sum of its value and `vᵢ` when `i` joins it.
pub fn strictness_predicate<S: Scalar>(game: &Game<S>, times: &TimeVector, i: usize, tol: &S) -> Result<bool> {
    ensure_enumerable("strictness predicate", game.n(), ENUMERATION_CEILING)?;
    times.check_len(game.n())?;
    let v = game.dense()?;
    Ok(strictness_on(&v, game.n(), times, i, tol))
}

fn strictness_on<S: Scalar>(v: &[S], n: usize, times: &TimeVector, i: usize, tol: &S) -> bool {
    let earlier: Vec<usize> = (0..n).filter(|&j| times.get(j) < times.get(i)).collect();
    let predecessors = Coalition::from_members(n, &earlier).expect("indices in range");
    let vi = v[1usize << i].clone();
    predecessors.subsets().any(|c| {
        let gain = v[c.with(i).mask() as usize].clone() - v[c.mask() as usize].clone() - vi.clone();
        gain > *tol
    })
}

/// F1–F6 for a fixed reward vector. F7 and F8 are reported not applicable.
pub fn check_static<S: Scalar>(game: &Game<S>, times: &TimeVector, rewards: &[S], tol: &S) -> Result<IncentiveReport> {
    let n = game.n();
    ensure_enumerable("incentive check", n, ENUMERATION_CEILING)?;
    times.check_len(n)?;
    if rewards.len() != n {
        return Err(Error::LengthMismatch { left: rewards.len(), right: n });
    }
    let v = game.dense()?;
    let show = |x: &S| x.to_f64_lossy();
    let mut report = IncentiveReport::empty();
    let mut f1 = IncentiveStatus::tally();
    let mut f2 = IncentiveStatus::tally();
    let mut f3 = IncentiveStatus::tally();
    let mut f4 = IncentiveStatus::tally();
    let mut f5 = IncentiveStatus::tally();
    let mut f6 = IncentiveStatus::tally();

    for i in 0..n {
        let r = &rewards[i];
        f1.record(*r >= -tol.clone(), || Witness {
            parties: vec![i + 1],
            times: None,
            detail: format!("r{} = {} < 0", i + 1, show(r)),
        });
        let vi = &v[1usize << i];
        f2.record(*r >= vi.clone() - tol.clone(), || Witness {
            parties: vec![i + 1],
            times: None,
            detail: format!("r{} = {} < v{} = {}", i + 1, show(r), i + 1, show(vi)),
        });
        if is_useless(&v, n, i, tol) {
            f5.record(r.abs() <= *tol, || Witness {
                parties: vec![i + 1],
                times: None,
                detail: format!("useless party has r{} = {}", i + 1, show(r)),
            });
        }
    }

    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (ri, rj) = (&rewards[i], &rewards[j]);
            if times.get(i) == times.get(j) {
                let diffs = pair_differences(&v, n, i, j);
                let symmetric = diffs.iter().all(|d| d.abs() <= *tol);
                if symmetric && i < j {
                    f3.record(approx_eq(ri, rj, tol), || Witness {
                        parties: vec![i + 1, j + 1],
                        times: None,
                        detail: format!("symmetric parties paid {} and {}", show(ri), show(rj)),
                    });
                }
                let dominates = diffs.iter().all(|d| *d >= -tol.clone()) && diffs.iter().any(|d| *d > *tol);
                if dominates {
                    let gap = ri.clone() - rj.clone();
                    f4.record(gap > S::strict_margin(), || Witness {
                        parties: vec![i + 1, j + 1],
                        times: None,
                        detail: format!("dominant party paid {} vs {}", show(ri), show(rj)),
                    });
                }
            }
            if i < j && necessity_on(&v, n, i, j, tol) {
                f6.record(approx_eq(ri, rj, tol), || Witness {
                    parties: vec![i + 1, j + 1],
                    times: None,
                    detail: format!("necessary parties paid {} and {}", show(ri), show(rj)),
                });
            }
        }
    }

    for (f, s) in [
        (Incentive::F1, f1),
        (Incentive::F2, f2),
        (Incentive::F3, f3),
        (Incentive::F4, f4),
        (Incentive::F5, f5),
        (Incentive::F6, f6),
    ] {
        report.incentives.insert(f, s);
    }
    Ok(report)
}

/// F7 and F8 by recomputing rewards for every earlier joining time of every
/// party, all other times fixed. `Iᵢ` is evaluated at the original times.
pub fn check_temporal<S: Scalar>(
    game: &Game<S>,
    times: &TimeVector,
    scheme: &dyn RewardScheme<S>,
    tol: &S,
) -> Result<IncentiveReport> {
    let n = game.n();
    ensure_enumerable("incentive check", n, ENUMERATION_CEILING)?;
    times.check_len(n)?;
    let v = game.dense()?;
    let base = scheme.rewards(game, times)?.rewards;
    let mut f7 = IncentiveStatus::tally();
    let mut f8 = IncentiveStatus::tally();
    for i in 0..n {
        let strict = strictness_on(&v, n, times, i, tol);
        for earlier in 0..times.get(i) {
            let moved = times.with_time(i, earlier);
            let r_new = scheme.rewards(game, &moved)?.rewards[i].clone();
            let r_old = base[i].clone();
            let witness = || Witness {
                parties: vec![i + 1],
                times: Some(moved.as_slice().to_vec()),
                detail: format!(
                    "moving t{} from {} to {} changes r{} from {} to {}",
                    i + 1,
                    times.get(i),
                    earlier,
                    i + 1,
                    r_old.to_f64_lossy(),
                    r_new.to_f64_lossy()
                ),
            };
            f7.record(r_new >= r_old.clone() - tol.clone(), witness);
            if strict {
                f8.record(r_new.clone() - r_old.clone() > S::strict_margin(), witness);
            }
        }
    }
    let mut report = IncentiveReport::empty();
    report.incentives.insert(Incentive::F7, f7);
    report.incentives.insert(Incentive::F8, f8);
    Ok(report)
}

/// Full F1–F8 report for a scheme at the given times.
pub fn check_all<S: Scalar>(
    game: &Game<S>,
    times: &TimeVector,
    scheme: &dyn RewardScheme<S>,
    tol: &S,
) -> Result<IncentiveReport> {
    let rewards = scheme.rewards(game, times)?.rewards;
    let fixed = check_static(game, times, &rewards, tol)?;
    Ok(fixed.merge(check_temporal(game, times, scheme, tol)?))
}

/// True iff the largest scaled reward equals `v(N)` within `tol`.
/// Only defined when every party joined at time 0.
pub fn check_weak_efficiency<S: Scalar>(game: &Game<S>, times: &TimeVector, scaled: &[S], tol: &S) -> Result<bool> {
    if !times.all_zero() {
        return Err(Error::PreconditionViolated("weak efficiency needs all joining times equal to 0".into()));
    }
    let grand = game.grand_value()?;
    let max = max_of(scaled).ok_or_else(|| Error::InvalidInput("empty reward vector".into()))?;
    Ok(approx_eq(&max, &grand, tol))
}

/// Time-based equal-value desirability: for parties with identical marginal
/// contributions, the earlier one is paid at least as much. Returns the
/// violating pairs (0-based) as `(earlier, later)`.
pub fn time_desirability_violations<S: Scalar>(
    game: &Game<S>,
    times: &TimeVector,
    rewards: &[S],
    tol: &S,
) -> Result<Vec<(usize, usize)>> {
    let n = game.n();
    ensure_enumerable("incentive check", n, ENUMERATION_CEILING)?;
    let v = game.dense()?;
    let mut bad = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && times.get(i) < times.get(j) {
                let symmetric = pair_differences(&v, n, i, j).iter().all(|d| d.abs() <= *tol);
                if symmetric && rewards[i] < rewards[j].clone() - tol.clone() {
                    bad.push((i, j));
                }
            }
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time_rewards::{Cumulation, NaiveDivision, TimeValuation};

    fn game(values: [f64; 3]) -> Game<f64> {
        Game::from_keyed(2, [("1", values[0]), ("2", values[1]), ("1,2", values[2])]).unwrap()
    }

    #[test]
    fn naive_scheme_breaks_rationality_and_necessity() {
        let t = TimeVector::new(vec![4, 0]).unwrap();
        let g = game([0.2, 0.2, 1.0]);
        let r = check_all(&g, &t, &NaiveDivision, &1e-9).unwrap();
        assert_eq!(r.verdict(Incentive::F2), Verdict::Fail);
        assert_eq!(r.status(Incentive::F2).witnesses[0].parties, vec![1]);

        let g = game([0.0, 0.0, 1.0]);
        let r = check_all(&g, &t, &NaiveDivision, &1e-9).unwrap();
        assert_eq!(r.verdict(Incentive::F6), Verdict::Fail);
    }

    #[test]
    fn time_valuation_passes_on_two_party_game() {
        let t = TimeVector::new(vec![4, 0]).unwrap();
        let g = game([0.2, 0.2, 1.0]);
        let scheme = TimeValuation { gamma: 1.0 };
        let r = check_all(&g, &t, &scheme, &1e-9).unwrap();
        assert!(!r.any_failed(), "{r:?}");
        assert_eq!(r.status(Incentive::F8).instances, 4);
        let moved = scheme.rewards(&g, &t.with_time(0, 0)).unwrap().rewards;
        assert!((moved[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn static_checks_without_scheme_leave_temporal_unknown() {
        let g = game([0.2, 0.2, 1.0]);
        let r = check_static(&g, &TimeVector::zeros(2), &[0.5, 0.5], &1e-9).unwrap();
        assert_eq!(r.verdict(Incentive::F7), Verdict::NotApplicable);
        assert_eq!(r.verdict(Incentive::F8), Verdict::NotApplicable);
        assert_eq!(r.verdict(Incentive::F3), Verdict::Pass);
        assert_eq!(r.status(Incentive::F3).instances, 1);
        // no dominant pair exists, so F4 passes vacuously
        assert_eq!(r.status(Incentive::F4).instances, 0);
    }

    #[test]
    fn useless_party_keeps_zero_reward_at_every_time() {
        // party 3 adds nothing anywhere
        let g = Game::tabulate(3, |c| {
            Ok(if c.contains(0) && c.contains(1) { 1.0 } else if c.contains(0) || c.contains(1) { 0.25 } else { 0.0 })
        })
        .unwrap();
        let t = TimeVector::new(vec![0, 1, 3]).unwrap();
        for scheme in [&Cumulation { beta: 1.0 } as &dyn RewardScheme<f64>, &TimeValuation { gamma: 0.5 }] {
            let r = check_all(&g, &t, scheme, &1e-9).unwrap();
            assert!(!r.any_failed(), "{r:?}");
            assert_eq!(r.status(Incentive::F5).instances, 1);
            for earlier in 0..3 {
                let moved = scheme.rewards(&g, &t.with_time(2, earlier)).unwrap().rewards;
                assert!(moved[2].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn necessity_predicate_examples() {
        let g = game([0.0, 0.0, 1.0]);
        assert!(necessity_predicate(&g, 0, 1, &1e-9).unwrap());
        let g = game([0.2, 0.0, 1.0]);
        assert!(!necessity_predicate(&g, 0, 1, &1e-9).unwrap());
        let a = Game::tabulate(3, |c| Ok(c.members().map(|i| 1.0 + i as f64).sum::<f64>())).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(!necessity_predicate(&a, i, j, &1e-9).unwrap());
                }
            }
        }
    }

    #[test]
    fn strictness_predicate_examples() {
        let g = game([0.2, 0.2, 1.0]);
        let t = TimeVector::new(vec![4, 0]).unwrap();
        assert!(strictness_predicate(&g, &t, 0, &0.0).unwrap());
        // the earliest party only tests C = ∅
        assert!(!strictness_predicate(&g, &t, 1, &0.0).unwrap());
        let a = Game::tabulate(3, |c| Ok(c.members().map(|i| 1.0 + i as f64).sum::<f64>())).unwrap();
        let t = TimeVector::new(vec![0, 1, 2]).unwrap();
        for i in 0..3 {
            assert!(!strictness_predicate(&a, &t, i, &0.0).unwrap());
        }
    }

    #[test]
    fn weak_efficiency_examples() {
        let g = game([0.2, 0.2, 1.0]);
        let zero = TimeVector::zeros(2);
        assert!(check_weak_efficiency(&g, &zero, &[1.0, 1.0], &1e-9).unwrap());
        assert!(!check_weak_efficiency(&g, &zero, &[0.9, 0.8], &1e-9).unwrap());
        let late = TimeVector::new(vec![1, 0]).unwrap();
        assert!(matches!(
            check_weak_efficiency(&g, &late, &[1.0, 1.0], &1e-9),
            Err(Error::PreconditionViolated(_))
        ));
        let solo = Game::from_keyed(1, [("1", 0.7)]).unwrap();
        let s = crate::time_rewards::scale_rewards(&solo, crate::game::RewardVector::new(vec![0.7])).unwrap();
        assert!(check_weak_efficiency(&solo, &TimeVector::zeros(1), &s.rewards.scaled.unwrap(), &1e-12).unwrap());
    }
}
