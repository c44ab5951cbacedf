//! Coalitions, games and their axiom checks.
//!
//! Parties are indexed from 0 inside the library. The coalition-key wire
//! encoding used by game files and reports is 1-based ("1,3"), and the empty
//! coalition is the empty string.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::{Arc, OnceLock, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest party count for which coalition tables are enumerated exactly.
pub const ENUMERATION_CEILING: usize = 24;

/// Largest party count representable by a [`Coalition`].
pub const MAX_PARTIES: usize = 64;

/// Absolute tolerance used by the default axiom precheck.
pub const DEFAULT_TOL: f64 = 1e-9;

pub(crate) fn ensure_enumerable(what: &'static str, n: usize, max: usize) -> Result<()> {
    if n > max {
        Err(Error::TooLarge { what, n, max })
    } else {
        Ok(())
    }
}

/// A subset of the parties `0..n`, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition {
    mask: u64,
    n: u8,
}

impl Coalition {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_PARTIES, "at most {MAX_PARTIES} parties");
        Coalition { mask: 0, n: n as u8 }
    }

    pub fn grand(n: usize) -> Self {
        assert!(n <= MAX_PARTIES, "at most {MAX_PARTIES} parties");
        Coalition { mask: full_mask(n), n: n as u8 }
    }

    pub fn singleton(n: usize, party: usize) -> Self {
        Self::empty(n).with(party)
    }

    pub fn from_mask(n: usize, mask: u64) -> Result<Self> {
        if n > MAX_PARTIES {
            return Err(Error::TooLarge { what: "coalition", n, max: MAX_PARTIES });
        }
        if mask & !full_mask(n) != 0 {
            return Err(Error::InvalidInput(format!("mask {mask:#x} has bits beyond party count {n}")));
        }
        Ok(Coalition { mask, n: n as u8 })
    }

    /// Builds a coalition from 0-based party indices; duplicates are ignored.
    pub fn from_members(n: usize, members: &[usize]) -> Result<Self> {
        let mut c = Self::empty(n);
        for &m in members {
            if m >= n {
                return Err(Error::InvalidInput(format!("party index {m} out of range for n = {n}")));
            }
            c = c.with(m);
        }
        Ok(c)
    }

    /// Parses the 1-based, comma-separated key encoding.
    pub fn parse_key(n: usize, key: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidCoalitionKey { key: key.to_string(), reason };
        let trimmed = key.trim();
        let mut c = Self::empty(n);
        if trimmed.is_empty() {
            return Ok(c);
        }
        let mut last = 0usize;
        for part in trimmed.split(',') {
            let idx: usize = part.trim().parse().map_err(|_| bad(format!("{part:?} is not an index")))?;
            if idx == 0 || idx > n {
                return Err(bad(format!("index {idx} outside 1..={n}")));
            }
            if idx <= last {
                return Err(bad("indices must be strictly ascending".into()));
            }
            last = idx;
            c = c.with(idx - 1);
        }
        Ok(c)
    }

    /// Canonical 1-based key, e.g. `"1,3"`.
    pub fn key(&self) -> String {
        self.members().map(|m| (m + 1).to_string()).collect::<Vec<_>>().join(",")
    }

    #[inline]
    pub fn mask(&self) -> u64 {
        self.mask
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    #[inline]
    pub fn contains(&self, party: usize) -> bool {
        party < 64 && self.mask >> party & 1 == 1
    }

    #[inline]
    pub fn with(self, party: usize) -> Self {
        assert!(party < self.n(), "party {party} out of range for n = {}", self.n);
        Coalition { mask: self.mask | 1 << party, n: self.n }
    }

    #[inline]
    pub fn without(self, party: usize) -> Self {
        Coalition { mask: self.mask & !(1u64 << party), n: self.n }
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        Coalition { mask: self.mask | other.mask, n: self.n }
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        Coalition { mask: self.mask & other.mask, n: self.n }
    }

    #[inline]
    pub fn difference(self, other: Self) -> Self {
        Coalition { mask: self.mask & !other.mask, n: self.n }
    }

    #[inline]
    pub fn complement(self) -> Self {
        Coalition { mask: !self.mask & full_mask(self.n()), n: self.n }
    }

    #[inline]
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.mask & !other.mask == 0
    }

    #[inline]
    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.mask & other.mask == 0
    }

    /// Members in ascending order.
    pub fn members(&self) -> impl Iterator<Item = usize> {
        let mut rest = self.mask;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i)
            }
        })
    }

    /// All subsets of this coalition, including the empty set and itself.
    pub fn subsets(&self) -> impl Iterator<Item = Coalition> {
        let n = self.n;
        submasks(self.mask).map(move |mask| Coalition { mask, n })
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.key())
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.key())
    }
}

#[inline]
pub(crate) fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Every submask of `mask`, from `mask` itself down to 0.
pub(crate) fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(mask);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & mask) };
        Some(cur)
    })
}

type OracleFn<S> = dyn Fn(Coalition) -> Result<S> + Send + Sync;

struct Oracle<S> {
    eval: Box<OracleFn<S>>,
    cache: RwLock<HashMap<u64, S>>,
}

#[derive(Clone)]
enum Source<S> {
    Table(Arc<Vec<Option<S>>>),
    Oracle(Arc<Oracle<S>>),
}

/// A cooperative game: a party count and a coalition valuation.
///
/// Games are immutable once built. Table games hold every value up front;
/// oracle games evaluate lazily and memoize, so concurrent readers always
/// observe the same value for a coalition.
#[derive(Clone)]
pub struct Game<S> {
    n: usize,
    source: Source<S>,
    declared_superadditive: bool,
    axioms: Arc<OnceLock<std::result::Result<AxiomReport, String>>>,
}

impl<S: Scalar> fmt::Debug for Game<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.source {
            Source::Table(_) => "table",
            Source::Oracle(_) => "oracle",
        };
        f.debug_struct("Game").field("n", &self.n).field("source", &kind).finish()
    }
}

impl<S: Scalar> Game<S> {
    fn with_source(n: usize, source: Source<S>) -> Self {
        Game { n, source, declared_superadditive: false, axioms: Arc::new(OnceLock::new()) }
    }

    /// Table game from a dense vector indexed by coalition mask.
    pub fn from_dense(n: usize, values: Vec<S>) -> Result<Self> {
        ensure_enumerable("table game", n, ENUMERATION_CEILING)?;
        if values.len() != 1usize << n {
            return Err(Error::LengthMismatch { left: values.len(), right: 1usize << n });
        }
        if !values[0].is_zero() {
            return Err(Error::InvalidInput("value of the empty coalition must be 0".into()));
        }
        Ok(Self::with_source(n, Source::Table(Arc::new(values.into_iter().map(Some).collect()))))
    }

    /// Table game from coalition-key/value pairs. Coalitions not listed stay
    /// unspecified and fail at lookup time.
    pub fn from_keyed<K, I>(n: usize, entries: I) -> Result<Self>
    where
        K: AsRef<str>,
        I: IntoIterator<Item = (K, S)>,
    {
        ensure_enumerable("table game", n, ENUMERATION_CEILING)?;
        let mut table: Vec<Option<S>> = vec![None; 1usize << n];
        table[0] = Some(S::zero());
        for (key, value) in entries {
            let c = Coalition::parse_key(n, key.as_ref())?;
            if c.is_empty() && !value.is_zero() {
                return Err(Error::InvalidCoalitionKey {
                    key: key.as_ref().to_string(),
                    reason: "the empty coalition must have value 0".into(),
                });
            }
            if !value.is_finite_value() {
                return Err(Error::InvalidInput(format!("value of {c} is not finite")));
            }
            table[c.mask() as usize] = Some(value);
        }
        Ok(Self::with_source(n, Source::Table(Arc::new(table))))
    }

    /// Lazily evaluated game. `v(∅)` is always 0 and never reaches `eval`.
    pub fn from_fn<F>(n: usize, eval: F) -> Self
    where
        F: Fn(Coalition) -> Result<S> + Send + Sync + 'static,
    {
        assert!(n <= MAX_PARTIES, "at most {MAX_PARTIES} parties");
        Self::with_source(
            n,
            Source::Oracle(Arc::new(Oracle { eval: Box::new(eval), cache: RwLock::new(HashMap::new()) })),
        )
    }

    /// Evaluates `eval` on every coalition and stores the full table.
    pub fn tabulate<F>(n: usize, eval: F) -> Result<Self>
    where
        F: Fn(Coalition) -> Result<S> + Sync,
    {
        ensure_enumerable("table game", n, ENUMERATION_CEILING)?;
        let values = (0..1u64 << n)
            .into_par_iter()
            .map(|mask| {
                if mask == 0 {
                    Ok(S::zero())
                } else {
                    eval(Coalition { mask, n: n as u8 })
                }
            })
            .collect::<Result<Vec<S>>>()?;
        Self::from_dense(n, values)
    }

    pub fn declare_superadditive(mut self, declared: bool) -> Self {
        self.declared_superadditive = declared;
        self
    }

    pub fn is_declared_superadditive(&self) -> bool {
        self.declared_superadditive
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, c: Coalition) -> Result<S> {
        debug_assert_eq!(c.n(), self.n);
        if c.is_empty() {
            return Ok(S::zero());
        }
        match &self.source {
            Source::Table(table) => table[c.mask() as usize]
                .clone()
                .ok_or_else(|| Error::MissingCoalition(c.key())),
            Source::Oracle(oracle) => {
                if let Some(v) = oracle.cache.read().expect("cache lock").get(&c.mask()) {
                    return Ok(v.clone());
                }
                let v = (oracle.eval)(c)?;
                let mut cache = oracle.cache.write().expect("cache lock");
                Ok(cache.entry(c.mask()).or_insert(v).clone())
            }
        }
    }

    pub fn value_of(&self, members: &[usize]) -> Result<S> {
        self.value(Coalition::from_members(self.n, members)?)
    }

    pub fn singleton_value(&self, party: usize) -> Result<S> {
        self.value(Coalition::singleton(self.n, party))
    }

    pub fn grand_value(&self) -> Result<S> {
        self.value(Coalition::grand(self.n))
    }

    pub fn singleton_values(&self) -> Result<Vec<S>> {
        (0..self.n).map(|i| self.singleton_value(i)).collect()
    }

    /// Full value table indexed by coalition mask.
    pub fn dense(&self) -> Result<Vec<S>> {
        ensure_enumerable("exact enumeration", self.n, ENUMERATION_CEILING)?;
        match &self.source {
            Source::Table(table) => table
                .iter()
                .enumerate()
                .map(|(mask, v)| {
                    v.clone().ok_or_else(|| {
                        Error::MissingCoalition(Coalition { mask: mask as u64, n: self.n as u8 }.key())
                    })
                })
                .collect(),
            Source::Oracle(_) => (0..1u64 << self.n)
                .map(|mask| self.value(Coalition { mask, n: self.n as u8 }))
                .collect(),
        }
    }

    /// Table-backed copy of this game.
    pub fn materialize(&self) -> Result<Self> {
        let mut g = Self::from_dense(self.n, self.dense()?)?;
        g.declared_superadditive = self.declared_superadditive;
        Ok(g)
    }

    /// Converts every value into another scalar type.
    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Result<Game<T>> {
        let values = self.dense()?.iter().map(f).collect();
        Ok(Game::from_dense(self.n, values)?.declare_superadditive(self.declared_superadditive))
    }

    /// Non-empty coalitions and their values keyed by the wire encoding.
    pub fn to_keyed(&self) -> Result<BTreeMap<String, S>> {
        let values = self.dense()?;
        Ok(values
            .into_iter()
            .enumerate()
            .skip(1)
            .map(|(mask, v)| (Coalition { mask: mask as u64, n: self.n as u8 }.key(), v))
            .collect())
    }

    /// Axiom report at [`DEFAULT_TOL`], computed once per game.
    pub fn axioms(&self) -> Result<AxiomReport> {
        self.axioms
            .get_or_init(|| check_axioms(self, S::lit(DEFAULT_TOL)).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::InvalidInput)
    }

    /// Rejects games that are negative or not superadditive.
    pub fn require_nonnegative_superadditive(&self) -> Result<()> {
        let report = self.axioms()?;
        if let Some(c) = report.nonnegative_witness {
            return Err(Error::AxiomViolation { axiom: "non-negativity", detail: format!("v({c}) < 0") });
        }
        if let Some((b, c)) = report.superadditive_witness {
            return Err(Error::AxiomViolation {
                axiom: "superadditivity",
                detail: format!("v({}) < v({b}) + v({c})", b.union(c)),
            });
        }
        Ok(())
    }
}

/// Outcome of checking non-negativity, monotonicity and superadditivity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub nonnegative: bool,
    pub monotone: bool,
    pub superadditive: bool,
    #[serde(with = "witness_one")]
    pub nonnegative_witness: Option<Coalition>,
    /// `(B, C)` with `B ⊆ C` and `v(C) < v(B)`.
    #[serde(with = "witness_pair")]
    pub monotone_witness: Option<(Coalition, Coalition)>,
    /// Disjoint `(B, C)` with `v(B ∪ C) < v(B) + v(C)`.
    #[serde(with = "witness_pair")]
    pub superadditive_witness: Option<(Coalition, Coalition)>,
}

impl AxiomReport {
    pub fn all_hold(&self) -> bool {
        self.nonnegative && self.monotone && self.superadditive
    }
}

mod witness_one {
    use super::Coalition;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<Z: Serializer>(w: &Option<Coalition>, s: Z) -> Result<Z::Ok, Z::Error> {
        match w {
            Some(c) => s.serialize_some(&c.key()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Coalition>, D::Error> {
        // Keys alone do not carry n; reports are write-only in practice.
        let _ = Option::<String>::deserialize(d)?;
        Ok(None)
    }
}

mod witness_pair {
    use super::Coalition;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<Z: Serializer>(w: &Option<(Coalition, Coalition)>, s: Z) -> Result<Z::Ok, Z::Error> {
        match w {
            Some((a, b)) => s.serialize_some(&[a.key(), b.key()]),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<(Coalition, Coalition)>, D::Error> {
        let _ = Option::<[String; 2]>::deserialize(d)?;
        Ok(None)
    }
}

/// Checks A1–A3 by enumerating every pair `B ⊆ C` (3ⁿ pairs).
///
/// Monotonicity is checked on all nested pairs and superadditivity on all
/// disjoint pairs `(B, C∖B)`; each failing flag carries the first witness.
pub fn check_axioms<S: Scalar>(game: &Game<S>, tol: S) -> Result<AxiomReport> {
    let n = game.n();
    ensure_enumerable("axiom check", n, ENUMERATION_CEILING)?;
    let v = game.dense()?;
    let mut report = AxiomReport {
        nonnegative: true,
        monotone: true,
        superadditive: true,
        nonnegative_witness: None,
        monotone_witness: None,
        superadditive_witness: None,
    };
    let coal = |mask: u64| Coalition { mask, n: n as u8 };
    for c in 0..1u64 << n {
        let vc = &v[c as usize];
        if report.nonnegative && *vc < -tol.clone() {
            report.nonnegative = false;
            report.nonnegative_witness = Some(coal(c));
        }
        for b in submasks(c) {
            let vb = &v[b as usize];
            if report.monotone && vc.clone() < vb.clone() - tol.clone() {
                report.monotone = false;
                report.monotone_witness = Some((coal(b), coal(c)));
            }
            let rest = c & !b;
            if report.superadditive && b <= rest {
                let sum = vb.clone() + v[rest as usize].clone();
                if vc.clone() < sum - tol.clone() {
                    report.superadditive = false;
                    report.superadditive_witness = Some((coal(b), coal(rest)));
                }
            }
        }
    }
    Ok(report)
}

fn dyadic<S: Scalar>(k: u32) -> S {
    S::from_u32(k).expect("small integer") / S::count(1024)
}

/// Random game with non-negative Harsanyi dividends.
///
/// Every dividend is a multiple of 1/1024, so the game is exactly
/// representable in binary floating point and in rationals alike, and the
/// same seed yields the same game in every scalar type. Non-negative
/// dividends make the game non-negative, monotone and superadditive.
pub fn random_superadditive_game<S: Scalar>(n: usize, seed: u64) -> Game<S> {
    assert!((1..=ENUMERATION_CEILING).contains(&n), "n must be in 1..={ENUMERATION_CEILING}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = 1usize << n;
    let mut v: Vec<S> = vec![S::zero(); size];
    for (mask, slot) in v.iter_mut().enumerate().skip(1) {
        let zero_prob = if mask.count_ones() == 1 { 0.15 } else { 0.3 };
        if !rng.gen_bool(zero_prob) {
            *slot = dyadic(rng.gen_range(1..=1024));
        }
    }
    // zeta transform: v(C) = Σ_{T ⊆ C} d(T)
    for bit in 0..n {
        for mask in 0..size {
            if mask >> bit & 1 == 1 {
                let lower = v[mask ^ (1 << bit)].clone();
                v[mask] += lower;
            }
        }
    }
    Game::from_dense(n, v).expect("well-formed table").declare_superadditive(true)
}

/// Random superadditive game built as the superadditive cover of random
/// coalition scores. Unlike [`random_superadditive_game`] these games can
/// have negative higher-order dividends.
pub fn random_superadditive_cover_game<S: Scalar>(n: usize, seed: u64) -> Game<S> {
    assert!((1..=16).contains(&n), "n must be in 1..=16");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = 1usize << n;
    let mut v: Vec<S> = vec![S::zero(); size];
    for mask in 1..size {
        let members = mask.count_ones();
        let mut best: S = if rng.gen_bool(0.1) { S::zero() } else { dyadic(rng.gen_range(0..=1024 * members)) };
        let m = mask as u64;
        for b in submasks(m) {
            let rest = m & !b;
            if b == 0 || rest == 0 || b > rest {
                continue;
            }
            let split = v[b as usize].clone() + v[rest as usize].clone();
            if split > best {
                best = split;
            }
        }
        v[mask] = best;
    }
    Game::from_dense(n, v).expect("well-formed table").declare_superadditive(true)
}

/// Random weighted-coverage game, which is monotone and submodular.
pub fn random_coverage_game<S: Scalar>(n: usize, seed: u64) -> Game<S> {
    assert!((1..=ENUMERATION_CEILING).contains(&n), "n must be in 1..={ENUMERATION_CEILING}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let elements = 2 * n + 2;
    let weights: Vec<S> = (0..elements).map(|_| dyadic(rng.gen_range(1..=1024))).collect();
    let covers: Vec<u64> = (0..n)
        .map(|_| (0..elements).filter(|_| rng.gen_bool(0.4)).fold(0u64, |acc, e| acc | 1 << e))
        .collect();
    Game::tabulate(n, |c| {
        let covered = c.members().fold(0u64, |acc, i| acc | covers[i]);
        Ok((0..elements)
            .filter(|e| covered >> e & 1 == 1)
            .fold(S::zero(), |acc, e| acc + weights[e].clone()))
    })
    .expect("n within ceiling")
}

/// Non-negative integer joining time values, normalized so the earliest
/// party has time 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct TimeVector(Vec<u32>);

impl TimeVector {
    pub fn new(times: Vec<u32>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidInput("time vector must not be empty".into()));
        }
        let min = *times.iter().min().expect("non-empty");
        Ok(TimeVector(times.into_iter().map(|t| t - min).collect()))
    }

    pub fn zeros(n: usize) -> Self {
        TimeVector(vec![0; n])
    }

    /// Parses a comma-separated list such as `"4,0,0"`.
    pub fn parse(list: &str) -> Result<Self> {
        let times = list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidInput(format!("bad joining time {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(times)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, party: usize) -> u32 {
        self.0[party]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Latest joining time `T`.
    pub fn horizon(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn all_zero(&self) -> bool {
        self.0.iter().all(|&t| t == 0)
    }

    /// Copy with one party's time replaced, renormalized.
    pub fn with_time(&self, party: usize, t: u32) -> Self {
        let mut times = self.0.clone();
        times[party] = t;
        Self::new(times).expect("non-empty")
    }

    /// Parties that have joined by interval `tau`.
    pub fn joined_by(&self, tau: u32) -> Coalition {
        let members: Vec<usize> = (0..self.len()).filter(|&i| self.0[i] <= tau).collect();
        Coalition::from_members(self.len(), &members).expect("indices in range")
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            Err(Error::LengthMismatch { left: self.len(), right: n })
        } else {
            Ok(())
        }
    }
}

impl TryFrom<Vec<u32>> for TimeVector {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        TimeVector::new(v)
    }
}

impl From<TimeVector> for Vec<u32> {
    fn from(t: TimeVector) -> Vec<u32> {
        t.0
    }
}

/// Per-party reward values, optionally with their scaled counterparts.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardVector<S> {
    pub rewards: Vec<S>,
    pub scaled: Option<Vec<S>>,
}

impl<S: Scalar> RewardVector<S> {
    pub fn new(rewards: Vec<S>) -> Self {
        RewardVector { rewards, scaled: None }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.rewards.iter().chain(self.scaled.iter().flatten()).all(|r| r.is_finite_value())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.rewards.iter().map(|r| r.to_f64_lossy()).collect()
    }
}

/// On-disk game description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameFile {
    pub n: usize,
    pub values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superadditive: Option<bool>,
}

impl GameFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn from_game(game: &Game<f64>, times: Option<&TimeVector>) -> Result<Self> {
        Ok(GameFile {
            n: game.n(),
            values: game.to_keyed()?,
            times: times.map(|t| t.as_slice().to_vec()),
            superadditive: game.is_declared_superadditive().then_some(true),
        })
    }

    pub fn to_game<S: Scalar>(&self) -> Result<Game<S>> {
        let entries = self
            .values
            .iter()
            .map(|(k, v)| {
                S::from_f64(*v)
                    .map(|s| (k.as_str(), s))
                    .ok_or_else(|| Error::InvalidInput(format!("value for {k:?} is not finite")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Game::from_keyed(self.n, entries)?.declare_superadditive(self.superadditive.unwrap_or(false)))
    }

    pub fn time_vector(&self) -> Result<Option<TimeVector>> {
        self.times
            .as_ref()
            .map(|t| {
                let tv = TimeVector::new(t.clone())?;
                tv.check_len(self.n)?;
                Ok(tv)
            })
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn two_party_game() -> Game<f64> {
        Game::from_keyed(2, [("1", 0.2), ("2", 0.2), ("1,2", 1.0)]).unwrap()
    }

    #[test]
    fn keyed_table_answers_every_query() {
        let g = two_party_game();
        assert_eq!(g.value_of(&[0, 1]).unwrap(), 1.0);
        assert_eq!(g.value_of(&[]).unwrap(), 0.0);

        let single = Game::from_keyed(1, [("1", 0.0)]).unwrap();
        assert_eq!(single.value(Coalition::empty(1)).unwrap(), 0.0);
        assert_eq!(single.value(Coalition::grand(1)).unwrap(), 0.0);
    }

    #[test]
    fn three_party_table_round_trips() {
        let entries: Vec<(String, f64)> =
            (1u64..8).map(|m| (Coalition::from_mask(3, m).unwrap().key(), m as f64 * 0.5)).collect();
        let g = Game::from_keyed(3, entries.clone()).unwrap();
        for c in Coalition::grand(3).subsets() {
            let expected = if c.is_empty() { 0.0 } else { c.mask() as f64 * 0.5 };
            assert_eq!(g.value(c).unwrap(), expected);
        }
        assert_eq!(g.to_keyed().unwrap().len(), 7);
    }

    #[test]
    fn malformed_keys_are_rejected() {
        for key in ["0", "3", "2,1", "1,1", "a", "1,,2"] {
            let err = Game::<f64>::from_keyed(2, [(key, 1.0)]).unwrap_err();
            assert!(matches!(err, Error::InvalidCoalitionKey { .. }), "{key}: {err}");
        }
        let err = Game::<f64>::from_keyed(2, [("", 1.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidCoalitionKey { .. }));
    }

    #[test]
    fn missing_coalition_errors_on_lookup() {
        let g = Game::<f64>::from_keyed(2, [("1", 0.5)]).unwrap();
        assert!(matches!(g.value_of(&[1]), Err(Error::MissingCoalition(k)) if k == "2"));
        assert!(g.dense().is_err());
    }

    #[test]
    fn key_encoding_is_one_based_and_sorted() {
        let c = Coalition::from_members(5, &[4, 0, 2]).unwrap();
        assert_eq!(c.key(), "1,3,5");
        assert_eq!(Coalition::parse_key(5, "1,3,5").unwrap(), c);
        assert_eq!(Coalition::empty(5).key(), "");
        assert_eq!(c.members().collect::<Vec<_>>(), vec![0, 2, 4]);
        assert_eq!(c.complement().key(), "2,4");
    }

    #[test]
    fn submask_enumeration_is_complete() {
        let c = Coalition::from_mask(6, 0b101101).unwrap();
        let subs: Vec<_> = c.subsets().collect();
        assert_eq!(subs.len(), 16);
        assert!(subs.iter().all(|s| s.is_subset_of(&c)));
    }

    #[test]
    fn two_party_game_satisfies_axioms() {
        let r = check_axioms(&two_party_game(), 1e-9).unwrap();
        assert!(r.all_hold(), "{r:?}");
    }

    #[test]
    fn subadditive_game_has_witness() {
        let g = Game::from_keyed(2, [("1", 0.6), ("2", 0.6), ("1,2", 1.0)]).unwrap();
        let r = check_axioms(&g, 1e-9).unwrap();
        assert!(r.nonnegative && r.monotone && !r.superadditive);
        let (b, c) = r.superadditive_witness.unwrap();
        assert_eq!((b.key(), c.key()), ("1".to_string(), "2".to_string()));
    }

    #[test]
    fn negative_and_nonmonotone_witnesses() {
        let g = Game::from_keyed(2, [("1", -0.1), ("2", 0.5), ("1,2", 0.3)]).unwrap();
        let r = check_axioms(&g, 1e-9).unwrap();
        assert_eq!(r.nonnegative_witness.unwrap().key(), "1");
        let (b, c) = r.monotone_witness.unwrap();
        assert!(b.is_subset_of(&c));
        assert!(g.value(c).unwrap() < g.value(b).unwrap());
    }

    #[test]
    fn axiom_check_refuses_large_games() {
        let g = Game::<f64>::from_fn(25, |c| Ok(c.len() as f64));
        assert!(matches!(check_axioms(&g, 1e-9), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn random_games_are_deterministic_and_scalar_independent() {
        let a = random_superadditive_game::<f64>(4, 11).dense().unwrap();
        let b = random_superadditive_game::<f64>(4, 11).dense().unwrap();
        assert_eq!(a, b);
        let q = random_superadditive_game::<BigRational>(4, 11).dense().unwrap();
        let back: Vec<f64> = q.iter().map(|x| x.to_f64_lossy()).collect();
        assert_eq!(a, back);
        let one = random_superadditive_game::<f64>(1, 3);
        assert!(one.singleton_value(0).unwrap() >= 0.0);
    }

    #[test]
    fn random_generators_pass_their_axioms() {
        for seed in 0..40 {
            let n = 1 + (seed as usize % 7);
            let g = random_superadditive_game::<f64>(n, seed);
            assert!(check_axioms(&g, 1e-12).unwrap().all_hold());
            let h = random_superadditive_cover_game::<f64>(n, seed);
            assert!(check_axioms(&h, 1e-12).unwrap().all_hold());
        }
        let g = random_superadditive_game::<f64>(3, 7);
        assert!(check_axioms(&g, 1e-9).unwrap().all_hold());
    }

    #[test]
    fn oracle_game_memoizes() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let calls = Arc::new(AtomicUsize::new(0));
        let counter = calls.clone();
        let g = Game::from_fn(3, move |c| {
            counter.fetch_add(1, Ordering::SeqCst);
            Ok(c.len() as f64)
        });
        for _ in 0..3 {
            assert_eq!(g.value_of(&[0, 2]).unwrap(), 2.0);
        }
        assert_eq!(g.value_of(&[]).unwrap(), 0.0);
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn time_vector_normalizes() {
        let t = TimeVector::new(vec![5, 3, 9]).unwrap();
        assert_eq!(t.as_slice(), &[2, 0, 6]);
        assert_eq!(t.horizon(), 6);
        assert_eq!(t.joined_by(2).key(), "1,2");
        assert!(TimeVector::new(vec![]).is_err());
        assert_eq!(TimeVector::parse("4, 0").unwrap().as_slice(), &[4, 0]);
    }

    #[test]
    fn game_file_round_trip() {
        let text = r#"{"n":2,"values":{"1":0.2,"2":0.2,"1,2":1.0},"times":[4,0]}"#;
        let file: GameFile = serde_json::from_str(text).unwrap();
        let g: Game<f64> = file.to_game().unwrap();
        assert_eq!(g.grand_value().unwrap(), 1.0);
        assert_eq!(file.time_vector().unwrap().unwrap().as_slice(), &[4, 0]);
        let again = GameFile::from_game(&g, file.time_vector().unwrap().as_ref()).unwrap();
        assert_eq!(again.values, file.values);
    }
}
