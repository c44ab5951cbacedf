//! Friedman synthetic data, party partitioning, standardization and MNLP.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::RealScalar;

/// Number of Friedman input features.
pub const FRIEDMAN_FEATURES: usize = 6;

/// Points drawn before the 80/20 split when no size is given.
pub const DEFAULT_FRIEDMAN_COUNT: usize = 1000;

/// Per-party training set sizes used by the Friedman experiment.
pub const DEFAULT_PARTY_SIZES: [usize; 3] = [300, 300, 200];

/// Rows of features with a target and an optional owning party.
///
/// Parties are 0-based here. On disk the `party` column is 1-based with `0`
/// marking a row nobody owns.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub party: Vec<Option<usize>>,
    /// Number of parties, including any that own no rows.
    pub parties: usize,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(Error::LengthMismatch { left: features.len(), right: targets.len() });
        }
        if let Some(w) = features.first().map(Vec::len) {
            if let Some(row) = features.iter().find(|r| r.len() != w) {
                return Err(Error::LengthMismatch { left: row.len(), right: w });
            }
        }
        let party = vec![None; targets.len()];
        Ok(Dataset { features, targets, party, parties: 0 })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    /// Row indices owned by `party`.
    pub fn rows_of(&self, party: usize) -> Vec<usize> {
        (0..self.len()).filter(|&r| self.party[r] == Some(party)).collect()
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: rows.iter().map(|&r| self.features[r].clone()).collect(),
            targets: rows.iter().map(|&r| self.targets[r]).collect(),
            party: rows.iter().map(|&r| self.party[r]).collect(),
            parties: self.parties,
        }
    }

    /// Writes `x1..xd,y,party` with full round-trip precision.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.dims()).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        header.push("party".into());
        w.write_record(&header)?;
        for r in 0..self.len() {
            let mut rec: Vec<String> = self.features[r].iter().map(|x| x.to_string()).collect();
            rec.push(self.targets[r].to_string());
            rec.push(self.party[r].map_or(0, |p| p + 1).to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a CSV with a header. The last column named `party` (if present)
    /// holds owners, the column before it is the target and the rest are
    /// features. Without a `party` column the last column is the target.
    pub fn read_csv<R: Read>(input: R) -> Result<Dataset> {
        let mut rd = csv::Reader::from_reader(input);
        let headers = rd.headers()?.clone();
        let has_party = headers.iter().last().is_some_and(|h| h.trim().eq_ignore_ascii_case("party"));
        let width = headers.len();
        let target_col = if has_party { width.checked_sub(2) } else { width.checked_sub(1) }
            .ok_or_else(|| Error::InvalidInput("dataset needs at least a target column".into()))?;
        let mut features = Vec::new();
        let mut targets = Vec::new();
        let mut party = Vec::new();
        let mut parties = 0;
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            let num = |j: usize| -> Result<f64> {
                rec[j].trim().parse::<f64>().map_err(|e| {
                    Error::InvalidInput(format!("row {}: column {} is not a number: {e}", line + 1, headers[j].trim()))
                })
            };
            features.push((0..target_col).map(num).collect::<Result<Vec<_>>>()?);
            targets.push(num(target_col)?);
            if has_party {
                let p: usize = rec[width - 1].trim().parse().map_err(|e| {
                    Error::InvalidInput(format!("row {}: party must be a non-negative integer: {e}", line + 1))
                })?;
                parties = parties.max(p);
                party.push(p.checked_sub(1));
            } else {
                party.push(None);
            }
        }
        Ok(Dataset { features, targets, party, parties })
    }
}

/// Noiseless Friedman response on the first five features.
pub fn friedman_target(x: &[f64]) -> f64 {
    10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4] + 0.0 * x[5]
}

/// `count` points with six uniform features and Gaussian noise of the given
/// standard deviation added to the Friedman response.
pub fn gen_friedman(count: usize, noise_std: f64, seed: u64) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::InvalidInput("count must be at least 1".into()));
    }
    let noise = Normal::new(0.0, noise_std.max(0.0))
        .map_err(|e| Error::InvalidInput(format!("noise std {noise_std}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(count);
    let mut targets = Vec::with_capacity(count);
    for _ in 0..count {
        let x: Vec<f64> = (0..FRIEDMAN_FEATURES).map(|_| rng.gen::<f64>()).collect();
        let eps = if noise_std > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        targets.push(friedman_target(&x) + eps);
        features.push(x);
    }
    Dataset::new(features, targets)
}

/// Randomly splits rows into `(train, test)` with `test_fraction` of them
/// (rounded) in the test set.
pub fn train_test_split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidInput(format!("test fraction {test_fraction} outside [0, 1)")));
    }
    let mut rows: Vec<usize> = (0..data.len()).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (data.len() as f64 * test_fraction).round() as usize;
    let (test, train) = rows.split_at(n_test);
    Ok((data.subset(train), data.subset(test)))
}

/// Assigns disjoint random rows to parties, `sizes[i]` rows to party `i`.
/// Rows left over stay unowned.
pub fn partition(data: &Dataset, sizes: &[usize], seed: u64) -> Result<Dataset> {
    let requested: usize = sizes.iter().sum();
    if requested > data.len() {
        return Err(Error::SizesExceedData { requested, available: data.len() });
    }
    let mut rows: Vec<usize> = (0..data.len()).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = data.clone();
    out.party = vec![None; data.len()];
    out.parties = sizes.len();
    let mut next = rows.into_iter();
    for (p, &size) in sizes.iter().enumerate() {
        for r in next.by_ref().take(size) {
            out.party[r] = Some(p);
        }
    }
    Ok(out)
}

/// Affine map to zero mean and unit population variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: f64,
    pub std: f64,
}

impl Standardizer {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::ZeroVariance);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if !(var > 0.0) {
            return Err(Error::ZeroVariance);
        }
        Ok(Standardizer { mean, std: var.sqrt() })
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| (v - self.mean) / self.std).collect()
    }

    pub fn invert(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| v * self.std + self.mean).collect()
    }
}

/// Standardized copy of `targets` together with the fitted transform.
pub fn standardize(targets: &[f64]) -> Result<(Vec<f64>, Standardizer)> {
    let s = Standardizer::fit(targets)?;
    Ok((s.apply(targets), s))
}

/// Gaussian predictive mean and variance per test point.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveDistribution<F> {
    pub mean: Vec<F>,
    pub variance: Vec<F>,
}

impl<F: RealScalar> PredictiveDistribution<F> {
    pub fn new(mean: Vec<F>, variance: Vec<F>) -> Result<Self> {
        if mean.len() != variance.len() {
            return Err(Error::LengthMismatch { left: mean.len(), right: variance.len() });
        }
        if variance.iter().any(|v| !(*v > F::zero())) {
            return Err(Error::InvalidInput("predictive variances must be positive".into()));
        }
        Ok(PredictiveDistribution { mean, variance })
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Mean negative log predictive probability; lower is better.
pub fn mnlp<F: RealScalar>(pred: &PredictiveDistribution<F>, truths: &[F]) -> Result<F> {
    if pred.len() != truths.len() {
        return Err(Error::LengthMismatch { left: pred.len(), right: truths.len() });
    }
    if truths.is_empty() {
        return Err(Error::InvalidInput("MNLP needs at least one test point".into()));
    }
    let two_pi = F::lit(2.0 * PI);
    let half = F::lit(0.5);
    let total = pred.mean.iter().zip(&pred.variance).zip(truths).fold(F::zero(), |acc, ((&mu, &var), &y)| {
        acc + half * ((two_pi * var).ln() + (mu - y) * (mu - y) / var)
    });
    Ok(total / F::count(truths.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn friedman_formula_examples() {
        let y = friedman_target(&[0.5; 6]);
        assert!((y - (10.0 * (PI / 4.0).sin() + 5.0 + 2.5)).abs() < 1e-12);
        assert!((y - 14.5711).abs() < 1e-4);
        assert_eq!(friedman_target(&[0.0, 0.7, 0.5, 0.0, 0.0, 0.3]), 0.0);
        let mut x = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let before = friedman_target(&x);
        x[5] = 0.99;
        assert_eq!(friedman_target(&x), before);
    }

    #[test]
    fn generator_is_seeded_and_noiseless_matches_formula() {
        let a = gen_friedman(50, 1.0, 7).unwrap();
        assert_eq!(a, gen_friedman(50, 1.0, 7).unwrap());
        assert_ne!(a, gen_friedman(50, 1.0, 8).unwrap());
        let clean = gen_friedman(50, 0.0, 7).unwrap();
        for (x, y) in clean.features.iter().zip(&clean.targets) {
            assert!(x.iter().all(|v| (0.0..1.0).contains(v)));
            assert_eq!(*y, friedman_target(x));
        }
        assert!(gen_friedman(0, 1.0, 1).is_err());
    }

    #[test]
    fn partition_is_disjoint_and_sized() {
        let d = gen_friedman(1000, 1.0, 1).unwrap();
        let p = partition(&d, &[300, 300, 200], 4).unwrap();
        assert_eq!(p.rows_of(0).len(), 300);
        assert_eq!(p.rows_of(1).len(), 300);
        assert_eq!(p.rows_of(2).len(), 200);
        assert_eq!(p.party.iter().filter(|o| o.is_none()).count(), 200);
        assert_eq!(p, partition(&d, &[300, 300, 200], 4).unwrap());
        let all = partition(&d, &[1000], 4).unwrap();
        assert!(all.party.iter().all(|o| *o == Some(0)));
        assert!(matches!(
            partition(&d, &[600, 500], 0),
            Err(Error::SizesExceedData { requested: 1100, available: 1000 })
        ));
    }

    #[test]
    fn split_is_eighty_twenty() {
        let d = gen_friedman(1000, 1.0, 1).unwrap();
        let (train, test) = train_test_split(&d, 0.2, 3).unwrap();
        assert_eq!((train.len(), test.len()), (800, 200));
    }

    #[test]
    fn standardize_examples() {
        let (z, s) = standardize(&[0.0, 2.0]).unwrap();
        assert_eq!(z, vec![-1.0, 1.0]);
        assert_eq!((s.mean, s.std), (1.0, 1.0));
        assert!(matches!(standardize(&[3.0, 3.0, 3.0]), Err(Error::ZeroVariance)));
        let v = [1.5, -2.0, 7.25, 0.0];
        let (z, s) = standardize(&v).unwrap();
        let mean: f64 = z.iter().sum::<f64>() / 4.0;
        let var: f64 = z.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-9 && (var - 1.0).abs() < 1e-9);
        for (a, b) in s.invert(&z).iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mnlp_examples() {
        let p = PredictiveDistribution::new(vec![1.0], vec![1.0 / (2.0 * PI)]).unwrap();
        assert!(mnlp(&p, &[1.0]).unwrap().abs() < 1e-15);
        let p = PredictiveDistribution::new(vec![1.0f64], vec![1.0]).unwrap();
        assert!((mnlp(&p, &[1.0]).unwrap() - 0.918939).abs() < 1e-6);
        let wide = PredictiveDistribution::new(vec![1.0], vec![2.0]).unwrap();
        assert!(mnlp(&wide, &[1.0]).unwrap() > mnlp(&p, &[1.0]).unwrap());
        assert!(matches!(mnlp(&p, &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
        assert!(PredictiveDistribution::new(vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = partition(&gen_friedman(20, 1.0, 2).unwrap(), &[5, 5, 3], 9).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, d);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x1,x2,x3,x4,x5,x6,y,party\n"));
    }
}
