//! Valuation functions: Gaussian-process information gain, its conditional
//! form, and the dual of a set function.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{ensure_enumerable, Coalition, Game, ENUMERATION_CEILING};
use crate::linalg::Cholesky;
use crate::scalar::{RealScalar, Scalar};
use crate::synthdata::{Dataset, PredictiveDistribution};

/// Squared-exponential kernel with one lengthscale per input dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SeKernel<F> {
    lengthscales: Vec<F>,
    signal_variance: F,
}

impl<F: RealScalar> SeKernel<F> {
    pub fn new(lengthscales: Vec<F>, signal_variance: F) -> Result<Self> {
        if lengthscales.is_empty() || lengthscales.iter().any(|l| !(*l > F::zero()) || !l.is_finite()) {
            return Err(Error::InvalidInput("lengthscales must be finite and positive".into()));
        }
        if !(signal_variance > F::zero()) || !signal_variance.is_finite() {
            return Err(Error::InvalidInput("signal variance must be finite and positive".into()));
        }
        Ok(SeKernel { lengthscales, signal_variance })
    }

    pub fn dims(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn signal_variance(&self) -> F {
        self.signal_variance
    }

    pub fn eval(&self, x: &[F], y: &[F]) -> F {
        let mut sq = F::zero();
        for ((a, b), l) in x.iter().zip(y).zip(&self.lengthscales) {
            let d = (*a - *b) / *l;
            sq = sq + d * d;
        }
        self.signal_variance * (-(sq / F::lit(2.0))).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NoiseModel<F> {
    Homoscedastic(F),
    /// One noise variance per point.
    Heteroscedastic(Vec<F>),
}

/// A GP regression model over points owned by parties.
#[derive(Clone, Debug)]
pub struct GpModel<F> {
    kernel: SeKernel<F>,
    noise: NoiseModel<F>,
    inputs: Vec<Vec<F>>,
    owners: Vec<usize>,
    parties: usize,
    targets: Option<Vec<F>>,
}

impl<F: RealScalar> GpModel<F> {
    /// `owners[p]` is the 0-based party owning point `p`.
    pub fn new(
        kernel: SeKernel<F>,
        noise: NoiseModel<F>,
        inputs: Vec<Vec<F>>,
        owners: Vec<usize>,
        parties: usize,
    ) -> Result<Self> {
        if inputs.len() != owners.len() {
            return Err(Error::LengthMismatch { left: inputs.len(), right: owners.len() });
        }
        if let Some(row) = inputs.iter().find(|r| r.len() != kernel.dims()) {
            return Err(Error::LengthMismatch { left: row.len(), right: kernel.dims() });
        }
        if let Some(&bad) = owners.iter().find(|&&o| o >= parties) {
            return Err(Error::InvalidInput(format!("point owner {bad} outside 0..{parties}")));
        }
        match &noise {
            NoiseModel::Homoscedastic(s) if !(*s > F::zero()) => {
                return Err(Error::InvalidInput("noise variance must be positive".into()))
            }
            NoiseModel::Heteroscedastic(v) => {
                if v.len() != inputs.len() {
                    return Err(Error::LengthMismatch { left: v.len(), right: inputs.len() });
                }
                if v.iter().any(|s| !(*s > F::zero())) {
                    return Err(Error::InvalidInput("noise variances must be positive".into()));
                }
            }
            _ => {}
        }
        Ok(GpModel { kernel, noise, inputs, owners, parties, targets: None })
    }

    pub fn with_targets(mut self, targets: Vec<F>) -> Result<Self> {
        if targets.len() != self.inputs.len() {
            return Err(Error::LengthMismatch { left: targets.len(), right: self.inputs.len() });
        }
        self.targets = Some(targets);
        Ok(self)
    }

    pub fn kernel(&self) -> &SeKernel<F> {
        &self.kernel
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input(&self, point: usize) -> &[F] {
        &self.inputs[point]
    }

    pub fn owner(&self, point: usize) -> usize {
        self.owners[point]
    }

    pub fn targets(&self) -> Option<&[F]> {
        self.targets.as_deref()
    }

    pub fn noise_variance(&self, point: usize) -> F {
        match &self.noise {
            NoiseModel::Homoscedastic(s) => *s,
            NoiseModel::Heteroscedastic(v) => v[point],
        }
    }

    /// Points owned by members of `c`, in index order.
    pub fn points_of(&self, c: Coalition) -> Vec<usize> {
        (0..self.len()).filter(|&p| c.contains(self.owners[p])).collect()
    }
}

/// `½ log|I + K_noise^{-1} K|` for points with individual noise variances.
///
/// Evaluated through the symmetric matrix `I + D^{-1/2} K D^{-1/2}`, which
/// has the same determinant and stays well conditioned even when points
/// repeat.
pub fn information_gain<F: RealScalar>(kernel: &SeKernel<F>, inputs: &[&[F]], noise: &[F]) -> Result<F> {
    let m = inputs.len();
    if m != noise.len() {
        return Err(Error::LengthMismatch { left: m, right: noise.len() });
    }
    if m == 0 {
        return Ok(F::zero());
    }
    let scale: Vec<F> = noise.iter().map(|s| F::one() / s.sqrt()).collect();
    let mut b = vec![F::zero(); m * m];
    for i in 0..m {
        for j in 0..=i {
            let k = kernel.eval(inputs[i], inputs[j]) * scale[i] * scale[j];
            let entry = if i == j { F::one() + k } else { k };
            b[i * m + j] = entry;
            b[j * m + i] = entry;
        }
    }
    let chol = Cholesky::new(&b, m)?;
    Ok(chol.log_det() / F::lit(2.0))
}

/// Information gain of observing the given points of `model`.
pub fn gp_ig<F: RealScalar>(model: &GpModel<F>, points: &[usize]) -> Result<F> {
    if let Some(&bad) = points.iter().find(|&&p| p >= model.len()) {
        return Err(Error::InvalidInput(format!("point index {bad} out of range")));
    }
    let inputs: Vec<&[F]> = points.iter().map(|&p| model.input(p)).collect();
    let noise: Vec<F> = points.iter().map(|&p| model.noise_variance(p)).collect();
    information_gain(model.kernel(), &inputs, &noise)
}

/// GP posterior predictive at `test` points after observing `targets` at
/// `inputs` with per-point noise. `test_noise` is added to each predictive
/// variance so the distribution is over noisy observations.
pub fn gp_predict<F: RealScalar>(
    kernel: &SeKernel<F>,
    inputs: &[&[F]],
    noise: &[F],
    targets: &[F],
    test: &[&[F]],
    test_noise: F,
) -> Result<PredictiveDistribution<F>> {
    let m = inputs.len();
    if noise.len() != m {
        return Err(Error::LengthMismatch { left: noise.len(), right: m });
    }
    if targets.len() != m {
        return Err(Error::LengthMismatch { left: targets.len(), right: m });
    }
    let prior = kernel.signal_variance() + test_noise;
    if m == 0 {
        return PredictiveDistribution::new(vec![F::zero(); test.len()], vec![prior; test.len()]);
    }
    let mut a = vec![F::zero(); m * m];
    for i in 0..m {
        for j in 0..=i {
            let k = kernel.eval(inputs[i], inputs[j]);
            a[i * m + j] = k;
            a[j * m + i] = k;
        }
        a[i * m + i] = a[i * m + i] + noise[i];
    }
    let chol = Cholesky::new(&a, m)?;
    let alpha = chol.solve(targets);
    let mut mean = Vec::with_capacity(test.len());
    let mut variance = Vec::with_capacity(test.len());
    for x in test {
        let kx: Vec<F> = inputs.iter().map(|p| kernel.eval(p, x)).collect();
        mean.push(kx.iter().zip(&alpha).fold(F::zero(), |acc, (&k, &al)| acc + k * al));
        let v = chol.solve_lower(&kx);
        let explained = v.iter().fold(F::zero(), |acc, &x| acc + x * x);
        let floor = F::lit(1e-12) * prior;
        variance.push((prior - explained).max(floor));
    }
    PredictiveDistribution::new(mean, variance)
}

/// `C ↦ I(θ; D_C)`: plain information gain, monotone and submodular.
pub fn ig_game<F: RealScalar>(model: &GpModel<F>) -> Game<F> {
    let model = Arc::new(model.clone());
    Game::from_fn(model.parties(), move |c| gp_ig(&model, &model.points_of(c)))
}

/// `C ↦ I(θ; D_C | D_{−C}) = I(θ; D_N) − I(θ; D_{N∖C})`.
pub fn conditional_ig_game<F: RealScalar>(model: &GpModel<F>) -> Result<Game<F>> {
    let model = Arc::new(model.clone());
    let everyone: Vec<usize> = (0..model.len()).collect();
    let total = gp_ig(&model, &everyone)?;
    Ok(Game::from_fn(model.parties(), move |c| {
        let rest = model.points_of(c.complement());
        Ok(total - gp_ig(&model, &rest)?)
    })
    .declare_superadditive(true))
}

/// Dual game `v(C) = v'(N) − v'(N∖C)`.
pub fn dual_game<S: Scalar>(base: &Game<S>) -> Result<Game<S>> {
    ensure_enumerable("dual game", base.n(), ENUMERATION_CEILING)?;
    let grand = base.grand_value()?;
    Game::tabulate(base.n(), |c| Ok(grand.clone() - base.value(c.complement())?))
}

/// Noise setting of a GP configuration file: one shared variance or one per point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSpec {
    Shared(f64),
    PerPoint(Vec<f64>),
}

/// GP hyperparameters as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: NoiseSpec,
}

impl GpConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Model over the party-owned points of `data`; unowned points are
    /// dropped. Per-point noise refers to rows of the full dataset.
    pub fn build_model(&self, data: &Dataset) -> Result<GpModel<f64>> {
        let kernel = SeKernel::new(self.lengthscales.clone(), self.signal_variance)?;
        let owned: Vec<usize> = (0..data.len()).filter(|&r| data.party[r].is_some()).collect();
        let noise = match &self.noise_variance {
            NoiseSpec::Shared(s) => NoiseModel::Homoscedastic(*s),
            NoiseSpec::PerPoint(v) => {
                if v.len() != data.len() {
                    return Err(Error::LengthMismatch { left: v.len(), right: data.len() });
                }
                NoiseModel::Heteroscedastic(owned.iter().map(|&r| v[r]).collect())
            }
        };
        let parties = data.parties();
        GpModel::new(
            kernel,
            noise,
            owned.iter().map(|&r| data.features[r].clone()).collect(),
            owned.iter().map(|&r| data.party[r].expect("owned")).collect(),
            parties,
        )?
        .with_targets(owned.iter().map(|&r| data.targets[r]).collect())
    }
}
