//! The Friedman sweep: three GP parties, party 1's joining time varied while
//! the others join at 0, rewards under both time-aware schemes.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Game, TimeVector};
use crate::incentives::check_weak_efficiency;
use crate::realization::{temper, tempered_posterior};
use crate::shapley::shapley_exact;
use crate::synthdata::{
    gen_friedman, mnlp, partition, train_test_split, Standardizer, DEFAULT_FRIEDMAN_COUNT, DEFAULT_PARTY_SIZES,
};
use crate::time_rewards::{scale_with_shapley, Cumulation, RewardScheme, TimeValuation};
use crate::valuation::{conditional_ig_game, GpConfig, GpModel, NoiseSpec};

/// Hyperparameters used when none are supplied. Inputs live on `[0, 1]`
/// and targets are standardized; the sixth feature is irrelevant, hence the
/// long lengthscale.
pub fn default_friedman_gp() -> GpConfig {
    GpConfig {
        lengthscales: vec![0.4, 0.4, 0.4, 0.8, 0.8, 10.0],
        signal_variance: 1.0,
        noise_variance: NoiseSpec::Shared(0.05),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FriedmanConfig {
    pub count: usize,
    pub noise_std: f64,
    pub test_fraction: f64,
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub t1_grid: Vec<u32>,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub gp: GpConfig,
    /// Realize every reward by likelihood tempering and score it on the test set.
    pub mnlp: bool,
    pub tol: f64,
    pub realize_tol: f64,
}

impl Default for FriedmanConfig {
    fn default() -> Self {
        FriedmanConfig {
            count: DEFAULT_FRIEDMAN_COUNT,
            noise_std: 1.0,
            test_fraction: 0.2,
            sizes: DEFAULT_PARTY_SIZES.to_vec(),
            seed: 0,
            t1_grid: (0..=6).collect(),
            betas: vec![0.7, 1.0, 2.0, 1000.0],
            gammas: vec![0.0, 0.5, 1.0],
            gp: default_friedman_gp(),
            mnlp: false,
            tol: 1e-9,
            realize_tol: 1e-6,
        }
    }
}

/// One tidy output row per (scheme, parameter, t₁, party).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub scheme: String,
    pub param: f64,
    pub t1: u32,
    pub party: usize,
    pub reward: f64,
    pub scaled_reward: f64,
    pub own_value: f64,
    pub kappa: Option<f64>,
    pub mnlp: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FriedmanReport {
    pub config: FriedmanConfig,
    pub own_values: Vec<f64>,
    pub grand_value: f64,
    pub shapley: Vec<f64>,
    pub rho: f64,
    pub checks: Vec<TrendCheck>,
    pub rows: Vec<ExperimentRow>,
}

impl FriedmanReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The GP game and its model for a configuration, plus the standardized
/// test set.
pub struct FriedmanSetup {
    pub model: GpModel<f64>,
    pub game: Game<f64>,
    pub test_inputs: Vec<Vec<f64>>,
    pub test_targets: Vec<f64>,
}

/// Seeds: the generator uses `seed`, the split `seed + 1` and the party
/// partition `seed + 2`.
pub fn friedman_setup(config: &FriedmanConfig) -> Result<FriedmanSetup> {
    let data = gen_friedman(config.count, config.noise_std, config.seed)?;
    let (mut train, mut test) = train_test_split(&data, config.test_fraction, config.seed.wrapping_add(1))?;
    let scaler = Standardizer::fit(&train.targets)?;
    train.targets = scaler.apply(&train.targets);
    test.targets = scaler.apply(&test.targets);
    let train = partition(&train, &config.sizes, config.seed.wrapping_add(2))?;
    let model = config.gp.build_model(&train)?;
    let game = conditional_ig_game(&model)?.materialize()?;
    Ok(FriedmanSetup { model, game, test_inputs: test.features, test_targets: test.targets })
}

fn shared_noise(gp: &GpConfig) -> f64 {
    match &gp.noise_variance {
        NoiseSpec::Shared(s) => *s,
        NoiseSpec::PerPoint(v) => v.iter().sum::<f64>() / v.len().max(1) as f64,
    }
}

fn times_for(n: usize, t1: u32) -> Result<TimeVector> {
    let mut t = vec![0; n];
    t[0] = t1;
    TimeVector::new(t)
}

pub fn run_friedman(config: &FriedmanConfig) -> Result<FriedmanReport> {
    if config.sizes.len() < 2 {
        return Err(Error::InvalidInput("the sweep needs at least two parties".into()));
    }
    let setup = friedman_setup(config)?;
    let game = &setup.game;
    let n = game.n();
    let tol = config.tol;
    let own = game.singleton_values()?;
    let grand = game.grand_value()?;
    let phi = shapley_exact(game)?.values;

    let mut schemes: Vec<Box<dyn RewardScheme<f64>>> = Vec::new();
    for &beta in &config.betas {
        schemes.push(Box::new(Cumulation { beta }));
    }
    for &gamma in &config.gammas {
        schemes.push(Box::new(TimeValuation { gamma }));
    }

    let mut rho = f64::NAN;
    let mut rows = Vec::new();
    let mut grid = config.t1_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    let mut checks = Vec::new();
    let mut ir_bad = Vec::new();
    let mut mono_bad = Vec::new();
    let mut desir_bad = Vec::new();
    let mut eff_bad = Vec::new();
    let high = (0..n).max_by(|&a, &b| own[a].total_cmp(&own[b])).expect("parties");
    let low = (0..n).min_by(|&a, &b| own[a].total_cmp(&own[b])).expect("parties");

    for scheme in &schemes {
        let param = scheme.param().unwrap_or(f64::NAN);
        let label = format!("{} {}", scheme.name(), param);

        let zero = TimeVector::zeros(n);
        let at_zero = scale_with_shapley(grand, &phi, scheme.rewards(game, &zero)?)?;
        rho = at_zero.rho.unwrap_or(f64::NAN);
        let scaled0 = at_zero.rewards.scaled.clone().expect("scaled");
        if !check_weak_efficiency(game, &zero, &scaled0, &tol)? {
            eff_bad.push(format!("{label}: max r* = {}", scaled0.iter().cloned().fold(f64::MIN, f64::max)));
        }
        if scaled0[low] > scaled0[high] + tol {
            desir_bad.push(format!("{label}: r{}* = {} > r{}* = {}", low + 1, scaled0[low], high + 1, scaled0[high]));
        }

        let mut prev_r1: Option<(u32, f64)> = None;
        for &t1 in &grid {
            let times = times_for(n, t1)?;
            let scaled = scale_with_shapley(grand, &phi, scheme.rewards(game, &times)?)?;
            let rs = scaled.rewards.rewards.clone();
            let ss = scaled.rewards.scaled.clone().expect("scaled");
            for i in 0..n {
                if ss[i] < own[i] - tol || rs[i] < own[i] - tol {
                    ir_bad.push(format!("{label}, t1 = {t1}: r{}* = {} < v{} = {}", i + 1, ss[i], i + 1, own[i]));
                }
                let (kappa, score) = if config.mnlp {
                    let target = ss[i].clamp(own[i], grand);
                    let k = temper(&setup.model, i, target, config.realize_tol)?.kappa;
                    let pred = tempered_posterior(
                        &setup.model,
                        i,
                        k,
                        &setup.test_inputs,
                        shared_noise(&config.gp),
                    )?;
                    (Some(k), Some(mnlp(&pred, &setup.test_targets)?))
                } else {
                    (None, None)
                };
                rows.push(ExperimentRow {
                    scheme: scheme.name().to_string(),
                    param,
                    t1,
                    party: i + 1,
                    reward: rs[i],
                    scaled_reward: ss[i],
                    own_value: own[i],
                    kappa,
                    mnlp: score,
                });
            }
            if let Some((pt, pr)) = prev_r1 {
                if ss[0] > pr + tol {
                    mono_bad.push(format!("{label}: r1* rises from {pr} at t1 = {pt} to {} at t1 = {t1}", ss[0]));
                }
            }
            prev_r1 = Some((t1, ss[0]));
        }
    }

    let mut push = |name: &str, bad: Vec<String>, ok_detail: String| {
        checks.push(TrendCheck {
            name: name.to_string(),
            passed: bad.is_empty(),
            detail: if bad.is_empty() { ok_detail } else { bad.join("; ") },
        })
    };
    push("individual_rationality", ir_bad, "r_i* >= v_i for every party, setting and t1".into());
    push("r1_non_increasing", mono_bad, "r1* never rises with t1".into());
    push(
        "equal_time_desirability",
        desir_bad,
        format!("at t = 0, r{}* <= r{}* in every setting", low + 1, high + 1),
    );
    push("weak_efficiency", eff_bad, format!("at t = 0, max r* = v(N) = {grand}"));

    Ok(FriedmanReport {
        config: config.clone(),
        own_values: own,
        grand_value: grand,
        shapley: phi,
        rho,
        checks,
        rows,
    })
}
