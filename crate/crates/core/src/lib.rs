//! Fair, time-aware rewards for parties that contribute data to a shared
//! model at different times.
//!
//! A collaboration is a cooperative [`Game`]: every coalition of parties has
//! a value. Rewards come from two time-aware schemes built on the Shapley
//! value, [`reward_cumulation`] and [`reward_time_valuation`], and
//! [`incentives::check_all`] verifies the fairness incentives F1–F8 on any
//! reward rule by enumeration.
//!
//! Everything numeric is generic over [`Scalar`], so the same code runs in
//! `f64`, `f32` or exact rationals ([`Rational`]).

pub mod error;
pub mod experiment;
pub mod game;
pub mod incentives;
pub mod linalg;
pub mod realization;
pub mod report;
pub mod scalar;
pub mod shapley;
pub mod synthdata;
pub mod time_rewards;
pub mod valuation;

pub use error::{Error, Result};
pub use game::{
    check_axioms, random_coverage_game, random_superadditive_cover_game, random_superadditive_game, AxiomReport,
    Coalition, Game, GameFile, RewardVector, TimeVector, DEFAULT_TOL, ENUMERATION_CEILING, MAX_PARTIES,
};
pub use incentives::{check_all, Incentive, IncentiveReport, Verdict};
pub use realization::{select_subset, temper, SubsetReward, SubsetValuation, TemperedReward};
pub use scalar::{RealScalar, Scalar};
pub use shapley::{naive_time_division, shapley_exact, shapley_mc, Method, ShapleyResult};
pub use time_rewards::{
    reward_cumulation, reward_time_valuation, scale_rewards, Cumulation, NaiveDivision, PlainShapley, RewardScheme,
    ScaledRewards, TimeValuation,
};
pub use valuation::{conditional_ig_game, dual_game, gp_ig, ig_game, GpConfig, GpModel, NoiseModel, SeKernel};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

pub type Game64 = Game<f64>;
pub type Game32 = Game<f32>;
pub type GameQ = Game<Rational>;
pub type Rewards64 = RewardVector<f64>;
pub type RewardsQ = RewardVector<Rational>;
pub type GpModel64 = GpModel<f64>;
