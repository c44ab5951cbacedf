//! Machine-readable report documents. Party indices on the wire are 1-based.

use serde::{Deserialize, Serialize};

use crate::game::{AxiomReport, TimeVector};
use crate::incentives::IncentiveReport;
use crate::realization::{SubsetReward, TemperedReward};
use crate::shapley::{Method, ShapleyResult};
use crate::time_rewards::ScaledRewards;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardReport {
    pub scheme: String,
    pub param: Option<f64>,
    pub times: Vec<u32>,
    pub rewards: Vec<f64>,
    pub scaled_rewards: Vec<f64>,
    pub rho: Option<f64>,
    #[serde(default)]
    pub degenerate: bool,
    pub incentive_report: IncentiveReport,
}

impl RewardReport {
    pub fn new(
        scheme: &str,
        param: Option<f64>,
        times: &TimeVector,
        scaled: &ScaledRewards<f64>,
        incentive_report: IncentiveReport,
    ) -> Self {
        RewardReport {
            scheme: scheme.to_string(),
            param,
            times: times.as_slice().to_vec(),
            rewards: scaled.rewards.rewards.clone(),
            scaled_rewards: scaled.rewards.scaled.clone().unwrap_or_else(|| scaled.rewards.rewards.clone()),
            rho: scaled.rho,
            degenerate: scaled.degenerate,
            incentive_report,
        }
    }

    pub fn passed(&self) -> bool {
        !self.incentive_report.any_failed()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapleyReport {
    pub method: Method,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<Vec<f64>>,
}

impl ShapleyReport {
    pub fn new(result: &ShapleyResult<f64>, seed: Option<u64>) -> Self {
        ShapleyReport {
            method: result.method,
            values: result.values.clone(),
            permutations: result.permutations_used,
            seed: result.permutations_used.and(seed),
            std_error: result.std_error.clone(),
        }
    }
}

/// Output of the `check` command: axioms of the game and incentives of a
/// scheme's rewards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub axioms: AxiomReport,
    pub rewards: RewardReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizedParty {
    pub party: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Selected point indices (0-based rows of the owned points), subset
    /// selection only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<Vec<usize>>,
    pub achieved: f64,
    pub target: f64,
    pub flags: Vec<String>,
}

impl From<&TemperedReward<f64>> for RealizedParty {
    fn from(t: &TemperedReward<f64>) -> Self {
        let mut flags = Vec::new();
        if t.kappa == 0.0 {
            flags.push("own_data_only".to_string());
        }
        if t.kappa == 1.0 {
            flags.push("all_data".to_string());
        }
        RealizedParty {
            party: t.party + 1,
            kappa: Some(t.kappa),
            selected: None,
            achieved: t.achieved_value,
            target: t.target_value,
            flags,
        }
    }
}

impl From<&SubsetReward<f64>> for RealizedParty {
    fn from(s: &SubsetReward<f64>) -> Self {
        let mut flags = Vec::new();
        if s.saturated {
            flags.push("saturated".to_string());
        }
        RealizedParty {
            party: s.party + 1,
            kappa: None,
            selected: Some(s.selected.clone()),
            achieved: s.achieved_value,
            target: s.target_value,
            flags,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationReport {
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tol: f64,
    pub parties: Vec<RealizedParty>,
}
