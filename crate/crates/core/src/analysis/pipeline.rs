use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::feasibility::{
    decide_feasibility, rank_one_to_witness, ExternalSolver, FeasibilityConfig, SearchBudget,
    Witness,
};
use crate::rank_one::is_rank_one;
use crate::sc_bound::{estimate_dimension_upper_bound, BoundConfig, BoundResult};
use crate::seeds::derive_seed;
use crate::sign_matrix::PartialSignMatrix;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub seed: u64,
    pub budget: SearchBudget,
    pub solver: Option<ExternalSolver>,
    /// Largest dimension tried with the feasibility stage.
    pub max_exact: usize,
    pub bound: BoundConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            budget: SearchBudget::default(),
            solver: None,
            max_exact: 3,
            bound: BoundConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DimensionMethod {
    ExactRankOne,
    FeasibilityWitness { r: usize },
    ScBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Artifact {
    Witness(Witness),
    Bound(BoundResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub discussion_id: String,
    pub r_estimate: usize,
    pub method: DimensionMethod,
    pub exact: bool,
    pub artifacts: Option<Artifact>,
}

/// Rank-one test, then feasibility at `2..=max_exact`, then the
/// sign-change bound. `m` should already be pruned.
///
/// A feasibility result is exact only when an external solver certified the
/// dimension below as infeasible.
pub fn dimension_pipeline(
    m: &PartialSignMatrix,
    discussion_id: &str,
    config: &PipelineConfig,
) -> Result<DimensionReport> {
    let report = |r_estimate, method, exact, artifacts| DimensionReport {
        discussion_id: discussion_id.to_string(),
        r_estimate,
        method,
        exact,
        artifacts,
    };

    if let Some(w) = is_rank_one(m)? {
        return Ok(report(
            1,
            DimensionMethod::ExactRankOne,
            true,
            Some(Artifact::Witness(rank_one_to_witness(&w))),
        ));
    }

    let feas = FeasibilityConfig {
        budget: config.budget,
        seed: derive_seed(config.seed, 10),
        solver: config.solver.clone(),
    };
    let mut below_certified = match &config.solver {
        Some(_) => decide_feasibility(m, 1, &feas)?.is_certified_infeasible(),
        None => false,
    };
    for r in 2..=config.max_exact {
        let feas = FeasibilityConfig {
            seed: derive_seed(config.seed, 10 + r as u64),
            ..feas.clone()
        };
        let outcome = decide_feasibility(m, r, &feas)?;
        if let Some(w) = outcome.witness() {
            return Ok(report(
                r,
                DimensionMethod::FeasibilityWitness { r },
                below_certified,
                Some(Artifact::Witness(w.clone())),
            ));
        }
        below_certified = outcome.is_certified_infeasible();
    }

    let bound_cfg = BoundConfig {
        seed: derive_seed(config.seed, 20),
        ..config.bound.clone()
    };
    let bound = estimate_dimension_upper_bound(m, &bound_cfg)?;
    Ok(report(
        bound.r_hat,
        DimensionMethod::ScBound,
        false,
        Some(Artifact::Bound(bound)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sc_bound::tests::identity_family;
    use crate::sign_matrix::tests::second_pattern;

    #[test]
    fn all_plus_is_rank_one() {
        let m = PartialSignMatrix::from_dense(&[&[1, 1, 1], &[1, 1, 1]]);
        let r = dimension_pipeline(&m, "d", &PipelineConfig::default()).unwrap();
        assert_eq!(r.r_estimate, 1);
        assert_eq!(r.method, DimensionMethod::ExactRankOne);
        assert!(r.exact);
    }

    #[test]
    fn second_voting_pattern_needs_two() {
        let m = second_pattern();
        let r = dimension_pipeline(&m, "pattern", &PipelineConfig::default()).unwrap();
        assert_eq!(r.r_estimate, 2);
        assert_eq!(r.method, DimensionMethod::FeasibilityWitness { r: 2 });
        assert!(!r.exact);
        match r.artifacts {
            Some(Artifact::Witness(w)) => w.validate(&m).unwrap(),
            other => panic!("unexpected artifact {other:?}"),
        }
    }

    #[test]
    fn identity_six_needs_three() {
        let r = dimension_pipeline(&identity_family(6), "b6", &PipelineConfig::default()).unwrap();
        assert_eq!(r.r_estimate, 3);
        assert_eq!(r.method, DimensionMethod::FeasibilityWitness { r: 3 });
    }

    #[test]
    fn falls_back_to_bound() {
        let cfg = PipelineConfig {
            max_exact: 1,
            ..PipelineConfig::default()
        };
        let r = dimension_pipeline(&identity_family(5), "b5", &cfg).unwrap();
        assert_eq!(
            (r.r_estimate, r.method, r.exact),
            (3, DimensionMethod::ScBound, false)
        );
    }

    #[test]
    fn solver_certifies_exactness() {
        let solver = ExternalSolver::z3();
        if !solver.is_available() {
            eprintln!("z3 not found, skipping");
            return;
        }
        let cfg = PipelineConfig {
            solver: Some(solver),
            ..PipelineConfig::default()
        };
        let r = dimension_pipeline(&second_pattern(), "pattern", &cfg).unwrap();
        assert_eq!((r.r_estimate, r.exact), (2, true));
    }

    #[test]
    fn json_shape() {
        let r = dimension_pipeline(&second_pattern(), "pattern", &PipelineConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["method"]["kind"], "feasibility_witness");
        assert_eq!(v["method"]["r"], 2);
        assert!(v["artifacts"]["witness"]["C"].is_array());
    }
}
