//! Deterministic voting model: a voter upvotes a comment iff the dot product
//! of their opinion vectors is non-negative.
//!
//! Feasibility of a vote matrix in dimension `r` asks for `C`, `V` with
//! `s_ij <c_i, v_j> > 0` on every observed entry. Exact answers come from the
//! rank-one test (`r = 1`) or from an external SMT solver; the internal
//! search and the planar grid oracle can only confirm feasibility.

mod brute;
mod search;
mod smt;

pub use brute::{
    brute_force_sign_rank, planar_grid_witness, BruteForceResult, Certainty, DEFAULT_GRID,
};
pub use search::{search_witness, search_witness_from, SearchBudget};
pub use smt::{
    emit_smt_constraints, parse_smt_model, parse_solver_output, ExternalSolver, SolverVerdict,
};

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rank_one::is_rank_one;
use crate::sign_matrix::{Direction, PartialSignMatrix};

/// Up iff `<c, v> >= 0`.
pub fn predict_deterministic(c: &[f64], v: &[f64]) -> Result<Direction> {
    if c.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            actual: v.len(),
        });
    }
    let dot: f64 = c.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok(if dot >= 0.0 {
        Direction::Up
    } else {
        Direction::Down
    })
}

/// Comment and voter opinions that reproduce every observed vote strictly.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub c: Array2<f64>,
    pub v: Array2<f64>,
}

impl Witness {
    pub fn r(&self) -> usize {
        self.c.ncols()
    }

    /// Checks shapes and `s_ij <c_i, v_j> > 0` for every observed entry.
    pub fn validate(&self, m: &PartialSignMatrix) -> Result<()> {
        if self.c.nrows() != m.n_comments() {
            return Err(Error::DimensionMismatch {
                expected: m.n_comments(),
                actual: self.c.nrows(),
            });
        }
        if self.v.nrows() != m.n_voters() {
            return Err(Error::DimensionMismatch {
                expected: m.n_voters(),
                actual: self.v.nrows(),
            });
        }
        if self.v.ncols() != self.c.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.c.ncols(),
                actual: self.v.ncols(),
            });
        }
        for (i, j, s) in m.entries() {
            let dot = self.c.row(i).dot(&self.v.row(j));
            let margin = s.as_f64() * dot;
            if margin.is_nan() || margin <= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "entry ({i}, {j}) has sign {} but <c_i, v_j> = {dot}",
                    s.as_i8()
                )));
            }
        }
        Ok(())
    }

    pub fn is_valid_for(&self, m: &PartialSignMatrix) -> bool {
        self.validate(m).is_ok()
    }

    pub fn predict(&self, i: usize, j: usize) -> Direction {
        let dot = dot(self.c.row(i), self.v.row(j));
        if dot >= 0.0 {
            Direction::Up
        } else {
            Direction::Down
        }
    }
}

fn dot(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.dot(&b)
}

pub(crate) fn rows_of(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub(crate) fn from_rows(rows: &[Vec<f64>], n_cols_if_empty: usize) -> Result<Array2<f64>> {
    let n_cols = rows.first().map_or(n_cols_if_empty, Vec::len);
    let mut flat = Vec::with_capacity(rows.len() * n_cols);
    for row in rows {
        if row.len() != n_cols {
            return Err(Error::DimensionMismatch {
                expected: n_cols,
                actual: row.len(),
            });
        }
        flat.extend_from_slice(row);
    }
    Ok(Array2::from_shape_vec((rows.len(), n_cols), flat).expect("shape matches"))
}

#[derive(Serialize, Deserialize)]
struct WitnessDocument {
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    v: Vec<Vec<f64>>,
}

impl Serialize for Witness {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        WitnessDocument {
            c: rows_of(&self.c),
            v: rows_of(&self.v),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Witness {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let doc = WitnessDocument::deserialize(deserializer)?;
        let r = doc.c.first().or(doc.v.first()).map_or(0, Vec::len);
        let c = from_rows(&doc.c, r).map_err(serde::de::Error::custom)?;
        let v = from_rows(&doc.v, r).map_err(serde::de::Error::custom)?;
        Ok(Witness { c, v })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RankOne,
    WitnessSearch,
    ExternalSolver,
    BruteGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Feasible { witness: Witness },
    InfeasibleCertified,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityOutcome {
    #[serde(flatten)]
    pub status: Status,
    pub method: Method,
    pub r: usize,
}

impl FeasibilityOutcome {
    pub fn witness(&self) -> Option<&Witness> {
        match &self.status {
            Status::Feasible { witness } => Some(witness),
            _ => None,
        }
    }

    pub fn is_certified_infeasible(&self) -> bool {
        matches!(self.status, Status::InfeasibleCertified)
    }
}

#[derive(Debug, Clone, Default)]
pub struct FeasibilityConfig {
    pub budget: SearchBudget,
    pub seed: u64,
    pub solver: Option<ExternalSolver>,
}

/// Decides feasibility at dimension `r` with the strongest available method:
/// the external solver when configured, the rank-one test at `r = 1`, and
/// the witness search otherwise.
pub fn decide_feasibility(
    m: &PartialSignMatrix,
    r: usize,
    config: &FeasibilityConfig,
) -> Result<FeasibilityOutcome> {
    if r == 0 {
        return Err(Error::InvalidParams("dimension must be at least 1".into()));
    }
    if let Some(solver) = &config.solver {
        return solver.check(m, r);
    }
    if r == 1 {
        let status = match is_rank_one(m)? {
            Some(w) => Status::Feasible {
                witness: rank_one_to_witness(&w),
            },
            None => Status::InfeasibleCertified,
        };
        return Ok(FeasibilityOutcome {
            status,
            method: Method::RankOne,
            r,
        });
    }
    let status = match search_witness(m, r, &config.budget, config.seed) {
        Some(witness) => Status::Feasible { witness },
        None => Status::Unknown,
    };
    Ok(FeasibilityOutcome {
        status,
        method: Method::WitnessSearch,
        r,
    })
}

pub fn rank_one_to_witness(w: &crate::rank_one::RankOneWitness) -> Witness {
    let col = |signs: &[i8]| Array2::from_shape_fn((signs.len(), 1), |(i, _)| signs[i] as f64);
    Witness {
        c: col(&w.comment_signs),
        v: col(&w.voter_signs),
    }
}
