//! Planted-embedding discussion generator used as a ground-truth oracle.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::rows_of;
use crate::mle_embed::sigmoid;
use crate::seeds::derive_seed;
use crate::sign_matrix::{PartialSignMatrix, Sign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VotingModel {
    Deterministic,
    Probabilistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticParams {
    pub n_comments: usize,
    pub n_voters: usize,
    pub r_true: usize,
    pub model: VotingModel,
    pub observe_prob: f64,
    pub seed: u64,
    /// Shift added to the first coordinate of every opinion. Zero gives the
    /// sign-symmetric generator; positive values plant a shared consensus axis.
    pub consensus: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            n_comments: 20,
            n_voters: 30,
            r_true: 2,
            model: VotingModel::Deterministic,
            observe_prob: 0.5,
            seed: 0,
            consensus: 0.0,
        }
    }
}

impl SyntheticParams {
    fn validate(&self) -> Result<()> {
        if !(self.observe_prob > 0.0 && self.observe_prob <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "observe_prob {} not in (0, 1]",
                self.observe_prob
            )));
        }
        if self.r_true == 0 {
            return Err(Error::InvalidParams("r_true must be at least 1".into()));
        }
        if self.n_comments == 0 || self.n_voters == 0 {
            return Err(Error::InvalidParams(
                "need at least one comment and one voter".into(),
            ));
        }
        if !self.consensus.is_finite() {
            return Err(Error::InvalidParams("consensus must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticGroundTruth {
    pub c_true: Array2<f64>,
    pub v_true: Array2<f64>,
    pub r_true: usize,
    pub model: VotingModel,
    pub observe_prob: f64,
    pub seed: u64,
}

#[derive(Serialize)]
struct GroundTruthDocument<'a> {
    #[serde(rename = "C_true")]
    c_true: Vec<Vec<f64>>,
    #[serde(rename = "V_true")]
    v_true: Vec<Vec<f64>>,
    r_true: usize,
    model: &'a VotingModel,
    observe_prob: f64,
    seed: u64,
}

impl Serialize for SyntheticGroundTruth {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        GroundTruthDocument {
            c_true: rows_of(&self.c_true),
            v_true: rows_of(&self.v_true),
            r_true: self.r_true,
            model: &self.model,
            observe_prob: self.observe_prob,
            seed: self.seed,
        }
        .serialize(serializer)
    }
}

/// Samples opinions uniformly on `[-1, 1]^r` (plus the consensus shift) and
/// generates votes from them.
pub fn generate_synthetic(
    params: &SyntheticParams,
) -> Result<(PartialSignMatrix, SyntheticGroundTruth)> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, 0));
    let mut draw = |n: usize| {
        Array2::from_shape_fn((n, params.r_true), |(_, k)| {
            let x: f64 = rng.gen_range(-1.0..=1.0);
            if k == 0 {
                x + params.consensus
            } else {
                x
            }
        })
    };
    let c = draw(params.n_comments);
    let v = draw(params.n_voters);
    generate_from_embedding(c, v, params.model, params.observe_prob, params.seed)
}

/// Votes from a given planted embedding. Each entry is observed with
/// probability `observe_prob`; an all-unknown row or column has its mask
/// redrawn until it holds at least one vote.
pub fn generate_from_embedding(
    c: Array2<f64>,
    v: Array2<f64>,
    model: VotingModel,
    observe_prob: f64,
    seed: u64,
) -> Result<(PartialSignMatrix, SyntheticGroundTruth)> {
    if !(observe_prob > 0.0 && observe_prob <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "observe_prob {observe_prob} not in (0, 1]"
        )));
    }
    if c.ncols() != v.ncols() || c.ncols() == 0 {
        return Err(Error::InvalidParams(
            "comment and voter opinions need the same positive dimension".into(),
        ));
    }
    let (n, m) = (c.nrows(), v.nrows());
    if n == 0 || m == 0 {
        return Err(Error::InvalidParams(
            "need at least one comment and one voter".into(),
        ));
    }
    let mut mask_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut vote_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));

    let mut mask = vec![false; n * m];
    for cell in mask.iter_mut() {
        *cell = mask_rng.gen_bool(observe_prob);
    }
    for i in 0..n {
        while !(0..m).any(|j| mask[i * m + j]) {
            for j in 0..m {
                mask[i * m + j] = mask_rng.gen_bool(observe_prob);
            }
        }
    }
    for j in 0..m {
        // Only adds votes, so rows stay non-empty.
        while !(0..n).any(|i| mask[i * m + j]) {
            for i in 0..n {
                mask[i * m + j] = mask_rng.gen_bool(observe_prob);
            }
        }
    }

    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..m {
            let dot = c.row(i).dot(&v.row(j));
            // Votes are drawn for every cell so the sample does not depend
            // on the mask.
            let u: f64 = vote_rng.gen();
            if !mask[i * m + j] {
                continue;
            }
            let s = match model {
                VotingModel::Deterministic => Sign::from_f64(dot),
                VotingModel::Probabilistic => {
                    if u < sigmoid(dot) {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    }
                }
            };
            entries.push(((i, j), s));
        }
    }
    let matrix = PartialSignMatrix::new(n, m, entries)?;
    let truth = SyntheticGroundTruth {
        r_true: c.ncols(),
        c_true: c,
        v_true: v,
        model,
        observe_prob,
        seed,
    };
    Ok((matrix, truth))
}

const COMMON_WORDS: &[&str] = &[
    "the", "a", "is", "this", "that", "and", "of", "to", "in", "it", "people", "really", "just",
    "think",
];

const AXIS_WORDS: &[(&[&str], &[&str])] = &[
    (
        &["growth", "jobs", "market", "invest", "profit", "boom"],
        &["debt", "crash", "layoffs", "bubble", "loss", "decline"],
    ),
    (
        &["freedom", "local", "choice", "liberty", "private", "rights"],
        &[
            "federal",
            "mandate",
            "regulation",
            "public",
            "rules",
            "oversight",
        ],
    ),
    (
        &["science", "data", "evidence", "study", "facts", "research"],
        &[
            "faith",
            "values",
            "tradition",
            "belief",
            "culture",
            "heritage",
        ],
    ),
    (
        &["peace", "treaty", "talks", "allies", "diplomacy", "trade"],
        &["war", "threat", "border", "army", "sanctions", "conflict"],
    ),
];

/// Comment texts whose vocabulary follows the sign of each opinion
/// coordinate, so lexical overlap tracks opinion similarity.
pub fn synthetic_comment_texts(truth: &SyntheticGroundTruth, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 3));
    truth
        .c_true
        .rows()
        .into_iter()
        .map(|row| {
            let mut words: Vec<&str> = (0..4)
                .map(|_| *COMMON_WORDS.choose(&mut rng).unwrap())
                .collect();
            for (k, &x) in row.iter().enumerate() {
                let (pos, neg) = AXIS_WORDS[k % AXIS_WORDS.len()];
                let pool = if x >= 0.0 { pos } else { neg };
                let count = 1 + (x.abs() * 3.0).round() as usize;
                words.extend((0..count).map(|_| *pool.choose(&mut rng).unwrap()));
            }
            words.shuffle(&mut rng);
            words.join(" ")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank_one::is_rank_one;

    #[test]
    fn one_dimensional_full_observation_is_rank_one() {
        for seed in 0..10 {
            let params = SyntheticParams {
                r_true: 1,
                observe_prob: 1.0,
                seed,
                ..SyntheticParams::default()
            };
            let (m, _) = generate_synthetic(&params).unwrap();
            assert_eq!(m.n_observed(), 20 * 30);
            assert!(is_rank_one(&m).unwrap().is_some());
        }
    }

    #[test]
    fn deterministic_votes_follow_the_sign_rule() {
        for seed in 0..5 {
            let params = SyntheticParams {
                r_true: 3,
                observe_prob: 0.3,
                seed,
                consensus: 0.3,
                ..SyntheticParams::default()
            };
            let (m, truth) = generate_synthetic(&params).unwrap();
            for (i, j, s) in m.entries() {
                assert_eq!(
                    s,
                    Sign::from_f64(truth.c_true.row(i).dot(&truth.v_true.row(j)))
                );
            }
            assert!(m.row_adjacency().iter().all(|r| !r.is_empty()));
            assert!(m.col_adjacency().iter().all(|c| !c.is_empty()));
        }
    }

    #[test]
    fn zero_dot_probabilistic_votes_are_fair_coins() {
        let c = Array2::zeros((40, 2));
        let v = Array2::zeros((50, 2));
        let (m, _) = generate_from_embedding(c, v, VotingModel::Probabilistic, 1.0, 17).unwrap();
        let n = m.n_observed() as f64;
        let frac = m.stats().upvote_fraction;
        let sigma = (0.25 / n).sqrt();
        assert!((frac - 0.5).abs() <= 3.0 * sigma, "upvote fraction {frac}");
    }

    #[test]
    fn sparse_masks_never_leave_empty_lines() {
        let params = SyntheticParams {
            n_comments: 15,
            n_voters: 40,
            observe_prob: 0.02,
            seed: 4,
            ..SyntheticParams::default()
        };
        let (m, _) = generate_synthetic(&params).unwrap();
        assert_eq!(m.prune(0).into_option().unwrap(), m);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let bad = SyntheticParams {
            observe_prob: 0.0,
            ..SyntheticParams::default()
        };
        assert!(matches!(
            generate_synthetic(&bad),
            Err(Error::InvalidParams(_))
        ));
        let bad = SyntheticParams {
            r_true: 0,
            ..SyntheticParams::default()
        };
        assert!(matches!(
            generate_synthetic(&bad),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn texts_are_deterministic() {
        let (_, truth) = generate_synthetic(&SyntheticParams::default()).unwrap();
        let a = synthetic_comment_texts(&truth, 1);
        assert_eq!(a.len(), 20);
        assert_eq!(a, synthetic_comment_texts(&truth, 1));
    }
}
