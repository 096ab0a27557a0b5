use rand::seq::IteratorRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{search_witness, SearchBudget};
use crate::mle_embed::{fit, predict_direction, FitConfig};
use crate::seeds::derive_seed;
use crate::sign_matrix::{Direction, PartialSignMatrix, Sign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LooModel {
    /// Witness search at `LooConfig::r`, then the sign rule.
    Dvm,
    /// Logistic embedding fit, then the 0.5 threshold.
    Pvm,
    /// Majority of the comment's remaining votes, ties up.
    Majority,
}

impl std::str::FromStr for LooModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dvm" => Ok(LooModel::Dvm),
            "pvm" => Ok(LooModel::Pvm),
            "majority" => Ok(LooModel::Majority),
            _ => Err(Error::InvalidParams(format!("unknown model {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LooConfig {
    pub max_holdouts: usize,
    pub seed: u64,
    pub r: usize,
    pub fit: FitConfig,
    pub budget: SearchBudget,
}

impl Default for LooConfig {
    fn default() -> Self {
        LooConfig {
            max_holdouts: 500,
            seed: 0,
            r: 2,
            fit: FitConfig::default(),
            budget: SearchBudget::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LooResult {
    pub n_evaluated: usize,
    pub n_correct: usize,
    pub accuracy: f64,
    pub skipped: usize,
}

enum Outcome {
    Correct,
    Wrong,
    Skipped,
}

/// Leave-one-out vote prediction. Every observed vote is held out in turn
/// (or a seeded sample of `max_holdouts` of them) and predicted from a model
/// refitted without it. Each holdout refits from its own derived seed, so the
/// result does not depend on scheduling.
pub fn leave_one_out(m: &PartialSignMatrix, model: LooModel, cfg: &LooConfig) -> Result<LooResult> {
    let n_obs = m.n_observed();
    if n_obs < 2 {
        return Err(Error::TooFewVotes(n_obs));
    }
    if model == LooModel::Pvm {
        FitConfig {
            r: cfg.r,
            ..cfg.fit.clone()
        }
        .validate()?;
    }
    if cfg.r == 0 {
        return Err(Error::InvalidParams("dimension must be at least 1".into()));
    }

    let all: Vec<(usize, usize, Sign)> = m.entries().collect();
    let holdouts: Vec<(usize, usize, Sign)> = if all.len() <= cfg.max_holdouts {
        all
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0));
        let mut picked = all.into_iter().choose_multiple(&mut rng, cfg.max_holdouts);
        picked.sort_by_key(|&(i, j, _)| (i, j));
        picked
    };

    let row_counts: Vec<usize> = m.row_adjacency().iter().map(Vec::len).collect();
    let col_counts: Vec<usize> = m.col_adjacency().iter().map(Vec::len).collect();

    let outcomes: Vec<Result<Outcome>> = holdouts
        .par_iter()
        .enumerate()
        .map(|(k, &(i, j, s))| {
            if row_counts[i] < 2 || col_counts[j] < 2 {
                return Ok(Outcome::Skipped);
            }
            let train = m.without_entry(i, j);
            let seed = derive_seed(cfg.seed, 1 + k as u64);
            let predicted = match model {
                LooModel::Dvm => match search_witness(&train, cfg.r, &cfg.budget, seed) {
                    Some(w) => w.predict(i, j),
                    None => return Ok(Outcome::Skipped),
                },
                LooModel::Pvm => {
                    let fit_cfg = FitConfig {
                        r: cfg.r,
                        seed,
                        ..cfg.fit.clone()
                    };
                    let outcome = fit(&train, &fit_cfg)?;
                    predict_direction(&outcome.embedding, i, j)?
                }
                LooModel::Majority => {
                    let net: i64 = train
                        .row_adjacency()
                        .swap_remove(i)
                        .iter()
                        .map(|&(_, s)| s.as_i8() as i64)
                        .sum();
                    if net >= 0 {
                        Direction::Up
                    } else {
                        Direction::Down
                    }
                }
            };
            Ok(if predicted == s.direction() {
                Outcome::Correct
            } else {
                Outcome::Wrong
            })
        })
        .collect();

    let (mut n_correct, mut n_wrong, mut skipped) = (0, 0, 0);
    for outcome in outcomes {
        match outcome? {
            Outcome::Correct => n_correct += 1,
            Outcome::Wrong => n_wrong += 1,
            Outcome::Skipped => skipped += 1,
        }
    }
    let n_evaluated = n_correct + n_wrong;
    Ok(LooResult {
        n_evaluated,
        n_correct,
        accuracy: if n_evaluated > 0 {
            n_correct as f64 / n_evaluated as f64
        } else {
            0.0
        },
        skipped,
    })
}
