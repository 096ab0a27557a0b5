//! Probabilistic voting model: `P(s_ij) = 1 / (1 + exp(-s_ij <c_i, v_j>))`.
//!
//! Embeddings are fitted by maximizing the log-likelihood of the observed
//! votes under entrywise bounds `|C|, |V| <= alpha`, using projected
//! minibatch stochastic gradient ascent.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{from_rows, rows_of};
use crate::sign_matrix::{Direction, PartialSignMatrix, Sign};

const INIT_SCALE: f64 = 0.1;
/// Consecutive epochs below the tolerance before stopping.
const PATIENCE: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct OpinionEmbedding {
    pub c: Array2<f64>,
    pub v: Array2<f64>,
    pub alpha: f64,
}

impl OpinionEmbedding {
    pub fn r(&self) -> usize {
        self.c.ncols()
    }

    pub fn dot(&self, i: usize, j: usize) -> f64 {
        self.c.row(i).dot(&self.v.row(j))
    }

    pub fn within_bounds(&self) -> bool {
        self.c
            .iter()
            .chain(self.v.iter())
            .all(|x| x.abs() <= self.alpha)
    }

    fn check_indices(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.c.nrows() || j >= self.v.nrows() {
            return Err(Error::IndexOutOfRange {
                row: i,
                col: j,
                n_rows: self.c.nrows(),
                n_cols: self.v.nrows(),
            });
        }
        Ok(())
    }

    fn check_shape(&self, m: &PartialSignMatrix) -> Result<()> {
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
        if self.c.ncols() != self.v.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.c.ncols(),
                actual: self.v.ncols(),
            });
        }
        Ok(())
    }
}

/// Logistic function, stable for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Probability that voter `j` casts vote `s` on comment `i`.
pub fn predict_prob(emb: &OpinionEmbedding, i: usize, j: usize, s: Sign) -> Result<f64> {
    emb.check_indices(i, j)?;
    Ok(sigmoid(s.as_f64() * emb.dot(i, j)))
}

/// Thresholded prediction; a probability of exactly one half predicts Up.
pub fn predict_direction(emb: &OpinionEmbedding, i: usize, j: usize) -> Result<Direction> {
    Ok(if predict_prob(emb, i, j, Sign::Plus)? >= 0.5 {
        Direction::Up
    } else {
        Direction::Down
    })
}

/// `-sum log(1 + exp(-s_ij <c_i, v_j>))` over observed entries.
pub fn log_likelihood(m: &PartialSignMatrix, emb: &OpinionEmbedding) -> Result<f64> {
    emb.check_shape(m)?;
    Ok(m.entries()
        .map(|(i, j, s)| -softplus(-s.as_f64() * emb.dot(i, j)))
        .sum())
}

/// Gradient of [`log_likelihood`] with respect to `C` and `V`.
pub fn gradient(
    m: &PartialSignMatrix,
    emb: &OpinionEmbedding,
) -> Result<(Array2<f64>, Array2<f64>)> {
    emb.check_shape(m)?;
    let mut gc = Array2::zeros(emb.c.raw_dim());
    let mut gv = Array2::zeros(emb.v.raw_dim());
    for (i, j, s) in m.entries() {
        let s = s.as_f64();
        let w = s * sigmoid(-s * emb.dot(i, j));
        gc.row_mut(i).scaled_add(w, &emb.v.row(j));
        gv.row_mut(j).scaled_add(w, &emb.c.row(i));
    }
    Ok((gc, gv))
}

/// Entrywise clamp to `[-alpha, alpha]`.
pub fn project_inf_norm(mut x: Array2<f64>, alpha: f64) -> Array2<f64> {
    x.mapv_inplace(|t| t.clamp(-alpha, alpha));
    x
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub r: usize,
    pub alpha: f64,
    pub step_size: f64,
    pub n_epochs: usize,
    pub batch: usize,
    pub seed: u64,
    /// Stop once several consecutive epochs each change the objective by
    /// less than this fraction.
    pub tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            r: 2,
            alpha: 10.0,
            step_size: 0.05,
            n_epochs: 200,
            batch: 64,
            seed: 0,
            tol: 1e-6,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.r >= 1
            && self.alpha > 0.0
            && self.step_size > 0.0
            && self.n_epochs >= 1
            && self.batch >= 1
            && self.tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("fit configuration {self:?}")))
        }
    }
}

/// Random start: entries uniform on `[-0.1, 0.1]`.
pub fn initial_embedding(n_comments: usize, n_voters: usize, cfg: &FitConfig) -> OpinionEmbedding {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw =
        |n| Array2::from_shape_fn((n, cfg.r), |_| rng.gen_range(-INIT_SCALE..=INIT_SCALE));
    let c = draw(n_comments);
    let v = draw(n_voters);
    OpinionEmbedding {
        c: project_inf_norm(c, cfg.alpha),
        v: project_inf_norm(v, cfg.alpha),
        alpha: cfg.alpha,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub embedding: OpinionEmbedding,
    pub objective: f64,
    pub initial_objective: f64,
    pub epochs_run: usize,
}

/// Fits the embedding from a random start.
pub fn fit(m: &PartialSignMatrix, cfg: &FitConfig) -> Result<FitOutcome> {
    cfg.validate()?;
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let init = initial_embedding(m.n_comments(), m.n_voters(), cfg);
    fit_from(m, cfg, init)
}

/// Fits the embedding starting at `init` (projected onto the bounds first).
///
/// Returns the best iterate seen at epoch boundaries, so the objective never
/// ends below the starting point's.
pub fn fit_from(
    m: &PartialSignMatrix,
    cfg: &FitConfig,
    init: OpinionEmbedding,
) -> Result<FitOutcome> {
    cfg.validate()?;
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if init.r() != cfg.r {
        return Err(Error::DimensionMismatch {
            expected: cfg.r,
            actual: init.r(),
        });
    }
    let mut emb = OpinionEmbedding {
        c: project_inf_norm(init.c, cfg.alpha)
            .as_standard_layout()
            .into_owned(),
        v: project_inf_norm(init.v, cfg.alpha)
            .as_standard_layout()
            .into_owned(),
        alpha: cfg.alpha,
    };
    emb.check_shape(m)?;

    let mut entries: Vec<(usize, usize, f64)> =
        m.entries().map(|(i, j, s)| (i, j, s.as_f64())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x05ee_df17);
    let initial_objective = log_likelihood(m, &emb)?;
    let mut best = (initial_objective, emb.clone());
    let mut previous = initial_objective;
    let mut flat_epochs = 0;
    let mut epochs_run = 0;
    let r = cfg.r;
    let alpha = cfg.alpha;
    // Per-batch steps, r values per entry.
    let mut steps_c: Vec<f64> = Vec::with_capacity(cfg.batch * r);
    let mut steps_v: Vec<f64> = Vec::with_capacity(cfg.batch * r);

    for _ in 0..cfg.n_epochs {
        epochs_run += 1;
        entries.shuffle(&mut rng);
        {
            let c = emb.c.as_slice_mut().expect("standard layout");
            let v = emb.v.as_slice_mut().expect("standard layout");
            for batch in entries.chunks(cfg.batch) {
                // Gradients for the whole batch are taken at the same iterate.
                steps_c.clear();
                steps_v.clear();
                for &(i, j, s) in batch {
                    let (ci, vj) = (&c[i * r..(i + 1) * r], &v[j * r..(j + 1) * r]);
                    let dot: f64 = ci.iter().zip(vj).map(|(a, b)| a * b).sum();
                    let w = cfg.step_size * s * sigmoid(-s * dot);
                    steps_c.extend(vj.iter().map(|x| w * x));
                    steps_v.extend(ci.iter().map(|x| w * x));
                }
                for (n, &(i, j, _)) in batch.iter().enumerate() {
                    for k in 0..r {
                        let (a, b) = (i * r + k, j * r + k);
                        c[a] = (c[a] + steps_c[n * r + k]).clamp(-alpha, alpha);
                        v[b] = (v[b] + steps_v[n * r + k]).clamp(-alpha, alpha);
                    }
                }
            }
        }
        let objective = log_likelihood(m, &emb)?;
        if objective > best.0 {
            best = (objective, emb.clone());
        }
        let improvement = (objective - previous) / previous.abs().max(f64::MIN_POSITIVE);
        previous = objective;
        flat_epochs = if improvement.abs() < cfg.tol {
            flat_epochs + 1
        } else {
            0
        };
        if flat_epochs >= PATIENCE {
            break;
        }
    }

    let (objective, embedding) = best;
    debug_assert!(embedding.within_bounds());
    Ok(FitOutcome {
        embedding,
        objective,
        initial_objective,
        epochs_run,
    })
}

/// JSON layout of a fitted embedding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingDocument {
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    pub alpha: f64,
    pub r: usize,
    pub final_objective: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub row_labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub col_labels: Vec<String>,
}

impl EmbeddingDocument {
    pub fn new(
        emb: &OpinionEmbedding,
        final_objective: f64,
        m: Option<&PartialSignMatrix>,
    ) -> Self {
        EmbeddingDocument {
            c: rows_of(&emb.c),
            v: rows_of(&emb.v),
            alpha: emb.alpha,
            r: emb.r(),
            final_objective,
            row_labels: m.map(|m| m.row_labels().to_vec()).unwrap_or_default(),
            col_labels: m.map(|m| m.col_labels().to_vec()).unwrap_or_default(),
        }
    }

    pub fn embedding(&self) -> Result<OpinionEmbedding> {
        let emb = OpinionEmbedding {
            c: from_rows(&self.c, self.r)?,
            v: from_rows(&self.v, self.r)?,
            alpha: self.alpha,
        };
        if emb.c.ncols() != self.r || emb.v.ncols() != self.r {
            return Err(Error::DimensionMismatch {
                expected: self.r,
                actual: emb.c.ncols(),
            });
        }
        Ok(emb)
    }
}
