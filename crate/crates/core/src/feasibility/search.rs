use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Witness;
use crate::mle_embed::sigmoid;
use crate::seeds::derive_seed;
use crate::sign_matrix::PartialSignMatrix;

/// Starting hinge margin on unit-norm opinion vectors. It shrinks
/// geometrically per sweep down to `MIN_MARGIN`, since thin feasible regions
/// admit only small margins.
const MARGIN: f64 = 0.1;
const MIN_MARGIN: f64 = 1e-4;
const MARGIN_DECAY: f64 = 0.98;
const LOGISTIC_STEP: f64 = 0.1;
const LOGISTIC_BOUND: f64 = 10.0;
const INIT_SCALE: f64 = 0.1;
const INNER_STEPS: usize = 4;
const STEP: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SearchBudget {
    pub restarts: usize,
    pub sweeps: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            restarts: 8,
            sweeps: 500,
        }
    }
}

/// Randomized witness search at dimension `r`.
///
/// Each restart first runs logistic stochastic gradient ascent on the votes
/// from a small random start, which on feasible instances tends toward a
/// large-margin solution. If that does not reproduce every vote, it switches
/// to alternating hinge descent on unit vectors, moving each vector down
/// `max(0, margin - s_ij <c_i, v_j>)` with a shrinking margin. A witness is
/// returned only when every vote is reproduced strictly; `None` says nothing
/// about infeasibility.
pub fn search_witness(
    m: &PartialSignMatrix,
    r: usize,
    budget: &SearchBudget,
    seed: u64,
) -> Option<Witness> {
    search_witness_from(m, r, budget, seed, None)
}

/// Like [`search_witness`], with the first restart starting at `init`.
pub fn search_witness_from(
    m: &PartialSignMatrix,
    r: usize,
    budget: &SearchBudget,
    seed: u64,
    init: Option<&Witness>,
) -> Option<Witness> {
    if r == 0 || m.is_empty() {
        return None;
    }
    let problem = Problem::new(m);
    (0..budget.restarts.max(1))
        .into_par_iter()
        .find_map_first(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, restart as u64));
            let (c, v) = match (restart, init) {
                (0, Some(w)) if w.r() == r => (w.c.clone(), w.v.clone()),
                _ => (
                    random_rows(&mut rng, m.n_comments(), r),
                    random_rows(&mut rng, m.n_voters(), r),
                ),
            };
            problem.solve(c, v, budget.sweeps, &mut rng)
        })
        .filter(|w| w.is_valid_for(m))
}

struct Problem {
    entries: Vec<(usize, usize, f64)>,
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
}

impl Problem {
    fn new(m: &PartialSignMatrix) -> Self {
        let conv = |adj: Vec<Vec<(usize, crate::sign_matrix::Sign)>>| {
            adj.into_iter()
                .map(|l| l.into_iter().map(|(k, s)| (k, s.as_f64())).collect())
                .collect()
        };
        Problem {
            entries: m.entries().map(|(i, j, s)| (i, j, s.as_f64())).collect(),
            rows: conv(m.row_adjacency()),
            cols: conv(m.col_adjacency()),
        }
    }

    fn solve(
        &self,
        mut c: Array2<f64>,
        mut v: Array2<f64>,
        sweeps: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<Witness> {
        if self.logistic(&mut c, &mut v, sweeps, rng) {
            return Some(Witness { c, v });
        }
        self.descend(c, v, sweeps)
    }

    /// Logistic ascent epochs; true once every vote is strict.
    fn logistic(
        &self,
        c: &mut Array2<f64>,
        v: &mut Array2<f64>,
        epochs: usize,
        rng: &mut ChaCha8Rng,
    ) -> bool {
        let r = c.ncols();
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        for _ in 0..epochs {
            if all_strict(c, v, &self.rows) {
                return true;
            }
            order.shuffle(rng);
            for &e in &order {
                let (i, j, s) = self.entries[e];
                let dot = c.row(i).dot(&v.row(j));
                let w = LOGISTIC_STEP * s * sigmoid(-s * dot);
                for k in 0..r {
                    let (ci, vj) = (c[[i, k]], v[[j, k]]);
                    c[[i, k]] = (ci + w * vj).clamp(-LOGISTIC_BOUND, LOGISTIC_BOUND);
                    v[[j, k]] = (vj + w * ci).clamp(-LOGISTIC_BOUND, LOGISTIC_BOUND);
                }
            }
        }
        all_strict(c, v, &self.rows)
    }

    fn descend(&self, mut c: Array2<f64>, mut v: Array2<f64>, sweeps: usize) -> Option<Witness> {
        normalize_rows(&mut c);
        normalize_rows(&mut v);
        let mut margin = MARGIN;
        for _ in 0..sweeps {
            if all_strict(&c, &v, &self.rows) {
                return Some(Witness { c, v });
            }
            block_pass(&mut c, &v, &self.rows, margin);
            block_pass(&mut v, &c, &self.cols, margin);
            margin = (margin * MARGIN_DECAY).max(MIN_MARGIN);
        }
        all_strict(&c, &v, &self.rows).then_some(Witness { c, v })
    }
}

/// Hinge subgradient steps on each row of `x` with `other` fixed.
fn block_pass(x: &mut Array2<f64>, other: &Array2<f64>, adj: &[Vec<(usize, f64)>], margin: f64) {
    let r = x.ncols();
    let mut grad = vec![0.0; r];
    for (i, votes) in adj.iter().enumerate() {
        if votes.is_empty() {
            continue;
        }
        let scale = STEP * (margin / MARGIN).sqrt() / (votes.len() as f64).sqrt();
        for _ in 0..INNER_STEPS {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut active = 0;
            for &(k, s) in votes {
                let o = other.row(k);
                let dot: f64 = x.row(i).dot(&o);
                if s * dot < margin {
                    active += 1;
                    for d in 0..r {
                        grad[d] += s * o[d];
                    }
                }
            }
            if active == 0 {
                break;
            }
            let mut row = x.row_mut(i);
            for d in 0..r {
                row[d] += scale * grad[d];
            }
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row.mapv_inplace(|t| t / norm);
            }
        }
    }
}

fn all_strict(c: &Array2<f64>, v: &Array2<f64>, rows: &[Vec<(usize, f64)>]) -> bool {
    rows.iter().enumerate().all(|(i, votes)| {
        votes
            .iter()
            .all(|&(j, s)| s * c.row(i).dot(&v.row(j)) > 0.0)
    })
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, r: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, r), |_| rng.gen_range(-INIT_SCALE..INIT_SCALE))
}

fn normalize_rows(a: &mut Array2<f64>) {
    for mut row in a.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|t| t / norm);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_family(n: usize) -> PartialSignMatrix {
        let rows: Vec<Vec<i8>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1 } else { -1 }).collect())
            .collect();
        let refs: Vec<&[i8]> = rows.iter().map(Vec::as_slice).collect();
        PartialSignMatrix::from_dense(&refs)
    }

    #[test]
    fn all_plus_r1() {
        let m = PartialSignMatrix::from_dense(&[&[1, 1], &[1, 1]]);
        let w = search_witness(&m, 1, &SearchBudget::default(), 0).unwrap();
        w.validate(&m).unwrap();
    }

    #[test]
    fn second_voting_pattern() {
        let m = PartialSignMatrix::from_dense(&[&[1, 1, 1], &[1, -1, 1], &[1, 1, 1]]);
        assert!(search_witness(&m, 1, &SearchBudget::default(), 0).is_none());
        let w = search_witness(&m, 2, &SearchBudget::default(), 0).unwrap();
        w.validate(&m).unwrap();
    }

    #[test]
    fn identity_family_in_three_dimensions() {
        for n in [4, 6, 8] {
            let m = identity_family(n);
            let w = search_witness(&m, 3, &SearchBudget::default(), 1).unwrap();
            w.validate(&m).unwrap();
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let m = identity_family(5);
        let a = search_witness(&m, 3, &SearchBudget::default(), 9);
        let b = search_witness(&m, 3, &SearchBudget::default(), 9);
        assert_eq!(a, b);
    }
}
