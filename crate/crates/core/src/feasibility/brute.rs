//! Desk-scale sign-rank oracle for instances with at most ten comments plus
//! voters.
//!
//! In the plane only directions matter, so a two-dimensional witness is an
//! assignment of angles. The search places one vector at a time on a grid of
//! `G` directions. A new vector only needs one representative per cell of the
//! arrangement formed by the already placed vectors' directions, their
//! antipodes and their perpendiculars, because those are exactly the
//! positions where a sign relation with a placed vector can change.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{rank_one_to_witness, search_witness, SearchBudget, Witness};
use crate::error::{Error, Result};
use crate::rank_one::is_rank_one;
use crate::sc_bound::{estimate_dimension_upper_bound, BoundConfig};
use crate::sign_matrix::PartialSignMatrix;

pub const DEFAULT_GRID: u32 = 720;
const MAX_NODES: usize = 10;
const MAX_VISITS: u64 = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    /// Every smaller dimension was refuted exactly and `r` has a witness.
    Exact,
    /// `r` is an upper bound only.
    UpperEvidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub r: usize,
    pub certainty: Certainty,
    pub witness: Option<Witness>,
}

/// Smallest dimension with a witness, trying `r = 1` exactly, `r = 2` on the
/// angular grid and `3..=r_max` with the witness search. Falls back to the
/// sign-change bound when nothing up to `r_max` is found.
pub fn brute_force_sign_rank(m: &PartialSignMatrix, r_max: usize) -> Result<BruteForceResult> {
    let nodes = m.n_comments() + m.n_voters();
    if nodes > MAX_NODES {
        return Err(Error::TooLarge(format!(
            "{nodes} comments plus voters, limit is {MAX_NODES}"
        )));
    }
    if let Some(w) = is_rank_one(m)? {
        return Ok(BruteForceResult {
            r: 1,
            certainty: Certainty::Exact,
            witness: Some(rank_one_to_witness(&w)),
        });
    }
    if r_max >= 2 {
        if let Some(w) = planar_grid_witness(m, DEFAULT_GRID) {
            return Ok(BruteForceResult {
                r: 2,
                certainty: Certainty::Exact,
                witness: Some(w),
            });
        }
    }
    for r in 3..=r_max {
        if let Some(w) = search_witness(m, r, &SearchBudget::default(), r as u64) {
            return Ok(BruteForceResult {
                r,
                certainty: Certainty::UpperEvidence,
                witness: Some(w),
            });
        }
    }
    let pruned = m.prune(0).into_option().ok_or(Error::EmptyMatrix)?;
    let bound = estimate_dimension_upper_bound(&pruned, &BoundConfig::default())?;
    Ok(BruteForceResult {
        r: bound.r_hat,
        // r = 1 is refuted, so a bound of 2 pins the sign-rank.
        certainty: if bound.r_hat == 2 {
            Certainty::Exact
        } else {
            Certainty::UpperEvidence
        },
        witness: None,
    })
}

/// Two-dimensional witness with every vector on a `grid`-point circle, or
/// `None` when the search finds none.
pub fn planar_grid_witness(m: &PartialSignMatrix, grid: u32) -> Option<Witness> {
    if m.is_empty() || grid < 8 || !grid.is_multiple_of(4) {
        return None;
    }
    let n_rows = m.n_comments();
    let n = n_rows + m.n_voters();
    let mut adj: Vec<Vec<(usize, i8)>> = vec![Vec::new(); n];
    for (i, j, s) in m.entries() {
        adj[i].push((n_rows + j, s.as_i8()));
        adj[n_rows + j].push((i, s.as_i8()));
    }

    // Breadth-first order so each vector meets its constraints early.
    let mut order = Vec::with_capacity(n);
    let mut component = vec![usize::MAX; n];
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        component[start] = start;
        let mut head = order.len();
        order.push(start);
        while head < order.len() {
            let x = order[head];
            head += 1;
            for &(y, _) in &adj[x] {
                if component[y] == usize::MAX {
                    component[y] = start;
                    order.push(y);
                }
            }
        }
    }

    let mut search = GridSearch {
        grid: grid as i64,
        adj: &adj,
        component: &component,
        order: &order,
        angle: vec![None; n],
        visits: 0,
    };
    if !search.place(0) {
        return None;
    }
    let to_vec = |a: i64| {
        let t = a as f64 * std::f64::consts::TAU / grid as f64;
        [t.cos(), t.sin()]
    };
    let angles: Vec<i64> = search
        .angle
        .iter()
        .map(|a| a.expect("all placed"))
        .collect();
    let c = Array2::from_shape_fn((n_rows, 2), |(i, k)| to_vec(angles[i])[k]);
    let v = Array2::from_shape_fn((n - n_rows, 2), |(j, k)| to_vec(angles[n_rows + j])[k]);
    let w = Witness { c, v };
    w.is_valid_for(m).then_some(w)
}

struct GridSearch<'a> {
    grid: i64,
    adj: &'a [Vec<(usize, i8)>],
    component: &'a [usize],
    order: &'a [usize],
    angle: Vec<Option<i64>>,
    visits: u64,
}

impl GridSearch<'_> {
    /// Sign of the cosine of the angle difference on the grid; `0` on the
    /// perpendicular.
    fn relation(&self, a: i64, b: i64) -> i8 {
        let q = self.grid / 4;
        let d = (a - b).rem_euclid(self.grid);
        if d == q || d == 3 * q {
            0
        } else if d < q || d > 3 * q {
            1
        } else {
            -1
        }
    }

    fn place(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            return true;
        }
        self.visits += 1;
        if self.visits > MAX_VISITS {
            return false;
        }
        let node = self.order[depth];
        let comp = self.component[node];
        if comp == node {
            // First vector of a component: rotation is free.
            self.angle[node] = Some(0);
            if self.place(depth + 1) {
                return true;
            }
            self.angle[node] = None;
            return false;
        }

        let q = self.grid / 4;
        let mut critical: Vec<i64> = self.order[..depth]
            .iter()
            .filter(|&&x| self.component[x] == comp)
            .filter_map(|&x| self.angle[x])
            .flat_map(|a| [a, a + q, a + 2 * q, a + 3 * q])
            .map(|a| a.rem_euclid(self.grid))
            .collect();
        critical.sort_unstable();
        critical.dedup();

        let mut candidates = Vec::with_capacity(critical.len());
        for (k, &lo) in critical.iter().enumerate() {
            let hi = if k + 1 < critical.len() {
                critical[k + 1]
            } else {
                critical[0] + self.grid
            };
            if hi - lo >= 2 {
                candidates.push((lo + (hi - lo) / 2).rem_euclid(self.grid));
            }
        }

        for cand in candidates {
            let ok = self.adj[node]
                .iter()
                .all(|&(other, s)| match self.angle[other] {
                    Some(a) => self.relation(cand, a) == s,
                    None => true,
                });
            if !ok {
                continue;
            }
            self.angle[node] = Some(cand);
            if self.place(depth + 1) {
                return true;
            }
            self.angle[node] = None;
            if self.visits > MAX_VISITS {
                return false;
            }
        }
        false
    }
}
