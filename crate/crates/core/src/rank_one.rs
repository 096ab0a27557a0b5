//! Exact sign-rank 1 test by sign propagation over the bipartite vote graph.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sign_matrix::{PartialSignMatrix, Sign};

/// `±1` scalar opinions reproducing every observed vote: `c_i * v_j = s_ij`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankOneWitness {
    pub comment_signs: Vec<i8>,
    pub voter_signs: Vec<i8>,
}

impl RankOneWitness {
    pub fn validates(&self, m: &PartialSignMatrix) -> bool {
        self.comment_signs.len() == m.n_comments()
            && self.voter_signs.len() == m.n_voters()
            && m.entries()
                .all(|(i, j, s)| self.comment_signs[i] * self.voter_signs[j] == s.as_i8())
    }
}

/// Returns a witness iff the observed entries admit a consistent `±1`
/// assignment. Each connected component is seeded at its first comment (or
/// voter, for voter-only components) with `+1`; isolated nodes get `+1`.
pub fn is_rank_one(m: &PartialSignMatrix) -> Result<Option<RankOneWitness>> {
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let n_rows = m.n_comments();
    let rows = m.row_adjacency();
    let cols = m.col_adjacency();

    // Node ids: comments are 0..n_rows, voters follow.
    let mut value: Vec<Option<Sign>> = vec![None; n_rows + m.n_voters()];
    let mut queue = VecDeque::new();
    for seed in 0..value.len() {
        if value[seed].is_some() {
            continue;
        }
        value[seed] = Some(Sign::Plus);
        queue.push_back(seed);
        while let Some(node) = queue.pop_front() {
            let here = value[node].expect("queued nodes are assigned");
            let neighbours = if node < n_rows {
                rows[node]
                    .iter()
                    .map(|&(j, s)| (n_rows + j, s))
                    .collect::<Vec<_>>()
            } else {
                cols[node - n_rows].to_vec()
            };
            for (next, edge) in neighbours {
                let want = here * edge;
                match value[next] {
                    None => {
                        value[next] = Some(want);
                        queue.push_back(next);
                    }
                    Some(have) if have != want => return Ok(None),
                    Some(_) => {}
                }
            }
        }
    }

    let signs: Vec<i8> = value
        .into_iter()
        .map(|v| v.expect("all nodes visited").as_i8())
        .collect();
    let voter_signs = signs[n_rows..].to_vec();
    let mut comment_signs = signs;
    comment_signs.truncate(n_rows);
    Ok(Some(RankOneWitness {
        comment_signs,
        voter_signs,
    }))
}
