//! Greedy sign-minimizing spanning tree over the rows of a partial sign
//! matrix, completing unknown entries as edges are chosen.

use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::equivalence::CellClasses;
use super::SignGrid;
use crate::error::{Error, Result};
use crate::sign_matrix::PartialSignMatrix;

const UNKNOWN: i8 = 0;

/// Union-find over rows, used for the cycle test.
#[derive(Debug, Clone)]
struct RowComponents {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl RowComponents {
    fn new(n: usize) -> Self {
        RowComponents {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Working state of the spanning tree construction.
///
/// `weight(u, v)` is kept equal to the number of columns where both working
/// entries of `u` and `v` are known and differ, for every pair not yet joined
/// by the forest. Candidate edges sit in an ordered set keyed by
/// `(weight, tie_key)`; a fresh random tie key is drawn whenever an edge's
/// weight changes, so among equal weights the first cycle-free entry is a
/// uniformly random choice.
#[derive(Debug, Clone)]
pub struct ForestState {
    n_rows: usize,
    n_cols: usize,
    working: Vec<i8>,
    classes: CellClasses,
    components: RowComponents,
    forest_edges: Vec<(usize, usize)>,
    weights: Vec<u32>,
    tie_keys: Vec<u64>,
    queue: BTreeSet<(u32, u64, usize, usize)>,
    pending_rows: BTreeSet<usize>,
    pending_cols: BTreeSet<usize>,
    rng: ChaCha8Rng,
}

impl ForestState {
    /// Initial state: every pairwise weight computed from the observed entries.
    pub fn new(m: &PartialSignMatrix, seed: u64) -> Result<Self> {
        check_preconditions(m)?;
        let (n_rows, n_cols) = (m.n_comments(), m.n_voters());
        let mut working = vec![UNKNOWN; n_rows * n_cols];
        for (i, j, s) in m.entries() {
            working[i * n_cols + j] = s.as_i8();
        }
        let mut state = ForestState {
            n_rows,
            n_cols,
            working,
            classes: CellClasses::new(n_rows, n_cols),
            components: RowComponents::new(n_rows),
            forest_edges: Vec::with_capacity(n_rows.saturating_sub(1)),
            weights: vec![0; n_rows * n_rows],
            tie_keys: vec![0; n_rows * n_rows],
            queue: BTreeSet::new(),
            pending_rows: (0..n_rows).collect(),
            pending_cols: (0..n_cols).collect(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        for u in 0..n_rows {
            for v in u + 1..n_rows {
                let w = state.edge_weight(u, v);
                let key = state.rng.gen();
                state.weights[u * n_rows + v] = w;
                state.tie_keys[u * n_rows + v] = key;
                state.queue.insert((w, key, u, v));
            }
        }
        Ok(state)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Working entry: `1`, `-1`, or `0` while still unknown.
    pub fn entry(&self, row: usize, col: usize) -> i8 {
        self.working[row * self.n_cols + col]
    }

    pub fn forest_edges(&self) -> &[(usize, usize)] {
        &self.forest_edges
    }

    pub fn pending_rows(&self) -> &BTreeSet<usize> {
        &self.pending_rows
    }

    pub fn pending_cols(&self) -> &BTreeSet<usize> {
        &self.pending_cols
    }

    pub fn is_complete(&self) -> bool {
        self.forest_edges.len() + 1 >= self.n_rows
    }

    pub fn connected(&mut self, u: usize, v: usize) -> bool {
        self.components.find(u) == self.components.find(v)
    }

    pub fn equivalent(&mut self, col: usize, u: usize, v: usize) -> bool {
        self.classes.same_class(col, u, v)
    }

    /// Known-known disagreements between rows `u` and `v`, recomputed from
    /// the working matrix.
    pub fn edge_weight(&self, u: usize, v: usize) -> u32 {
        let a = &self.working[u * self.n_cols..(u + 1) * self.n_cols];
        let b = &self.working[v * self.n_cols..(v + 1) * self.n_cols];
        a.iter()
            .zip(b)
            .filter(|(&x, &y)| x != UNKNOWN && y != UNKNOWN && x != y)
            .count() as u32
    }

    /// Incrementally maintained weight of a candidate edge.
    pub fn tracked_weight(&self, u: usize, v: usize) -> u32 {
        let (a, b) = (u.min(v), u.max(v));
        self.weights[a * self.n_rows + b]
    }

    /// Pops the minimum-weight cycle-free edge.
    pub fn select_edge(&mut self) -> Option<(usize, usize)> {
        while let Some(&entry) = self.queue.first() {
            self.queue.remove(&entry);
            let (_, _, u, v) = entry;
            if !self.connected(u, v) {
                return Some((u, v));
            }
        }
        None
    }

    /// Adds `(u, v)` to the forest and completes the two rows against each
    /// other column by column: a known entry is copied onto the unknown one
    /// and onto every cell equivalent to it; two unknowns become equivalent.
    pub fn update(&mut self, u: usize, v: usize) -> Result<()> {
        if u == v || u >= self.n_rows || v >= self.n_rows {
            return Err(Error::PrecondViolated(format!("invalid edge ({u}, {v})")));
        }
        if !self.components.union(u, v) {
            return Err(Error::PrecondViolated(format!(
                "edge ({u}, {v}) closes a cycle"
            )));
        }
        let (a, b) = (u.min(v), u.max(v));
        self.queue.remove(&(
            self.weights[a * self.n_rows + b],
            self.tie_keys[a * self.n_rows + b],
            a,
            b,
        ));
        self.forest_edges.push((u, v));
        self.pending_rows.clear();
        self.pending_cols.clear();

        for j in 0..self.n_cols {
            match (self.entry(u, j), self.entry(v, j)) {
                (UNKNOWN, UNKNOWN) => self.classes.join(j, u, v),
                (UNKNOWN, s) => self.assign(u, j, s),
                (s, UNKNOWN) => self.assign(v, j, s),
                _ => {}
            }
        }
        Ok(())
    }

    /// Writes `sign` into `(row, col)` and every cell equivalent to it.
    fn assign(&mut self, row: usize, col: usize, sign: i8) {
        let rows = self.classes.class_rows(col, row).to_vec();
        for x in rows {
            debug_assert_eq!(self.entry(x, col), UNKNOWN, "cells are assigned once");
            self.working[x * self.n_cols + col] = sign;
            self.pending_rows.insert(x);
            self.pending_cols.insert(col);
            self.bump_weights(x, col, sign);
        }
    }

    /// A fill event at `(x, col)` adds one disagreement against every other
    /// row whose entry in `col` is known and opposite.
    fn bump_weights(&mut self, x: usize, col: usize, sign: i8) {
        let root_x = self.components.find(x);
        for y in 0..self.n_rows {
            let other = self.entry(y, col);
            if y == x || other == UNKNOWN || other == sign {
                continue;
            }
            if self.components.find(y) == root_x {
                continue;
            }
            let (a, b) = (x.min(y), x.max(y));
            let k = a * self.n_rows + b;
            self.queue
                .remove(&(self.weights[k], self.tie_keys[k], a, b));
            self.weights[k] += 1;
            self.tie_keys[k] = self.rng.gen();
            self.queue.insert((self.weights[k], self.tie_keys[k], a, b));
        }
    }

    /// Completed matrix; `None` while any entry is still unknown.
    pub fn completion(&self) -> Option<SignGrid> {
        if self.working.contains(&UNKNOWN) {
            return None;
        }
        Some(SignGrid::from_flat(
            self.n_rows,
            self.n_cols,
            self.working.clone(),
        ))
    }
}

fn check_preconditions(m: &PartialSignMatrix) -> Result<()> {
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let rows: HashSet<usize> = m.entries().map(|(i, _, _)| i).collect();
    let cols: HashSet<usize> = m.entries().map(|(_, j, _)| j).collect();
    if rows.len() != m.n_comments() {
        return Err(Error::PrecondViolated(
            "matrix has an all-unknown row; prune it first".into(),
        ));
    }
    if cols.len() != m.n_voters() {
        return Err(Error::PrecondViolated(
            "matrix has an all-unknown column; prune it first".into(),
        ));
    }
    Ok(())
}

/// Spanning tree over rows together with the completed matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanningTree {
    pub n_rows: usize,
    pub edges: Vec<(usize, usize)>,
    pub completion: SignGrid,
}

/// Builds the sign-minimizing spanning tree; ties are broken by `seed`.
pub fn build_spanning_tree(m: &PartialSignMatrix, seed: u64) -> Result<SpanningTree> {
    let mut state = ForestState::new(m, seed)?;
    while !state.is_complete() {
        let (u, v) = state
            .select_edge()
            .expect("a cycle-free edge exists until the forest spans all rows");
        state.update(u, v)?;
    }
    let completion = state
        .completion()
        .expect("every column has an observed entry, so the spanning tree fills every cell");
    Ok(SpanningTree {
        n_rows: state.n_rows,
        edges: state.forest_edges,
        completion,
    })
}
