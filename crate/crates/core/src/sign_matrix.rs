//! Partially observed sign matrices built from up/down vote records.
//!
//! Rows are comments, columns are voters. An entry is `+1` for an upvote,
//! `-1` for a downvote and absent when the voter did not vote on the comment.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn sign(self) -> Sign {
        match self {
            Direction::Up => Sign::Plus,
            Direction::Down => Sign::Minus,
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "up" => Ok(Direction::Up),
            "down" => Ok(Direction::Down),
            other => Err(Error::Parse(format!("unknown vote direction {other:?}"))),
        }
    }
}

/// An observed matrix entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn from_i8(v: i8) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn from_f64(v: f64) -> Sign {
        if v >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.as_i8() as f64
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Sign::Plus => Direction::Up,
            Sign::Minus => Direction::Down,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub comment_id: String,
    pub voter_id: String,
    #[serde(rename = "vote")]
    pub direction: Direction,
}

impl Vote {
    pub fn new(
        comment_id: impl Into<String>,
        voter_id: impl Into<String>,
        direction: Direction,
    ) -> Self {
        Vote {
            comment_id: comment_id.into(),
            voter_id: voter_id.into(),
            direction,
        }
    }
}

/// Comments x voters matrix over `{+1, -1, ?}`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialSignMatrix {
    n_comments: usize,
    n_voters: usize,
    entries: BTreeMap<(usize, usize), Sign>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixStats {
    pub n_observed: usize,
    pub sparsity: f64,
    pub n_unique_patterns: usize,
    pub upvote_fraction: f64,
}

/// Result of [`PartialSignMatrix::prune`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pruned {
    Kept(PartialSignMatrix),
    Empty,
}

impl Pruned {
    pub fn into_option(self) -> Option<PartialSignMatrix> {
        match self {
            Pruned::Kept(m) => Some(m),
            Pruned::Empty => None,
        }
    }
}

impl PartialSignMatrix {
    /// Builds a matrix with default labels `c<i>` / `v<j>`.
    pub fn new(
        n_comments: usize,
        n_voters: usize,
        entries: impl IntoIterator<Item = ((usize, usize), Sign)>,
    ) -> Result<Self> {
        let row_labels = (0..n_comments).map(|i| format!("c{i}")).collect();
        let col_labels = (0..n_voters).map(|j| format!("v{j}")).collect();
        Self::with_labels(row_labels, col_labels, entries)
    }

    pub fn with_labels(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        entries: impl IntoIterator<Item = ((usize, usize), Sign)>,
    ) -> Result<Self> {
        let n_comments = row_labels.len();
        let n_voters = col_labels.len();
        let mut map = BTreeMap::new();
        for ((i, j), s) in entries {
            if i >= n_comments || j >= n_voters {
                return Err(Error::IndexOutOfRange {
                    row: i,
                    col: j,
                    n_rows: n_comments,
                    n_cols: n_voters,
                });
            }
            map.insert((i, j), s);
        }
        Ok(PartialSignMatrix {
            n_comments,
            n_voters,
            entries: map,
            row_labels,
            col_labels,
        })
    }

    /// Dense constructor, mostly for tests: `1`, `-1`, and `0` for unknown.
    ///
    /// Panics on ragged input or values outside `{-1, 0, 1}`.
    pub fn from_dense(rows: &[&[i8]]) -> Self {
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut entries = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n_cols, "ragged dense matrix");
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    _ => entries.push((
                        (i, j),
                        Sign::from_i8(v).expect("entries must be -1, 0 or 1"),
                    )),
                }
            }
        }
        Self::new(rows.len(), n_cols, entries).expect("indices are in range")
    }

    /// Builds the matrix from vote records. Ids get indices in order of
    /// first appearance; exact duplicates collapse.
    pub fn from_vote_triplets<'a>(records: impl IntoIterator<Item = &'a Vote>) -> Result<Self> {
        let mut row_index: HashMap<&str, usize> = HashMap::new();
        let mut col_index: HashMap<&str, usize> = HashMap::new();
        let mut row_labels = Vec::new();
        let mut col_labels = Vec::new();
        let mut entries = BTreeMap::new();

        for vote in records {
            if vote.comment_id.is_empty() || vote.voter_id.is_empty() {
                return Err(Error::Parse("empty comment or voter id".into()));
            }
            let i = *row_index
                .entry(vote.comment_id.as_str())
                .or_insert_with(|| {
                    row_labels.push(vote.comment_id.clone());
                    row_labels.len() - 1
                });
            let j = *col_index.entry(vote.voter_id.as_str()).or_insert_with(|| {
                col_labels.push(vote.voter_id.clone());
                col_labels.len() - 1
            });
            let s = vote.direction.sign();
            match entries.insert((i, j), s) {
                Some(prev) if prev != s => {
                    return Err(Error::ConflictingVote {
                        comment_id: vote.comment_id.clone(),
                        voter_id: vote.voter_id.clone(),
                    })
                }
                _ => {}
            }
        }

        Ok(PartialSignMatrix {
            n_comments: row_labels.len(),
            n_voters: col_labels.len(),
            entries,
            row_labels,
            col_labels,
        })
    }

    pub fn n_comments(&self) -> usize {
        self.n_comments
    }

    pub fn n_voters(&self) -> usize {
        self.n_voters
    }

    pub fn n_observed(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn get(&self, i: usize, j: usize) -> Option<Sign> {
        self.entries.get(&(i, j)).copied()
    }

    /// Observed entries in `(row, col)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Sign)> + '_ {
        self.entries.iter().map(|(&(i, j), &s)| (i, j, s))
    }

    /// Per-row lists of `(col, sign)`.
    pub fn row_adjacency(&self) -> Vec<Vec<(usize, Sign)>> {
        let mut adj = vec![Vec::new(); self.n_comments];
        for (i, j, s) in self.entries() {
            adj[i].push((j, s));
        }
        adj
    }

    /// Per-column lists of `(row, sign)`.
    pub fn col_adjacency(&self) -> Vec<Vec<(usize, Sign)>> {
        let mut adj = vec![Vec::new(); self.n_voters];
        for (i, j, s) in self.entries() {
            adj[j].push((i, s));
        }
        adj
    }

    /// Dense view with `0` for unknown entries.
    pub fn to_dense(&self) -> Vec<Vec<i8>> {
        let mut dense = vec![vec![0i8; self.n_voters]; self.n_comments];
        for (i, j, s) in self.entries() {
            dense[i][j] = s.as_i8();
        }
        dense
    }

    /// Copy of the matrix with one entry removed (it becomes unknown).
    pub fn without_entry(&self, i: usize, j: usize) -> Self {
        let mut out = self.clone();
        out.entries.remove(&(i, j));
        out
    }

    pub fn transpose(&self) -> Self {
        PartialSignMatrix {
            n_comments: self.n_voters,
            n_voters: self.n_comments,
            entries: self
                .entries
                .iter()
                .map(|(&(i, j), &s)| ((j, i), s))
                .collect(),
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
        }
    }

    /// Drops all-unknown rows and columns. Yields [`Pruned::Empty`] when no
    /// observed entry survives or fewer than `min_comments` rows remain.
    pub fn prune(&self, min_comments: usize) -> Pruned {
        let mut row_seen = vec![false; self.n_comments];
        let mut col_seen = vec![false; self.n_voters];
        for &(i, j) in self.entries.keys() {
            row_seen[i] = true;
            col_seen[j] = true;
        }
        let row_map = reindex(&row_seen);
        let col_map = reindex(&col_seen);
        let kept_rows = row_seen.iter().filter(|&&b| b).count();
        if kept_rows == 0 || kept_rows < min_comments {
            return Pruned::Empty;
        }
        let keep = |labels: &[String], seen: &[bool]| -> Vec<String> {
            labels
                .iter()
                .zip(seen)
                .filter(|(_, &b)| b)
                .map(|(l, _)| l.clone())
                .collect()
        };
        let row_labels = keep(&self.row_labels, &row_seen);
        let col_labels = keep(&self.col_labels, &col_seen);
        let entries = self
            .entries
            .iter()
            .map(|(&(i, j), &s)| ((row_map[i].unwrap(), col_map[j].unwrap()), s))
            .collect();
        Pruned::Kept(PartialSignMatrix {
            n_comments: row_labels.len(),
            n_voters: col_labels.len(),
            entries,
            row_labels,
            col_labels,
        })
    }

    pub fn stats(&self) -> MatrixStats {
        let n_observed = self.n_observed();
        let cells = self.n_comments * self.n_voters;
        let sparsity = if cells == 0 {
            0.0
        } else {
            n_observed as f64 / cells as f64
        };
        let n_up = self.entries.values().filter(|&&s| s == Sign::Plus).count();
        let upvote_fraction = if n_observed == 0 {
            0.0
        } else {
            n_up as f64 / n_observed as f64
        };
        let patterns: HashSet<Vec<i8>> = self
            .col_adjacency()
            .into_iter()
            .map(|col| {
                let mut pattern = vec![0i8; self.n_comments];
                for (i, s) in col {
                    pattern[i] = s.as_i8();
                }
                pattern
            })
            .collect();
        MatrixStats {
            n_observed,
            sparsity,
            n_unique_patterns: patterns.len(),
            upvote_fraction,
        }
    }
}

fn reindex(seen: &[bool]) -> Vec<Option<usize>> {
    let mut next = 0;
    seen.iter()
        .map(|&b| {
            b.then(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

impl fmt::Display for PartialSignMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.to_dense() {
            let cells: Vec<&str> = row
                .iter()
                .map(|v| match v {
                    1 => "+",
                    -1 => "-",
                    _ => "?",
                })
                .collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// On-disk JSON layout. Entries are `[row, col, sign]` sorted by `(row, col)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub n_comments: usize,
    pub n_voters: usize,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub entries: Vec<(usize, usize, i8)>,
}

impl From<&PartialSignMatrix> for MatrixDocument {
    fn from(m: &PartialSignMatrix) -> Self {
        MatrixDocument {
            n_comments: m.n_comments,
            n_voters: m.n_voters,
            row_labels: m.row_labels.clone(),
            col_labels: m.col_labels.clone(),
            entries: m.entries().map(|(i, j, s)| (i, j, s.as_i8())).collect(),
        }
    }
}

impl TryFrom<MatrixDocument> for PartialSignMatrix {
    type Error = Error;

    fn try_from(doc: MatrixDocument) -> Result<Self> {
        if doc.row_labels.len() != doc.n_comments {
            return Err(Error::Parse(format!(
                "{} row labels for {} comments",
                doc.row_labels.len(),
                doc.n_comments
            )));
        }
        if doc.col_labels.len() != doc.n_voters {
            return Err(Error::Parse(format!(
                "{} column labels for {} voters",
                doc.col_labels.len(),
                doc.n_voters
            )));
        }
        let mut entries = Vec::with_capacity(doc.entries.len());
        for (i, j, s) in doc.entries {
            let sign = Sign::from_i8(s)
                .ok_or_else(|| Error::Parse(format!("entry ({i}, {j}) has sign {s}")))?;
            entries.push(((i, j), sign));
        }
        PartialSignMatrix::with_labels(doc.row_labels, doc.col_labels, entries)
    }
}

impl PartialSignMatrix {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&MatrixDocument::from(self)).expect("matrix document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MatrixDocument = serde_json::from_str(text)?;
        doc.try_into()
    }
}

#[derive(Debug, Deserialize)]
struct VoteRecord {
    comment_id: String,
    voter_id: String,
    vote: String,
}

impl TryFrom<VoteRecord> for Vote {
    type Error = Error;

    fn try_from(rec: VoteRecord) -> Result<Vote> {
        Ok(Vote {
            direction: rec.vote.parse()?,
            comment_id: rec.comment_id,
            voter_id: rec.voter_id,
        })
    }
}

/// Reads `comment_id,voter_id,vote` CSV records.
pub fn read_votes_csv<R: Read>(reader: R) -> Result<Vec<Vote>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["comment_id", "voter_id", "vote"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Parse(format!(
            "expected header comment_id,voter_id,vote, found {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    rdr.deserialize::<VoteRecord>()
        .map(|rec| rec.map_err(Error::from).and_then(Vote::try_from))
        .collect()
}

/// Reads a JSON array of `{comment_id, voter_id, vote}` objects.
pub fn read_votes_json(text: &str) -> Result<Vec<Vote>> {
    let records: Vec<VoteRecord> = serde_json::from_str(text)?;
    records.into_iter().map(Vote::try_from).collect()
}

/// Reads votes from a file, choosing JSON when the content starts with `[`.
pub fn read_votes_file(path: &Path) -> Result<Vec<Vote>> {
    let text = std::fs::read_to_string(path)?;
    read_votes_str(&text)
}

pub fn read_votes_str(text: &str) -> Result<Vec<Vote>> {
    if text.trim_start().starts_with('[') {
        read_votes_json(text)
    } else if text.trim().is_empty() {
        Ok(Vec::new())
    } else {
        read_votes_csv(text.as_bytes())
    }
}

pub fn write_votes_csv<W: std::io::Write>(writer: W, votes: &[Vote]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["comment_id", "voter_id", "vote"])?;
    for v in votes {
        let dir = match v.direction {
            Direction::Up => "up",
            Direction::Down => "down",
        };
        wtr.write_record([v.comment_id.as_str(), v.voter_id.as_str(), dir])?;
    }
    wtr.flush()?;
    Ok(())
}

impl PartialSignMatrix {
    /// Vote records in `(row, col)` order.
    pub fn to_votes(&self) -> Vec<Vote> {
        self.entries()
            .map(|(i, j, s)| {
                Vote::new(
                    self.row_labels[i].clone(),
                    self.col_labels[j].clone(),
                    s.direction(),
                )
            })
            .collect()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn second_pattern() -> PartialSignMatrix {
        PartialSignMatrix::from_dense(&[&[1, 1, 1], &[1, -1, 1], &[1, 1, 1]])
    }

    #[test]
    fn toy_discussion_maps_votes_to_signs() {
        use Direction::*;
        // Four comments, five voters, eight votes; everything else is "?".
        let votes = vec![
            Vote::new("c1", "alice", Up),
            Vote::new("c1", "bob", Down),
            Vote::new("c2", "alice", Up),
            Vote::new("c2", "carol", Up),
            Vote::new("c3", "bob", Up),
            Vote::new("c3", "dave", Down),
            Vote::new("c4", "erin", Up),
            Vote::new("c4", "alice", Down),
        ];
        let m = PartialSignMatrix::from_vote_triplets(&votes).unwrap();
        assert_eq!(m.n_comments(), 4);
        assert_eq!(m.n_voters(), 5);
        assert_eq!(m.col_labels(), ["alice", "bob", "carol", "dave", "erin"]);
        assert_eq!(
            m.to_dense(),
            vec![
                vec![1, -1, 0, 0, 0],
                vec![1, 0, 1, 0, 0],
                vec![0, 1, 0, -1, 0],
                vec![-1, 0, 0, 0, 1],
            ]
        );
    }

    #[test]
    fn empty_votes_give_empty_matrix() {
        let m = PartialSignMatrix::from_vote_triplets(&[]).unwrap();
        assert_eq!((m.n_comments(), m.n_voters(), m.n_observed()), (0, 0, 0));
    }

    #[test]
    fn duplicate_votes_collapse() {
        let v = Vote::new("c1", "v1", Direction::Up);
        let m = PartialSignMatrix::from_vote_triplets(&[v.clone(), v]).unwrap();
        assert_eq!(m.to_dense(), vec![vec![1]]);
    }

    #[test]
    fn conflicting_votes_are_rejected() {
        let err = PartialSignMatrix::from_vote_triplets(&[
            Vote::new("c1", "v1", Direction::Up),
            Vote::new("c1", "v1", Direction::Down),
        ])
        .unwrap_err();
        match err {
            Error::ConflictingVote {
                comment_id,
                voter_id,
            } => {
                assert_eq!((comment_id.as_str(), voter_id.as_str()), ("c1", "v1"))
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn transpose_small() {
        let m = PartialSignMatrix::from_dense(&[&[1, 0]]);
        let t = m.transpose();
        assert_eq!(t.to_dense(), vec![vec![1], vec![0]]);
        assert_eq!(t.row_labels(), m.col_labels());
    }

    #[test]
    fn transpose_second_pattern_keeps_downvote_on_diagonal() {
        let t = second_pattern().transpose();
        assert_eq!(t.get(1, 1), Some(Sign::Minus));
        assert_eq!(t.entries().filter(|e| e.2 == Sign::Minus).count(), 1);
    }

    #[test]
    fn prune_drops_unobserved_column() {
        let m = PartialSignMatrix::from_dense(&[&[1, 0, -1], &[-1, 0, 1]]);
        let p = m.prune(0).into_option().unwrap();
        assert_eq!(p.to_dense(), vec![vec![1, -1], vec![-1, 1]]);
        assert_eq!(p.col_labels(), ["v0", "v2"]);
    }

    #[test]
    fn prune_enforces_minimum_comment_count() {
        let rows: Vec<Vec<i8>> = vec![vec![1, -1, 1]; 9];
        let refs: Vec<&[i8]> = rows.iter().map(|r| r.as_slice()).collect();
        let m = PartialSignMatrix::from_dense(&refs);
        assert_eq!(m.prune(10), Pruned::Empty);
        assert!(matches!(m.prune(9), Pruned::Kept(_)));
    }

    #[test]
    fn prune_is_identity_on_clean_matrix() {
        let m = second_pattern();
        assert_eq!(m.prune(0), Pruned::Kept(m.clone()));
    }

    #[test]
    fn prune_of_empty_is_empty() {
        let m = PartialSignMatrix::from_vote_triplets(&[]).unwrap();
        assert_eq!(m.prune(0), Pruned::Empty);
    }

    #[test]
    fn stats_examples() {
        let ones = PartialSignMatrix::from_dense(&[&[1, 1, 1], &[1, 1, 1], &[1, 1, 1]]);
        let s = ones.stats();
        assert_eq!(s.sparsity, 1.0);
        assert_eq!(s.n_unique_patterns, 1);
        assert_eq!(s.upvote_fraction, 1.0);

        assert_eq!(second_pattern().stats().n_unique_patterns, 2);

        let half = PartialSignMatrix::from_dense(&[&[1, 0], &[0, -1]]);
        let s = half.stats();
        assert_eq!(s.sparsity, 0.5);
        assert_eq!(s.upvote_fraction, 0.5);
        assert_eq!(s.n_unique_patterns, 2);
    }

    #[test]
    fn unknown_is_a_distinct_pattern_symbol() {
        let m = PartialSignMatrix::from_dense(&[&[1, 1], &[0, 1]]);
        assert_eq!(m.stats().n_unique_patterns, 2);
    }

    #[test]
    fn csv_parsing_is_case_insensitive() {
        let text = "comment_id,voter_id,vote\nc1,v1,UP\nc1,v2,Down\n";
        let votes = read_votes_str(text).unwrap();
        assert_eq!(votes[0].direction, Direction::Up);
        assert_eq!(votes[1].direction, Direction::Down);
    }

    #[test]
    fn csv_rejects_bad_header_and_direction() {
        assert!(matches!(
            read_votes_str("a,b,c\nx,y,up\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            read_votes_str("comment_id,voter_id,vote\nx,y,sideways\n"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn json_votes_parse() {
        let text = r#"[{"comment_id":"c1","voter_id":"v1","vote":"up"},{"comment_id":"c2","voter_id":"v1","vote":"down"}]"#;
        let m = PartialSignMatrix::from_vote_triplets(&read_votes_str(text).unwrap()).unwrap();
        assert_eq!(m.to_dense(), vec![vec![1], vec![-1]]);
    }

    #[test]
    fn json_output_is_sorted() {
        let m = PartialSignMatrix::from_dense(&[&[0, -1], &[1, 1]]);
        assert_eq!(
            m.to_json(),
            r#"{"n_comments":2,"n_voters":2,"row_labels":["c0","c1"],"col_labels":["v0","v1"],"entries":[[0,1,-1],[1,0,1],[1,1,1]]}"#
        );
    }

    fn arb_votes() -> impl Strategy<Value = Vec<Vote>> {
        proptest::collection::vec((0..6u8, 0..6u8, any::<bool>()), 0..30).prop_map(|triples| {
            let mut seen = HashSet::new();
            triples
                .into_iter()
                .filter(|(c, v, _)| seen.insert((*c, *v)))
                .map(|(c, v, up)| {
                    Vote::new(
                        format!("comment-{c}"),
                        format!("voter-{v}"),
                        if up { Direction::Up } else { Direction::Down },
                    )
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn json_and_csv_round_trip(votes in arb_votes()) {
            let m = PartialSignMatrix::from_vote_triplets(&votes).unwrap();
            let back = PartialSignMatrix::from_json(&m.to_json()).unwrap();
            prop_assert_eq!(&back, &m);

            let mut buf = Vec::new();
            write_votes_csv(&mut buf, &m.to_votes()).unwrap();
            let reread = read_votes_str(std::str::from_utf8(&buf).unwrap()).unwrap();
            let m2 = PartialSignMatrix::from_vote_triplets(&reread).unwrap();
            prop_assert_eq!(m2.stats(), m.stats());
            let mut a: Vec<_> = m.to_votes().into_iter().map(|v| (v.comment_id, v.voter_id, v.direction)).collect();
            let mut b: Vec<_> = m2.to_votes().into_iter().map(|v| (v.comment_id, v.voter_id, v.direction)).collect();
            a.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
            b.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
            prop_assert_eq!(a, b);
        }

        #[test]
        fn transpose_properties(votes in arb_votes()) {
            let m = PartialSignMatrix::from_vote_triplets(&votes).unwrap();
            let t = m.transpose();
            prop_assert_eq!(t.transpose(), m.clone());
            prop_assert_eq!(t.n_observed(), m.n_observed());
            prop_assert_eq!(t.stats().upvote_fraction, m.stats().upvote_fraction);
            prop_assert_eq!((t.n_comments(), t.n_voters()), (m.n_voters(), m.n_comments()));
        }

        #[test]
        fn prune_keeps_everything_observed(dense in proptest::collection::vec(proptest::collection::vec(-1i8..=1, 5), 1..6)) {
            let refs: Vec<&[i8]> = dense.iter().map(|r| r.as_slice()).collect();
            let m = PartialSignMatrix::from_dense(&refs);
            match m.prune(0) {
                Pruned::Empty => prop_assert!(m.is_empty()),
                Pruned::Kept(p) => {
                    prop_assert!(p.n_comments() <= m.n_comments());
                    prop_assert!(p.n_voters() <= m.n_voters());
                    prop_assert_eq!(p.n_observed(), m.n_observed());
                    prop_assert!(p.row_adjacency().iter().all(|r| !r.is_empty()));
                    prop_assert!(p.col_adjacency().iter().all(|c| !c.is_empty()));
                }
            }
        }
    }
}
