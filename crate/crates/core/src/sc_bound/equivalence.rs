/// Disjoint sets over the unknown cells of a matrix, one universe per column.
///
/// Each root keeps the list of rows in its class so an assignment can be
/// written to every member at once.
#[derive(Debug, Clone)]
pub struct CellClasses {
    n_rows: usize,
    parent: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl CellClasses {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        let n = n_rows * n_cols;
        CellClasses {
            n_rows,
            parent: (0..n).collect(),
            members: (0..n).map(|k| vec![k % n_rows.max(1)]).collect(),
        }
    }

    fn cell(&self, row: usize, col: usize) -> usize {
        col * self.n_rows + row
    }

    fn find(&mut self, mut k: usize) -> usize {
        let mut root = k;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[k] != root {
            let next = self.parent[k];
            self.parent[k] = root;
            k = next;
        }
        root
    }

    pub fn same_class(&mut self, col: usize, a: usize, b: usize) -> bool {
        let (ka, kb) = (self.cell(a, col), self.cell(b, col));
        self.find(ka) == self.find(kb)
    }

    /// Records `s[a][col] ≡ s[b][col]`.
    pub fn join(&mut self, col: usize, a: usize, b: usize) {
        let (ka, kb) = (self.cell(a, col), self.cell(b, col));
        let (ra, rb) = (self.find(ka), self.find(kb));
        if ra == rb {
            return;
        }
        let (big, small) = if self.members[ra].len() >= self.members[rb].len() {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        let moved = std::mem::take(&mut self.members[small]);
        self.members[big].extend(moved);
    }

    /// Rows whose cell in `col` is equivalent to `row`'s (including `row`).
    pub fn class_rows(&mut self, col: usize, row: usize) -> &[usize] {
        let k = self.cell(row, col);
        let root = self.find(k);
        &self.members[root]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joins_stay_within_a_column() {
        let mut c = CellClasses::new(4, 2);
        c.join(1, 0, 2);
        c.join(1, 2, 3);
        let mut rows = c.class_rows(1, 3).to_vec();
        rows.sort();
        assert_eq!(rows, vec![0, 2, 3]);
        assert_eq!(c.class_rows(0, 0), &[0]);
        assert!(!c.same_class(0, 0, 2));
        assert!(c.same_class(1, 0, 3));
    }
}
