use nalgebra::DMatrix;

use super::NavGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IncidenceMode {
    /// Entries in `{0, 1}`.
    Undirected,
    /// Entries in `{-1, 0, +1}`: `-1` at the source, `+1` at the destination.
    Directed,
}

/// Sparse node-edge incidence matrix in compressed-row form.
///
/// A graph incidence matrix is `n x m`; its transpose (the dual hypergraph
/// incidence) is `m x n` and uses the same type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    mode: IncidenceMode,
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<i8>,
}

/// Incidence matrix of `graph`; column `e` has exactly two nonzeros, at the
/// endpoints of edge `e`.
pub fn incidence(graph: &NavGraph, mode: IncidenceMode) -> IncidenceMatrix {
    let src_value = match mode {
        IncidenceMode::Undirected => 1,
        IncidenceMode::Directed => -1,
    };
    let mut triplets = Vec::with_capacity(2 * graph.edge_count());
    for e in graph.edges() {
        triplets.push((e.src, e.id, src_value));
        triplets.push((e.dst, e.id, 1));
    }
    IncidenceMatrix::from_triplets(mode, graph.node_count(), graph.edge_count(), triplets)
}

impl IncidenceMatrix {
    /// Builds the matrix from `(row, col, value)` triplets; zero values are dropped.
    ///
    /// Panics when a triplet lies outside the shape or is repeated.
    pub fn from_triplets(
        mode: IncidenceMode,
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, i8)>,
    ) -> Self {
        triplets.retain(|t| t.2 != 0);
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; rows + 1];
        for w in triplets.windows(2) {
            assert!((w[0].0, w[0].1) != (w[1].0, w[1].1), "repeated incidence entry");
        }
        for &(r, c, _) in &triplets {
            assert!(r < rows && c < cols, "incidence entry ({r}, {c}) outside {rows}x{cols}");
            row_ptr[r + 1] += 1;
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let col_idx = triplets.iter().map(|t| t.1).collect();
        let values = triplets.iter().map(|t| t.2).collect();
        Self { mode, rows, cols, row_ptr, col_idx, values }
    }

    pub fn mode(&self) -> IncidenceMode {
        self.mode
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Nonzero `(col, value)` pairs of row `r`, in ascending column order.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> i8 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(i) => self.values[span.start + i],
            Err(_) => 0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, i8)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn transpose(&self) -> Self {
        let triplets = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.mode, self.cols, self.rows, triplets)
    }

    /// Per-column sums, for checking the two-nonzeros-per-column structure.
    pub fn column_sums(&self) -> Vec<i64> {
        let mut sums = vec![0i64; self.cols];
        for (_, c, v) in self.triplets() {
            sums[c] += i64::from(v);
        }
        sums
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut dense = DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            dense[(r, c)] = f64::from(v);
        }
        dense
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    #[test]
    fn single_edge_columns() {
        let g = build_graph(&[("A", "B")], &["A", "B"]).unwrap();
        let d = incidence(&g, IncidenceMode::Directed);
        assert_eq!((d.get(0, 0), d.get(1, 0)), (-1, 1));
        let u = incidence(&g, IncidenceMode::Undirected);
        assert_eq!((u.get(0, 0), u.get(1, 0)), (1, 1));
    }

    #[test]
    fn path_graph_rows() {
        let g = build_graph(&[("A", "B"), ("B", "C")], &["A", "B", "C"]).unwrap();
        let u = incidence(&g, IncidenceMode::Undirected);
        assert_eq!(u.shape(), (3, 2));
        assert_eq!(u.row(1).collect::<Vec<_>>(), vec![(0, 1), (1, 1)]);
        assert_eq!(u.row(0).collect::<Vec<_>>(), vec![(0, 1)]);
        let d = incidence(&g, IncidenceMode::Directed);
        assert_eq!(d.row(1).collect::<Vec<_>>(), vec![(0, 1), (1, -1)]);
        assert_eq!(d.column_sums(), vec![0, 0]);
        assert_eq!(u.column_sums(), vec![2, 2]);
    }

    #[test]
    fn transpose_swaps_shape() {
        let g = build_graph(&[("A", "B"), ("B", "C"), ("C", "A")], &["A", "B", "C"]).unwrap();
        let d = incidence(&g, IncidenceMode::Directed);
        let t = d.transpose();
        assert_eq!(t.shape(), (3, 3));
        assert_eq!(t.to_dense(), d.to_dense().transpose());
        assert_eq!(t.transpose(), d);
    }
}
