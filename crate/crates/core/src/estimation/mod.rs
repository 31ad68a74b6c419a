//! Adjacency flooding over trusted links, weight matrices and weight recovery
//! from observability blocks.

mod fram;
mod observability;
mod security;

use std::fmt;
use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{input, Result};
use crate::topology::{CommGraph, NodeId};

pub use fram::{fram, fram_broadcasts, FramState};
pub use observability::{
    observability_window, observer_windows, recover_weight_matrix, selection_matrix,
    ObservabilityBlock, Recovery,
};
pub use security::{false_security, perceived_vs_actual_connectivity, FalseSecurity, Tolerances};

/// Square 0/1 matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    n: usize,
    data: Vec<u8>,
}

impl BinaryMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0; n * n],
        }
    }

    /// Adjacency with ones on the diagonal.
    pub fn from_graph(g: &CommGraph) -> Self {
        let mut m = Self::zeros(g.n());
        for i in 0..g.n() {
            m.set(i, i, true);
            for &j in g.adjacent(i) {
                m.set(i, j, true);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return input(format!("row {i} has {} entries, expected {n}", row.len()));
            }
            for (j, &x) in row.iter().enumerate() {
                if x > 1 {
                    return input(format!("entry ({i},{j}) is {x}, expected 0 or 1"));
                }
                m.set(i, j, x == 1);
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.n + j] == 1
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.data[i * self.n + j] = u8::from(value);
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Leading `k × k` block.
    pub fn top_left(&self, k: usize) -> BinaryMatrix {
        let mut m = Self::zeros(k);
        for i in 0..k {
            for j in 0..k {
                m.set(i, j, self.get(i, j));
            }
        }
        m
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for i in 0..self.n {
            w.write_record(self.row(i).iter().map(u8::to_string))?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(u8::to_string).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Adjacency as known to one robot: each row is either missing or complete.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialAdjacency {
    owner: NodeId,
    rows: Vec<Option<Vec<u8>>>,
}

impl PartialAdjacency {
    pub fn new(owner: NodeId, n: usize) -> Self {
        Self {
            owner,
            rows: vec![None; n],
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, k: NodeId) -> Option<&[u8]> {
        self.rows[k].as_deref()
    }

    pub fn has_row(&self, k: NodeId) -> bool {
        self.rows[k].is_some()
    }

    /// Fills row `k` if it is still missing. Returns whether it was inserted.
    pub fn fill_row(&mut self, k: NodeId, row: Vec<u8>) -> bool {
        debug_assert_eq!(row.len(), self.rows.len());
        if self.rows[k].is_some() {
            return false;
        }
        self.rows[k] = Some(row);
        true
    }

    pub fn missing_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.is_none()).count()
    }

    /// Rows rendered with `-` for missing data, entries space-separated.
    pub fn render(&self) -> String {
        let n = self.rows.len();
        let mut s = String::new();
        for row in &self.rows {
            let cells: Vec<String> = match row {
                Some(r) => r.iter().map(u8::to_string).collect(),
                None => vec!["-".to_string(); n],
            };
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        let n = self.rows.len();
        for row in &self.rows {
            match row {
                Some(r) => w.write_record(r.iter().map(u8::to_string))?,
                None => w.write_record(std::iter::repeat_n("-", n))?,
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Real `n × n` matrix used as consensus weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix(pub DMatrix<f64>);

impl WeightMatrix {
    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.0.row_iter().all(|row| {
            row.iter().all(|&x| x >= -tol) && (row.sum() - 1.0).abs() <= tol
        })
    }

    pub fn frobenius_distance(&self, other: &WeightMatrix) -> f64 {
        (&self.0 - &other.0).norm()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for row in self.0.row_iter() {
            w.write_record(row.iter().map(|x| format!("{x:.17}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Uniform row-stochastic weights `W(i,j) = 1/|N_i|` on the support of `adj`.
pub fn weight_from_adjacency(adj: &BinaryMatrix) -> Result<WeightMatrix> {
    let n = adj.n();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        let deg = adj.row(i).iter().filter(|&&x| x == 1).count();
        if deg == 0 {
            return input(format!("row {i} has no neighbors"));
        }
        let share = 1.0 / deg as f64;
        for j in 0..n {
            if adj.get(i, j) {
                w[(i, j)] = share;
            }
        }
    }
    Ok(WeightMatrix(w))
}

/// Metropolis weights `1/(1 + max(d_i, d_j))` with the remainder on the diagonal.
pub fn metropolis_weights(g: &CommGraph) -> WeightMatrix {
    let n = g.n();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut off = 0.0;
        for &j in g.adjacent(i) {
            let x = 1.0 / (1.0 + g.degree(i).max(g.degree(j)) as f64);
            w[(i, j)] = x;
            off += x;
        }
        w[(i, i)] = 1.0 - off;
    }
    WeightMatrix(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::fixture_graph;

    #[test]
    fn uniform_weights() {
        let single = BinaryMatrix::from_rows(&[vec![1]]).unwrap();
        assert_eq!(weight_from_adjacency(&single).unwrap().0[(0, 0)], 1.0);
        let (g, _) = fixture_graph("estimation5").unwrap();
        let w = weight_from_adjacency(&BinaryMatrix::from_graph(&g)).unwrap();
        let third = 1.0 / 3.0;
        let row: Vec<f64> = w.0.row(0).iter().copied().collect();
        assert_eq!(row, vec![third, 0.0, third, third, 0.0]);
        assert!(w.is_row_stochastic(1e-12));
        assert!(weight_from_adjacency(&BinaryMatrix::zeros(2)).is_err());
    }

    #[test]
    fn metropolis_is_doubly_stochastic() {
        let (g, _) = fixture_graph("fig4").unwrap();
        let w = metropolis_weights(&g);
        assert!(w.is_row_stochastic(1e-12));
        assert!((&w.0 - w.0.transpose()).norm() < 1e-12);
    }

    #[test]
    fn partial_rendering() {
        let mut p = PartialAdjacency::new(0, 3);
        assert!(p.fill_row(1, vec![0, 1, 1]));
        assert!(!p.fill_row(1, vec![1, 1, 1]));
        assert_eq!(p.render(), "- - -\n0 1 1\n- - -\n");
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "-,-,-\n0,1,1\n-,-,-\n");
        assert_eq!(p.missing_rows(), 2);
    }

    #[test]
    fn binary_matrix_validation() {
        assert!(BinaryMatrix::from_rows(&[vec![1, 0]]).is_err());
        assert!(BinaryMatrix::from_rows(&[vec![2]]).is_err());
    }
}
