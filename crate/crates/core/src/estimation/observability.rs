//! Observability blocks and least-squares weight recovery.

use nalgebra::{DMatrix, SVD};

use super::WeightMatrix;
use crate::error::{input, Error, Result};
use crate::topology::{CommGraph, NodeId};

/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

/// Rows `e_j` for every `j ∈ N_i`, in id order.
pub fn selection_matrix(g: &CommGraph, i: NodeId) -> Result<DMatrix<f64>> {
    let nbrs = g.neighbors(i)?;
    let mut c = DMatrix::zeros(nbrs.len(), g.n());
    for (row, &j) in nbrs.iter().enumerate() {
        c[(row, j)] = 1.0;
    }
    Ok(c)
}

/// `[C W^a; C W^{a+1}; …; C W^b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservabilityBlock {
    pub a: usize,
    pub b: usize,
    pub matrix: DMatrix<f64>,
}

pub fn observability_window(
    c: &DMatrix<f64>,
    w: &WeightMatrix,
    a: usize,
    b: usize,
) -> Result<ObservabilityBlock> {
    if b < a {
        return input(format!("window end {b} precedes start {a}"));
    }
    if c.ncols() != w.n() {
        return input(format!("C has {} columns but W is {}x{}", c.ncols(), w.n(), w.n()));
    }
    let p = c.nrows();
    let n = w.n();
    let mut out = DMatrix::zeros(p * (b - a + 1), n);
    let mut block = c.clone();
    for _ in 0..a {
        block = &block * w.matrix();
    }
    for (slot, _) in (a..=b).enumerate() {
        out.view_mut((slot * p, 0), (p, n)).copy_from(&block);
        block = &block * w.matrix();
    }
    Ok(ObservabilityBlock { a, b, matrix: out })
}

/// Early (`0..=L+1`) and late (`1..=L+2`) windows for window parameter `L`.
pub fn observer_windows(
    c: &DMatrix<f64>,
    w: &WeightMatrix,
    l: usize,
) -> Result<(ObservabilityBlock, ObservabilityBlock)> {
    Ok((observability_window(c, w, 0, l + 1)?, observability_window(c, w, 1, l + 2)?))
}

#[derive(Clone, Debug)]
pub struct Recovery {
    pub w: WeightMatrix,
    /// `‖O_early·Ŵ − O_late‖_F`
    pub residual: f64,
    pub rank: usize,
}

/// Least-squares `Ŵ` with `O_early·Ŵ = O_late`.
pub fn recover_weight_matrix(early: &ObservabilityBlock, late: &ObservabilityBlock) -> Result<Recovery> {
    let (oe, ol) = (&early.matrix, &late.matrix);
    if oe.shape() != ol.shape() {
        return input(format!("block shapes differ: {:?} vs {:?}", oe.shape(), ol.shape()));
    }
    let columns = oe.ncols();
    let svd = SVD::new(oe.clone(), true, true);
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_TOL * max;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    if rank < columns {
        return Err(Error::RankDeficient { rank, columns });
    }
    let w = svd.solve(ol, cutoff).map_err(|e| Error::Domain(e.to_string()))?;
    let residual = (oe * &w - ol).norm();
    Ok(Recovery {
        w: WeightMatrix(w),
        residual,
        rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{weight_from_adjacency, BinaryMatrix};

    fn path3_weights() -> WeightMatrix {
        let g = CommGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        weight_from_adjacency(&BinaryMatrix::from_graph(&g)).unwrap()
    }

    #[test]
    fn zero_window_is_selection() {
        let g = CommGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let c = selection_matrix(&g, 0).unwrap();
        assert_eq!(c.nrows(), 2);
        let block = observability_window(&c, &path3_weights(), 0, 0).unwrap();
        assert_eq!(block.matrix, c);
        let id = observability_window(&c, &WeightMatrix::identity(3), 0, 3).unwrap();
        assert_eq!(id.matrix.nrows(), 8);
        for t in 0..4 {
            assert_eq!(id.matrix.rows(2 * t, 2).into_owned(), c);
        }
        assert!(observability_window(&c, &path3_weights(), 2, 1).is_err());
    }

    #[test]
    fn window_matches_matrix_powers() {
        let g = CommGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let c = selection_matrix(&g, 2).unwrap();
        let w = path3_weights();
        let block = observability_window(&c, &w, 0, 2).unwrap();
        let w2 = w.matrix() * w.matrix();
        assert!((block.matrix.rows(0, 2) - &c).norm() < 1e-15);
        assert!((block.matrix.rows(2, 2) - &c * w.matrix()).norm() < 1e-15);
        assert!((block.matrix.rows(4, 2) - &c * w2).norm() < 1e-15);
    }

    #[test]
    fn identity_recovery() {
        let c = DMatrix::<f64>::identity(3, 3);
        let w = WeightMatrix::identity(3);
        let (e, l) = observer_windows(&c, &w, 0).unwrap();
        let rec = recover_weight_matrix(&e, &l).unwrap();
        assert!(rec.w.frobenius_distance(&w) < 1e-12);
        assert!(rec.residual < 1e-12);
    }

    #[test]
    fn disconnected_observer_is_rank_deficient() {
        let g = CommGraph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let w = weight_from_adjacency(&BinaryMatrix::from_graph(&g)).unwrap();
        let c = selection_matrix(&g, 0).unwrap();
        let (e, l) = observer_windows(&c, &w, 3).unwrap();
        assert!(matches!(
            recover_weight_matrix(&e, &l),
            Err(Error::RankDeficient { rank: 2, columns: 4 })
        ));
    }
}
