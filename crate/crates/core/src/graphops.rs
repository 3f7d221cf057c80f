//! Edge indexing and the linear maps between edge-weight vectors and graph
//! matrices.
//!
//! A graph on `p` nodes is parametrised by `m = p(p-1)/2` edge weights stored
//! column by column over the strict lower triangle: `(1,0), (2,0), ..,
//! (p-1,0), (2,1), ..`. In 1-based terms the pair `i > j` lands at
//! `k = i - j + (j-1)(2p-j)/2`. [`EdgeIndexMap`] is the only place that knows
//! about this layout; everything else goes through it.
//!
//! The Laplacian map `L` sends `w` to the matrix with `-w` off the diagonal
//! and row sums of zero; the adjacency map `A` puts `+w` off the diagonal and
//! zeros on it. Both adjoints are provided so that gradients never need the
//! `m x m` Gram matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of node pairs for a graph with `p` nodes.
pub fn edge_count(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

/// Bijection between strictly-lower-triangular pairs `(i, j)`, `i > j`, and
/// positions in a weight vector. All indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeIndexMap {
    p: usize,
}

impl EdgeIndexMap {
    pub fn new(p: usize) -> Self {
        Self { p }
    }

    pub fn nodes(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        edge_count(self.p)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of the pair `{i, j}`; the order of the two nodes is irrelevant.
    pub fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i > j { (i, j) } else { (j, i) };
        debug_assert!(i < self.p && i != j);
        // 1-based: k = i - j + (j-1)(2p-j)/2, shifted to 0-based on all three.
        i - j - 1 + j * (2 * self.p - j - 1) / 2
    }

    /// Inverse of [`EdgeIndexMap::index`], returning `(i, j)` with `i > j`.
    pub fn pair(&self, k: usize) -> (usize, usize) {
        debug_assert!(k < self.len());
        let mut rem = k;
        let mut j = 0;
        loop {
            let col = self.p - j - 1;
            if rem < col {
                return (j + 1 + rem, j);
            }
            rem -= col;
            j += 1;
        }
    }

    /// Iterates `(k, i, j)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let p = self.p;
        (0..p)
            .flat_map(move |j| (j + 1..p).map(move |i| (i, j)))
            .enumerate()
            .map(|(k, (i, j))| (k, i, j))
    }
}

/// Recovers `p` from a weight-vector length, if the length is triangular.
pub fn nodes_for_len(m: usize) -> Option<usize> {
    let p = ((1.0 + (1.0 + 8.0 * m as f64).sqrt()) / 2.0).round() as usize;
    (edge_count(p) == m).then_some(p)
}

/// Non-negative edge weights of a graph on `p` nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    p: usize,
    values: Vec<f64>,
}

impl WeightVector {
    pub fn new(p: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != edge_count(p) {
            return Err(Error::structure(format!(
                "weight vector for p = {p} needs {} entries, got {}",
                edge_count(p),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::domain(format!(
                "edge weight {k} is {} (must be finite and non-negative)",
                values[k]
            )));
        }
        Ok(Self { p, values })
    }

    pub fn zeros(p: usize) -> Self {
        Self {
            p,
            values: vec![0.0; edge_count(p)],
        }
    }

    /// Clips each entry at zero. Used after projected-gradient steps.
    pub fn from_projection(p: usize, raw: Vec<f64>) -> Result<Self> {
        Self::new(p, raw.into_iter().map(|v| v.max(0.0)).collect())
    }

    pub fn nodes(&self) -> usize {
        self.p
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn index_map(&self) -> EdgeIndexMap {
        EdgeIndexMap::new(self.p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.index_map().index(i, j)]
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        lap_apply_unchecked(self.p, &self.values)
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        adj_apply_unchecked(self.p, &self.values)
    }

    /// Reads the weights off a Laplacian-like matrix as `max(-theta_ij, 0)`.
    pub fn from_laplacian(theta: &DMatrix<f64>) -> Result<Self> {
        let raw = lap_offdiag(theta)?;
        Self::from_projection(theta.nrows(), raw)
    }
}

fn check_len(p: usize, w: &[f64]) -> Result<()> {
    if w.len() != edge_count(p) {
        return Err(Error::structure(format!(
            "expected {} edge weights for p = {p}, got {}",
            edge_count(p),
            w.len()
        )));
    }
    Ok(())
}

fn check_square(y: &DMatrix<f64>) -> Result<usize> {
    if y.nrows() != y.ncols() {
        return Err(Error::structure(format!(
            "expected a square matrix, got {}x{}",
            y.nrows(),
            y.ncols()
        )));
    }
    Ok(y.nrows())
}

/// The Laplacian map: `-w` off the diagonal, row sums zero.
pub fn lap_apply(p: usize, w: &[f64]) -> Result<DMatrix<f64>> {
    check_len(p, w)?;
    Ok(lap_apply_unchecked(p, w))
}

pub(crate) fn lap_apply_unchecked(p: usize, w: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(p, p);
    for (k, i, j) in EdgeIndexMap::new(p).iter() {
        let v = w[k];
        out[(i, j)] = -v;
        out[(j, i)] = -v;
        out[(i, i)] += v;
        out[(j, j)] += v;
    }
    out
}

/// Adjoint of [`lap_apply`]: `y_ii - y_ij - y_ji + y_jj` per pair.
pub fn lap_adjoint(y: &DMatrix<f64>) -> Result<Vec<f64>> {
    let p = check_square(y)?;
    Ok(EdgeIndexMap::new(p)
        .iter()
        .map(|(_, i, j)| y[(i, i)] - y[(i, j)] - y[(j, i)] + y[(j, j)])
        .collect())
}

/// The adjacency map: `+w` off the diagonal, zero diagonal.
pub fn adj_apply(p: usize, w: &[f64]) -> Result<DMatrix<f64>> {
    check_len(p, w)?;
    Ok(adj_apply_unchecked(p, w))
}

pub(crate) fn adj_apply_unchecked(p: usize, w: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(p, p);
    for (k, i, j) in EdgeIndexMap::new(p).iter() {
        out[(i, j)] = w[k];
        out[(j, i)] = w[k];
    }
    out
}

/// Adjoint of [`adj_apply`]: `y_ij + y_ji` per pair.
pub fn adj_adjoint(y: &DMatrix<f64>) -> Result<Vec<f64>> {
    let p = check_square(y)?;
    Ok(EdgeIndexMap::new(p)
        .iter()
        .map(|(_, i, j)| y[(i, j)] + y[(j, i)])
        .collect())
}

/// `-y_ij` for every pair: a left inverse of `L` on Laplacian matrices.
pub fn lap_offdiag(y: &DMatrix<f64>) -> Result<Vec<f64>> {
    let p = check_square(y)?;
    Ok(EdgeIndexMap::new(p)
        .iter()
        .map(|(_, i, j)| -0.5 * (y[(i, j)] + y[(j, i)]))
        .collect())
}

/// `L*(L w)`, applied as a composition.
pub fn lap_gram(p: usize, w: &[f64]) -> Vec<f64> {
    lap_adjoint_unchecked(&lap_apply_unchecked(p, w))
}

/// `A*(A w)`; the Gram operator of `A` is exactly `2 I`.
pub fn adj_gram(w: &[f64]) -> Vec<f64> {
    w.iter().map(|v| 2.0 * v).collect()
}

pub(crate) fn lap_adjoint_unchecked(y: &DMatrix<f64>) -> Vec<f64> {
    lap_adjoint(y).expect("square by construction")
}

pub(crate) fn adj_adjoint_unchecked(y: &DMatrix<f64>) -> Vec<f64> {
    adj_adjoint(y).expect("square by construction")
}

/// Operator norms `(|L|, |A|) = (sqrt(2p), sqrt(2))` with respect to the
/// Euclidean norm on weights and the Frobenius norm on matrices.
pub fn operator_norms(p: usize) -> (f64, f64) {
    ((2.0 * p as f64).sqrt(), 2f64.sqrt())
}

/// Frobenius inner product.
pub fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_node_laplacian_matches_worked_layout() {
        let w = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let l = lap_apply(4, &w).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| l[(i, i)]).collect();
        assert_eq!(diag, vec![6.0, 10.0, 12.0, 14.0]);
        assert_eq!(l[(1, 0)], -1.0);
        assert_eq!(l[(2, 0)], -2.0);
        assert_eq!(l[(3, 0)], -3.0);
        assert_eq!(l[(2, 1)], -4.0);
        assert_eq!(l[(3, 1)], -5.0);
        assert_eq!(l[(3, 2)], -6.0);
        assert_eq!(l, l.transpose());
    }

    #[test]
    fn two_node_laplacian() {
        let l = lap_apply(2, &[2.5]).unwrap();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[2.5, -2.5, -2.5, 2.5]));
    }

    #[test]
    fn zero_weights_give_zero_matrices() {
        for p in 1..6 {
            let w = vec![0.0; edge_count(p)];
            assert!(lap_apply(p, &w).unwrap().iter().all(|v| *v == 0.0));
            assert!(adj_apply(p, &w).unwrap().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn adjacency_layout_and_relation_to_laplacian() {
        let w = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let a = adj_apply(4, &w).unwrap();
        assert!((0..4).all(|i| a[(i, i)] == 0.0));
        assert_eq!(a[(1, 0)], 1.0);
        assert_eq!(a[(3, 2)], 6.0);
        let sum = lap_apply(4, &w).unwrap() + a;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(sum[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn lap_adjoint_first_entry() {
        let y = DMatrix::from_fn(4, 4, |i, j| (10 * i + j) as f64);
        let v = lap_adjoint(&y).unwrap();
        assert_eq!(v[0], y[(0, 0)] - y[(1, 0)] - y[(0, 1)] + y[(1, 1)]);
        assert_eq!(v[5], y[(2, 2)] - y[(3, 2)] - y[(2, 3)] + y[(3, 3)]);
    }

    #[test]
    fn adjoints_of_identity() {
        let id = DMatrix::<f64>::identity(5, 5);
        assert!(lap_adjoint(&id).unwrap().iter().all(|v| *v == 2.0));
        assert!(adj_adjoint(&id).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn adj_adjoint_symmetric_is_twice_entry() {
        let y = DMatrix::from_fn(4, 4, |i, j| (i + j) as f64 + (i * j) as f64);
        let v = adj_adjoint(&y).unwrap();
        for (k, i, j) in EdgeIndexMap::new(4).iter() {
            assert_eq!(v[k], 2.0 * y[(i, j)]);
        }
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(lap_apply(4, &[1.0; 5]), Err(Error::Structure(_))));
        assert!(matches!(adj_apply(3, &[1.0; 4]), Err(Error::Structure(_))));
        let rect = DMatrix::<f64>::zeros(3, 4);
        assert!(matches!(lap_adjoint(&rect), Err(Error::Structure(_))));
        assert!(matches!(adj_adjoint(&rect), Err(Error::Structure(_))));
        assert!(WeightVector::new(3, vec![1.0, -1.0, 0.0]).is_err());
    }

    #[test]
    fn operator_norm_values() {
        assert_eq!(operator_norms(8), (4.0, 2f64.sqrt()));
        assert_eq!(operator_norms(2).0, 2.0);
    }

    #[test]
    fn index_map_round_trip_and_formula() {
        for p in 2..30 {
            let map = EdgeIndexMap::new(p);
            for (k, i, j) in map.iter() {
                assert_eq!(map.index(i, j), k);
                assert_eq!(map.index(j, i), k);
                assert_eq!(map.pair(k), (i, j));
                // 1-based formula.
                let (ii, jj) = (i + 1, j + 1);
                assert_eq!(k + 1, ii - jj + (jj - 1) * (2 * p - jj) / 2);
            }
            assert_eq!(nodes_for_len(map.len()), Some(p));
        }
        assert_eq!(nodes_for_len(4), None);
    }
}
