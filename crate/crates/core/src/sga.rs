//! Connected bipartite graph learning under adjacency spectral constraints.
//!
//! Minimises
//!
//! ```text
//! -log det(L w + J) + tr(K L w) + (gamma/2) |A w - V diag(psi) V^T|_F^2
//! ```
//!
//! with `J = 11^T / p`, `w >= 0`, `V^T V = I_b` and `psi` symmetric about
//! the origin. A bipartite adjacency spectrum is symmetric, so `psi` is
//! parametrised by its positive half. The `w` step is a projected gradient
//! step whose Lipschitz constant is estimated from the smallest eigenvalue of
//! `L w + J` and then enlarged by backtracking until the majorisation holds.

use nalgebra::{Cholesky, DMatrix};

use crate::eigen::{scaled_outer, sym_eigen};
use crate::error::{Error, Result};
use crate::graphops::{
    adj_adjoint_unchecked, dot, frob_inner, lap_adjoint_unchecked,
    lap_apply_unchecked, WeightVector,
};
use crate::isotonic::{sym_isotonic_psi, OrderedBox};
use crate::solver::{
    check_scm, frob_sq, naive_weights, penalised_scm, projected_step, relative_change, Algorithm,
    FitResult, SolverConfig,
};

/// Added to every warm-start weight so that `L w + J` starts out definite.
pub const INIT_SHIFT: f64 = 1e-3;

const JITTER_START: f64 = 1e-10;
const JITTER_RETRIES: usize = 3;
const MAX_BACKTRACKS: usize = 60;

/// Prior knowledge about the adjacency spectrum.
///
/// `c1 >= psi_1 >= ... >= psi_{b/2} >= c2` bounds the positive half.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencySpectralSet {
    /// Number of zero adjacency eigenvalues; `None` means `p mod 2`.
    pub z: Option<usize>,
    pub c1: f64,
    pub c2: f64,
}

impl Default for AdjacencySpectralSet {
    fn default() -> Self {
        Self {
            z: None,
            c1: 1e6,
            c2: 1e-6,
        }
    }
}

impl AdjacencySpectralSet {
    pub fn with_zeros(z: usize) -> Self {
        Self {
            z: Some(z),
            ..Self::default()
        }
    }

    /// Symmetric spectrum with no bounds on the positive half.
    pub fn unboxed() -> Self {
        Self {
            z: None,
            c1: f64::INFINITY,
            c2: 0.0,
        }
    }

    pub fn zeros(&self, p: usize) -> usize {
        self.z.unwrap_or(p % 2)
    }

    /// Number of retained eigenpairs, `b = p - z`.
    pub fn retained(&self, p: usize) -> usize {
        p - self.zeros(p)
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let z = self.zeros(p);
        if z >= p || (p - z) % 2 != 0 {
            return Err(Error::domain(format!(
                "zero count z = {z} must leave a positive even number of eigenvalues (p = {p})"
            )));
        }
        if !(self.c2 >= 0.0 && self.c1 >= self.c2) || self.c1.is_nan() {
            return Err(Error::domain(format!(
                "adjacency bounds must satisfy c1 >= c2 >= 0 (got {}, {})",
                self.c1, self.c2
            )));
        }
        Ok(())
    }

    pub(crate) fn bounds(&self) -> OrderedBox {
        OrderedBox::new(self.c2, self.c1).expect("validated")
    }
}

/// Eigenvectors of `aw` by descending eigenvalue with the middle `z`
/// dropped.
pub fn adjacency_eigvecs(aw: &DMatrix<f64>, z: usize) -> Result<DMatrix<f64>> {
    let p = aw.nrows();
    let half = (p - z) / 2;
    let eig = sym_eigen(aw)?;
    // Ascending storage: the top half is at the end, the bottom half first.
    let order = (0..half).map(|i| p - 1 - i).chain((0..half).rev());
    let cols: Vec<_> = order.map(|c| eig.vectors.column(c).into_owned()).collect();
    Ok(DMatrix::from_columns(&cols))
}

/// The psi block: symmetric isotonic fit to `diag(V^T A w V)`.
pub fn psi_update(
    v: &DMatrix<f64>,
    aw: &DMatrix<f64>,
    spec: &AdjacencySpectralSet,
) -> Result<Vec<f64>> {
    let e = crate::sgl::projected_diagonal(v, aw);
    sym_isotonic_psi(&e, spec.bounds())
}

fn shifted_laplacian(p: usize, w: &[f64]) -> DMatrix<f64> {
    let mut m = lap_apply_unchecked(p, w);
    m.add_scalar_mut(1.0 / p as f64);
    m
}

/// `log det(L w + J)`, or `None` when the matrix is not positive definite.
pub fn logdet_shifted(p: usize, w: &[f64]) -> Option<f64> {
    let chol = Cholesky::new(shifted_laplacian(p, w))?;
    let l = chol.l_dirty();
    let s: f64 = (0..p).map(|i| l[(i, i)].ln()).sum();
    s.is_finite().then_some(2.0 * s)
}

/// Inverse of `L w + J` and its smallest eigenvalue, with a small diagonal
/// jitter when the matrix is numerically singular.
fn shifted_inverse(p: usize, w: &[f64]) -> Result<(DMatrix<f64>, f64)> {
    let base = shifted_laplacian(p, w);
    let mut jitter = 0.0;
    for attempt in 0..=JITTER_RETRIES {
        let mut m = base.clone();
        if jitter > 0.0 {
            for i in 0..p {
                m[(i, i)] += jitter;
            }
        }
        let eig = sym_eigen(&m)?;
        let min = eig.values[0];
        let max = eig.values[p - 1];
        if min > f64::EPSILON * max.max(1.0) {
            let inv: Vec<f64> = eig.values.iter().map(|v| 1.0 / v).collect();
            return Ok((scaled_outer(&eig.vectors, &inv), min));
        }
        jitter = if attempt == 0 {
            JITTER_START
        } else {
            jitter * 10.0
        };
    }
    Err(Error::Numerical(format!(
        "L w + J is singular even after jitter {:e} (p = {p})",
        jitter / 10.0
    )))
}

/// Iterate of the bipartite solver.
#[derive(Debug, Clone)]
pub struct SgaState {
    pub w: WeightVector,
    pub v: DMatrix<f64>,
    pub psi: Vec<f64>,
    pub kmat: DMatrix<f64>,
    pub gamma: f64,
    pub spec: AdjacencySpectralSet,
    pub l2_max: f64,
}

impl SgaState {
    pub fn init(s: &DMatrix<f64>, spec: &AdjacencySpectralSet, cfg: &SolverConfig) -> Result<Self> {
        let p = check_scm(s)?;
        spec.validate(p)?;
        cfg.validate()?;
        let naive = naive_weights(s, cfg.rank_tol)?;
        let w = WeightVector::new(p, naive.into_vec().into_iter().map(|v| v + INIT_SHIFT).collect())?;
        let mut st = Self::from_weights(w, penalised_scm(s, cfg.alpha), cfg.gamma, spec.clone())?;
        st.l2_max = cfg.l2_max;
        Ok(st)
    }

    pub fn from_weights(
        w: WeightVector,
        kmat: DMatrix<f64>,
        gamma: f64,
        spec: AdjacencySpectralSet,
    ) -> Result<Self> {
        let p = w.nodes();
        spec.validate(p)?;
        let aw = w.adjacency();
        let v = adjacency_eigvecs(&aw, spec.zeros(p))?;
        let psi = psi_update(&v, &aw, &spec)?;
        Ok(Self {
            w,
            v,
            psi,
            kmat,
            gamma,
            spec,
            l2_max: SolverConfig::default().l2_max,
        })
    }

    pub fn nodes(&self) -> usize {
        self.w.nodes()
    }

    /// `+inf` when `L w + J` is not positive definite.
    pub fn objective(&self) -> f64 {
        let p = self.nodes();
        let Some(logdet) = logdet_shifted(p, self.w.as_slice()) else {
            return f64::INFINITY;
        };
        let resid = self.w.adjacency() - scaled_outer(&self.v, &self.psi);
        -logdet + frob_inner(&self.kmat, &self.w.laplacian()) + 0.5 * self.gamma * frob_sq(&resid)
    }

    /// `c = A*(V diag(psi) V^T) - L*(K) / gamma`.
    pub fn linear_term(&self) -> Vec<f64> {
        let a = adj_adjoint_unchecked(&scaled_outer(&self.v, &self.psi));
        let l = lap_adjoint_unchecked(&self.kmat);
        a.into_iter().zip(l).map(|(x, y)| x - y / self.gamma).collect()
    }

    /// The w-subproblem scaled by `1/gamma`:
    /// `-log det(L w + J) / gamma + |A w|^2 / 2 - c^T w`.
    pub fn w_cost(&self, w: &[f64]) -> f64 {
        self.cost_with(w, &self.linear_term())
    }

    fn cost_with(&self, w: &[f64], c: &[f64]) -> f64 {
        match logdet_shifted(self.nodes(), w) {
            Some(ld) => -ld / self.gamma + dot(w, w) - dot(c, w),
            None => f64::INFINITY,
        }
    }

    pub fn w_gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        let (inv, _) = shifted_inverse(self.nodes(), w)?;
        Ok(self.gradient_with(w, &inv, &self.linear_term()))
    }

    fn gradient_with(&self, w: &[f64], inv: &DMatrix<f64>, c: &[f64]) -> Vec<f64> {
        let ld = lap_adjoint_unchecked(inv);
        w.iter()
            .zip(ld)
            .zip(c)
            .map(|((wi, li), ci)| -li / self.gamma + 2.0 * wi - ci)
            .collect()
    }

    pub fn update_w(&self) -> Result<WeightVector> {
        let p = self.nodes();
        let w = self.w.as_slice();
        let c = self.linear_term();
        let (inv, min_eig) = shifted_inverse(p, w)?;
        let grad = self.gradient_with(w, &inv, &c);
        let l2 = (2.0 * p as f64 / (min_eig * min_eig)).min(self.l2_max);
        let mut lipschitz = 2.0 + l2 / self.gamma;
        let h0 = self.cost_with(w, &c);
        for _ in 0..MAX_BACKTRACKS {
            let cand = projected_step(w, &grad, lipschitz);
            let step: Vec<f64> = cand.iter().zip(w).map(|(a, b)| a - b).collect();
            let bound = h0 + dot(&grad, &step) + 0.5 * lipschitz * dot(&step, &step);
            let h1 = self.cost_with(&cand, &c);
            if h1 <= bound + 1e-12 * h0.abs().max(1.0) {
                return WeightVector::new(p, cand);
            }
            lipschitz *= 2.0;
        }
        Ok(self.w.clone())
    }

    pub fn update_v(&self) -> Result<DMatrix<f64>> {
        adjacency_eigvecs(&self.w.adjacency(), self.spec.zeros(self.nodes()))
    }

    pub fn update_psi(&self) -> Result<Vec<f64>> {
        psi_update(&self.v, &self.w.adjacency(), &self.spec)
    }

    fn into_result(self, trace: Vec<f64>, iterations: usize, converged: bool) -> FitResult {
        FitResult {
            algorithm: Algorithm::Sga,
            theta: self.w.laplacian(),
            weights: self.w,
            lambda: None,
            psi: Some(self.psi),
            u: None,
            v: Some(self.v),
            objective_trace: trace,
            iterations,
            converged,
            final_beta: self.gamma,
        }
    }
}

/// Cycles `w -> V -> psi` until the relative change in `w` drops below
/// `cfg.tol` or `cfg.max_iter` is hit.
pub fn fit(s: &DMatrix<f64>, spec: &AdjacencySpectralSet, cfg: &SolverConfig) -> Result<FitResult> {
    let state = SgaState::init(s, spec, cfg)?;
    run(state, cfg)
}

pub fn run(mut state: SgaState, cfg: &SolverConfig) -> Result<FitResult> {
    let mut trace = vec![state.objective()];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let w_new = state.update_w()?;
        let change = relative_change(w_new.as_slice(), state.w.as_slice());
        state.w = w_new;
        state.v = state.update_v()?;
        state.psi = state.update_psi()?;
        trace.push(state.objective());
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(state.into_result(trace, iterations, converged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphops::{edge_count, EdgeIndexMap};

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    fn random_state(p: usize, seed: u64) -> SgaState {
        let mut u = lcg(seed);
        let w: Vec<f64> = (0..edge_count(p)).map(|_| 0.2 + u()).collect();
        let x = DMatrix::from_fn(p, 2 * p, |_, _| u() - 0.5);
        let s = &x * x.transpose() / (2 * p) as f64;
        let mut st = SgaState::from_weights(
            WeightVector::new(p, w).unwrap(),
            s,
            3.0,
            AdjacencySpectralSet::default(),
        )
        .unwrap();
        // Decouple the targets from w so the step is non-trivial.
        st.w = WeightVector::new(p, (0..edge_count(p)).map(|_| 0.1 + u()).collect()).unwrap();
        st
    }

    #[test]
    fn path_graph_drops_middle() {
        let w = WeightVector::new(3, vec![1.0, 0.0, 1.0]).unwrap(); // 1-0-2... edges (1,0),(2,1)
        let aw = w.adjacency();
        let v = adjacency_eigvecs(&aw, 1).unwrap();
        assert_eq!(v.ncols(), 2);
        let e = crate::sgl::projected_diagonal(&v, &aw);
        let r2 = 2f64.sqrt();
        assert!((e[0] - r2).abs() < 1e-10 && (e[1] + r2).abs() < 1e-10);
    }

    #[test]
    fn no_zeros_keeps_all_descending() {
        let w = WeightVector::new(4, vec![1.0, 0.5, 0.2, 2.0, 0.3, 1.2]).unwrap();
        let aw = w.adjacency();
        let v = adjacency_eigvecs(&aw, 0).unwrap();
        let d = v.transpose() * &aw * &v;
        let e: Vec<f64> = (0..4).map(|i| d[(i, i)]).collect();
        assert!(e.windows(2).all(|x| x[0] >= x[1]));
        assert!((d - DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e))).amax() < 1e-8);
    }

    #[test]
    fn logdet_matches_gdet_on_connected_graph() {
        let w = [1.0, 0.5, 0.0, 2.0, 0.3, 1.2];
        let ld = logdet_shifted(4, &w).unwrap();
        let lg = crate::eigen::log_gdet(&lap_apply_unchecked(4, &w), 1e-9).unwrap();
        assert!((ld - lg).abs() < 1e-8 * lg.abs().max(1.0));
        assert!(logdet_shifted(4, &[0.0; 6]).is_none());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..5 {
            let st = random_state(6, seed);
            let w = st.w.as_slice().to_vec();
            let g = st.w_gradient(&w).unwrap();
            let h = 1e-6;
            for k in 0..w.len() {
                let mut a = w.clone();
                let mut b = w.clone();
                a[k] += h;
                b[k] -= h;
                let fd = (st.w_cost(&a) - st.w_cost(&b)) / (2.0 * h);
                assert!(
                    (fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1.0),
                    "seed {seed} k {k}: fd {fd} vs {}",
                    g[k]
                );
            }
        }
    }

    #[test]
    fn w_step_descends() {
        for seed in 0..20 {
            let st = random_state(7, seed);
            let before = st.w_cost(st.w.as_slice());
            let next = st.update_w().unwrap();
            assert!(st.w_cost(next.as_slice()) <= before + 1e-12 * before.abs().max(1.0));
        }
    }

    #[test]
    fn single_edge_recovered_from_exact_covariance() {
        let truth = WeightVector::new(2, vec![1.5]).unwrap();
        let cov = crate::eigen::pinv(&truth.laplacian(), 1e-9).unwrap();
        let cfg = SolverConfig {
            gamma: 10.0,
            ..Default::default()
        };
        let fit = fit(&cov, &AdjacencySpectralSet::default(), &cfg).unwrap();
        assert!((fit.weights.as_slice()[0] - 1.5).abs() < 1e-2, "{:?}", fit.weights);
        let psi = fit.psi.unwrap();
        assert_eq!(psi[0], -psi[1]);
    }

    #[test]
    fn validation() {
        assert!(AdjacencySpectralSet::with_zeros(1).validate(4).is_err());
        assert!(AdjacencySpectralSet::default().validate(5).is_ok());
        let bad = AdjacencySpectralSet {
            z: None,
            c1: 1.0,
            c2: 2.0,
        };
        assert!(bad.validate(4).is_err());
    }

    #[test]
    fn trace_is_monotone_on_small_bipartite() {
        // K_{2,3} with unit weights.
        let p = 5;
        let map = EdgeIndexMap::new(p);
        let mut w = vec![0.0; edge_count(p)];
        for i in 2..5 {
            for j in 0..2 {
                w[map.index(i, j)] = 1.0;
            }
        }
        let truth = WeightVector::new(p, w).unwrap();
        let cov = crate::eigen::pinv(&truth.laplacian(), 1e-9).unwrap();
        let cfg = SolverConfig {
            gamma: 100.0,
            max_iter: 300,
            ..Default::default()
        };
        let fit = fit(&cov, &AdjacencySpectralSet::default(), &cfg).unwrap();
        for t in fit.objective_trace.windows(2) {
            assert!(t[1] <= t[0] + 1e-9 * t[0].abs().max(1.0), "{t:?}");
        }
    }
}
