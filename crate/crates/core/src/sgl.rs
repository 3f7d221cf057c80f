//! Graph learning under Laplacian spectral constraints.
//!
//! Minimises
//!
//! ```text
//! -sum log lambda_i + tr(K L w) + (beta/2) |L w - U diag(lambda) U^T|_F^2
//! ```
//!
//! over `w >= 0`, `U^T U = I_q` and ordered `lambda` in `[c1, c2]`, where
//! `q = p - k` and `k` is the number of connected components. The three
//! blocks are updated cyclically: a projected gradient step on `w` with step
//! `1 / (2p)`, the top `q` eigenvectors of `L w` for `U`, and a
//! log-regularised isotonic fit for `lambda`.

use nalgebra::DMatrix;

use crate::eigen::{scaled_outer, sym_eigen};
use crate::error::{Error, Result};
use crate::graphops::{dot, lap_adjoint_unchecked, lap_gram, WeightVector};
use crate::isotonic::{reg_isotonic, OrderedBox};
use crate::solver::{
    check_scm, frob_sq, naive_weights, penalised_scm, projected_step, relative_change, Algorithm,
    FitResult, SolverConfig,
};

/// Prior knowledge about the Laplacian spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianSpectralSet {
    /// Number of zero eigenvalues, i.e. connected components.
    pub k: usize,
    pub c1: f64,
    pub c2: f64,
    /// Prescribed non-zero eigenvalues (ascending, length `p - k`).
    pub fixed_spectrum: Option<Vec<f64>>,
}

impl Default for LaplacianSpectralSet {
    fn default() -> Self {
        Self::k_component(1)
    }
}

impl LaplacianSpectralSet {
    pub fn k_component(k: usize) -> Self {
        Self {
            k,
            c1: 1e-6,
            c2: 1e6,
            fixed_spectrum: None,
        }
    }

    /// Connected graph with a wide box; sparsity comes from `alpha`.
    pub fn connected() -> Self {
        Self::k_component(1)
    }

    pub fn cospectral(k: usize, spectrum: Vec<f64>) -> Self {
        let c1 = spectrum.first().copied().unwrap_or(1e-6).min(1e-6);
        let c2 = spectrum.last().copied().unwrap_or(1e6).max(1e6);
        Self {
            k,
            c1,
            c2,
            fixed_spectrum: Some(spectrum),
        }
    }

    pub fn with_bounds(mut self, c1: f64, c2: f64) -> Self {
        self.c1 = c1;
        self.c2 = c2;
        self
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.k == 0 || self.k >= p {
            return Err(Error::domain(format!(
                "number of components must satisfy 1 <= k < p (k = {}, p = {p})",
                self.k
            )));
        }
        if !(self.c1 > 0.0 && self.c1 <= self.c2) {
            return Err(Error::domain(format!(
                "eigenvalue bounds must satisfy 0 < c1 <= c2 (got {}, {})",
                self.c1, self.c2
            )));
        }
        if let Some(spec) = &self.fixed_spectrum {
            if spec.len() != p - self.k {
                return Err(Error::structure(format!(
                    "fixed spectrum needs {} values, got {}",
                    p - self.k,
                    spec.len()
                )));
            }
            let ordered = spec.windows(2).all(|w| w[0] <= w[1]);
            let boxed = spec.iter().all(|v| *v >= self.c1 && *v <= self.c2);
            if !(ordered && boxed) {
                return Err(Error::domain(
                    "fixed spectrum must be ascending and inside [c1, c2]",
                ));
            }
        }
        Ok(())
    }

    pub(crate) fn bounds(&self) -> OrderedBox {
        OrderedBox::new(self.c1, self.c2).expect("validated")
    }
}

/// Eigenvectors of `lw` belonging to its `q` largest eigenvalues, ascending.
pub fn principal_eigvecs(lw: &DMatrix<f64>, q: usize) -> Result<DMatrix<f64>> {
    let p = lw.nrows();
    let eig = sym_eigen(lw)?;
    Ok(eig.vectors.columns(p - q, q).into_owned())
}

/// `diag(U^T M U)`.
pub fn projected_diagonal(u: &DMatrix<f64>, m: &DMatrix<f64>) -> Vec<f64> {
    let mu = m * u;
    u.column_iter()
        .zip(mu.column_iter())
        .map(|(a, b)| a.dot(&b))
        .collect()
}

/// The lambda block: fixed spectrum if prescribed, otherwise the
/// log-regularised isotonic fit to `diag(U^T L w U)`.
pub fn lambda_update(
    u: &DMatrix<f64>,
    lw: &DMatrix<f64>,
    beta: f64,
    spec: &LaplacianSpectralSet,
) -> Result<Vec<f64>> {
    if let Some(fixed) = &spec.fixed_spectrum {
        return Ok(fixed.clone());
    }
    let d = projected_diagonal(u, lw);
    reg_isotonic(&d, beta, spec.bounds())
}

/// Iterate of the Laplacian-constrained solver.
#[derive(Debug, Clone)]
pub struct SglState {
    pub w: WeightVector,
    pub u: DMatrix<f64>,
    pub lambda: Vec<f64>,
    /// `K = S + H`.
    pub kmat: DMatrix<f64>,
    pub beta: f64,
    pub spec: LaplacianSpectralSet,
}

impl SglState {
    /// Naive warm start followed by one `U` and one `lambda` update.
    pub fn init(s: &DMatrix<f64>, spec: &LaplacianSpectralSet, cfg: &SolverConfig) -> Result<Self> {
        let p = check_scm(s)?;
        spec.validate(p)?;
        cfg.validate()?;
        let w = naive_weights(s, cfg.rank_tol)?;
        Self::from_weights(w, penalised_scm(s, cfg.alpha), cfg.beta, spec.clone())
    }

    pub fn from_weights(
        w: WeightVector,
        kmat: DMatrix<f64>,
        beta: f64,
        spec: LaplacianSpectralSet,
    ) -> Result<Self> {
        let p = w.nodes();
        spec.validate(p)?;
        let q = p - spec.k;
        let lw = w.laplacian();
        let u = principal_eigvecs(&lw, q)?;
        let lambda = lambda_update(&u, &lw, beta, &spec)?;
        Ok(Self {
            w,
            u,
            lambda,
            kmat,
            beta,
            spec,
        })
    }

    pub fn nodes(&self) -> usize {
        self.w.nodes()
    }

    pub fn objective(&self) -> f64 {
        let lw = self.w.laplacian();
        let logdet: f64 = self.lambda.iter().map(|l| l.ln()).sum();
        let resid = &lw - scaled_outer(&self.u, &self.lambda);
        -logdet + crate::graphops::frob_inner(&self.kmat, &lw) + 0.5 * self.beta * frob_sq(&resid)
    }

    /// `c = L*(U diag(lambda) U^T - K / beta)`.
    pub fn linear_term(&self) -> Vec<f64> {
        let target = scaled_outer(&self.u, &self.lambda) - &self.kmat / self.beta;
        lap_adjoint_unchecked(&target)
    }

    /// `f(w) = |L w|^2 / 2 - c^T w`, the w-subproblem scaled by `1/beta`.
    pub fn w_cost(&self, w: &[f64]) -> f64 {
        let lw = crate::graphops::lap_apply_unchecked(self.nodes(), w);
        0.5 * frob_sq(&lw) - dot(&self.linear_term(), w)
    }

    pub fn w_gradient(&self, w: &[f64]) -> Vec<f64> {
        let c = self.linear_term();
        lap_gram(self.nodes(), w)
            .into_iter()
            .zip(c)
            .map(|(a, b)| a - b)
            .collect()
    }

    pub fn update_w(&self) -> WeightVector {
        let p = self.nodes();
        let grad = self.w_gradient(self.w.as_slice());
        let step = projected_step(self.w.as_slice(), &grad, 2.0 * p as f64);
        WeightVector::new(p, step).expect("projected step is non-negative")
    }

    pub fn update_u(&self) -> Result<DMatrix<f64>> {
        principal_eigvecs(&self.w.laplacian(), self.lambda.len())
    }

    pub fn update_lambda(&self) -> Result<Vec<f64>> {
        lambda_update(&self.u, &self.w.laplacian(), self.beta, &self.spec)
    }

    fn into_result(self, trace: Vec<f64>, iterations: usize, converged: bool) -> FitResult {
        FitResult {
            algorithm: Algorithm::Sgl,
            theta: self.w.laplacian(),
            weights: self.w,
            lambda: Some(self.lambda),
            psi: None,
            u: Some(self.u),
            v: None,
            objective_trace: trace,
            iterations,
            converged,
            final_beta: self.beta,
        }
    }
}

/// Runs the cyclic `w -> U -> lambda` updates until the relative change in
/// `w` drops below `cfg.tol` or `cfg.max_iter` is hit.
pub fn fit(s: &DMatrix<f64>, spec: &LaplacianSpectralSet, cfg: &SolverConfig) -> Result<FitResult> {
    let state = SglState::init(s, spec, cfg)?;
    run(state, cfg)
}

/// Continues from an explicit state.
pub fn run(mut state: SglState, cfg: &SolverConfig) -> Result<FitResult> {
    let mut trace = vec![state.objective()];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let w_new = state.update_w();
        let change = relative_change(w_new.as_slice(), state.w.as_slice());
        state.w = w_new;
        state.u = state.update_u()?;
        state.lambda = state.update_lambda()?;
        trace.push(state.objective());
        if change < cfg.tol {
            converged = true;
            break;
        }
        state.beta = cfg.next_beta(state.beta);
    }
    Ok(state.into_result(trace, iterations, converged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphops::edge_count;

    fn two_cliques() -> WeightVector {
        // nodes {0,1} and {2,3}
        let mut w = WeightVector::zeros(4).into_vec();
        let map = crate::graphops::EdgeIndexMap::new(4);
        w[map.index(1, 0)] = 1.0;
        w[map.index(3, 2)] = 2.0;
        WeightVector::new(4, w).unwrap()
    }

    #[test]
    fn objective_at_trivial_point() {
        let p = 5;
        let spec = LaplacianSpectralSet::k_component(1);
        let mut st = SglState::from_weights(
            WeightVector::new(p, vec![1.0; edge_count(p)]).unwrap(),
            DMatrix::zeros(p, p),
            3.0,
            spec,
        )
        .unwrap();
        st.w = WeightVector::zeros(p);
        st.lambda = vec![1.0; p - 1];
        assert!((st.objective() - 1.5 * (p - 1) as f64).abs() < 1e-10);
    }

    #[test]
    fn w_step_from_zero() {
        let p = 4;
        let mut st = SglState::from_weights(
            two_cliques(),
            DMatrix::zeros(p, p),
            1.0,
            LaplacianSpectralSet::k_component(2),
        )
        .unwrap();
        st.w = WeightVector::zeros(p);
        let c = st.linear_term();
        let w = st.update_w();
        for (a, b) in w.as_slice().iter().zip(&c) {
            assert!((a - b.max(0.0) / (2.0 * p as f64)).abs() < 1e-14);
        }
    }

    #[test]
    fn u_update_diagonalises_two_cliques() {
        let st = SglState::from_weights(
            two_cliques(),
            DMatrix::zeros(4, 4),
            1.0,
            LaplacianSpectralSet::k_component(2),
        )
        .unwrap();
        let u = st.update_u().unwrap();
        assert_eq!(u.ncols(), 2);
        let m = u.transpose() * st.w.laplacian() * &u;
        assert!((m[(0, 1)]).abs() < 1e-8);
        assert!((m[(0, 0)] - 2.0).abs() < 1e-8 && (m[(1, 1)] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn connected_drops_constant_vector() {
        let w = WeightVector::new(3, vec![1.0, 1.0, 1.0]).unwrap();
        let u = principal_eigvecs(&w.laplacian(), 2).unwrap();
        let ones = nalgebra::DVector::from_element(3, 1.0);
        assert!((u.transpose() * ones).amax() < 1e-10);
    }

    #[test]
    fn cospectral_keeps_spectrum() {
        let spec = LaplacianSpectralSet::cospectral(1, vec![1.0, 2.0, 3.0]);
        let st = SglState::from_weights(
            WeightVector::new(4, vec![1.0; 6]).unwrap(),
            DMatrix::zeros(4, 4),
            10.0,
            spec,
        )
        .unwrap();
        assert_eq!(st.update_lambda().unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn spec_validation() {
        assert!(LaplacianSpectralSet::k_component(0).validate(4).is_err());
        assert!(LaplacianSpectralSet::k_component(4).validate(4).is_err());
        assert!(LaplacianSpectralSet::cospectral(1, vec![1.0, 2.0]).validate(4).is_err());
        assert!(LaplacianSpectralSet::cospectral(1, vec![3.0, 2.0, 1.0])
            .validate(4)
            .is_err());
    }

    #[test]
    fn identity_scm_smoke_run() {
        let s = DMatrix::<f64>::identity(6, 6);
        let cfg = SolverConfig {
            beta: 10.0,
            max_iter: 500,
            ..Default::default()
        };
        let fit = fit(&s, &LaplacianSpectralSet::connected(), &cfg).unwrap();
        for w in fit.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
        }
        // Every pair is exchangeable: the learned graph is close to uniform.
        let ws = fit.weights.as_slice();
        let mean = ws.iter().sum::<f64>() / ws.len() as f64;
        assert!(mean > 0.0);
        assert!(ws.iter().all(|v| (v - mean).abs() < 0.05 * mean + 1e-6));
    }
}
