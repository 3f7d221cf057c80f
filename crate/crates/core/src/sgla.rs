//! Joint Laplacian and adjacency spectral constraints, aimed at graphs that
//! are both k-component and bipartite.
//!
//! Minimises
//!
//! ```text
//! -sum log lambda_i + tr(K L w)
//!     + (beta/2)  |L w - U diag(lambda) U^T|_F^2
//!     + (gamma/2) |A w - V diag(psi) V^T|_F^2
//! ```
//!
//! The `(U, lambda)` and `(V, psi)` blocks only read `w`, so once `w` has
//! moved they can be refreshed independently, optionally on two threads.

use nalgebra::DMatrix;

use crate::eigen::scaled_outer;
use crate::error::Result;
use crate::graphops::{
    adj_adjoint_unchecked, dot, frob_inner, lap_adjoint_unchecked, lap_apply_unchecked, lap_gram,
    WeightVector,
};
use crate::sga::{adjacency_eigvecs, psi_update, AdjacencySpectralSet};
use crate::sgl::{lambda_update, principal_eigvecs, LaplacianSpectralSet};
use crate::solver::{
    check_scm, frob_sq, naive_weights, penalised_scm, projected_step, relative_change, Algorithm,
    FitResult, SolverConfig,
};

#[derive(Debug, Clone)]
pub struct SglaState {
    pub w: WeightVector,
    pub u: DMatrix<f64>,
    pub lambda: Vec<f64>,
    pub v: DMatrix<f64>,
    pub psi: Vec<f64>,
    pub kmat: DMatrix<f64>,
    pub beta: f64,
    pub gamma: f64,
    pub lap_spec: LaplacianSpectralSet,
    pub adj_spec: AdjacencySpectralSet,
}

type LapBlock = (DMatrix<f64>, Vec<f64>);
type AdjBlock = (DMatrix<f64>, Vec<f64>);

impl SglaState {
    pub fn init(
        s: &DMatrix<f64>,
        lap_spec: &LaplacianSpectralSet,
        adj_spec: &AdjacencySpectralSet,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        check_scm(s)?;
        cfg.validate()?;
        let w = naive_weights(s, cfg.rank_tol)?;
        Self::from_weights(
            w,
            penalised_scm(s, cfg.alpha),
            cfg.beta,
            cfg.gamma,
            lap_spec.clone(),
            adj_spec.clone(),
        )
    }

    pub fn from_weights(
        w: WeightVector,
        kmat: DMatrix<f64>,
        beta: f64,
        gamma: f64,
        lap_spec: LaplacianSpectralSet,
        adj_spec: AdjacencySpectralSet,
    ) -> Result<Self> {
        let p = w.nodes();
        lap_spec.validate(p)?;
        adj_spec.validate(p)?;
        let mut st = Self {
            w,
            u: DMatrix::zeros(p, p - lap_spec.k),
            lambda: Vec::new(),
            v: DMatrix::zeros(p, adj_spec.retained(p)),
            psi: Vec::new(),
            kmat,
            beta,
            gamma,
            lap_spec,
            adj_spec,
        };
        let ((u, lambda), (v, psi)) = st.spectral_blocks(false)?;
        st.u = u;
        st.lambda = lambda;
        st.v = v;
        st.psi = psi;
        Ok(st)
    }

    pub fn nodes(&self) -> usize {
        self.w.nodes()
    }

    pub fn objective(&self) -> f64 {
        let lw = self.w.laplacian();
        let logdet: f64 = self.lambda.iter().map(|l| l.ln()).sum();
        let lres = &lw - scaled_outer(&self.u, &self.lambda);
        let ares = self.w.adjacency() - scaled_outer(&self.v, &self.psi);
        -logdet
            + frob_inner(&self.kmat, &lw)
            + 0.5 * self.beta * frob_sq(&lres)
            + 0.5 * self.gamma * frob_sq(&ares)
    }

    /// `c1 + c2` with `c1 = L*(beta U diag(lambda) U^T - K)` and
    /// `c2 = gamma A*(V diag(psi) V^T)`.
    pub fn linear_term(&self) -> Vec<f64> {
        let lt = scaled_outer(&self.u, &self.lambda) * self.beta - &self.kmat;
        let c1 = lap_adjoint_unchecked(&lt);
        let c2 = adj_adjoint_unchecked(&scaled_outer(&self.v, &self.psi));
        c1.into_iter()
            .zip(c2)
            .map(|(a, b)| a + self.gamma * b)
            .collect()
    }

    /// The w-subproblem, `beta |L w|^2 / 2 + gamma |A w|^2 / 2 - c^T w`.
    pub fn w_cost(&self, w: &[f64]) -> f64 {
        let lw = lap_apply_unchecked(self.nodes(), w);
        0.5 * self.beta * frob_sq(&lw) + self.gamma * dot(w, w) - dot(&self.linear_term(), w)
    }

    pub fn w_gradient(&self, w: &[f64]) -> Vec<f64> {
        let c = self.linear_term();
        lap_gram(self.nodes(), w)
            .into_iter()
            .zip(w)
            .zip(c)
            .map(|((lg, wi), ci)| self.beta * lg + 2.0 * self.gamma * wi - ci)
            .collect()
    }

    pub fn lipschitz(&self) -> f64 {
        2.0 * (self.nodes() as f64 * self.beta + self.gamma)
    }

    pub fn update_w(&self) -> WeightVector {
        let grad = self.w_gradient(self.w.as_slice());
        let step = projected_step(self.w.as_slice(), &grad, self.lipschitz());
        WeightVector::new(self.nodes(), step).expect("projected step is non-negative")
    }

    fn laplacian_block(&self) -> Result<LapBlock> {
        let lw = self.w.laplacian();
        let u = principal_eigvecs(&lw, self.nodes() - self.lap_spec.k)?;
        let lambda = lambda_update(&u, &lw, self.beta, &self.lap_spec)?;
        Ok((u, lambda))
    }

    fn adjacency_block(&self) -> Result<AdjBlock> {
        let aw = self.w.adjacency();
        let v = adjacency_eigvecs(&aw, self.adj_spec.zeros(self.nodes()))?;
        let psi = psi_update(&v, &aw, &self.adj_spec)?;
        Ok((v, psi))
    }

    /// Fresh `(U, lambda)` and `(V, psi)` for the current `w`.
    pub fn spectral_blocks(&self, parallel: bool) -> Result<(LapBlock, AdjBlock)> {
        if parallel {
            let (a, b) = rayon::join(|| self.laplacian_block(), || self.adjacency_block());
            Ok((a?, b?))
        } else {
            Ok((self.laplacian_block()?, self.adjacency_block()?))
        }
    }

    fn into_result(self, trace: Vec<f64>, iterations: usize, converged: bool) -> FitResult {
        FitResult {
            algorithm: Algorithm::Sgla,
            theta: self.w.laplacian(),
            weights: self.w,
            lambda: Some(self.lambda),
            psi: Some(self.psi),
            u: Some(self.u),
            v: Some(self.v),
            objective_trace: trace,
            iterations,
            converged,
            final_beta: self.beta,
        }
    }
}

/// Cycles `w -> (U, lambda) | (V, psi)` to tolerance.
pub fn fit(
    s: &DMatrix<f64>,
    lap_spec: &LaplacianSpectralSet,
    adj_spec: &AdjacencySpectralSet,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    let state = SglaState::init(s, lap_spec, adj_spec, cfg)?;
    run(state, cfg)
}

pub fn run(mut state: SglaState, cfg: &SolverConfig) -> Result<FitResult> {
    let mut trace = vec![state.objective()];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let w_new = state.update_w();
        let change = relative_change(w_new.as_slice(), state.w.as_slice());
        state.w = w_new;
        let ((u, lambda), (v, psi)) = state.spectral_blocks(cfg.parallel_spectral)?;
        state.u = u;
        state.lambda = lambda;
        state.v = v;
        state.psi = psi;
        trace.push(state.objective());
        if change < cfg.tol {
            converged = true;
            break;
        }
        state.beta = cfg.next_beta(state.beta);
    }
    Ok(state.into_result(trace, iterations, converged))
}
