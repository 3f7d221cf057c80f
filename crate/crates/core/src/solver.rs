//! Pieces shared by the three block-MM solvers: configuration, warm start,
//! stopping rule and the fit result.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigen::{pinv, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::graphops::{lap_offdiag, norm, WeightVector};

/// How the penalty weight evolves between iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaSchedule {
    #[default]
    Constant,
    /// `beta <- min(rate * beta, beta_max)` after every iteration.
    Geometric { rate: f64, beta_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Weight of the Laplacian spectral penalty.
    pub beta: f64,
    /// Weight of the adjacency spectral penalty.
    pub gamma: f64,
    /// l1 sparsity weight, folded into `K = S + alpha (2I - 11^T)`.
    pub alpha: f64,
    /// Stop once `|w+ - w| / max(|w|, eps)` drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub beta_schedule: BetaSchedule,
    pub rank_tol: f64,
    /// Cap on the log-det Lipschitz estimate used by the bipartite w-step.
    pub l2_max: f64,
    /// Run the two spectral-factor updates of the joint solver on separate
    /// threads.
    pub parallel_spectral: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 100.0,
            gamma: 1e4,
            alpha: 0.0,
            tol: 1e-4,
            max_iter: 5000,
            beta_schedule: BetaSchedule::Constant,
            rank_tol: DEFAULT_RANK_TOL,
            l2_max: 1e6,
            parallel_spectral: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(name, format!("must be positive and finite, got {v}")))
            }
        };
        positive("beta", self.beta)?;
        positive("gamma", self.gamma)?;
        positive("tol", self.tol)?;
        positive("rank_tol", self.rank_tol)?;
        positive("l2_max", self.l2_max)?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("alpha", "must be non-negative"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter", "must be at least 1"));
        }
        if let BetaSchedule::Geometric { rate, beta_max } = self.beta_schedule {
            if !(rate >= 1.0 && beta_max >= self.beta) {
                return Err(Error::config(
                    "beta_schedule",
                    "geometric schedule needs rate >= 1 and beta_max >= beta",
                ));
            }
        }
        Ok(())
    }

    pub(crate) fn next_beta(&self, beta: f64) -> f64 {
        match self.beta_schedule {
            BetaSchedule::Constant => beta,
            BetaSchedule::Geometric { rate, beta_max } => (beta * rate).min(beta_max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Sgl,
    Sga,
    Sgla,
}

/// Outcome of a structured fit. `theta = L w`.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub algorithm: Algorithm,
    pub weights: WeightVector,
    pub theta: DMatrix<f64>,
    pub lambda: Option<Vec<f64>>,
    pub psi: Option<Vec<f64>>,
    pub u: Option<DMatrix<f64>>,
    pub v: Option<DMatrix<f64>>,
    /// Objective at the starting point followed by one entry per iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_beta: f64,
}

/// `S + alpha (2I - 11^T)`.
pub fn penalised_scm(s: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    let p = s.nrows();
    DMatrix::from_fn(p, p, |i, j| {
        s[(i, j)] + alpha * if i == j { 1.0 } else { -1.0 }
    })
}

/// Warm start from the pseudo-inverse of the SCM: its negated off-diagonal,
/// clipped at zero. Falls back to all ones if nothing positive survives.
pub fn naive_weights(s: &DMatrix<f64>, rank_tol: f64) -> Result<WeightVector> {
    let p = s.nrows();
    let raw = pinv(s, rank_tol)
        .ok()
        .and_then(|sinv| lap_offdiag(&sinv).ok())
        .filter(|w| w.iter().all(|v| v.is_finite()) && w.iter().any(|v| *v > 0.0));
    match raw {
        Some(w) => WeightVector::from_projection(p, w),
        None => WeightVector::new(p, vec![1.0; crate::graphops::edge_count(p)]),
    }
}

pub(crate) fn check_scm(s: &DMatrix<f64>) -> Result<usize> {
    let p = s.nrows();
    if p != s.ncols() {
        return Err(Error::structure(format!(
            "sample covariance must be square, got {}x{}",
            p,
            s.ncols()
        )));
    }
    if p < 2 {
        return Err(Error::structure("need at least two nodes"));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("sample covariance has non-finite entries".into()));
    }
    let scale = s.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for i in 0..p {
        for j in 0..i {
            if (s[(i, j)] - s[(j, i)]).abs() > 1e-8 * scale {
                return Err(Error::structure(format!(
                    "sample covariance is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(p)
}

pub(crate) fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let diff: Vec<f64> = new.iter().zip(old).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(old).max(1e-12)
}

/// Projected gradient step `(w - g / lipschitz)^+`.
pub(crate) fn projected_step(w: &[f64], grad: &[f64], lipschitz: f64) -> Vec<f64> {
    w.iter()
        .zip(grad)
        .map(|(wi, gi)| (wi - gi / lipschitz).max(0.0))
        .collect()
}

pub(crate) fn frob_sq(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_weights_fall_back_to_ones() {
        let w = naive_weights(&DMatrix::identity(4, 4), DEFAULT_RANK_TOL).unwrap();
        assert!(w.as_slice().iter().all(|v| *v == 1.0));
    }

    #[test]
    fn naive_weights_recover_exact_laplacian() {
        let truth = WeightVector::new(3, vec![1.0, 2.0, 0.5]).unwrap();
        let cov = pinv(&truth.laplacian(), DEFAULT_RANK_TOL).unwrap();
        let w = naive_weights(&cov, DEFAULT_RANK_TOL).unwrap();
        for (a, b) in w.as_slice().iter().zip(truth.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn penalised_scm_layout() {
        let k = penalised_scm(&DMatrix::zeros(3, 3), 0.5);
        assert_eq!(k[(0, 0)], 0.5);
        assert_eq!(k[(0, 1)], -0.5);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            beta: 0.0,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config { path, .. }) if path == "beta"));
    }

    #[test]
    fn geometric_schedule_caps() {
        let cfg = SolverConfig {
            beta: 10.0,
            beta_schedule: BetaSchedule::Geometric {
                rate: 1.1,
                beta_max: 11.5,
            },
            ..Default::default()
        };
        assert!((cfg.next_beta(10.0) - 11.0).abs() < 1e-12);
        assert_eq!(cfg.next_beta(11.0), 11.5);
    }
}
