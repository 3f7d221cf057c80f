//! Fast numerical invariant suite.
//!
//! Each check draws its own random instances from a fixed seed and reports
//! the worst value of its metric against a limit. [`selfcheck`] runs a
//! reduced configuration of every check in a few seconds; the functions are
//! public so heavier configurations can be run elsewhere.

use std::fmt;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::graphops::{
    adj_adjoint, adj_apply, edge_count, frob_inner, lap_adjoint, lap_apply, operator_norms,
    WeightVector,
};
use crate::isotonic::oracle::oracle_solve;
use crate::isotonic::{kkt_residual, reg_isotonic_with_stats, OrderedBox};
use crate::sga::{AdjacencySpectralSet, SgaState};
use crate::sgl::{LaplacianSpectralSet, SglState};
use crate::sgla::SglaState;
use crate::solver::{penalised_scm, Algorithm, SolverConfig};
use crate::synth::{
    derive_seed, gen_bipartite, gen_er_noise, gen_multi_bipartite, gen_multicomponent, rng,
    sample_igmrf, scm,
};
use crate::{sga, sgl, sgla};

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the check's metric.
    pub worst: f64,
    pub limit: f64,
    pub cases: usize,
    pub seconds: f64,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<34} worst {:.3e} (limit {:.1e}, {} cases, {:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.limit,
            self.cases,
            self.seconds
        )
    }
}

struct Tally {
    name: String,
    worst: f64,
    limit: f64,
    cases: usize,
    start: Instant,
}

impl Tally {
    fn new(name: impl Into<String>, limit: f64) -> Self {
        Self {
            name: name.into(),
            worst: 0.0,
            limit,
            cases: 0,
            start: Instant::now(),
        }
    }

    fn record(&mut self, v: f64) {
        self.cases += 1;
        // NaN must fail, so it sticks.
        if v.is_nan() || self.worst.is_nan() {
            self.worst = f64::NAN;
        } else {
            self.worst = self.worst.max(v);
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            passed: self.worst <= self.limit,
            name: self.name,
            worst: self.worst,
            limit: self.limit,
            cases: self.cases,
            seconds: self.start.elapsed().as_secs_f64(),
        }
    }
}

fn uniform_vec(r: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(lo..hi)).collect()
}

fn log_uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    r.random_range(lo.ln()..hi.ln()).exp()
}

/// `<L w, Y> = <w, L* Y>` and `<A w, Y> = <w, A* Y>` for general square `Y`,
/// error relative to `|op w|_F |Y|_F`.
pub fn adjoint_check(p_max: usize, draws: usize, seed: u64) -> Result<CheckOutcome> {
    let mut t = Tally::new("adjoint identities", 1e-12);
    let mut r = rng(seed);
    for p in 2..=p_max {
        let m = edge_count(p);
        for _ in 0..draws {
            let w = uniform_vec(&mut r, m, -1.0, 1.0);
            let y = DMatrix::from_fn(p, p, |_, _| r.random_range(-1.0..1.0));
            for (op, adj) in [
                (lap_apply(p, &w)?, lap_adjoint(&y)?),
                (adj_apply(p, &w)?, adj_adjoint(&y)?),
            ] {
                let lhs = frob_inner(&op, &y);
                let rhs: f64 = w.iter().zip(&adj).map(|(a, b)| a * b).sum();
                let scale = (op.norm() * y.norm()).max(f64::MIN_POSITIVE);
                t.record((lhs - rhs).abs() / scale);
            }
        }
    }
    Ok(t.finish())
}

/// `|L w|_F <= sqrt(2p) |w|` on random draws, and equality at `w = 1`.
/// The metric is the relative excess over the bound, or the relative gap
/// from it at the all-ones vector.
pub fn operator_norm_check(p_max: usize, draws: usize, seed: u64) -> Result<CheckOutcome> {
    let mut t = Tally::new("laplacian operator norm", 1e-10);
    let mut r = rng(seed);
    for p in 2..=p_max {
        let m = edge_count(p);
        let bound = operator_norms(p).0;
        for _ in 0..draws {
            let w = uniform_vec(&mut r, m, -1.0, 1.0);
            let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ratio = lap_apply(p, &w)?.norm() / wn;
            t.record((ratio / bound - 1.0).max(0.0));
        }
        let ones = vec![1.0; m];
        let ratio = lap_apply(p, &ones)?.norm() / (m as f64).sqrt();
        t.record((ratio / bound - 1.0).abs());
    }
    Ok(t.finish())
}

/// Pooling solver against the brute-force oracle on random chains of
/// length at most `q_max`. Three limits apply: deviation from the oracle
/// (`1e-6`), KKT residual (`1e-8`), and sweeps at most `q + 1`. The metric
/// is the worst of the three, each divided by its limit, so `1` is the pass
/// line.
pub fn isotonic_check(q_max: usize, instances: usize, seed: u64) -> Result<CheckOutcome> {
    let mut t = Tally::new("isotonic vs oracle", 1.0);
    let mut r = rng(seed);
    for _ in 0..instances {
        let q = r.random_range(1..=q_max);
        let beta = log_uniform(&mut r, 0.1, 1e4);
        let scale = r.random_range(0.1..10.0);
        let d = uniform_vec(&mut r, q, -scale, scale);
        let lo = log_uniform(&mut r, 1e-3, 1.0);
        let hi = if r.random_bool(0.2) {
            f64::INFINITY
        } else {
            lo + r.random_range(0.0..2.0 * scale)
        };
        let bounds = OrderedBox::new(lo, hi)?;
        let sol = reg_isotonic_with_stats(&d, beta, bounds)?;
        let oracle = oracle_solve(&d, beta, bounds, true);
        let dev = sol
            .values
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let kkt = kkt_residual(&sol.values, &d, beta, bounds);
        let sweeps = sol.sweeps as f64 / (q + 1) as f64;
        t.record((dev / 1e-6).max(kkt / 1e-8).max(sweeps));
    }
    Ok(t.finish())
}

/// Random sample covariance from a structured graph for the given solver.
fn random_problem(algo: Algorithm, r: &mut ChaCha8Rng, p_max: usize) -> Result<(DMatrix<f64>, usize)> {
    let seed: u64 = r.random();
    let (truth, k) = match algo {
        Algorithm::Sgl => {
            let k = r.random_range(1..=3);
            let p = r.random_range((3 * k).max(6)..=p_max);
            (gen_multicomponent(p, k, 0.6, 0.2, 2.0, seed)?, k)
        }
        Algorithm::Sga => {
            let p1 = r.random_range(3..=p_max / 2);
            let p2 = r.random_range(3..=p_max - p1);
            (gen_bipartite(p1, p2, 0.7, 0.2, 2.0, seed)?, 1)
        }
        Algorithm::Sgla => {
            let k = r.random_range(1..=3);
            let parts: Vec<(usize, usize, f64)> = (0..k)
                .map(|_| (r.random_range(3..=5), r.random_range(2..=4), 0.8))
                .collect();
            (gen_multi_bipartite(&parts, 0.5, 2.0, seed)?, k)
        }
    };
    let p = truth.nodes();
    let noise = gen_er_noise(p, 0.2, 0.2, derive_seed(seed, 1))?;
    let precision = truth.theta + noise.theta;
    let x = sample_igmrf(&precision, 10 * p, &mut rng(derive_seed(seed, 2)))?;
    Ok((scm(&x), k))
}

/// Runs the solver for `max_iter` iterations on random instances and
/// measures the largest increase of the objective between consecutive
/// iterates, relative to `max(|f|, 1)`.
pub fn monotonicity_check(
    algo: Algorithm,
    instances: usize,
    p_max: usize,
    max_iter: usize,
    seed: u64,
) -> Result<CheckOutcome> {
    let mut t = Tally::new(format!("{algo:?} objective monotone"), 1e-9);
    let mut r = rng(seed);
    for _ in 0..instances {
        let (s, k) = random_problem(algo, &mut r, p_max)?;
        let cfg = SolverConfig {
            beta: log_uniform(&mut r, 10.0, 1e3),
            gamma: log_uniform(&mut r, 10.0, 1e3),
            alpha: if r.random_bool(0.5) { 0.0 } else { 0.05 },
            tol: 1e-12,
            max_iter,
            ..Default::default()
        };
        let lap = LaplacianSpectralSet::k_component(k);
        let fit = match algo {
            Algorithm::Sgl => sgl::fit(&s, &lap, &cfg)?,
            Algorithm::Sga => sga::fit(&s, &AdjacencySpectralSet::default(), &cfg)?,
            Algorithm::Sgla => sgla::fit(&s, &lap, &AdjacencySpectralSet::unboxed(), &cfg)?,
        };
        let worst = fit
            .objective_trace
            .windows(2)
            .map(|f| (f[1] - f[0]) / f[0].abs().max(1.0))
            .fold(0.0, f64::max);
        t.record(worst);
    }
    Ok(t.finish())
}

/// Analytic w-subproblem gradient against central differences at random
/// positive weight vectors. The metric is `|fd - g| / max(|g|, 1)`.
pub fn gradient_check(algo: Algorithm, points: usize, p_max: usize, seed: u64) -> Result<CheckOutcome> {
    let mut t = Tally::new(format!("{algo:?} gradient"), 1e-5);
    let mut r = rng(seed);
    for _ in 0..points {
        let (s, k) = random_problem(algo, &mut r, p_max)?;
        let p = s.nrows();
        let w = WeightVector::new(p, uniform_vec(&mut r, edge_count(p), 0.2, 1.5))?;
        let kmat = penalised_scm(&s, r.random_range(0.0..0.1));
        let beta = log_uniform(&mut r, 1.0, 100.0);
        let gamma = log_uniform(&mut r, 1.0, 100.0);
        let lap = LaplacianSpectralSet::k_component(k);
        let (cost, grad): (Box<dyn Fn(&[f64]) -> f64>, Vec<f64>) = match algo {
            Algorithm::Sgl => {
                let st = SglState::from_weights(w.clone(), kmat, beta, lap)?;
                let g = st.w_gradient(w.as_slice());
                (Box::new(move |x| st.w_cost(x)), g)
            }
            Algorithm::Sga => {
                let st = SgaState::from_weights(w.clone(), kmat, gamma, AdjacencySpectralSet::default())?;
                let g = st.w_gradient(w.as_slice())?;
                (Box::new(move |x| st.w_cost(x)), g)
            }
            Algorithm::Sgla => {
                let st = SglaState::from_weights(
                    w.clone(),
                    kmat,
                    beta,
                    gamma,
                    lap,
                    AdjacencySpectralSet::unboxed(),
                )?;
                let g = st.w_gradient(w.as_slice());
                (Box::new(move |x| st.w_cost(x)), g)
            }
        };
        let h = 1e-5;
        let mut x = w.as_slice().to_vec();
        let mut worst = 0.0f64;
        for k in 0..x.len() {
            let orig = x[k];
            x[k] = orig + h;
            let up = cost(&x);
            x[k] = orig - h;
            let down = cost(&x);
            x[k] = orig;
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((fd - grad[k]).abs() / grad[k].abs().max(1.0));
        }
        t.record(worst);
    }
    Ok(t.finish())
}

/// Outcome of the sampler check: the largest entrywise z-score of the
/// empirical second moment against the pseudo-inverse, and the largest
/// absolute within-component sample sum.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SamplerStats {
    pub max_z: f64,
    pub max_component_sum: f64,
}

/// Draws `n` samples from a two-component graph on `p` nodes and compares
/// their second moment with the pseudo-inverse of the precision matrix.
pub fn sampler_stats(p: usize, n: usize, seed: u64) -> Result<SamplerStats> {
    let g = gen_multicomponent(p, 2, 1.0, 0.5, 2.0, seed)?;
    let cov = crate::eigen::pinv(&g.theta, crate::eigen::DEFAULT_RANK_TOL)?;
    let x = sample_igmrf(&g.theta, n, &mut rng(derive_seed(seed, 2)))?;
    let mut max_z = 0.0f64;
    for i in 0..p {
        for j in 0..=i {
            let prod: Vec<f64> = (0..n).map(|s| x[(s, i)] * x[(s, j)]).collect();
            let mean = prod.iter().sum::<f64>() / n as f64;
            let var = prod.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            max_z = max_z.max((mean - cov[(i, j)]).abs() / se);
        }
    }
    let mut max_sum = 0.0f64;
    for s in 0..n {
        for c in 0..2 {
            let sum: f64 = (0..p)
                .filter(|&i| g.component_labels[i] == c)
                .map(|i| x[(s, i)])
                .sum();
            max_sum = max_sum.max(sum.abs());
        }
    }
    Ok(SamplerStats {
        max_z,
        max_component_sum: max_sum,
    })
}

/// The reduced suite.
pub fn selfcheck(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = vec![
        adjoint_check(20, 10, seed)?,
        operator_norm_check(20, 10, derive_seed(seed, 1))?,
        isotonic_check(8, 200, derive_seed(seed, 2))?,
    ];
    for (i, algo) in [Algorithm::Sgl, Algorithm::Sga, Algorithm::Sgla].into_iter().enumerate() {
        let s = derive_seed(seed, 10 + i as u64);
        out.push(monotonicity_check(algo, 3, 16, 100, s)?);
        out.push(gradient_check(algo, 3, 10, derive_seed(s, 1))?);
    }
    let start = Instant::now();
    let st = sampler_stats(8, 20_000, derive_seed(seed, 20))?;
    out.push(CheckOutcome {
        name: "sampler null-space sums".into(),
        passed: st.max_component_sum <= 1e-10,
        worst: st.max_component_sum,
        limit: 1e-10,
        cases: 20_000,
        seconds: start.elapsed().as_secs_f64(),
    });
    Ok(out)
}
