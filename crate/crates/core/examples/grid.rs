//! Connected graph learning on a grid, compared with the two unstructured
//! baselines.

use spectral_graph::metrics::{baseline_naive, baseline_qp, f_score, QpConfig, EDGE_THRESHOLD};
use spectral_graph::sgl::{self, LaplacianSpectralSet};
use spectral_graph::solver::SolverConfig;
use spectral_graph::synth::{gen_grid, rng, sample_igmrf, scm};

fn main() -> spectral_graph::Result<()> {
    let truth = gen_grid(8, 0.1, 3.0, 1)?;
    let p = truth.nodes();
    let x = sample_igmrf(&truth.theta, 30 * p, &mut rng(2))?;
    let s = scm(&x);

    let cfg = SolverConfig {
        beta: 100.0,
        tol: 1e-6,
        max_iter: 100_000,
        ..Default::default()
    };
    let fit = sgl::fit(&s, &LaplacianSpectralSet::connected(), &cfg)?;
    let qp = baseline_qp(&s, &QpConfig::default())?;
    let naive = baseline_naive(&s)?;

    println!("p = {p}, n = {}", x.nrows());
    println!("{:<6} {:>8} {:>8}", "method", "RE", "FS");
    for (name, theta) in [
        ("sgl", fit.theta.clone()),
        ("qp", qp.weights.laplacian()),
        ("naive", naive),
    ] {
        let r = f_score(&theta, &truth.theta, EDGE_THRESHOLD)?;
        println!("{name:<6} {:>8.4} {:>8.4}", r.relative_error, r.f_score);
    }
    println!(
        "sgl: {} iterations, converged {}, objective {:.4} -> {:.4}",
        fit.iterations,
        fit.converged,
        fit.objective_trace[0],
        fit.objective_trace.last().unwrap()
    );
    Ok(())
}
