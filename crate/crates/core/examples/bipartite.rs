//! Bipartite graph learning from data generated by a noisy bipartite graph.

use spectral_graph::eigen::sym_eigen;
use spectral_graph::metrics::{baseline_naive, baseline_qp, f_score, QpConfig, EDGE_THRESHOLD};
use spectral_graph::sga::{self, AdjacencySpectralSet};
use spectral_graph::solver::SolverConfig;
use spectral_graph::synth::{rng, sample_igmrf, scm, GeneratorSpec};

fn main() -> spectral_graph::Result<()> {
    let spec = GeneratorSpec::Noisy {
        truth: Box::new(GeneratorSpec::Bipartite {
            p1: 20,
            p2: 12,
            prob: 0.7,
            wmin: 0.1,
            wmax: 1.0,
        }),
        noise_prob: 0.35,
        kappa: 0.45,
    };
    let inst = spec.instance(1)?;
    let x = sample_igmrf(&inst.precision, 500 * 32, &mut rng(2))?;
    let s = scm(&x);

    let cfg = SolverConfig {
        gamma: 1e5,
        tol: 1e-6,
        max_iter: 50_000,
        ..Default::default()
    };
    let fit = sga::fit(&s, &AdjacencySpectralSet::default(), &cfg)?;
    let qp = baseline_qp(&s, &QpConfig::default())?;
    for (name, theta) in [
        ("sga", fit.theta.clone()),
        ("qp", qp.weights.laplacian()),
        ("naive", baseline_naive(&s)?),
    ] {
        let r = f_score(&theta, &inst.truth.theta, EDGE_THRESHOLD)?;
        println!("{name:<6} RE {:.4} FS {:.4}", r.relative_error, r.f_score);
    }

    // A bipartite graph has an adjacency spectrum symmetric about zero.
    let e = sym_eigen(&fit.weights.adjacency())?.values;
    let asym = (0..e.len() / 2)
        .map(|i| (e[i] + e[e.len() - 1 - i]).abs())
        .fold(0.0, f64::max);
    println!("adjacency spectrum asymmetry {asym:.2e} after {} iterations", fit.iterations);
    Ok(())
}
