//! Joint learning of a graph that is both 3-component and bipartite.

use spectral_graph::metrics::{f_score, EDGE_THRESHOLD};
use spectral_graph::sga::AdjacencySpectralSet;
use spectral_graph::sgl::LaplacianSpectralSet;
use spectral_graph::sgla;
use spectral_graph::solver::SolverConfig;
use spectral_graph::synth::{rng, sample_igmrf, scm, GeneratorSpec};

fn main() -> spectral_graph::Result<()> {
    let truth = GeneratorSpec::MultiBipartite {
        parts: vec![(10, 4, 0.7), (6, 4, 0.8), (4, 4, 0.9)],
        wmin: 1.0,
        wmax: 3.0,
    };
    let spec = GeneratorSpec::Noisy {
        truth: Box::new(truth),
        noise_prob: 0.35,
        kappa: 1.0,
    };
    let inst = spec.instance(1)?;
    let x = sample_igmrf(&inst.precision, 250 * 32, &mut rng(2))?;
    let s = scm(&x);

    let cfg = SolverConfig {
        beta: 1e5,
        gamma: 1e5,
        tol: 1e-6,
        max_iter: 200_000,
        parallel_spectral: true,
        ..Default::default()
    };
    let fit = sgla::fit(
        &s,
        &LaplacianSpectralSet::k_component(3),
        &AdjacencySpectralSet::unboxed(),
        &cfg,
    )?;
    let r = f_score(&fit.theta, &inst.truth.theta, EDGE_THRESHOLD)?;
    println!(
        "RE {:.4} FS {:.4} (tp {}, fp {}, fn {}) after {} iterations",
        r.relative_error, r.f_score, r.tp, r.fp, r.fn_, fit.iterations
    );
    let lambda = fit.lambda.as_deref().unwrap_or_default();
    println!("smallest retained Laplacian eigenvalues {:?}", &lambda[..3.min(lambda.len())]);
    Ok(())
}
