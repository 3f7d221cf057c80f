//! Ground-truth generators, IGMRF sampling, the sample covariance and the
//! edge-list format.

use spectral_graph::eigen::{pinv, DEFAULT_RANK_TOL};
use spectral_graph::synth::{read_edge_list, rng, sample_igmrf, scm, write_edge_list, GeneratorSpec};

fn main() -> spectral_graph::Result<()> {
    let specs = [
        GeneratorSpec::Grid { side: 4, wmin: 0.1, wmax: 3.0 },
        GeneratorSpec::Modular { p: 20, k: 4, p_in: 0.8, p_out: 0.05, wmin: 0.5, wmax: 1.0 },
        GeneratorSpec::MultiComponent { p: 20, k: 4, prob: 0.5, wmin: 0.0, wmax: 1.0 },
        GeneratorSpec::Bipartite { p1: 10, p2: 6, prob: 0.7, wmin: 0.1, wmax: 1.0 },
        GeneratorSpec::MultiBipartite {
            parts: vec![(10, 4, 0.7), (6, 4, 0.8), (4, 4, 0.9)],
            wmin: 1.0,
            wmax: 3.0,
        },
    ];
    for spec in &specs {
        let g = spec.generate(7)?;
        let edges = g.weights.as_slice().iter().filter(|w| **w > 0.0).count();
        println!("{spec:?}\n  {} nodes, {edges} edges", g.nodes());
    }

    // Sample covariance approaches the pseudo-inverse of the Laplacian.
    let g = specs[0].generate(1)?;
    let target = pinv(&g.theta, DEFAULT_RANK_TOL)?;
    for n in [100, 1_000, 10_000, 100_000] {
        let x = sample_igmrf(&g.theta, n, &mut rng(2))?;
        let err = (scm(&x) - &target).norm() / target.norm();
        println!("n = {n:>6}: |S - L^+| / |L^+| = {err:.4}");
    }

    let mut buf = Vec::new();
    write_edge_list(&g.weights, &mut buf)?;
    let text = String::from_utf8(buf).expect("utf-8");
    println!("\nedge list head:\n{}", text.lines().take(4).collect::<Vec<_>>().join("\n"));
    assert_eq!(read_edge_list(text.as_bytes(), Some(16))?, g.weights);
    Ok(())
}
