//! The eigenvalue updates: log-regularised isotonic regression on a box and
//! the symmetric projection used for adjacency spectra.

use spectral_graph::isotonic::oracle::oracle_solve;
use spectral_graph::isotonic::{
    kkt_residual, reg_isotonic_with_stats, sym_isotonic_psi, OrderedBox,
};

fn main() -> spectral_graph::Result<()> {
    let d = [0.8, 0.3, 1.5, 1.2, 4.0, -0.5];
    let beta = 10.0;
    let bounds = OrderedBox::new(0.1, 3.0)?;

    let sol = reg_isotonic_with_stats(&d, beta, bounds)?;
    let oracle = oracle_solve(&d, beta, bounds, true);
    println!("targets  {d:?}");
    println!("pooled   {:?}", round(&sol.values));
    println!("oracle   {:?}", round(&oracle));
    println!(
        "{} sweeps, KKT residual {:.1e}",
        sol.sweeps,
        kkt_residual(&sol.values, &d, beta, bounds)
    );

    // Larger beta pulls the solution towards the (sorted, clipped) targets.
    for beta in [0.1, 1.0, 100.0, 1e4] {
        let x = reg_isotonic_with_stats(&d, beta, bounds)?.values;
        println!("beta {beta:>7}: {:?}", round(&x));
    }

    let e = [2.1, 0.9, 0.2, -0.1, -1.1, -1.9];
    let psi = sym_isotonic_psi(&e, OrderedBox::new(0.0, 2.0)?)?;
    println!("\nadjacency targets {e:?}");
    println!("symmetric psi     {:?}", round(&psi));
    Ok(())
}

fn round(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1e4).round() / 1e4).collect()
}
