//! Edge indexing and the Laplacian / adjacency operators with their adjoints.

use nalgebra::DMatrix;
use spectral_graph::graphops::{
    adj_adjoint, adj_apply, frob_inner, lap_adjoint, lap_apply, operator_norms, EdgeIndexMap,
    WeightVector,
};

fn main() -> spectral_graph::Result<()> {
    let p = 4;
    let map = EdgeIndexMap::new(p);
    println!("{} edges on {p} nodes, column-major over the lower triangle:", map.len());
    for (k, i, j) in map.iter() {
        println!("  k = {k}  ->  ({i}, {j})");
    }

    let w = WeightVector::new(p, vec![1.0, 0.0, 2.0, 0.5, 0.0, 1.5])?;
    println!("\nL w =\n{}", w.laplacian());
    println!("A w =\n{}", w.adjacency());

    let y = DMatrix::from_fn(p, p, |i, j| (i as f64 - 2.0 * j as f64).sin());
    let lw = lap_apply(p, w.as_slice())?;
    let aw = adj_apply(p, w.as_slice())?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    println!(
        "<Lw, Y> = {:.12}   <w, L*Y> = {:.12}",
        frob_inner(&lw, &y),
        dot(w.as_slice(), &lap_adjoint(&y)?)
    );
    println!(
        "<Aw, Y> = {:.12}   <w, A*Y> = {:.12}",
        frob_inner(&aw, &y),
        dot(w.as_slice(), &adj_adjoint(&y)?)
    );

    let (ln, an) = operator_norms(p);
    let ones = vec![1.0; map.len()];
    let ratio = lap_apply(p, &ones)?.norm() / (map.len() as f64).sqrt();
    println!("\n|L| = {ln:.6}, attained at w = 1: {ratio:.6}; |A| = {an:.6}");

    let back = WeightVector::from_laplacian(&w.laplacian())?;
    assert_eq!(back, w);
    println!("from_laplacian(L w) recovers w");
    Ok(())
}
