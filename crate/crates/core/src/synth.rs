//! Ground-truth graph generators, IGMRF sampling and sample covariance.
//!
//! Every generator walks candidate pairs in edge-index order and draws one
//! uniform to decide whether the edge exists, then one more for its weight.
//! A seed and a [`GeneratorSpec`] therefore pin the graph down completely.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::eigen::{sym_eigen, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::graphops::{edge_count, EdgeIndexMap, WeightVector};

/// Seeded generator used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-stream of `seed`; stream 0 is `seed` itself.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Recipe for a ground-truth graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// `side x side` lattice, 4-nearest-neighbour edges.
    Grid { side: usize, wmin: f64, wmax: f64 },
    /// Stochastic block model with `k` near-equal modules.
    Modular {
        p: usize,
        k: usize,
        p_in: f64,
        p_out: f64,
        wmin: f64,
        wmax: f64,
    },
    /// `k` near-equal components, no edges across.
    MultiComponent {
        p: usize,
        k: usize,
        prob: f64,
        wmin: f64,
        wmax: f64,
    },
    /// Random bipartite graph between parts of size `p1` and `p2`.
    Bipartite {
        p1: usize,
        p2: usize,
        prob: f64,
        wmin: f64,
        wmax: f64,
    },
    /// Disjoint union of bipartite components, each `[p1, p2, prob]`.
    MultiBipartite {
        parts: Vec<(usize, usize, f64)>,
        wmin: f64,
        wmax: f64,
    },
    /// Erdos-Renyi graph with weights uniform on `[0, kappa]`.
    ErNoise { p: usize, prob: f64, kappa: f64 },
    /// `truth` plus Erdos-Renyi noise on the same node set.
    Noisy {
        truth: Box<GeneratorSpec>,
        noise_prob: f64,
        kappa: f64,
    },
}

impl GeneratorSpec {
    pub fn nodes(&self) -> usize {
        match self {
            Self::Grid { side, .. } => side * side,
            Self::Modular { p, .. } | Self::MultiComponent { p, .. } | Self::ErNoise { p, .. } => *p,
            Self::Bipartite { p1, p2, .. } => p1 + p2,
            Self::MultiBipartite { parts, .. } => parts.iter().map(|(a, b, _)| a + b).sum(),
            Self::Noisy { truth, .. } => truth.nodes(),
        }
    }

    /// Number of connected components the recipe is built around.
    pub fn components(&self) -> usize {
        match self {
            Self::MultiComponent { k, .. } => *k,
            Self::MultiBipartite { parts, .. } => parts.len(),
            _ => 1,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<GroundTruth> {
        match self {
            Self::Grid { side, wmin, wmax } => gen_grid(*side, *wmin, *wmax, seed),
            Self::Modular {
                p,
                k,
                p_in,
                p_out,
                wmin,
                wmax,
            } => gen_modular(*p, *k, *p_in, *p_out, *wmin, *wmax, seed),
            Self::MultiComponent {
                p,
                k,
                prob,
                wmin,
                wmax,
            } => gen_multicomponent(*p, *k, *prob, *wmin, *wmax, seed),
            Self::Bipartite {
                p1,
                p2,
                prob,
                wmin,
                wmax,
            } => gen_bipartite(*p1, *p2, *prob, *wmin, *wmax, seed),
            Self::MultiBipartite { parts, wmin, wmax } => {
                gen_multi_bipartite(parts, *wmin, *wmax, seed)
            }
            Self::ErNoise { p, prob, kappa } => gen_er_noise(*p, *prob, *kappa, seed),
            Self::Noisy {
                truth,
                noise_prob,
                kappa,
            } => {
                let t = truth.generate(seed)?;
                let n = gen_er_noise(t.nodes(), *noise_prob, *kappa, derive_seed(seed, 1))?;
                let mut out = compose_noisy(&t, &n)?;
                out.generator = self.clone();
                Ok(out)
            }
        }
    }
}

/// One draw of an experiment: the graph to recover and the precision matrix
/// the data are sampled from. They differ only for noisy recipes.
#[derive(Debug, Clone)]
pub struct Instance {
    pub truth: GroundTruth,
    pub precision: DMatrix<f64>,
}

impl GeneratorSpec {
    pub fn instance(&self, seed: u64) -> Result<Instance> {
        match self {
            Self::Noisy {
                truth,
                noise_prob,
                kappa,
            } => {
                let t = truth.generate(seed)?;
                let n = gen_er_noise(t.nodes(), *noise_prob, *kappa, derive_seed(seed, 1))?;
                let precision = compose_noisy(&t, &n)?.theta;
                Ok(Instance { truth: t, precision })
            }
            _ => {
                let truth = self.generate(seed)?;
                Ok(Instance {
                    precision: truth.theta.clone(),
                    truth,
                })
            }
        }
    }
}

/// A generated graph with the structure it was built to have.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub weights: WeightVector,
    /// `L w`.
    pub theta: DMatrix<f64>,
    /// Component (or module) index of every node.
    pub component_labels: Vec<usize>,
    /// Side of every node for bipartite recipes.
    pub bipartition: Option<Vec<bool>>,
    pub generator: GeneratorSpec,
}

impl GroundTruth {
    fn new(
        weights: WeightVector,
        component_labels: Vec<usize>,
        bipartition: Option<Vec<bool>>,
        generator: GeneratorSpec,
    ) -> Self {
        Self {
            theta: weights.laplacian(),
            weights,
            component_labels,
            bipartition,
            generator,
        }
    }

    pub fn nodes(&self) -> usize {
        self.weights.nodes()
    }
}

fn check_weights(wmin: f64, wmax: f64) -> Result<()> {
    if !(wmin >= 0.0 && wmin <= wmax && wmax.is_finite()) {
        return Err(Error::domain(format!(
            "weight range must satisfy 0 <= wmin <= wmax (got [{wmin}, {wmax}])"
        )));
    }
    Ok(())
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::domain(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

fn check_nodes(p: usize) -> Result<()> {
    if p < 2 {
        return Err(Error::domain(format!("need at least two nodes, got {p}")));
    }
    Ok(())
}

/// Walks all pairs in edge-index order. `prob(i, j)` gives the chance of an
/// edge; pairs with probability zero consume no randomness.
fn sample_edges(
    p: usize,
    wmin: f64,
    wmax: f64,
    seed: u64,
    prob: impl Fn(usize, usize) -> f64,
) -> Result<WeightVector> {
    let mut rng = rng(seed);
    let mut w = vec![0.0; edge_count(p)];
    for (k, i, j) in EdgeIndexMap::new(p).iter() {
        let pr = prob(i, j);
        if pr <= 0.0 {
            continue;
        }
        if rng.random::<f64>() < pr {
            w[k] = wmin + (wmax - wmin) * rng.random::<f64>();
        }
    }
    WeightVector::new(p, w)
}

/// Near-equal consecutive groups: the first `p mod k` get one extra node.
fn equal_groups(p: usize, k: usize) -> Vec<usize> {
    let base = p / k;
    let extra = p % k;
    let mut labels = Vec::with_capacity(p);
    for g in 0..k {
        let size = base + usize::from(g < extra);
        labels.extend(std::iter::repeat_n(g, size));
    }
    labels
}

pub fn gen_grid(side: usize, wmin: f64, wmax: f64, seed: u64) -> Result<GroundTruth> {
    check_weights(wmin, wmax)?;
    check_nodes(side * side)?;
    let p = side * side;
    let w = sample_edges(p, wmin, wmax, seed, |i, j| {
        // i > j; node n sits at (n / side, n % side).
        let (ri, ci) = (i / side, i % side);
        let (rj, cj) = (j / side, j % side);
        let adjacent = (ri == rj && ci == cj + 1) || (ci == cj && ri == rj + 1);
        if adjacent {
            1.0
        } else {
            0.0
        }
    })?;
    Ok(GroundTruth::new(
        w,
        vec![0; p],
        None,
        GeneratorSpec::Grid { side, wmin, wmax },
    ))
}

#[allow(clippy::too_many_arguments)]
pub fn gen_modular(
    p: usize,
    k: usize,
    p_in: f64,
    p_out: f64,
    wmin: f64,
    wmax: f64,
    seed: u64,
) -> Result<GroundTruth> {
    check_weights(wmin, wmax)?;
    check_prob("p_in", p_in)?;
    check_prob("p_out", p_out)?;
    check_nodes(p)?;
    if k == 0 || k > p {
        return Err(Error::domain(format!("module count must be in 1..={p}, got {k}")));
    }
    let labels = equal_groups(p, k);
    let w = sample_edges(p, wmin, wmax, seed, |i, j| {
        if labels[i] == labels[j] {
            p_in
        } else {
            p_out
        }
    })?;
    Ok(GroundTruth::new(
        w,
        labels,
        None,
        GeneratorSpec::Modular {
            p,
            k,
            p_in,
            p_out,
            wmin,
            wmax,
        },
    ))
}

pub fn gen_multicomponent(
    p: usize,
    k: usize,
    prob: f64,
    wmin: f64,
    wmax: f64,
    seed: u64,
) -> Result<GroundTruth> {
    let mut g = gen_modular(p, k, prob, 0.0, wmin, wmax, seed)?;
    g.generator = GeneratorSpec::MultiComponent {
        p,
        k,
        prob,
        wmin,
        wmax,
    };
    Ok(g)
}

pub fn gen_bipartite(
    p1: usize,
    p2: usize,
    prob: f64,
    wmin: f64,
    wmax: f64,
    seed: u64,
) -> Result<GroundTruth> {
    let mut g = gen_multi_bipartite(&[(p1, p2, prob)], wmin, wmax, seed)?;
    g.generator = GeneratorSpec::Bipartite {
        p1,
        p2,
        prob,
        wmin,
        wmax,
    };
    Ok(g)
}

/// Disjoint bipartite components laid out consecutively; inside component
/// `c` the first `p1` nodes form one side.
pub fn gen_multi_bipartite(
    parts: &[(usize, usize, f64)],
    wmin: f64,
    wmax: f64,
    seed: u64,
) -> Result<GroundTruth> {
    check_weights(wmin, wmax)?;
    if parts.is_empty() {
        return Err(Error::domain("need at least one bipartite component"));
    }
    let mut labels = Vec::new();
    let mut side = Vec::new();
    let mut probs = Vec::new();
    for (c, &(p1, p2, prob)) in parts.iter().enumerate() {
        check_prob("prob", prob)?;
        if p1 == 0 || p2 == 0 {
            return Err(Error::domain("both sides of a bipartite component need nodes"));
        }
        labels.extend(std::iter::repeat_n(c, p1 + p2));
        side.extend(std::iter::repeat_n(false, p1));
        side.extend(std::iter::repeat_n(true, p2));
        probs.push(prob);
    }
    let p = labels.len();
    let w = sample_edges(p, wmin, wmax, seed, |i, j| {
        if labels[i] == labels[j] && side[i] != side[j] {
            probs[labels[i]]
        } else {
            0.0
        }
    })?;
    Ok(GroundTruth::new(
        w,
        labels,
        Some(side),
        GeneratorSpec::MultiBipartite {
            parts: parts.to_vec(),
            wmin,
            wmax,
        },
    ))
}

pub fn gen_er_noise(p: usize, prob: f64, kappa: f64, seed: u64) -> Result<GroundTruth> {
    check_prob("prob", prob)?;
    check_weights(0.0, kappa)?;
    check_nodes(p)?;
    let w = sample_edges(p, 0.0, kappa, seed, |_, _| prob)?;
    Ok(GroundTruth::new(
        w,
        vec![0; p],
        None,
        GeneratorSpec::ErNoise { p, prob, kappa },
    ))
}

/// `Theta_true + Theta_noise`; labels and bipartition come from `truth`.
pub fn compose_noisy(truth: &GroundTruth, noise: &GroundTruth) -> Result<GroundTruth> {
    let p = truth.nodes();
    if noise.nodes() != p {
        return Err(Error::structure(format!(
            "noise has {} nodes, truth has {p}",
            noise.nodes()
        )));
    }
    let w: Vec<f64> = truth
        .weights
        .as_slice()
        .iter()
        .zip(noise.weights.as_slice())
        .map(|(a, b)| a + b)
        .collect();
    Ok(GroundTruth::new(
        WeightVector::new(p, w)?,
        truth.component_labels.clone(),
        truth.bipartition.clone(),
        truth.generator.clone(),
    ))
}

/// Draws `n` samples of the improper GMRF with precision `theta`, returned
/// as rows of an `n x p` matrix. Each sample is `U+ diag(lambda+)^(-1/2) z`
/// over the non-null eigenpairs, so it is orthogonal to the null space.
pub fn sample_igmrf<R: Rng + ?Sized>(theta: &DMatrix<f64>, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(theta)?;
    let p = eig.dim();
    let max = eig.values.iter().fold(0.0f64, |m, v| m.max(*v));
    let keep: Vec<usize> = (0..p)
        .filter(|&i| eig.values[i] > DEFAULT_RANK_TOL * max)
        .collect();
    // Columns of `root` are u_i / sqrt(lambda_i).
    let mut root = DMatrix::zeros(p, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        root.set_column(c, &(eig.vectors.column(i) / eig.values[i].sqrt()));
    }
    let z = DMatrix::from_fn(keep.len(), n, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok((root * z).transpose())
}

/// Mean-centred sample covariance `(1/n) sum (x - xbar)(x - xbar)^T` of the
/// rows of `x`.
pub fn scm(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = x.shape();
    if n == 0 {
        return DMatrix::zeros(p, p);
    }
    let mean = x.row_mean();
    let mut c = x.clone();
    for mut row in c.row_iter_mut() {
        row -= &mean;
    }
    let mut s = c.transpose() * &c / n as f64;
    // Exact symmetry for downstream checks.
    for i in 0..p {
        for j in 0..i {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

/// Writes the positive weights as CSV rows `i,j,weight` with 1-based
/// indices and a header line.
pub fn write_edge_list<W: Write>(w: &WeightVector, out: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["i", "j", "weight"])?;
    for (k, i, j) in w.index_map().iter() {
        let v = w.as_slice()[k];
        if v > 0.0 {
            wr.write_record(&[(i + 1).to_string(), (j + 1).to_string(), format!("{v:?}")])?;
        }
    }
    wr.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct EdgeRow {
    i: usize,
    j: usize,
    weight: f64,
}

/// Reads an edge list written by [`write_edge_list`]. With `p = None` the
/// node count is the largest index seen.
pub fn read_edge_list<R: Read>(input: R, p: Option<usize>) -> Result<WeightVector> {
    let mut rd = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for (n, rec) in rd.deserialize::<EdgeRow>().enumerate() {
        let row = rec.map_err(|e| Error::Parse {
            line: n + 2,
            msg: e.to_string(),
        })?;
        if row.i == 0 || row.j == 0 || row.i == row.j {
            return Err(Error::Parse {
                line: n + 2,
                msg: format!("invalid pair ({}, {})", row.i, row.j),
            });
        }
        rows.push((n + 2, row));
    }
    let seen = rows.iter().map(|(_, r)| r.i.max(r.j)).max().unwrap_or(0);
    let p = p.unwrap_or(seen);
    if seen > p {
        return Err(Error::structure(format!("edge list names node {seen} but p = {p}")));
    }
    let map = EdgeIndexMap::new(p);
    let mut w = vec![0.0; edge_count(p)];
    for (_, r) in rows {
        let (a, b) = (r.i.max(r.j) - 1, r.i.min(r.j) - 1);
        w[map.index(a, b)] = r.weight;
    }
    WeightVector::new(p, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degrees(g: &GroundTruth) -> Vec<usize> {
        let a = g.weights.adjacency();
        (0..g.nodes())
            .map(|i| a.row(i).iter().filter(|v| **v > 0.0).count())
            .collect()
    }

    fn is_laplacian(t: &DMatrix<f64>) -> bool {
        let p = t.nrows();
        let rows = (0..p).all(|i| t.row(i).sum().abs() < 1e-12);
        let off = (0..p).all(|i| (0..p).all(|j| i == j || t[(i, j)] <= 0.0));
        let sym = t == &t.transpose();
        rows && off && sym
    }

    #[test]
    fn grid_side_two_is_four_cycle() {
        let g = gen_grid(2, 1.0, 1.0, 0).unwrap();
        assert_eq!(g.weights.as_slice().iter().filter(|v| **v > 0.0).count(), 4);
        assert_eq!(degrees(&g), vec![2; 4]);
    }

    #[test]
    fn grid_degrees() {
        let g = gen_grid(8, 0.1, 3.0, 1).unwrap();
        assert_eq!(g.nodes(), 64);
        let d = degrees(&g);
        assert_eq!(d[0], 2);
        assert_eq!(d[63], 2);
        assert_eq!(d[9], 4);
        assert_eq!(d[1], 3);
        assert!(g.weights.as_slice().iter().all(|v| *v == 0.0 || (0.1..=3.0).contains(v)));
        assert!(is_laplacian(&g.theta));
    }

    #[test]
    fn modular_without_crossings_is_block_diagonal() {
        let g = gen_modular(12, 3, 0.8, 0.0, 0.1, 3.0, 2).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                if g.component_labels[i] != g.component_labels[j] {
                    assert_eq!(g.theta[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn multicomponent_null_space() {
        let g = gen_multicomponent(16, 4, 1.0, 0.5, 1.0, 3).unwrap();
        let e = sym_eigen(&g.theta).unwrap();
        assert_eq!(e.null_count(1e-9), 4);
        let empty = gen_multicomponent(5, 5, 1.0, 0.5, 1.0, 3).unwrap();
        assert!(empty.weights.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn complete_bipartite_and_symmetric_spectrum() {
        let g = gen_bipartite(3, 4, 1.0, 1.0, 2.0, 4).unwrap();
        assert_eq!(g.weights.as_slice().iter().filter(|v| **v > 0.0).count(), 12);
        let g = gen_bipartite(5, 3, 0.6, 1.0, 3.0, 5).unwrap();
        let e = sym_eigen(&g.weights.adjacency()).unwrap();
        let n = e.dim();
        for i in 0..n {
            assert!((e.values[i] + e.values[n - 1 - i]).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_noise_composes_to_identity() {
        let t = gen_grid(3, 0.1, 3.0, 6).unwrap();
        let z = gen_er_noise(9, 0.5, 0.0, 7).unwrap();
        let c = compose_noisy(&t, &z).unwrap();
        assert_eq!(c.theta, t.theta);
        let n = gen_er_noise(9, 0.5, 0.45, 7).unwrap();
        assert!(is_laplacian(&compose_noisy(&t, &n).unwrap().theta));
    }

    #[test]
    fn seeded_determinism() {
        let spec = GeneratorSpec::Noisy {
            truth: Box::new(GeneratorSpec::MultiComponent {
                p: 20,
                k: 4,
                prob: 1.0,
                wmin: 0.0,
                wmax: 1.0,
            }),
            noise_prob: 0.35,
            kappa: 0.45,
        };
        let a = spec.generate(11).unwrap();
        let b = spec.generate(11).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_ne!(a.weights, spec.generate(12).unwrap().weights);
        let xa = sample_igmrf(&a.theta, 10, &mut rng(1)).unwrap();
        let xb = sample_igmrf(&b.theta, 10, &mut rng(1)).unwrap();
        assert_eq!(xa, xb);
    }

    #[test]
    fn noisy_instance_keeps_clean_truth() {
        let inner = GeneratorSpec::Bipartite {
            p1: 4,
            p2: 3,
            prob: 1.0,
            wmin: 1.0,
            wmax: 2.0,
        };
        let spec = GeneratorSpec::Noisy {
            truth: Box::new(inner.clone()),
            noise_prob: 0.5,
            kappa: 0.3,
        };
        let inst = spec.instance(4).unwrap();
        assert_eq!(inst.truth.weights, inner.generate(4).unwrap().weights);
        assert_eq!(inst.precision, spec.generate(4).unwrap().theta);
        assert_ne!(inst.precision, inst.truth.theta);
    }

    #[test]
    fn scm_cases() {
        let x = DMatrix::from_element(5, 3, 2.0);
        assert_eq!(scm(&x), DMatrix::zeros(3, 3));
        let one = DMatrix::from_row_slice(1, 2, &[1.0, 3.0]);
        assert_eq!(scm(&one), DMatrix::zeros(2, 2));
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 1.0, 2.0, 6.0]);
        let s = scm(&x);
        // direct two-pass
        let m0 = 2.0;
        let m1 = 3.0;
        let c01 = ((1.0 - m0) * (2.0 - m1) + (3.0 - m0) * (1.0 - m1) + 0.0) / 3.0;
        assert!((s[(0, 1)] - c01).abs() < 1e-12);
    }

    #[test]
    fn samples_orthogonal_to_components() {
        let g = gen_multicomponent(9, 3, 1.0, 0.5, 1.5, 8).unwrap();
        let x = sample_igmrf(&g.theta, 50, &mut rng(9)).unwrap();
        for row in x.row_iter() {
            for c in 0..3 {
                let s: f64 = (0..9).filter(|&i| g.component_labels[i] == c).map(|i| row[i]).sum();
                assert!(s.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = gen_bipartite(3, 3, 0.7, 0.1, 3.0, 10).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g.weights, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("i,j,weight\n"));
        let back = read_edge_list(buf.as_slice(), Some(6)).unwrap();
        assert_eq!(back, g.weights);
    }

    #[test]
    fn edge_list_parse_error_names_line() {
        let bad = "i,j,weight\n2,1,0.5\n3,x,1.0\n";
        match read_edge_list(bad.as_bytes(), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = GeneratorSpec::MultiBipartite {
            parts: vec![(10, 4, 0.7), (6, 4, 0.8)],
            wmin: 1.0,
            wmax: 3.0,
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<GeneratorSpec>(&s).unwrap(), spec);
        assert_eq!(spec.nodes(), 24);
    }
}
