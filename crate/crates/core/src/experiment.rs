//! Monte-Carlo experiment runner: generate a graph, sample, fit, evaluate,
//! tabulate.
//!
//! Cells are `(n/p, replication)` pairs. Each cell owns its RNG streams, so
//! results do not depend on scheduling and the CSV tables are byte-identical
//! for a fixed spec. Wall-clock times go to a separate table for that reason.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::graphops::WeightVector;
use crate::metrics::{
    baseline_naive, baseline_qp, f_score, EvalReport, QpConfig, EDGE_THRESHOLD,
};
use crate::sga::AdjacencySpectralSet;
use crate::sgl::LaplacianSpectralSet;
use crate::solver::{naive_weights, FitResult, SolverConfig};
use crate::synth::{
    derive_seed, rng, sample_igmrf, scm, write_edge_list, GeneratorSpec, Instance,
};
use crate::{sga, sgl, sgla};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Sgl,
    Sga,
    Sgla,
    Qp,
    Naive,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sgl => "sgl",
            Method::Sga => "sga",
            Method::Sgla => "sgla",
            Method::Qp => "qp",
            Method::Naive => "naive",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgl" => Ok(Method::Sgl),
            "sga" => Ok(Method::Sga),
            "sgla" => Ok(Method::Sgla),
            "qp" => Ok(Method::Qp),
            "naive" => Ok(Method::Naive),
            other => Err(Error::config("algorithm", format!("unknown algorithm `{other}`"))),
        }
    }
}

/// What to fit and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub algorithm: Method,
    /// Connected components; defaults to what the generator builds, or 1.
    pub k: Option<usize>,
    /// Zero adjacency eigenvalues; defaults to `p mod 2`.
    pub z: Option<usize>,
    /// Fixed non-zero Laplacian spectrum (ascending) for cospectral learning.
    pub fixed_spectrum: Option<Vec<f64>>,
    pub solver: SolverConfig,
    pub qp: QpConfig,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            algorithm: Method::Sgl,
            k: None,
            z: None,
            fixed_spectrum: None,
            solver: SolverConfig::default(),
            qp: QpConfig::default(),
        }
    }
}

/// A fitted graph, whatever produced it.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub method: Method,
    /// Non-negative weights; for the naive baseline, the projection of its
    /// off-diagonal.
    pub weights: WeightVector,
    /// The estimate that gets scored. For the naive baseline this is the
    /// pseudo-inverse itself, not a Laplacian.
    pub theta: DMatrix<f64>,
    pub solver: Option<FitResult>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate().map_err(|e| prefix_path(e, "solver"))?;
        if !(self.qp.tol > 0.0) || self.qp.max_iter == 0 {
            return Err(Error::config("qp", "tol must be positive and max_iter at least 1"));
        }
        Ok(())
    }

    pub fn fit(&self, s: &DMatrix<f64>, default_k: usize) -> Result<Fitted> {
        let k = self.k.unwrap_or(default_k);
        let lap = || match &self.fixed_spectrum {
            Some(f) => LaplacianSpectralSet::cospectral(k, f.clone()),
            None => LaplacianSpectralSet::k_component(k),
        };
        let from_solver = |method, fit: FitResult| Fitted {
            method,
            weights: fit.weights.clone(),
            theta: fit.theta.clone(),
            objective_trace: fit.objective_trace.clone(),
            iterations: fit.iterations,
            converged: fit.converged,
            solver: Some(fit),
        };
        Ok(match self.algorithm {
            Method::Sgl => from_solver(Method::Sgl, sgl::fit(s, &lap(), &self.solver)?),
            Method::Sga => {
                let adj = AdjacencySpectralSet {
                    z: self.z,
                    ..Default::default()
                };
                from_solver(Method::Sga, sga::fit(s, &adj, &self.solver)?)
            }
            Method::Sgla => {
                let adj = AdjacencySpectralSet {
                    z: self.z,
                    ..AdjacencySpectralSet::unboxed()
                };
                from_solver(Method::Sgla, sgla::fit(s, &lap(), &adj, &self.solver)?)
            }
            Method::Qp => {
                let q = baseline_qp(s, &self.qp)?;
                Fitted {
                    method: Method::Qp,
                    theta: q.weights.laplacian(),
                    weights: q.weights,
                    solver: None,
                    objective_trace: q.objective_trace,
                    iterations: q.iterations,
                    converged: q.converged,
                }
            }
            Method::Naive => Fitted {
                method: Method::Naive,
                theta: baseline_naive(s)?,
                weights: naive_weights(s, self.solver.rank_tol)?,
                solver: None,
                objective_trace: Vec::new(),
                iterations: 0,
                converged: true,
            },
        })
    }
}

/// Serialisable summary of a fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub algorithm: Method,
    pub nodes: usize,
    pub weights: Vec<f64>,
    pub lambda: Option<Vec<f64>>,
    pub psi: Option<Vec<f64>>,
    /// `(iteration, objective)` pairs.
    pub objective_trace: Vec<(usize, f64)>,
    pub iterations: usize,
    pub converged: bool,
    pub final_beta: Option<f64>,
    pub evaluation: Option<EvalReport>,
}

impl Fitted {
    /// With `full_trace` false the trace keeps every tenth iteration and the
    /// last one.
    pub fn report(&self, full_trace: bool, evaluation: Option<EvalReport>) -> FitReport {
        let last = self.objective_trace.len().saturating_sub(1);
        let trace = self
            .objective_trace
            .iter()
            .enumerate()
            .filter(|(i, _)| full_trace || i % 10 == 0 || *i == last)
            .map(|(i, v)| (i, *v))
            .collect();
        FitReport {
            algorithm: self.method,
            nodes: self.weights.nodes(),
            weights: self.weights.as_slice().to_vec(),
            lambda: self.solver.as_ref().and_then(|f| f.lambda.clone()),
            psi: self.solver.as_ref().and_then(|f| f.psi.clone()),
            objective_trace: trace,
            iterations: self.iterations,
            converged: self.converged,
            final_beta: self.solver.as_ref().map(|f| f.final_beta),
            evaluation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub generator: GeneratorSpec,
    pub n_over_p: Vec<f64>,
    pub model: ModelSpec,
    pub mc_reps: usize,
    pub base_seed: u64,
    pub threshold: f64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            generator: GeneratorSpec::Grid {
                side: 8,
                wmin: 0.1,
                wmax: 3.0,
            },
            n_over_p: vec![10.0],
            model: ModelSpec::default(),
            mc_reps: 1,
            base_seed: 0,
            threshold: EDGE_THRESHOLD,
            threads: None,
            output_dir: None,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.mc_reps == 0 {
            return Err(Error::config("mc_reps", "must be at least 1"));
        }
        if self.n_over_p.is_empty() {
            return Err(Error::config("n_over_p", "needs at least one entry"));
        }
        for (i, r) in self.n_over_p.iter().enumerate() {
            if !(*r > 0.0 && r.is_finite()) {
                return Err(Error::config(
                    format!("n_over_p[{i}]"),
                    format!("must be positive, got {r}"),
                ));
            }
        }
        if !(self.threshold >= 0.0) {
            return Err(Error::config("threshold", "must be non-negative"));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        self.model.validate().map_err(|e| prefix_path(e, "model"))
    }

    /// Ground truth and sample covariance of one cell, drawn from the same
    /// streams `run_experiment` uses.
    pub fn dataset(&self, ratio_idx: usize, rep: usize) -> Result<(Instance, DMatrix<f64>)> {
        let ratio = *self
            .n_over_p
            .get(ratio_idx)
            .ok_or_else(|| Error::config("n_over_p", format!("no entry {ratio_idx}")))?;
        let seed = self.base_seed.wrapping_add(rep as u64);
        let inst = self.generator.instance(seed)?;
        let mut r = rng(derive_seed(seed, 2 + ratio_idx as u64));
        let x = sample_igmrf(&inst.precision, self.samples(ratio), &mut r)?;
        Ok((inst, scm(&x)))
    }

    /// Samples for a given ratio: `round(ratio * p)`, at least 2.
    pub fn samples(&self, ratio: f64) -> usize {
        ((ratio * self.generator.nodes() as f64).round() as usize).max(2)
    }
}

fn prefix_path(e: Error, prefix: &str) -> Error {
    match e {
        Error::Config { path, msg } => Error::config(format!("{prefix}.{path}"), msg),
        other => other,
    }
}

/// One `(n/p, replication)` outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub cell: usize,
    pub n_over_p: f64,
    pub rep: usize,
    pub seed: u64,
    pub n: usize,
    pub relative_error: f64,
    pub f_score: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub iterations: usize,
    pub converged: bool,
    /// `ok`, or the error that stopped the cell.
    pub status: String,
    #[serde(skip)]
    pub wall_ms: f64,
}

impl CellRecord {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub n_over_p: f64,
    pub cells: usize,
    pub converged: usize,
    pub re_mean: f64,
    pub re_median: f64,
    pub re_std: f64,
    pub fs_mean: f64,
    pub fs_median: f64,
    pub fs_std: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub spec: ExperimentSpec,
    pub cells: Vec<CellRecord>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentOutput {
    /// True when every cell produced a result, converged or not.
    pub fn all_ok(&self) -> bool {
        self.cells.iter().all(CellRecord::ok)
    }

    pub fn cells_for(&self, ratio: f64) -> impl Iterator<Item = &CellRecord> {
        self.cells.iter().filter(move |c| c.n_over_p == ratio)
    }

    /// Writes `results.csv`, `summary.csv`, `timings.csv` and `spec.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("results.csv"))?;
        for c in &self.cells {
            w.serialize(c)?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
        for s in &self.summary {
            w.serialize(s)?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("timings.csv"))?;
        w.write_record(["cell", "n_over_p", "rep", "wall_ms"])?;
        for c in &self.cells {
            w.write_record(&[
                c.cell.to_string(),
                c.n_over_p.to_string(),
                c.rep.to_string(),
                format!("{:.3}", c.wall_ms),
            ])?;
        }
        w.flush()?;
        let mut f = std::fs::File::create(dir.join("spec.json"))?;
        serde_json::to_writer_pretty(&mut f, &self.spec)?;
        writeln!(f)?;
        Ok(())
    }
}

fn run_cell(spec: &ExperimentSpec, cell: usize, ratio_idx: usize, rep: usize) -> CellRecord {
    let ratio = spec.n_over_p[ratio_idx];
    let seed = spec.base_seed.wrapping_add(rep as u64);
    let n = spec.samples(ratio);
    let start = Instant::now();
    let outcome = (|| -> Result<(EvalReport, usize, bool)> {
        let (inst, s) = spec.dataset(ratio_idx, rep)?;
        let fit = spec.model.fit(&s, spec.generator.components())?;
        let eval = f_score(&fit.theta, &inst.truth.theta, spec.threshold)?;
        Ok((eval, fit.iterations, fit.converged))
    })();
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut rec = CellRecord {
        cell,
        n_over_p: ratio,
        rep,
        seed,
        n,
        relative_error: f64::NAN,
        f_score: f64::NAN,
        tp: 0,
        fp: 0,
        fn_: 0,
        iterations: 0,
        converged: false,
        status: "ok".into(),
        wall_ms,
    };
    match outcome {
        Ok((e, it, conv)) => {
            rec.relative_error = e.relative_error;
            rec.f_score = e.f_score;
            rec.tp = e.tp;
            rec.fp = e.fp;
            rec.fn_ = e.fn_;
            rec.iterations = it;
            rec.converged = conv;
        }
        Err(e) => rec.status = format!("error: {e}"),
    }
    rec
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Mean, median and sample standard deviation.
pub fn describe(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, median(&mut values.to_vec()), std)
}

fn summarise(spec: &ExperimentSpec, cells: &[CellRecord]) -> Vec<SummaryRow> {
    spec.n_over_p
        .iter()
        .map(|&ratio| {
            let ok: Vec<&CellRecord> = cells
                .iter()
                .filter(|c| c.n_over_p == ratio && c.ok())
                .collect();
            let re: Vec<f64> = ok.iter().map(|c| c.relative_error).collect();
            let fs: Vec<f64> = ok.iter().map(|c| c.f_score).collect();
            let (re_mean, re_median, re_std) = describe(&re);
            let (fs_mean, fs_median, fs_std) = describe(&fs);
            SummaryRow {
                n_over_p: ratio,
                cells: ok.len(),
                converged: ok.iter().filter(|c| c.converged).count(),
                re_mean,
                re_median,
                re_std,
                fs_mean,
                fs_median,
                fs_std,
            }
        })
        .collect()
}

/// Runs every cell of `spec` and, if `spec.output_dir` is set, writes the
/// tables there.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let jobs: Vec<(usize, usize, usize)> = (0..spec.n_over_p.len())
        .flat_map(|i| (0..spec.mc_reps).map(move |r| (i, r)))
        .enumerate()
        .map(|(cell, (i, r))| (cell, i, r))
        .collect();
    let work = || -> Vec<CellRecord> {
        jobs.par_iter()
            .map(|&(cell, i, r)| run_cell(spec, cell, i, r))
            .collect()
    };
    let cells = match spec.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))?
            .install(work),
        None => work(),
    };
    let out = ExperimentOutput {
        summary: summarise(spec, &cells),
        spec: spec.clone(),
        cells,
    };
    if let Some(dir) = &spec.output_dir {
        out.write(dir)?;
    }
    Ok(out)
}

/// Reads a dense square matrix, one row per line, entries separated by
/// commas and/or whitespace. Blank lines and lines starting with `#` are
/// skipped.
pub fn read_matrix<R: BufRead>(input: R) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("`{tok}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {} entries, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let p = rows.len();
    if p == 0 || rows[0].len() != p {
        return Err(Error::structure(format!(
            "expected a square matrix, got {p} rows of {} entries",
            rows.first().map_or(0, Vec::len)
        )));
    }
    Ok(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
}

/// Writes a dense matrix as CSV with full round-trip precision.
pub fn write_matrix<W: Write>(m: &DMatrix<f64>, mut out: W) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix_file(path: &Path) -> Result<DMatrix<f64>> {
    read_matrix(BufReader::new(std::fs::File::open(path)?))
}

/// Fits the matrix stored at `matrix_path` (treated as the sample
/// covariance) and writes `edges.csv` and `fit.json` into `out_dir`.
pub fn learn_from_file(
    matrix_path: &Path,
    model: &ModelSpec,
    out_dir: &Path,
    full_trace: bool,
) -> Result<Fitted> {
    model.validate()?;
    let s = read_matrix_file(matrix_path)?;
    let fit = model.fit(&s, 1)?;
    std::fs::create_dir_all(out_dir)?;
    write_edge_list(&fit.weights, std::fs::File::create(out_dir.join("edges.csv"))?)?;
    let mut f = std::fs::File::create(out_dir.join("fit.json"))?;
    serde_json::to_writer_pretty(&mut f, &fit.report(full_trace, None))?;
    writeln!(f)?;
    Ok(fit)
}

/// Loads a TOML (`.toml`) or JSON (anything else) document as a JSON value.
pub fn load_value(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    let is_toml = path.extension().is_some_and(|e| e == "toml");
    if is_toml {
        toml::from_str::<Value>(&text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0);
            Error::Parse {
                line,
                msg: e.message().to_string(),
            }
        })
    } else {
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })
    }
}

/// Sets `key` (dot-separated) to `raw`, parsed as JSON when possible and as
/// a string otherwise. Intermediate objects are created as needed.
pub fn apply_override(doc: &mut Value, key: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::config(key, "empty path segment"));
        }
        if !cur.is_object() {
            if cur.is_null() {
                *cur = Value::Object(Default::default());
            } else {
                return Err(Error::config(key, format!("`{part}` is not inside a table")));
            }
        }
        let map = cur.as_object_mut().expect("checked above");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        cur = map.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

/// Deserialises a value, reporting the failing field path.
pub fn from_value<T: serde::de::DeserializeOwned>(doc: Value) -> Result<T> {
    serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> ExperimentSpec {
        ExperimentSpec {
            generator: GeneratorSpec::Grid {
                side: 3,
                wmin: 0.1,
                wmax: 3.0,
            },
            n_over_p: vec![20.0, 50.0],
            mc_reps: 2,
            base_seed: 7,
            model: ModelSpec {
                solver: SolverConfig {
                    max_iter: 200,
                    ..Default::default()
                },
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn cells_in_deterministic_order() {
        let out = run_experiment(&tiny_spec()).unwrap();
        assert!(out.all_ok());
        let order: Vec<(f64, usize)> = out.cells.iter().map(|c| (c.n_over_p, c.rep)).collect();
        assert_eq!(order, vec![(20.0, 0), (20.0, 1), (50.0, 0), (50.0, 1)]);
        assert_eq!(out.summary.len(), 2);
        let again = run_experiment(&tiny_spec()).unwrap();
        for (a, b) in out.cells.iter().zip(&again.cells) {
            assert_eq!(a.relative_error.to_bits(), b.relative_error.to_bits());
        }
    }

    #[test]
    fn invalid_spec_names_field() {
        let mut spec = tiny_spec();
        spec.n_over_p = vec![1.0, -2.0];
        match spec.validate() {
            Err(Error::Config { path, .. }) => assert_eq!(path, "n_over_p[1]"),
            other => panic!("{other:?}"),
        }
        let mut spec = tiny_spec();
        spec.model.solver.tol = 0.0;
        match spec.validate() {
            Err(Error::Config { path, .. }) => assert_eq!(path, "model.solver.tol"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn matrix_reader_formats_and_errors() {
        let m = read_matrix("1, 2\n# note\n\n2 5\n".as_bytes()).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 5.0]));
        match read_matrix("1 2\n2 x\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match read_matrix("1 2\n2\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn matrix_round_trip() {
        let m = DMatrix::from_fn(3, 3, |i, j| 1.0 / (1.0 + i as f64 + 3.0 * j as f64));
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn overrides_and_field_paths() {
        let mut doc = serde_json::json!({"mc_reps": 2});
        apply_override(&mut doc, "model.solver.beta", "250").unwrap();
        apply_override(&mut doc, "model.algorithm", "sga").unwrap();
        apply_override(&mut doc, "name", "run one").unwrap();
        let spec: ExperimentSpec = from_value(doc).unwrap();
        assert_eq!(spec.model.solver.beta, 250.0);
        assert_eq!(spec.model.algorithm, Method::Sga);
        assert_eq!(spec.name, "run one");

        let bad = serde_json::json!({"model": {"solver": {"bta": 1.0}}});
        match from_value::<ExperimentSpec>(bad) {
            Err(Error::Config { path, .. }) => assert!(path.starts_with("model.solver"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trace_downsampling() {
        let fit = Fitted {
            method: Method::Qp,
            weights: WeightVector::zeros(2),
            theta: DMatrix::zeros(2, 2),
            solver: None,
            objective_trace: (0..25).map(f64::from).collect(),
            iterations: 24,
            converged: true,
        };
        let idx: Vec<usize> = fit.report(false, None).objective_trace.iter().map(|t| t.0).collect();
        assert_eq!(idx, vec![0, 10, 20, 24]);
        assert_eq!(fit.report(true, None).objective_trace.len(), 25);
    }

    #[test]
    fn describe_stats() {
        let (m, med, s) = describe(&[1.0, 2.0, 6.0]);
        assert_eq!((m, med), (3.0, 2.0));
        assert!((s - 7f64.sqrt()).abs() < 1e-12);
    }
}
