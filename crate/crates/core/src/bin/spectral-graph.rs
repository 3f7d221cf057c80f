use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use spectral_graph::experiment::{
    apply_override, from_value, learn_from_file, load_value, run_experiment, write_matrix,
    ExperimentSpec, ModelSpec,
};
use spectral_graph::selfcheck::selfcheck;
use spectral_graph::synth::write_edge_list;

#[derive(Parser)]
#[command(version, about = "Structured graph learning from sample covariances")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw a ground-truth graph and its sample covariance.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Which `n_over_p` entry to sample at.
        #[arg(long, default_value_t = 0)]
        ratio_index: usize,
    },
    /// Fit a graph to a covariance matrix stored on disk.
    Learn {
        /// Dense symmetric matrix, CSV or whitespace separated.
        matrix: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        full_trace: bool,
    },
    /// Run a Monte-Carlo experiment and write its result tables.
    Benchmark {
        #[command(flatten)]
        common: Common,
    },
    /// Run the fast invariant suite.
    Selfcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Common {
    /// TOML or JSON file. For `learn` it describes the model only.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
    /// `key=value` override on the config, dotted keys for nesting.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    z: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    /// Loads the config and applies flag overrides. `model` is the path
    /// prefix of the model table (empty when the document is the model).
    fn document(&self, model: &str) -> anyhow::Result<Value> {
        let mut doc = match &self.config {
            Some(p) => load_value(p).with_context(|| format!("reading {}", p.display()))?,
            None => Value::Object(Default::default()),
        };
        let m = |k: &str| format!("{model}{k}");
        let mut flags: Vec<(String, String)> = Vec::new();
        let mut push = |k: String, v: Option<String>| {
            if let Some(v) = v {
                flags.push((k, v));
            }
        };
        push(m("algorithm"), self.algo.as_ref().map(|a| format!("\"{a}\"")));
        push(m("k"), self.k.map(|v| v.to_string()));
        push(m("z"), self.z.map(|v| v.to_string()));
        push(m("solver.beta"), self.beta.map(|v| format!("{v:?}")));
        push(m("solver.gamma"), self.gamma.map(|v| format!("{v:?}")));
        push(m("solver.alpha"), self.alpha.map(|v| format!("{v:?}")));
        push(m("solver.tol"), self.tol.map(|v| format!("{v:?}")));
        push(m("solver.max_iter"), self.max_iter.map(|v| v.to_string()));
        if !model.is_empty() {
            push("base_seed".into(), self.seed.map(|v| v.to_string()));
            push("threshold".into(), self.threshold.map(|v| format!("{v:?}")));
            push("threads".into(), self.threads.map(|v| v.to_string()));
        }
        for (k, v) in &flags {
            apply_override(&mut doc, k, v)?;
        }
        for s in &self.sets {
            let (k, v) = s
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
            apply_override(&mut doc, k.trim(), v.trim())?;
        }
        Ok(doc)
    }

    fn experiment(&self) -> anyhow::Result<ExperimentSpec> {
        let mut spec: ExperimentSpec = from_value(self.document("model.")?)?;
        spec.output_dir = Some(self.out.clone());
        spec.validate()?;
        Ok(spec)
    }
}

fn generate(common: &Common, ratio_index: usize) -> anyhow::Result<()> {
    let spec = common.experiment()?;
    let (inst, s) = spec.dataset(ratio_index, 0)?;
    let out = &common.out;
    std::fs::create_dir_all(out)?;
    write_edge_list(&inst.truth.weights, std::fs::File::create(out.join("truth_edges.csv"))?)?;
    write_matrix(&s, std::fs::File::create(out.join("scm.csv"))?)?;
    let meta = serde_json::json!({
        "generator": spec.generator,
        "seed": spec.base_seed,
        "samples": spec.samples(spec.n_over_p[ratio_index]),
        "component_labels": inst.truth.component_labels,
        "bipartition": inst.truth.bipartition,
    });
    std::fs::write(out.join("truth.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    println!("wrote {}", out.display());
    Ok(())
}

fn learn(matrix: &Path, common: &Common, full_trace: bool) -> anyhow::Result<()> {
    let model: ModelSpec = from_value(common.document("")?)?;
    let fit = learn_from_file(matrix, &model, &common.out, full_trace)?;
    println!(
        "{}: {} iterations, converged {}, wrote {}",
        fit.method.name(),
        fit.iterations,
        fit.converged,
        common.out.display()
    );
    Ok(())
}

fn benchmark(common: &Common) -> anyhow::Result<bool> {
    let spec = common.experiment()?;
    let out = run_experiment(&spec)?;
    println!("n_over_p,cells,converged,re_median,fs_median");
    for r in &out.summary {
        println!(
            "{},{},{},{:.4},{:.4}",
            r.n_over_p, r.cells, r.converged, r.re_median, r.fs_median
        );
    }
    for c in out.cells.iter().filter(|c| !c.ok()) {
        eprintln!("cell {} (n/p {}, rep {}): {}", c.cell, c.n_over_p, c.rep, c.status);
    }
    Ok(out.all_ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Generate {
            common,
            ratio_index,
        } => generate(common, *ratio_index).map(|_| true),
        Cmd::Learn {
            matrix,
            common,
            full_trace,
        } => learn(matrix, common, *full_trace).map(|_| true),
        Cmd::Benchmark { common } => benchmark(common),
        Cmd::Selfcheck { seed } => selfcheck(*seed).map_err(Into::into).map(|checks| {
            for c in &checks {
                println!("{c}");
            }
            checks.iter().all(|c| c.passed)
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

