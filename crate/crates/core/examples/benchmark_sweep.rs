//! A Monte-Carlo sweep over sample sizes, written as CSV tables.
//!
//! Usage: `cargo run --release --example benchmark_sweep [config.toml] [out_dir]`

use std::path::PathBuf;

use spectral_graph::experiment::{from_value, load_value, run_experiment, ExperimentSpec};

const DEFAULT: &str = r#"
name = "grid sweep"
n_over_p = [5, 10, 30, 100]
mc_reps = 3
base_seed = 0

[generator]
kind = "grid"
side = 5
wmin = 0.1
wmax = 3.0

[model]
algorithm = "sgl"

[model.solver]
beta = 100
tol = 1e-6
max_iter = 100000
"#;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut spec: ExperimentSpec = match args.next() {
        Some(path) => from_value(load_value(path.as_ref())?)?,
        None => toml::from_str(DEFAULT)?,
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/benchmark_sweep".into()));
    spec.output_dir = Some(out.clone());

    let result = run_experiment(&spec)?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "n/p", "RE mean", "RE median", "FS mean", "FS median");
    for r in &result.summary {
        println!(
            "{:>6} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            r.n_over_p, r.re_mean, r.re_median, r.fs_mean, r.fs_median
        );
    }
    println!("tables written to {}", out.display());
    Ok(())
}
