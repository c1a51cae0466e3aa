use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use lvcd_core::model::{builtin_skeleton, random_model_instance, simulate, BUILTIN_MODELS};
use lvcd_core::pipeline::benchmark::{benchmark, BenchmarkSpec};
use lvcd_core::pipeline::{discover, evaluate, DiscoveryResult};
use lvcd_core::{Config, Error, ModelSpec, SampleMatrix, Variant};

#[derive(Parser)]
#[command(
    name = "lvcd",
    version,
    about = "Latent-variable causal discovery for linear non-Gaussian models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random instance of a builtin model and sample from it.
    Simulate {
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seed for the coefficient draw (defaults to --seed).
        #[arg(long)]
        coef_seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the drawn model as JSON.
        #[arg(long)]
        truth_out: Option<PathBuf>,
    },
    /// Estimate clusters, latent order and latent edges from a CSV file.
    Discover {
        data: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a seeded simulate/discover/evaluate grid.
    Benchmark {
        /// Comma-separated builtin model names.
        #[arg(long, value_delimiter = ',')]
        models: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        /// Per-model tau_s as `model=value` pairs.
        #[arg(long, value_delimiter = ',')]
        tau_s_model: Vec<String>,
        /// Use tau_s = 0.001 for models a-c and 0.005 otherwise.
        #[arg(long)]
        builtin_tau_s: bool,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a discovery result against a ground-truth model file.
    Eval {
        result: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
}

#[derive(Args)]
struct Overrides {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    alpha_ind: Option<f64>,
    #[arg(long)]
    tau_s: Option<f64>,
    #[arg(long)]
    tau_o: Option<f64>,
    #[arg(long)]
    tau_m1: Option<f64>,
    #[arg(long)]
    tau_m2: Option<f64>,
    #[arg(long)]
    ell_max: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn config(&self) -> anyhow::Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                Config::from_kv_str(&text)?
            }
            None => Config::default(),
        };
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        macro_rules! apply {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { cfg.$f = v; })* };
        }
        apply!(alpha_ind, tau_s, tau_o, tau_m1, tau_m2, ell_max, seed);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            model,
            n,
            seed,
            coef_seed,
            out,
            truth_out,
        } => {
            let skel = builtin_skeleton(&model).ok_or_else(|| {
                Error::Input(format!(
                    "unknown model {model:?}; known: {}",
                    BUILTIN_MODELS.join(", ")
                ))
            })?;
            let truth = random_model_instance(&skel, coef_seed.unwrap_or(seed))?;
            simulate(&truth, n, seed)?.save_csv(&out)?;
            if let Some(path) = truth_out {
                truth.save(&path)?;
            }
        }
        Command::Discover {
            data,
            overrides,
            out,
        } => {
            let cfg = overrides.config()?;
            let data = SampleMatrix::load_csv(&data)?;
            let result = discover(&data, &cfg)?;
            result.save(&out)?;
            eprintln!(
                "{} clusters, {} latent edges in {} ms",
                result.clusters.len(),
                result.latent_edges.len(),
                result.runtime_ms
            );
        }
        Command::Benchmark {
            models,
            ns,
            reps,
            tau_s_model,
            builtin_tau_s,
            threads,
            overrides,
            out,
        } => {
            if models.is_empty() || ns.is_empty() {
                bail!(Error::Input("--models and --ns must not be empty".into()));
            }
            let cfg = overrides.config()?;
            let mut tau_s = Vec::new();
            if builtin_tau_s {
                tau_s.extend(
                    models
                        .iter()
                        .map(|m| (m.clone(), Config::tau_s_for_model(m))),
                );
            }
            for kv in &tau_s_model {
                let (m, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Input(format!("expected model=value, got {kv:?}")))?;
                let v: f64 = v
                    .parse()
                    .map_err(|_| Error::Input(format!("invalid tau_s {v:?}")))?;
                tau_s.retain(|(name, _)| name != m);
                tau_s.push((m.to_string(), v));
            }
            // --seed selects the grid; each cell derives its own run seed from it.
            let spec = BenchmarkSpec {
                models,
                ns,
                reps,
                seed: cfg.seed,
                tau_s,
            };
            let report = match threads {
                Some(t) => rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .context("building thread pool")?
                    .install(|| benchmark(&spec, &cfg))?,
                None => benchmark(&spec, &cfg)?,
            };
            std::fs::write(&out, report.to_csv()?)
                .with_context(|| format!("writing {}", out.display()))?;
            print!("{}", report.to_table());
        }
        Command::Eval { result, truth } => {
            let result = DiscoveryResult::load(&result)?;
            let truth = ModelSpec::load(&truth)?;
            let metrics = evaluate(&result, &truth)?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let internal = e
                .downcast_ref::<Error>()
                .is_some_and(|e| !e.is_input_error());
            ExitCode::from(if internal { 2 } else { 1 })
        }
    }
}
