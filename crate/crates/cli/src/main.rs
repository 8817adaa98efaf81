use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use rbgr::commands::{
    cmd_diagnose, cmd_fit, cmd_simulate, cmd_summarize, DiagnoseArgs, FitArgs, SimulateArgs, SummarizeArgs,
};
use rbgr::io::{read_json, DrawFormat, FitConfig};
use rbgr::metrics::{GewekeConfig, HScoreMethod};
use rbgr::simgen::SimConfig;
use rbgr::summary::{AlphaRule, EdgeRule};

#[derive(Parser)]
#[command(name = "rbgr", version, about = "Robust Bayesian graphical regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with known graph structure.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        /// JSON file with simulation settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        q: Option<usize>,
        /// Probability that an observation has a non-unit scale.
        #[arg(long)]
        pi: Option<f64>,
        #[arg(long)]
        sparsity: Option<f64>,
    },
    /// Run the node-wise Gibbs samplers.
    Fit {
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// JSON file with `hyper`, `chain` and `options` sections.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        burnin: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
        #[arg(long, env = "RBGR_THREADS")]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Bin)]
        format: Format,
        /// Shift every response column to mean zero before fitting.
        #[arg(long)]
        center: bool,
    },
    /// Build population and individual networks from a fit.
    Summarize {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        x: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        c0: f64,
        #[arg(long, default_value_t = 0.5)]
        c1: f64,
        #[arg(long, value_enum, default_value_t = Rule::Min)]
        alpha_rule: Rule,
        #[arg(long, value_enum, default_value_t = Rule::Max)]
        edge_rule: Rule,
        /// Choose both cutoffs to control the Bayesian FDR at this level.
        #[arg(long)]
        fdr: Option<f64>,
        #[arg(long, default_value_t = 0)]
        covariate: usize,
        #[arg(long, value_delimiter = ',')]
        percentiles: Option<Vec<f64>>,
    },
    /// Convergence and normality diagnostics.
    Diagnose {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        y: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = HMethod::Calibrated)]
        h_method: HMethod,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Bin,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Min,
    Max,
}

#[derive(Clone, Copy, ValueEnum)]
enum HMethod {
    Calibrated,
    Asymptotic,
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { out, config, seed, n, p, q, pi, sparsity } => {
            let mut sim: SimConfig = match &config {
                Some(path) => read_json(path).with_context(|| format!("reading {}", path.display()))?,
                None => SimConfig::default(),
            };
            sim.n = n.unwrap_or(sim.n);
            sim.p = p.unwrap_or(sim.p);
            sim.q = q.unwrap_or(sim.q);
            sim.pi = pi.unwrap_or(sim.pi);
            sim.precision.sparsity = sparsity.unwrap_or(sim.precision.sparsity);
            let truth = cmd_simulate(&SimulateArgs { out: out.clone(), sim, seed })?;
            eprintln!(
                "wrote {} ({} rows, {} rejected draws)",
                out.display(),
                truth.y.nrows(),
                truth.spec.rejections
            );
        }
        Command::Fit { y, x, out, config, seed, iters, burnin, thin, threads, format, center } => {
            let mut cfg = match &config {
                Some(path) => FitConfig::load(path)?,
                None => FitConfig::default(),
            };
            let chain = &mut cfg.chain;
            chain.seed = seed.unwrap_or(chain.seed);
            chain.iters = iters.unwrap_or(chain.iters);
            chain.burnin = burnin.unwrap_or(chain.burnin);
            chain.thin = thin.unwrap_or(chain.thin);
            let format = match format {
                Format::Csv => DrawFormat::Csv,
                Format::Bin => DrawFormat::Bin,
            };
            let manifest = cmd_fit(&FitArgs { y, x, out, config: cfg, format, threads, center })?;
            eprintln!("fit {} nodes in {:.1}s", manifest.nodes.len(), manifest.seconds);
        }
        Command::Summarize { fit, out, x, c0, c1, alpha_rule, edge_rule, fdr, covariate, percentiles } => {
            let mut args = SummarizeArgs::new(fit, out);
            args.x = x;
            args.c0 = c0;
            args.c1 = c1;
            args.alpha_rule = match alpha_rule {
                Rule::Min => AlphaRule::Min,
                Rule::Max => AlphaRule::Max,
            };
            args.edge_rule = match edge_rule {
                Rule::Min => EdgeRule::Min,
                Rule::Max => EdgeRule::Max,
            };
            args.fdr = fdr;
            args.covariate = covariate;
            if let Some(p) = percentiles {
                args.percentiles = p;
            }
            print_json(&cmd_summarize(&args)?)?;
        }
        Command::Diagnose { fit, out, y, h_method } => {
            let h_method = match h_method {
                HMethod::Calibrated => HScoreMethod::Calibrated,
                HMethod::Asymptotic => HScoreMethod::Asymptotic,
            };
            let report = cmd_diagnose(&DiagnoseArgs { fit, y, out, geweke: GewekeConfig::default(), h_method })?;
            print_json(&report)?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
