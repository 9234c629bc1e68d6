use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use igl_core::env::{make_environment, EnvironmentDocument, GeneratorParams};
use igl_core::harness::verify::cmd_verify;
use igl_core::harness::{cmd_run, cmd_sweep, load_document, ExperimentConfig};
use igl_core::{make_classes, Algorithm, Error, GammaSchedule, Result};

#[derive(Parser)]
#[command(name = "igl", about = "Interaction-grounded learning simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random environment and its function classes.
    GenEnv(GenEnvArgs),
    /// Check the decoding identities on an environment.
    Verify(VerifyArgs),
    /// Run one or both learners at a single horizon over several seeds.
    Run(ExperimentArgs),
    /// Run learners over a horizon grid and fit the regret exponent.
    Sweep(ExperimentArgs),
}

#[derive(Args)]
struct GenEnvArgs {
    #[arg(long, default_value_t = 20)]
    contexts: usize,
    #[arg(long, default_value_t = 5)]
    actions: usize,
    /// Rewarding actions per context.
    #[arg(long, default_value_t = 1)]
    positives: usize,
    #[arg(long, default_value_t = 4)]
    feedback: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "decoy-f", default_value_t = 3)]
    decoy_f: usize,
    #[arg(long = "decoy-phi", default_value_t = 3)]
    decoy_phi: usize,
    #[arg(long = "classes-seed", default_value_t = 0)]
    classes_seed: u64,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Output directory; `env.json` is written there.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    env: PathBuf,
    /// Document holding the classes (defaults to the ones inside `--env`).
    #[arg(long)]
    classes: Option<PathBuf>,
    #[arg(long = "mc-samples", default_value_t = 100_000)]
    mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for `verify_report.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<PathBuf>,
    #[arg(long)]
    classes: Option<PathBuf>,
    /// `off`, `on`, or a comma list such as `off,on`.
    #[arg(long)]
    algo: Option<String>,
    /// Horizon, or a comma list for sweeps.
    #[arg(long = "T")]
    horizon: Option<String>,
    /// Exploration length; defaults to the scaled rate-optimal formula.
    #[arg(long = "N")]
    explore_n: Option<usize>,
    /// A fixed value, or `sqrt` / `sqrt:C` for `C * sqrt(K t)`.
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Comma list (`1,2,5`) or inclusive range (`1..10`).
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<T>().map_err(|_| Error::Config(format!("bad {what} value {p:?}"))))
        .collect()
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| Error::Config(format!("bad seed range {s:?}")))?;
        let b: u64 = b.trim().parse().map_err(|_| Error::Config(format!("bad seed range {s:?}")))?;
        return Ok((a..=b).collect());
    }
    parse_list(s, "seed")
}

fn parse_gamma(s: &str) -> Result<GammaSchedule> {
    if s == "sqrt" {
        return Ok(GammaSchedule::SqrtKt(1.0));
    }
    if let Some(c) = s.strip_prefix("sqrt:") {
        return c.parse().map(GammaSchedule::SqrtKt).map_err(|_| Error::Config(format!("bad gamma {s:?}")));
    }
    s.parse().map(GammaSchedule::Fixed).map_err(|_| Error::Config(format!("bad gamma {s:?}")))
}

fn experiment_config(args: ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_json_file(p)?,
        None => ExperimentConfig::default(),
    };
    if args.env.is_some() {
        cfg.env_path = args.env;
    }
    if args.classes.is_some() {
        cfg.classes_path = args.classes;
    }
    if let Some(a) = args.algo {
        cfg.algos = parse_list::<Algorithm>(&a, "algo")?;
    }
    if let Some(t) = args.horizon {
        cfg.horizons = parse_list(&t, "T")?;
    }
    if args.explore_n.is_some() {
        cfg.explore_n = args.explore_n;
    }
    if let Some(g) = args.gamma {
        cfg.gamma = parse_gamma(&g)?;
    }
    if let Some(e) = args.eta {
        cfg.eta = e;
    }
    if args.sigma.is_some() {
        cfg.sigma = args.sigma;
    }
    if args.beta.is_some() {
        cfg.beta = args.beta;
    }
    if let Some(s) = args.seeds {
        cfg.seeds = parse_seeds(&s)?;
    }
    if args.out.is_some() {
        cfg.out = args.out;
    }
    Ok(cfg)
}

fn gen_env(args: GenEnvArgs) -> Result<()> {
    let params = GeneratorParams {
        contexts: args.contexts,
        actions: args.actions,
        positives: args.positives,
        feedback_per_context: args.feedback,
        seed: args.seed,
    };
    let env = make_environment(params)?;
    let cfg = ExperimentConfig { sigma: args.sigma, beta: args.beta, ..ExperimentConfig::default() };
    let decoder = cfg.decoder(&env)?;
    let classes = make_classes(&env, args.decoy_f, args.decoy_phi, decoder, args.classes_seed)?;
    std::fs::create_dir_all(&args.out)?;
    let mut doc = EnvironmentDocument::new(env);
    doc.classes = Some(classes.to_document());
    let path = args.out.join("env.json");
    std::fs::write(&path, doc.to_json()?)?;
    println!("wrote {} (|F| = {}, |Phi| = {}, |H| = {})", path.display(), classes.f_list.len(), classes.phi_list.len(), classes.h_list.len());
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<bool> {
    let doc = load_document(&args.env)?;
    let classes_doc = match &args.classes {
        Some(p) => load_document(p)?.classes,
        None => doc.classes.clone(),
    };
    let classes = classes_doc.map(|c| c.into_classes()).transpose()?;
    let report = cmd_verify(&doc.environment, classes.as_ref(), args.mc_samples, args.seed)?;
    for c in &report.checks {
        println!("[{}] {:<34} deviation={:.6e}  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.deviation, c.detail);
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("verify_report.json"), serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report.passed())
}

fn print_out_dir(out: Option<&Path>) {
    if let Some(dir) = out {
        println!("outputs in {}", dir.display());
    }
}

fn run(args: ExperimentArgs) -> Result<()> {
    let cfg = experiment_config(args)?;
    let report = cmd_run(&cfg)?;
    println!("V(pi*) = {}", report.optimal_value);
    for r in &report.runs {
        println!(
            "{:>3} seed={:<4} T={:<7} N={:<6} final_regret={:<12.3} last_{}_reward={:.4}",
            r.algorithm.name(),
            r.seed,
            r.horizon,
            r.explore_n,
            r.final_regret,
            cfg.reward_window,
            r.final_window_reward
        );
    }
    for (algo, m) in &report.median_final_regret {
        println!("median final regret [{algo}] = {m:.3}");
    }
    print_out_dir(cfg.out.as_deref());
    Ok(())
}

fn sweep(args: ExperimentArgs) -> Result<()> {
    let mut cfg = experiment_config(args)?;
    if cfg.horizons == ExperimentConfig::default().horizons {
        cfg.horizons = vec![4000, 16000, 64000];
    }
    let summary = cmd_sweep(&cfg)?;
    for a in &summary.algorithms {
        let pairs: Vec<String> = a.horizons.iter().zip(&a.median_regret).map(|(t, m)| format!("T={t}: {m:.1}")).collect();
        println!("{:>3} median regret {}  slope={:.4}", a.algorithm.name(), pairs.join(", "), a.slope);
    }
    print_out_dir(cfg.out.as_deref());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GenEnv(a) => gen_env(a).map(|_| true),
        Command::Verify(a) => verify(a),
        Command::Run(a) => run(a).map(|_| true),
        Command::Sweep(a) => sweep(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
