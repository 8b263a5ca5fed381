//! `supfdr` — run SupFDR-controlled online testing procedures on CSV
//! streams, simulate synthetic designs, benchmark runtimes, and cross-check
//! the fast paths against brute-force oracles.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use supfdr::gamma::GammaRule;
use supfdr::io::{parse_gamma_spec, read_kv_file, run_stream, validate_gamma, RunConfig};
use supfdr::sim::{
    bench, run_trials, BenchSettings, BoundedHoeffdingConfig, GaussianLocalConfig,
    GeneratorConfig, TrialSettings,
};
use supfdr::stream::EvidenceKind;
use supfdr::{OFFLINE_PROCEDURES, STREAMING_PROCEDURES};

mod verify;

#[derive(Parser)]
#[command(
    name = "supfdr",
    version,
    about = "Online multiple testing with SupFDR control",
    after_help = "Procedures: e-lond, closed-e-lond, closed-e-lond-gap, donation-e-lond, \
randomized-donation-e-lond, r-lond, closed-r-lond, donation-r-lond, online-e-bh, \
donation-online-e-bh, e-toad, donation-e-toad, plus offline e-bh and donation-e-bh."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one procedure over a CSV evidence stream and write a decision log
    Run(RunArgs),
    /// Monte Carlo trials on synthetic streams, aggregated to CSV
    Simulate(SimulateArgs),
    /// Single-threaded wall-clock benchmark over a grid of stream lengths
    Bench(BenchArgs),
    /// Cross-check fast paths against the brute-force oracles
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Procedure name from the registry
    #[arg(long)]
    procedure: Option<String>,
    /// Target FDR level δ in (0, 1] (default 0.1)
    #[arg(long)]
    delta: Option<f64>,
    /// Discount rule: default, zero, constant:<v>, or a path to a γ CSV
    #[arg(long)]
    gamma: Option<String>,
    /// Input CSV with columns index and e_value/p_value
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output decision log (stdout if omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    /// RNG seed (randomized procedures only)
    #[arg(long)]
    seed: Option<u64>,
    /// Evidence kind: e or p (inferred from the procedure if omitted)
    #[arg(long)]
    evidence: Option<String>,
    /// Name of the deadline column in the input
    #[arg(long)]
    deadlines: Option<String>,
    /// Anomaly windows CSV (start_index,end_index, inclusive)
    #[arg(long)]
    windows: Option<PathBuf>,
    /// Optional key=value file; explicit flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Stream model: gaussian or hoeffding (default gaussian)
    #[arg(long)]
    generator: Option<String>,
    /// Stream length per trial (default 200)
    #[arg(long)]
    m: Option<usize>,
    /// Non-null fraction π₁ (default 0.3)
    #[arg(long)]
    pi1: Option<f64>,
    /// Alternative mean μ₁ (default 3)
    #[arg(long)]
    mu1: Option<f64>,
    /// Number of trials (default 200)
    #[arg(long)]
    trials: Option<usize>,
    /// Target FDR level δ (default 0.1)
    #[arg(long)]
    delta: Option<f64>,
    /// Master seed (default 1)
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated procedure names, or "all" (default)
    #[arg(long)]
    procedures: Option<String>,
    /// Output CSV (stdout if omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Run trials on a single thread
    #[arg(long)]
    serial: bool,
    /// Deadline slack handed to the deadline procedures (default 10)
    #[arg(long)]
    deadline_slack: Option<usize>,
    /// Beta concentration a+b for the hoeffding generator (default 0.01)
    #[arg(long)]
    a_plus_b: Option<f64>,
    /// Samples per hypothesis for the hoeffding generator (default 100)
    #[arg(long)]
    n_samples: Option<usize>,
    /// Optional key=value file; explicit flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Comma-separated procedure names (default e-lond,donation-e-lond,closed-e-lond)
    #[arg(long)]
    procedures: Option<String>,
    /// Comma-separated ascending stream lengths (default 750,1500,3000)
    #[arg(long = "m-grid")]
    m_grid: Option<String>,
    /// Trials per grid point (default 3)
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed (default 1)
    #[arg(long)]
    seed: Option<u64>,
    /// Non-null fraction of the benchmark streams (default 0.3)
    #[arg(long)]
    pi1: Option<f64>,
    /// Target FDR level δ (default 0.1)
    #[arg(long)]
    delta: Option<f64>,
    /// Output CSV (stdout if omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Optional key=value file; explicit flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Streams per check
    #[arg(long, default_value_t = 50)]
    streams: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Verify(args) => verify::run(args.seed, args.streams, args.delta),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

/// Loads a key=value file into a map, rejecting unknown keys.
fn load_config(path: &Option<PathBuf>, allowed: &[&str]) -> Result<HashMap<String, String>> {
    let Some(path) = path else {
        return Ok(HashMap::new());
    };
    let pairs = read_kv_file(path).with_context(|| format!("reading {}", path.display()))?;
    let mut map = HashMap::new();
    for (k, v) in pairs {
        if !allowed.contains(&k.as_str()) {
            bail!("unknown config key `{k}` in {}", path.display());
        }
        map.insert(k, v);
    }
    Ok(map)
}

/// Flag value, else config-file value, else nothing.
fn merged<T, F>(
    flag: Option<T>,
    kv: &HashMap<String, String>,
    key: &str,
    parse: F,
) -> Result<Option<T>>
where
    F: FnOnce(&str) -> Result<T>,
{
    if flag.is_some() {
        return Ok(flag);
    }
    match kv.get(key) {
        Some(raw) => parse(raw).map(Some).with_context(|| format!("config key `{key}`")),
        None => Ok(None),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| anyhow!("bad value `{s}`"))
}

fn parse_evidence(s: &str) -> Result<EvidenceKind> {
    match s {
        "e" => Ok(EvidenceKind::EValue),
        "p" => Ok(EvidenceKind::PValue),
        other => bail!("evidence must be `e` or `p`, got `{other}`"),
    }
}

fn default_evidence(procedure: &str) -> EvidenceKind {
    if procedure.contains("r-lond") {
        EvidenceKind::PValue
    } else {
        EvidenceKind::EValue
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    const KEYS: &[&str] = &[
        "procedure",
        "delta",
        "gamma",
        "input",
        "output",
        "seed",
        "evidence",
        "deadlines",
        "windows",
    ];
    let kv = load_config(&args.config, KEYS)?;
    let procedure = merged(args.procedure, &kv, "procedure", |s| Ok(s.to_string()))?
        .ok_or_else(|| anyhow!("--procedure is required"))?;
    if !STREAMING_PROCEDURES.contains(&procedure.as_str())
        && !OFFLINE_PROCEDURES.contains(&procedure.as_str())
    {
        bail!("unknown procedure `{procedure}`");
    }
    let input = merged(args.input, &kv, "input", |s| Ok(PathBuf::from(s)))?
        .ok_or_else(|| anyhow!("--input is required"))?;
    let delta = merged(args.delta, &kv, "delta", parse_num::<f64>)?.unwrap_or(0.1);
    let gamma_spec =
        merged(args.gamma, &kv, "gamma", |s| Ok(s.to_string()))?.unwrap_or_else(|| "default".into());
    let gamma: GammaRule = parse_gamma_spec(&gamma_spec)?;
    validate_gamma(&gamma, 10_000)?;
    let seed = merged(args.seed, &kv, "seed", parse_num::<u64>)?.unwrap_or(0);
    let evidence = match merged(args.evidence, &kv, "evidence", |s| Ok(s.to_string()))? {
        Some(s) => parse_evidence(&s)?,
        None => default_evidence(&procedure),
    };
    let deadline_column = merged(args.deadlines, &kv, "deadlines", |s| Ok(s.to_string()))?;
    let windows = merged(args.windows, &kv, "windows", |s| Ok(PathBuf::from(s)))?;

    let cfg = RunConfig {
        procedure,
        delta,
        gamma,
        input,
        output: args.output,
        seed,
        evidence,
        deadline_column,
        windows,
    };
    let summary = run_stream(&cfg)?;
    eprintln!(
        "processed {} observations, {} rejections{}",
        summary.observations,
        summary.rejections,
        summary
            .rejections_in_windows
            .map(|n| format!(", {n} inside anomaly windows"))
            .unwrap_or_default()
    );
    Ok(())
}

fn parse_procedures(spec: &str) -> Result<Vec<String>> {
    if spec == "all" {
        return Ok(STREAMING_PROCEDURES.iter().map(|s| s.to_string()).collect());
    }
    let names: Vec<String> = spec
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if names.is_empty() {
        bail!("no procedures given");
    }
    for n in &names {
        if !STREAMING_PROCEDURES.contains(&n.as_str()) {
            bail!("unknown streaming procedure `{n}`");
        }
    }
    Ok(names)
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout()),
    })
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    const KEYS: &[&str] = &[
        "generator",
        "m",
        "pi1",
        "mu1",
        "trials",
        "delta",
        "seed",
        "procedures",
        "deadline-slack",
        "a-plus-b",
        "n-samples",
    ];
    let kv = load_config(&args.config, KEYS)?;
    let generator = merged(args.generator, &kv, "generator", |s| Ok(s.to_string()))?
        .unwrap_or_else(|| "gaussian".into());
    let m = merged(args.m, &kv, "m", parse_num::<usize>)?.unwrap_or(200);
    let pi1 = merged(args.pi1, &kv, "pi1", parse_num::<f64>)?.unwrap_or(0.3);
    let mu1 = merged(args.mu1, &kv, "mu1", parse_num::<f64>)?.unwrap_or(3.0);
    let trials = merged(args.trials, &kv, "trials", parse_num::<usize>)?.unwrap_or(200);
    let delta = merged(args.delta, &kv, "delta", parse_num::<f64>)?.unwrap_or(0.1);
    let seed = merged(args.seed, &kv, "seed", parse_num::<u64>)?.unwrap_or(1);
    let procedures = merged(args.procedures, &kv, "procedures", |s| Ok(s.to_string()))?
        .unwrap_or_else(|| "all".into());
    let deadline_slack =
        merged(args.deadline_slack, &kv, "deadline-slack", parse_num::<usize>)?.unwrap_or(10);
    let a_plus_b = merged(args.a_plus_b, &kv, "a-plus-b", parse_num::<f64>)?.unwrap_or(1e-2);
    let n_samples = merged(args.n_samples, &kv, "n-samples", parse_num::<usize>)?.unwrap_or(100);

    let gen = match generator.as_str() {
        "gaussian" => GeneratorConfig::Gaussian(GaussianLocalConfig {
            m,
            pi1,
            mu1,
            delta,
            ..GaussianLocalConfig::default()
        }),
        "hoeffding" => GeneratorConfig::Hoeffding(BoundedHoeffdingConfig {
            m,
            pi1,
            alt_mean: mu1,
            delta,
            a_plus_b,
            n_samples,
            ..BoundedHoeffdingConfig::default()
        }),
        other => bail!("unknown generator `{other}` (expected gaussian or hoeffding)"),
    };
    let settings = TrialSettings {
        procedures: parse_procedures(&procedures)?,
        n_trials: trials,
        seed,
        parallel: !args.serial,
        deadline_slack,
    };
    let report = run_trials(&gen, &settings)?;
    let setting =
        format!("generator={generator};m={m};pi1={pi1};mu1={mu1};delta={delta};trials={trials}");
    let mut out = open_output(&args.output)?;
    writeln!(out, "procedure,setting,metric,mean,se")?;
    let se_of = |values: &[f64]| -> f64 {
        let n = values.len();
        if n < 2 {
            return 0.0;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        (var / n as f64).sqrt()
    };
    for p in &report.procedures {
        let rejections: Vec<f64> = p.trials.iter().map(|t| t.rejections as f64).collect();
        let wall: Vec<f64> = p.trials.iter().map(|t| t.wall_secs).collect();
        writeln!(out, "{},{},power,{},{}", p.procedure, setting, p.mean_power, p.se_power)?;
        writeln!(
            out,
            "{},{},sup_fdp,{},{}",
            p.procedure, setting, p.mean_sup_fdp, p.se_sup_fdp
        )?;
        writeln!(
            out,
            "{},{},rejections,{},{}",
            p.procedure,
            setting,
            p.mean_rejections,
            se_of(&rejections)
        )?;
        writeln!(
            out,
            "{},{},wall_secs,{},{}",
            p.procedure,
            setting,
            p.mean_wall_secs,
            se_of(&wall)
        )?;
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    const KEYS: &[&str] = &["procedures", "m-grid", "trials", "seed", "pi1", "delta"];
    let kv = load_config(&args.config, KEYS)?;
    let procedures = merged(args.procedures, &kv, "procedures", |s| Ok(s.to_string()))?
        .unwrap_or_else(|| "e-lond,donation-e-lond,closed-e-lond".into());
    let m_grid_spec = merged(args.m_grid, &kv, "m-grid", |s| Ok(s.to_string()))?
        .unwrap_or_else(|| "750,1500,3000".into());
    let trials = merged(args.trials, &kv, "trials", parse_num::<usize>)?.unwrap_or(3);
    let seed = merged(args.seed, &kv, "seed", parse_num::<u64>)?.unwrap_or(1);
    let pi1 = merged(args.pi1, &kv, "pi1", parse_num::<f64>)?.unwrap_or(0.3);
    let delta = merged(args.delta, &kv, "delta", parse_num::<f64>)?.unwrap_or(0.1);

    let m_grid: Vec<usize> = m_grid_spec
        .split(',')
        .map(|s| parse_num::<usize>(s.trim()))
        .collect::<Result<_>>()?;
    if m_grid.is_empty() || m_grid.windows(2).any(|w| w[0] >= w[1]) {
        bail!("--m-grid must be non-empty and strictly ascending");
    }
    let settings = BenchSettings {
        procedures: parse_procedures(&procedures)?,
        m_grid,
        n_trials: trials,
        seed,
        pi1,
        delta,
        min_measure_secs: 0.02,
    };
    let rows = bench(&settings)?;
    let mut out = open_output(&args.output)?;
    writeln!(out, "procedure,m,mean_seconds,se_seconds")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.procedure, r.m, r.mean_seconds, r.se_seconds)?;
    }
    Ok(())
}
