//! `rac-cert`: simulate, certify and sweep 2→1 random access code
//! experiments from the command line.
//!
//! Exit status: 0 on success, 1 on invalid input or configuration, 2 when
//! an enumeration exceeds the strategy-count guard.

mod config;
mod plot;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rac_cert::ceilings::{pam_ceiling_enumerate, rac_effective_ceiling, robust_ceiling, PamTask};
use rac_cert::certify::{certify, evaluation_preset, BenchmarkContext, BenchmarkSpec, ScoreReport};
use rac_cert::harness::{self, presets, simulate, RunConfig, SweepResult};
use rac_cert::input_models::InputModelSpec;
use rac_cert::rac_core::{ScoringMode, Trace, FORMAT_VERSION};
use rac_cert::stats::ConfidenceParams;
use rac_cert::strategies::{BanditState, StrategySpec};
use serde::Serialize;

use crate::config::FlagOverrides;

const OUT_ENV: &str = "RAC_CERT_OUT";
const DEFAULT_OUT: &str = "rac-cert-out";
const DEFAULT_REPS: usize = 20;

#[derive(Parser, Debug)]
#[command(name = "rac-cert", version, about = "Operationally aligned certification of 2→1 random access codes")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration (sections mirror the run config fields).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: $RAC_CERT_OUT or ./rac-cert-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dotted override applied after the config file, e.g. input_model.epsilon=0.2.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Replicates per sweep cell.
    #[arg(long, global = true)]
    reps: Option<usize>,
    #[arg(long, global = true)]
    rounds: Option<usize>,
    /// Also write an SVG chart next to sweep CSVs.
    #[arg(long, global = true)]
    plot: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one run; writes trace.jsonl, report.json and run.json.
    Simulate,
    /// Certify an external round log (JSONL, or header-free CSV by extension).
    Certify(CertifyArgs),
    /// Classical ceilings, analytic and by exhaustive enumeration.
    Ceiling(CeilingArgs),
    /// Nominal vs effective benchmark across query biases.
    SweepBias(GridArgs),
    /// Careless vs aligned evaluation across round counts.
    SweepRounds(GridArgs),
    /// Careless vs aligned evaluation across adversarial discard fractions.
    StressPostselect(GridArgs),
    /// Regenerate the data behind one figure.
    Reproduce { figure: Figure },
}

#[derive(Args, Debug)]
struct CertifyArgs {
    trace: PathBuf,
    /// Evaluation preset; explicit benchmark flags refine it.
    #[arg(long, default_value = "ALIGNED")]
    preset: String,
    /// Known query bias for the effective benchmark.
    #[arg(long)]
    eps: Option<f64>,
    /// Bias bound for the robust benchmark.
    #[arg(long, conflicts_with = "eps")]
    eps_max: Option<f64>,
    /// Robust benchmark with the bias bound estimated from the trace.
    #[arg(long, conflicts_with_all = ["eps", "eps_max"])]
    data_driven: bool,
}

#[derive(Args, Debug)]
struct CeilingArgs {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, conflicts_with = "eps")]
    eps_max: Option<f64>,
    /// JSON prepare-and-measure task to enumerate.
    #[arg(long, conflicts_with_all = ["eps", "eps_max"])]
    task: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Comma-separated axis values; defaults to the matching figure grid.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

/// Everything `simulate` knows about a run beyond the trace.
#[derive(Serialize)]
struct RunRecord<'a> {
    format_version: u32,
    config: &'a RunConfig,
    strategy_state: &'a BanditState,
    report: &'a ScoreReport,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<rac_cert::Error>() {
                Some(rac_cert::Error::Capacity { .. }) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn out_dir(common: &Common) -> Result<PathBuf> {
    let dir = common
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn flags(common: &Common) -> FlagOverrides {
    FlagOverrides { seed: common.seed, alpha: common.alpha, beta: common.beta, rounds: common.rounds }
}

fn load_config(common: &Common, fallback: &RunConfig) -> Result<RunConfig> {
    config::load(common.config.as_deref(), fallback, &common.sets, &flags(common))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    match cli.command {
        Command::Simulate => cmd_simulate(common),
        Command::Certify(args) => cmd_certify(common, &args),
        Command::Ceiling(args) => cmd_ceiling(&args),
        Command::SweepBias(g) => {
            let cfg = load_config(common, &presets::bias_aware_template(10_000))?;
            let grid = if g.grid.is_empty() { presets::BIAS_GRID.to_vec() } else { g.grid };
            let res = harness::sweep_bias(&grid, &cfg, reps(common, DEFAULT_REPS)?, cfg.seed)?;
            emit_sweep(common, "sweep_bias", &res, "Score vs query bias", "mean_s_uncond", true)
        }
        Command::SweepRounds(g) => {
            let cfg = load_config(common, &presets::fig5_template())?;
            let grid: Vec<usize> = if g.grid.is_empty() {
                presets::FIG5_ROUNDS.to_vec()
            } else {
                g.grid.iter().map(|&v| as_count(v)).collect::<Result<_>>()?
            };
            let res =
                harness::sweep_rounds(&grid, &cfg, &presets::fig5_strategies(), reps(common, DEFAULT_REPS)?, cfg.seed)?;
            emit_sweep(common, "sweep_rounds", &res, "Acceptance rate vs rounds", "accept_rate", false)
        }
        Command::StressPostselect(g) => {
            let cfg = load_config(common, &stress_template())?;
            let grid = if g.grid.is_empty() { presets::FIG4_FRACTIONS.to_vec() } else { g.grid };
            let res = harness::sweep_discard(&grid, &cfg, reps(common, DEFAULT_REPS)?, cfg.seed)?;
            emit_sweep(common, "stress_postselect", &res, "Acceptance rate vs discard fraction", "accept_rate", false)
        }
        Command::Reproduce { figure } => cmd_reproduce(common, figure),
    }
}

fn stress_template() -> RunConfig {
    RunConfig::new(
        10_000,
        presets::BASE_SEED,
        InputModelSpec::IidBias { epsilon: 0.1 },
        StrategySpec::BiasAware { known_eps: 0.1 },
    )
}

fn reps(common: &Common, default: usize) -> Result<usize> {
    match common.reps.unwrap_or(default) {
        0 => bail!(rac_cert::Error::Domain("--reps must be at least 1".into())),
        m => Ok(m),
    }
}

fn as_count(v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v <= i32::MAX as f64 {
        Ok(v as usize)
    } else {
        bail!(rac_cert::Error::Domain(format!("round count {v} is not a positive integer")))
    }
}

fn cmd_simulate(common: &Common) -> Result<()> {
    let cfg = load_config(common, &presets::bias_aware_template(10_000))?;
    let sim = simulate(&cfg)?;
    let bench = cfg.benchmark.resolve(sim.context(&cfg))?;
    let report = certify(&sim.trace, cfg.scoring, &bench, &cfg.confidence)?;

    let dir = out_dir(common)?;
    let mut w = BufWriter::new(File::create(dir.join("trace.jsonl"))?);
    sim.trace.write_jsonl(&mut w)?;
    w.flush()?;
    write_json(&dir.join("report.json"), &report)?;
    let record = RunRecord {
        format_version: FORMAT_VERSION,
        config: &cfg,
        strategy_state: &sim.strategy_state,
        report: &report,
    };
    write_json(&dir.join("run.json"), &record)?;
    print_report(&report);
    Ok(())
}

fn cmd_certify(common: &Common, args: &CertifyArgs) -> Result<()> {
    let file = File::open(&args.trace).with_context(|| format!("opening {}", args.trace.display()))?;
    let is_csv = args.trace.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let trace = if is_csv { Trace::read_csv(file)? } else { Trace::read_jsonl(BufReader::new(file))? };

    let (scoring, preset_bench) = evaluation_preset(&args.preset)?;
    let bench = if let Some(e) = args.eps_max {
        BenchmarkSpec::Robust { eps_max: Some(e) }
    } else if args.data_driven {
        BenchmarkSpec::Robust { eps_max: None }
    } else if let Some(e) = args.eps {
        match preset_bench {
            BenchmarkSpec::Nominal => BenchmarkSpec::Nominal,
            _ => BenchmarkSpec::Effective { known_eps: Some(e) },
        }
    } else {
        preset_bench
    };
    if matches!(bench, BenchmarkSpec::Effective { known_eps: None }) {
        bail!(rac_cert::Error::Domain(
            "an external log carries no input model: pass --eps, --eps-max or --data-driven".into()
        ));
    }
    let mode = bench.resolve(BenchmarkContext { model: None, schedule: None, n: trace.len() })?;
    let mut params = ConfidenceParams::default();
    if let Some(a) = common.alpha {
        params.alpha = a;
    }
    if let Some(b) = common.beta {
        params.beta = b;
    }
    let report = certify(&trace, scoring, &mode, &params)?;
    write_json(&out_dir(common)?.join("report.json"), &report)?;
    print_report(&report);
    Ok(())
}

fn cmd_ceiling(args: &CeilingArgs) -> Result<()> {
    if let Some(path) = &args.task {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let task: PamTask = serde_json::from_str(&text).map_err(rac_cert::Error::from)?;
        let (value, best) = pam_ceiling_enumerate(&task)?;
        println!("strategies  {}", task.strategy_count());
        println!("enumerated  {value:.6}");
        println!("encoder     {:?}", best.encoder);
        println!("decoder     {:?}", best.decoder);
        return Ok(());
    }
    let (analytic, eps) = match (args.eps, args.eps_max) {
        (Some(e), _) => (rac_effective_ceiling(e)?, e),
        // The robust ceiling is attained at the boundary of the bias interval.
        (None, Some(e)) => (robust_ceiling(e)?, e),
        (None, None) => (rac_effective_ceiling(0.0)?, 0.0),
    };
    let (enumerated, best) = pam_ceiling_enumerate(&PamTask::rac_biased(eps)?)?;
    println!("analytic    {analytic:.6}");
    println!("enumerated  {enumerated:.6}");
    println!("encoder     {:?}", best.encoder);
    println!("decoder     {:?}", best.decoder);
    Ok(())
}

fn cmd_reproduce(common: &Common, figure: Figure) -> Result<()> {
    let (name, res, title, metric, bench) = match figure {
        Figure::Fig2 => {
            ("fig2", presets::fig2(reps(common, 20)?)?, "Benchmark alignment under bias", "mean_s_uncond", true)
        }
        Figure::Fig3 => {
            ("fig3", presets::fig3(reps(common, 20)?)?, "Learner vs effective ceiling", "mean_trailing", true)
        }
        Figure::Fig4 => ("fig4", presets::fig4(reps(common, 200)?)?, "Postselection stress test", "accept_rate", false),
        Figure::Fig5 => {
            ("fig5", presets::fig5(reps(common, 500)?)?, "Careless false acceptance vs rounds", "accept_rate", false)
        }
    };
    emit_sweep(common, name, &res, title, metric, bench)
}

fn emit_sweep(common: &Common, name: &str, res: &SweepResult, title: &str, metric: &str, bench: bool) -> Result<()> {
    let dir = out_dir(common)?;
    let csv_path = dir.join(format!("{name}.csv"));
    let mut w = BufWriter::new(File::create(&csv_path)?);
    res.write_csv(&mut w)?;
    w.flush()?;
    write_json(&dir.join(format!("{name}.json")), res)?;
    if common.plot {
        fs::write(dir.join(format!("{name}.svg")), plot::sweep_chart(res, title, metric, bench))?;
    }
    println!(
        "{:>10} {:>16} {:>10} {:>9} {:>9} {:>9} {:>9} {:>7}",
        res.axis, "strategy", "eval", "mean_s", "s_low", "bench", "d_rob", "accept"
    );
    for c in &res.cells {
        println!(
            "{:>10} {:>16} {:>10} {:>9.5} {:>9.5} {:>9.5} {:>9.5} {:>7.3}",
            c.axis_value,
            c.strategy,
            c.evaluation,
            if c.scoring == ScoringMode::Conditional { c.mean_s_cond } else { c.mean_s_uncond },
            c.mean_s_low,
            c.mean_benchmark,
            c.mean_delta_rob,
            c.accept_rate
        );
    }
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn print_report(r: &ScoreReport) {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
    let rows = [
        ("evaluation", r.evaluation_tag.to_string()),
        ("scoring", r.scoring.to_string()),
        ("rounds", r.n.to_string()),
        ("kept", r.n_kept.to_string()),
        ("s_uncond", format!("{:.6}", r.s_uncond)),
        ("s_cond", opt(r.s_cond)),
        ("s_low", format!("{:.6}", r.s_low)),
        ("eps_hat", format!("{:.6}", r.bias.eps_hat)),
        ("eps_max", format!("{:.6}", r.bias.eps_max)),
        ("benchmark", format!("{:?}", r.benchmark_mode).to_lowercase()),
        ("benchmark_value", format!("{:.6}", r.benchmark_value)),
        ("delta_rob", format!("{:.6}", r.delta_rob)),
        ("delta_rob_minimax", opt(r.delta_rob_minimax)),
        ("verdict", r.verdict.to_string()),
    ];
    for (k, v) in rows {
        println!("{k:<18} {v}");
    }
}
