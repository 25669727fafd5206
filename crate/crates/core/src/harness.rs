//! End-to-end simulation and Monte Carlo replicate studies.
//!
//! # Seeding
//!
//! A run with seed `s` draws from three ChaCha8 streams of the key derived
//! from `s`: stream 0 feeds the input model, stream 1 the strategy, stream 2
//! the selection rule. Changing a strategy's random consumption therefore
//! never perturbs the inputs it sees.
//!
//! Replicate `i` of a study with base seed `b` runs with
//! [`replicate_seed`]`(b, i) = splitmix64(b + i·0x9E3779B97F4A7C15)`. The
//! affine map is injective in `i` (odd multiplier) and the splitmix64
//! finaliser is a bijection, so replicate seeds within a study are pairwise
//! distinct. Replicates run in parallel and are aggregated in index order,
//! so results do not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{
    certify, evaluation_preset, BenchmarkContext, BenchmarkKind, BenchmarkSpec, ScoreReport, Verdict,
};
use crate::error::{Error, Result};
use crate::input_models::{next_inputs, InputModelSpec, InputState};
use crate::rac_core::{success, RoundRecord, ScoringMode, Trace};
use crate::selection::{apply_selection, SelectionSpec};
use crate::stats::ConfidenceParams;
use crate::strategies::{BanditState, Strategy, StrategySpec};

const INPUT_STREAM: u64 = 0;
const STRATEGY_STREAM: u64 = 1;
const SELECTION_STREAM: u64 = 2;

pub const DEFAULT_TRAILING_WINDOW: usize = 10_000;

fn default_scoring() -> ScoringMode {
    ScoringMode::Unconditional
}
fn default_benchmark() -> BenchmarkSpec {
    BenchmarkSpec::Effective { known_eps: None }
}
fn default_trailing() -> usize {
    DEFAULT_TRAILING_WINDOW
}

/// Everything needed to reproduce one simulated experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_rounds: usize,
    pub seed: u64,
    pub input_model: InputModelSpec,
    pub strategy: StrategySpec,
    #[serde(default)]
    pub selection: SelectionSpec,
    #[serde(default = "default_scoring")]
    pub scoring: ScoringMode,
    #[serde(default = "default_benchmark")]
    pub benchmark: BenchmarkSpec,
    #[serde(default)]
    pub confidence: ConfidenceParams,
    /// Rounds at the end of the run averaged into the trailing score.
    #[serde(default = "default_trailing")]
    pub trailing_window: usize,
}

impl RunConfig {
    pub fn new(n_rounds: usize, seed: u64, input_model: InputModelSpec, strategy: StrategySpec) -> Self {
        RunConfig {
            n_rounds,
            seed,
            input_model,
            strategy,
            selection: SelectionSpec::None,
            scoring: default_scoring(),
            benchmark: default_benchmark(),
            confidence: ConfidenceParams::default(),
            trailing_window: DEFAULT_TRAILING_WINDOW,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 || self.n_rounds > i32::MAX as usize {
            return Err(Error::domain("n_rounds must lie in [1, 2^31-1]"));
        }
        if self.trailing_window == 0 {
            return Err(Error::domain("trailing_window must be at least 1"));
        }
        self.input_model.validate()?;
        self.strategy.validate()?;
        self.selection.validate()?;
        self.confidence.validate()
    }

    pub fn model_tag(&self) -> String {
        format!("{}|{}|{}", self.input_model.tag(), self.strategy.label(), self.selection.label())
    }
}

/// `splitmix64(base + index·γ)`; pairwise distinct over `index`.
pub fn replicate_seed(base_seed: u64, index: u64) -> u64 {
    let mut z = base_seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// A simulated trace together with what the generator knew.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub trace: Trace,
    /// Conditional bias used to draw each query.
    pub schedule: Vec<f64>,
    pub strategy_state: BanditState,
}

impl Simulation {
    /// Mean of `kept·x` over the last `window` rounds.
    pub fn trailing_score(&self, window: usize) -> f64 {
        let rounds = self.trace.rounds();
        let tail = &rounds[rounds.len().saturating_sub(window.max(1))..];
        tail.iter().filter(|r| r.is_kept() && r.succeeded()).count() as f64 / tail.len() as f64
    }

    pub fn context<'a>(&'a self, config: &'a RunConfig) -> BenchmarkContext<'a> {
        BenchmarkContext { model: Some(&config.input_model), schedule: Some(&self.schedule), n: self.trace.len() }
    }
}

/// Runs `n_rounds` rounds: inputs, encoding before the query is revealed,
/// decoding `b = m`, scoring, learner feedback, then post-hoc selection.
pub fn simulate(config: &RunConfig) -> Result<Simulation> {
    config.validate()?;
    let mut input_rng = stream(config.seed, INPUT_STREAM);
    let mut strategy_rng = stream(config.seed, STRATEGY_STREAM);
    let mut selection_rng = stream(config.seed, SELECTION_STREAM);

    let mut inputs = InputState::new();
    let mut strategy = Strategy::new(config.strategy.clone())?;
    let device = config.strategy.is_device();
    let mut rounds = Vec::with_capacity(config.n_rounds);
    let mut schedule = Vec::with_capacity(config.n_rounds);

    for t in 1..=config.n_rounds as u32 {
        let inp = next_inputs(&config.input_model, &mut inputs, &mut input_rng);
        schedule.push(inp.bias);
        let record = if device {
            let hit = strategy.device_outcome(&mut strategy_rng)?;
            let target = if inp.y.is_one() { inp.a1 } else { inp.a0 };
            let b = if hit { target } else { target.flip() };
            RoundRecord::new(t, inp.a0, inp.a1, inp.y, b, b)
        } else {
            let (m, action) = strategy.choose_message(inp.a0, inp.a1, &mut strategy_rng)?;
            let b = m;
            strategy.update(action, success(inp.a0, inp.a1, inp.y, b));
            strategy.observe_query(inp.y);
            RoundRecord::new(t, inp.a0, inp.a1, inp.y, m, b)
        };
        debug_assert_eq!(record.m, record.b);
        rounds.push(record);
    }

    let trace = Trace::new(rounds, config.seed, config.model_tag())?;
    let trace = apply_selection(&trace, &config.selection, &mut selection_rng)?;
    Ok(Simulation { trace, schedule, strategy_state: strategy.state().clone() })
}

/// Simulates and certifies with the configured scoring and benchmark.
pub fn run_once(config: &RunConfig) -> Result<(Trace, ScoreReport)> {
    let sim = simulate(config)?;
    let bench = config.benchmark.resolve(sim.context(config))?;
    let report = certify(&sim.trace, config.scoring, &bench, &config.confidence)?;
    Ok((sim.trace, report))
}

/// A named scoring/benchmark pair evaluated on shared traces.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub label: String,
    pub scoring: ScoringMode,
    pub benchmark: BenchmarkSpec,
}

impl Evaluation {
    pub fn new(label: impl Into<String>, scoring: ScoringMode, benchmark: BenchmarkSpec) -> Self {
        Evaluation { label: label.into(), scoring, benchmark }
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (scoring, benchmark) = evaluation_preset(name)?;
        Ok(Evaluation::new(name.to_ascii_lowercase(), scoring, benchmark))
    }
}

#[derive(Clone, Copy, Debug)]
struct ReplicateStats {
    s_uncond: f64,
    s_cond: f64,
    s_low: f64,
    benchmark: f64,
    delta_rob: f64,
    accept: bool,
    trailing: f64,
    kind: BenchmarkKind,
}

/// Aggregate over the replicates of one configuration and one evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub axis_value: f64,
    pub strategy: String,
    pub evaluation: String,
    pub scoring: ScoringMode,
    pub benchmark_mode: BenchmarkKind,
    pub n_rounds: usize,
    pub replicates: usize,
    pub mean_s_uncond: f64,
    /// NaN when no replicate kept a round.
    pub mean_s_cond: f64,
    pub mean_s_low: f64,
    pub mean_benchmark: f64,
    pub mean_delta_rob: f64,
    pub median_delta_rob: f64,
    pub max_delta_rob: f64,
    pub accept_rate: f64,
    /// `sqrt(r(1−r)/M)`.
    pub accept_se: f64,
    pub mean_trailing: f64,
}

/// One sweep: cells in axis order, then strategy, then evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub format_version: u32,
    pub axis: String,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn new(axis: impl Into<String>) -> Self {
        SweepResult { format_version: crate::rac_core::FORMAT_VERSION, axis: axis.into(), cells: Vec::new() }
    }

    /// One row per cell; the header is the field list of [`SweepCell`].
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for c in &self.cells {
            wtr.serialize(c)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn find(&self, axis_value: f64, strategy: &str, evaluation: &str) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.axis_value == axis_value && c.strategy == strategy && c.evaluation == evaluation)
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn aggregate(config: &RunConfig, eval: &Evaluation, stats: &[ReplicateStats], axis_value: f64) -> SweepCell {
    let m = stats.len();
    let accept_rate = stats.iter().filter(|s| s.accept).count() as f64 / m as f64;
    SweepCell {
        axis_value,
        strategy: config.strategy.label().to_string(),
        evaluation: eval.label.clone(),
        scoring: eval.scoring,
        benchmark_mode: stats[0].kind,
        n_rounds: config.n_rounds,
        replicates: m,
        mean_s_uncond: mean(stats.iter().map(|s| s.s_uncond)),
        mean_s_cond: mean(stats.iter().map(|s| s.s_cond).filter(|v| !v.is_nan())),
        mean_s_low: mean(stats.iter().map(|s| s.s_low)),
        mean_benchmark: mean(stats.iter().map(|s| s.benchmark)),
        mean_delta_rob: mean(stats.iter().map(|s| s.delta_rob)),
        median_delta_rob: median(stats.iter().map(|s| s.delta_rob).collect()),
        max_delta_rob: stats.iter().map(|s| s.delta_rob).fold(f64::NEG_INFINITY, f64::max),
        accept_rate,
        accept_se: (accept_rate * (1.0 - accept_rate) / m as f64).sqrt(),
        mean_trailing: mean(stats.iter().map(|s| s.trailing)),
    }
}

/// Runs `m_reps` replicates of `config` (seeds from [`replicate_seed`]) and
/// evaluates every entry of `evals` on the same traces.
pub fn replicate_evaluations(
    config: &RunConfig,
    evals: &[Evaluation],
    m_reps: usize,
    base_seed: u64,
    axis_value: f64,
) -> Result<Vec<SweepCell>> {
    if m_reps == 0 {
        return Err(Error::domain("m_reps must be at least 1"));
    }
    if evals.is_empty() {
        return Err(Error::domain("no evaluations requested"));
    }
    config.validate()?;
    let per_rep: Vec<Vec<ReplicateStats>> = (0..m_reps as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = RunConfig { seed: replicate_seed(base_seed, i), ..config.clone() };
            let sim = simulate(&cfg)?;
            let trailing = sim.trailing_score(cfg.trailing_window);
            evals
                .iter()
                .map(|e| {
                    let bench = e.benchmark.resolve(sim.context(&cfg))?;
                    let r = certify(&sim.trace, e.scoring, &bench, &cfg.confidence)?;
                    Ok(ReplicateStats {
                        s_uncond: r.s_uncond,
                        s_cond: r.s_cond.unwrap_or(f64::NAN),
                        s_low: r.s_low,
                        benchmark: r.benchmark_value,
                        delta_rob: r.delta_rob,
                        accept: r.verdict == Verdict::Accept,
                        trailing,
                        kind: r.benchmark_mode,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(evals
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let column: Vec<ReplicateStats> = per_rep.iter().map(|row| row[k]).collect();
            aggregate(config, e, &column, axis_value)
        })
        .collect())
}

/// Replicate study of `config` under its own scoring and benchmark.
pub fn run_replicates(config: &RunConfig, m_reps: usize, base_seed: u64) -> Result<SweepCell> {
    let eval = Evaluation::new("configured", config.scoring, config.benchmark.clone());
    let mut cells = replicate_evaluations(config, &[eval], m_reps, base_seed, config.n_rounds as f64)?;
    Ok(cells.remove(0))
}

/// One cell per ε with IID queries of that bias. Each cell evaluates the
/// nominal and the bias-effective benchmark on the same traces. A bias-aware
/// strategy is handed the true ε of its cell.
pub fn sweep_bias(eps_grid: &[f64], template: &RunConfig, m_reps: usize, base_seed: u64) -> Result<SweepResult> {
    let mut out = SweepResult::new("epsilon");
    for &eps in eps_grid {
        if !(-0.5..=0.5).contains(&eps) {
            return Err(Error::domain(format!("grid value {eps} outside [-1/2, 1/2]")));
        }
        let mut cfg = template.clone();
        cfg.input_model = InputModelSpec::IidBias { epsilon: eps };
        if let StrategySpec::BiasAware { known_eps } = &mut cfg.strategy {
            *known_eps = eps;
        }
        let evals = [
            Evaluation::new("nominal", template.scoring, BenchmarkSpec::Nominal),
            Evaluation::new("effective", template.scoring, BenchmarkSpec::Effective { known_eps: Some(eps) }),
        ];
        out.cells.extend(replicate_evaluations(&cfg, &evals, m_reps, base_seed, eps)?);
    }
    Ok(out)
}

/// CARELESS and ALIGNED statistics per round count and strategy on the
/// template's input model and selection rule.
pub fn sweep_rounds(
    n_grid: &[usize],
    template: &RunConfig,
    strategies: &[StrategySpec],
    m_reps: usize,
    base_seed: u64,
) -> Result<SweepResult> {
    let evals = [Evaluation::preset("CARELESS")?, Evaluation::preset("ALIGNED")?];
    let mut out = SweepResult::new("n_rounds");
    for &n in n_grid {
        if n < 10 {
            return Err(Error::domain(format!("round count {n} below 10")));
        }
        for s in strategies {
            let cfg = RunConfig { n_rounds: n, strategy: s.clone(), ..template.clone() };
            out.cells.extend(replicate_evaluations(&cfg, &evals, m_reps, base_seed, n as f64)?);
        }
    }
    Ok(out)
}

/// CARELESS and ALIGNED statistics per adversarial discard fraction.
pub fn sweep_discard(f_grid: &[f64], template: &RunConfig, m_reps: usize, base_seed: u64) -> Result<SweepResult> {
    let evals = [Evaluation::preset("CARELESS")?, Evaluation::preset("ALIGNED")?];
    let mut out = SweepResult::new("discard_fraction");
    for &f in f_grid {
        let cfg = RunConfig { selection: SelectionSpec::Adversarial { discard_fraction: f }, ..template.clone() };
        out.cells.extend(replicate_evaluations(&cfg, &evals, m_reps, base_seed, f)?);
    }
    Ok(out)
}

/// Canned configurations for the figure family.
pub mod presets {
    use super::*;

    pub const BIAS_GRID: [f64; 5] = [0.0, 0.05, 0.1, 0.15, 0.2];
    pub const FIG_ROUNDS: usize = 100_000;
    pub const BASE_SEED: u64 = 20_240_601;

    /// Moderate-deviation regime for the memory study: zero-mean sine drift
    /// of amplitude 0.1 and period 4000 rounds with adversarial discarding
    /// of 0.5% of rounds.
    pub fn moderate_regime() -> (InputModelSpec, SelectionSpec) {
        (
            InputModelSpec::DriftSine { epsilon0: 0.0, amp: 0.1, period: 4000.0 },
            SelectionSpec::Adversarial { discard_fraction: 0.005 },
        )
    }

    /// Whole periods of the drift, so a static encoder sees zero mean bias.
    pub const FIG5_ROUNDS: [usize; 5] = [4_000, 8_000, 12_000, 20_000, 40_000];
    pub const FIG4_FRACTIONS: [f64; 7] = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3];

    pub fn bias_aware_template(n_rounds: usize) -> RunConfig {
        RunConfig::new(
            n_rounds,
            BASE_SEED,
            InputModelSpec::IidBias { epsilon: 0.0 },
            StrategySpec::BiasAware { known_eps: 0.0 },
        )
    }

    /// Nominal vs effective benchmark for the bias-aware strategy.
    pub fn fig2(m_reps: usize) -> Result<SweepResult> {
        sweep_bias(&BIAS_GRID, &bias_aware_template(FIG_ROUNDS), m_reps, BASE_SEED)
    }

    /// Bias-aware baseline and ε-greedy bandit against the effective ceiling.
    pub fn fig3(m_reps: usize) -> Result<SweepResult> {
        let mut out = sweep_bias(&BIAS_GRID, &bias_aware_template(FIG_ROUNDS), m_reps, BASE_SEED)?;
        let bandit = RunConfig { strategy: StrategySpec::bandit(), ..bias_aware_template(FIG_ROUNDS) };
        out.cells.extend(sweep_bias(&BIAS_GRID, &bandit, m_reps, BASE_SEED)?.cells);
        Ok(out)
    }

    /// Adversarial discarding at ε = 0.1 against both evaluations.
    pub fn fig4(m_reps: usize) -> Result<SweepResult> {
        let template = RunConfig::new(
            10_000,
            BASE_SEED,
            InputModelSpec::IidBias { epsilon: 0.1 },
            StrategySpec::BiasAware { known_eps: 0.1 },
        );
        sweep_discard(&FIG4_FRACTIONS, &template, m_reps, BASE_SEED)
    }

    pub fn fig5_strategies() -> Vec<StrategySpec> {
        vec![StrategySpec::StaticA0, StrategySpec::bandit(), StrategySpec::windowed_bandit()]
    }

    pub fn fig5_template() -> RunConfig {
        let (model, selection) = moderate_regime();
        RunConfig { selection, ..RunConfig::new(20_000, BASE_SEED, model, StrategySpec::StaticA0) }
    }

    /// Every classical strategy × input model × selection rule combination
    /// used for the aligned soundness study.
    pub fn soundness_matrix(n_rounds: usize) -> Vec<RunConfig> {
        let strategies = [
            StrategySpec::StaticA0,
            StrategySpec::StaticA1,
            StrategySpec::BiasAware { known_eps: 0.1 },
            StrategySpec::bandit(),
            StrategySpec::windowed_bandit(),
        ];
        let models = [
            InputModelSpec::IidBias { epsilon: 0.1 },
            // Stationary bias 0.1 with strong persistence.
            InputModelSpec::Markov { p00: 0.8, p10: 0.3 },
            InputModelSpec::DriftSine { epsilon0: 0.05, amp: 0.07, period: 4000.0 },
            InputModelSpec::DriftWalk { step: 0.01, bound: 0.2 },
        ];
        let selections = [
            SelectionSpec::None,
            SelectionSpec::Random { discard_fraction: 0.1 },
            SelectionSpec::Adversarial { discard_fraction: 0.1 },
        ];
        let mut out = Vec::new();
        for s in &strategies {
            for m in &models {
                for sel in &selections {
                    out.push(RunConfig {
                        selection: sel.clone(),
                        ..RunConfig::new(n_rounds, BASE_SEED, m.clone(), s.clone())
                    });
                }
            }
        }
        out
    }

    /// Careless false acceptance and aligned gaps against the round count.
    pub fn fig5(m_reps: usize) -> Result<SweepResult> {
        sweep_rounds(&FIG5_ROUNDS, &fig5_template(), &fig5_strategies(), m_reps, BASE_SEED)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(model: InputModelSpec, strategy: StrategySpec, n: usize) -> RunConfig {
        RunConfig::new(n, 99, model, strategy)
    }

    #[test]
    fn static_a0_under_full_bias_is_perfect() {
        let c = cfg(InputModelSpec::IidBias { epsilon: 0.5 }, StrategySpec::StaticA0, 5000);
        let (t, r) = run_once(&c).unwrap();
        assert_eq!(t.score_unconditional().unwrap(), 1.0);
        assert_eq!(r.s_uncond, 1.0);
    }

    #[test]
    fn static_a0_uniform_scores_three_quarters() {
        let c = cfg(InputModelSpec::IidBias { epsilon: 0.0 }, StrategySpec::StaticA0, 100_000);
        let (_, r) = run_once(&c).unwrap();
        assert!((r.s_uncond - 0.75).abs() < 0.006, "{}", r.s_uncond);
    }

    #[test]
    fn perfect_device() {
        let c = cfg(InputModelSpec::IidBias { epsilon: 0.0 }, StrategySpec::ParamDevice { p_success: 1.0 }, 2000);
        let (t, _) = run_once(&c).unwrap();
        assert_eq!(t.score_unconditional().unwrap(), 1.0);
    }

    #[test]
    fn decoder_is_identity_on_every_round() {
        for s in [StrategySpec::StaticA1, StrategySpec::bandit(), StrategySpec::windowed_bandit()] {
            let c = cfg(InputModelSpec::Markov { p00: 0.8, p10: 0.3 }, s, 3000);
            let sim = simulate(&c).unwrap();
            assert!(sim.trace.rounds().iter().all(|r| r.m == r.b));
        }
    }

    #[test]
    fn greedy_bandit_reproduces_bias_aware() {
        let model = InputModelSpec::IidBias { epsilon: 0.2 };
        let aware = simulate(&cfg(model.clone(), StrategySpec::BiasAware { known_eps: 0.2 }, 20_000)).unwrap();
        let greedy = StrategySpec::Bandit { eta: 0.05, explore: 0.0, q_init: [1.0, 0.0] };
        let bandit = simulate(&cfg(model, greedy, 20_000)).unwrap();
        assert_eq!(aware.trace.rounds(), bandit.trace.rounds());
    }

    #[test]
    fn runs_are_reproducible() {
        let mut c = cfg(InputModelSpec::DriftWalk { step: 0.01, bound: 0.3 }, StrategySpec::windowed_bandit(), 5000);
        c.selection = SelectionSpec::Random { discard_fraction: 0.1 };
        let (t1, r1) = run_once(&c).unwrap();
        let (t2, r2) = run_once(&c).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(r1, r2);
        c.seed += 1;
        assert_ne!(run_once(&c).unwrap().0, t1);
    }

    #[test]
    fn replicate_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..100_000 {
            assert!(seen.insert(replicate_seed(7, i)));
        }
    }

    #[test]
    fn singleton_replicate_matches_run_once() {
        let c = cfg(InputModelSpec::IidBias { epsilon: 0.1 }, StrategySpec::bandit(), 4000);
        let cell = run_replicates(&c, 1, 5).unwrap();
        let (_, r) = run_once(&RunConfig { seed: replicate_seed(5, 0), ..c }).unwrap();
        assert_eq!(cell.mean_s_uncond, r.s_uncond);
        assert_eq!(cell.mean_s_low, r.s_low);
        assert_eq!(cell.mean_delta_rob, r.delta_rob);
        assert_eq!(cell.median_delta_rob, r.delta_rob);
        assert_eq!(cell.accept_rate, if r.verdict == Verdict::Accept { 1.0 } else { 0.0 });
    }

    #[test]
    fn replicate_study_is_deterministic() {
        let c = cfg(InputModelSpec::Markov { p00: 0.7, p10: 0.5 }, StrategySpec::windowed_bandit(), 2000);
        let a = run_replicates(&c, 16, 3).unwrap();
        let b = run_replicates(&c, 16, 3).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.accept_rate));
        assert!((a.accept_se - (a.accept_rate * (1.0 - a.accept_rate) / 16.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let c = cfg(InputModelSpec::IidBias { epsilon: 0.15 }, StrategySpec::bandit(), 3000);
        let pool = |threads| rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let one = pool(1).install(|| run_replicates(&c, 12, 11).unwrap());
        let four = pool(4).install(|| run_replicates(&c, 12, 11).unwrap());
        assert_eq!(one, four);
    }

    #[test]
    fn switching_benchmark_touches_only_benchmark_fields() {
        let mut c = cfg(InputModelSpec::IidBias { epsilon: 0.15 }, StrategySpec::BiasAware { known_eps: 0.15 }, 5000);
        c.selection = SelectionSpec::Adversarial { discard_fraction: 0.1 };
        let sim = simulate(&c).unwrap();
        let p = ConfidenceParams::default();
        let reports: Vec<ScoreReport> = [
            BenchmarkSpec::Nominal,
            BenchmarkSpec::Effective { known_eps: None },
            BenchmarkSpec::Robust { eps_max: None },
            BenchmarkSpec::Nonstationary,
        ]
        .iter()
        .map(|b| certify(&sim.trace, ScoringMode::Unconditional, &b.resolve(sim.context(&c)).unwrap(), &p).unwrap())
        .collect();
        for r in &reports[1..] {
            assert_eq!(r.s_uncond, reports[0].s_uncond);
            assert_eq!(r.s_cond, reports[0].s_cond);
            assert_eq!(r.s_low, reports[0].s_low);
            assert_eq!(r.bias, reports[0].bias);
            assert_eq!(r.n_kept, reports[0].n_kept);
        }
    }

    #[test]
    fn sweep_bias_zero_cell_benchmarks_coincide() {
        let t = presets::bias_aware_template(2000);
        let res = sweep_bias(&[0.0], &t, 4, 1).unwrap();
        assert_eq!(res.cells.len(), 2);
        assert_eq!(res.cells[0].mean_benchmark, 0.75);
        assert_eq!(res.cells[1].mean_benchmark, 0.75);
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("axis_value,strategy,evaluation,scoring,benchmark_mode,n_rounds,replicates"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let t = presets::bias_aware_template(100);
        assert!(sweep_bias(&[0.7], &t, 1, 1).is_err());
        assert!(sweep_rounds(&[5], &t, &[StrategySpec::StaticA0], 1, 1).is_err());
        assert!(run_replicates(&t, 0, 1).is_err());
    }

    #[test]
    fn config_toml_like_roundtrip_via_json() {
        let c = presets::fig5_template();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&s).unwrap(), c);
        let bad = s.replacen("\"n_rounds\"", "\"n_round\"", 1);
        assert!(serde_json::from_str::<RunConfig>(&bad).is_err());
    }
}
