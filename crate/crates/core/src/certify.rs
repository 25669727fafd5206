//! Certification verdicts.
//!
//! A verdict combines a score, a lower confidence bound on that score and a
//! classical benchmark. The claim is accepted only when the bound strictly
//! exceeds the benchmark; the robustness gap `Δ_rob = S_low − benchmark` is
//! reported either way.
//!
//! An *aligned* evaluation pairs the unconditional score with a benchmark
//! derived under the same input law that produced the data. A *careless*
//! evaluation pairs the conditional score with the uniform-input ceiling
//! 3/4; it is the deliberately misaligned configuration used in stress tests.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ceilings::{nonstationary_ceiling, rac_effective_ceiling, robust_ceiling, NOMINAL_CEILING};
use crate::error::{Error, Result};
use crate::input_models::{bias_at, InputModelSpec};
use crate::rac_core::{ScoringMode, Trace, FORMAT_VERSION};
use crate::stats::{azuma_lower, bias_interval, BiasEstimate, ConfidenceParams};

/// Where a robust benchmark gets its bias bound from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EpsMaxSource {
    Given(f64),
    /// Hoeffding bound from the query counts of the certified trace itself.
    DataDriven,
}

/// A fully resolved classical benchmark.
#[derive(Clone, Debug, PartialEq)]
pub enum BenchmarkMode {
    Nominal,
    Effective { known_eps: f64 },
    Robust { eps_max: EpsMaxSource },
    Nonstationary { schedule: Vec<f64> },
}

impl BenchmarkMode {
    pub fn kind(&self) -> BenchmarkKind {
        match self {
            BenchmarkMode::Nominal => BenchmarkKind::Nominal,
            BenchmarkMode::Effective { .. } => BenchmarkKind::Effective,
            BenchmarkMode::Robust { .. } => BenchmarkKind::Robust,
            BenchmarkMode::Nonstationary { .. } => BenchmarkKind::Nonstationary,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    Nominal,
    Effective,
    Robust,
    Nonstationary,
}

/// Configuration-level benchmark. Missing parameters are filled in from the
/// input model and the realised bias schedule by [`BenchmarkSpec::resolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BenchmarkSpec {
    Nominal,
    Effective {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        known_eps: Option<f64>,
    },
    Robust {
        /// `None` estimates the bound from the trace.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps_max: Option<f64>,
    },
    Nonstationary,
}

/// What is known about the process that produced a trace.
#[derive(Clone, Copy, Debug, Default)]
pub struct BenchmarkContext<'a> {
    pub model: Option<&'a InputModelSpec>,
    /// Per-round conditional bias used by the generator, when recorded.
    pub schedule: Option<&'a [f64]>,
    pub n: usize,
}

impl BenchmarkSpec {
    pub fn resolve(&self, ctx: BenchmarkContext<'_>) -> Result<BenchmarkMode> {
        match *self {
            BenchmarkSpec::Nominal => Ok(BenchmarkMode::Nominal),
            BenchmarkSpec::Effective { known_eps: Some(e) } => Ok(BenchmarkMode::Effective { known_eps: e }),
            BenchmarkSpec::Effective { known_eps: None } => match ctx.model {
                Some(InputModelSpec::IidBias { epsilon }) => Ok(BenchmarkMode::Effective { known_eps: *epsilon }),
                Some(_) => Self::schedule_for(ctx).map(|schedule| BenchmarkMode::Nonstationary { schedule }),
                None => Err(Error::domain("effective benchmark needs known_eps when the input model is unknown")),
            },
            BenchmarkSpec::Robust { eps_max: Some(e) } => Ok(BenchmarkMode::Robust { eps_max: EpsMaxSource::Given(e) }),
            BenchmarkSpec::Robust { eps_max: None } => Ok(BenchmarkMode::Robust { eps_max: EpsMaxSource::DataDriven }),
            BenchmarkSpec::Nonstationary => {
                Self::schedule_for(ctx).map(|schedule| BenchmarkMode::Nonstationary { schedule })
            }
        }
    }

    fn schedule_for(ctx: BenchmarkContext<'_>) -> Result<Vec<f64>> {
        if let Some(s) = ctx.schedule {
            return Ok(s.to_vec());
        }
        match ctx.model {
            Some(InputModelSpec::IidBias { epsilon }) => Ok(vec![*epsilon; ctx.n]),
            Some(spec @ InputModelSpec::DriftSine { .. }) => (1..=ctx.n as u64).map(|t| bias_at(spec, t)).collect(),
            _ => Err(Error::domain("schedule-aware benchmark needs the realised bias schedule for this input model")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Accept,
    Reject,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Accept => "ACCEPT",
            Verdict::Reject => "REJECT",
        })
    }
}

/// Named scoring/benchmark pairings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EvaluationTag {
    Aligned,
    Careless,
}

impl fmt::Display for EvaluationTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvaluationTag::Aligned => "ALIGNED",
            EvaluationTag::Careless => "CARELESS",
        })
    }
}

impl FromStr for EvaluationTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ALIGNED" => Ok(EvaluationTag::Aligned),
            "CARELESS" => Ok(EvaluationTag::Careless),
            _ => Err(Error::domain(format!("unknown evaluation preset {s:?} (expected ALIGNED or CARELESS)"))),
        }
    }
}

/// `CARELESS → (conditional, nominal)`; `ALIGNED → (unconditional, effective)`,
/// where the effective benchmark resolves to the schedule-aware ceiling for
/// non-IID input models.
pub fn evaluation_preset(name: &str) -> Result<(ScoringMode, BenchmarkSpec)> {
    Ok(match name.parse::<EvaluationTag>()? {
        EvaluationTag::Careless => (ScoringMode::Conditional, BenchmarkSpec::Nominal),
        EvaluationTag::Aligned => (ScoringMode::Unconditional, BenchmarkSpec::Effective { known_eps: None }),
    })
}

/// Flat certification record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub format_version: u32,
    pub n: usize,
    pub n_kept: usize,
    pub scoring: ScoringMode,
    pub s_uncond: f64,
    pub s_cond: Option<f64>,
    pub s_low: f64,
    #[serde(flatten)]
    pub bias: BiasEstimate,
    pub benchmark_mode: BenchmarkKind,
    pub benchmark_value: f64,
    pub delta_rob: f64,
    pub delta_rob_minimax: Option<f64>,
    pub verdict: Verdict,
    pub evaluation_tag: EvaluationTag,
}

impl ScoreReport {
    /// Score that the bound was computed from.
    pub fn s_hat(&self) -> f64 {
        match self.scoring {
            ScoringMode::Unconditional => self.s_uncond,
            ScoringMode::Conditional => self.s_cond.unwrap_or(f64::NAN),
        }
    }
}

/// `ACCEPT` iff the lower bound strictly exceeds the benchmark.
pub fn verdict_for(s_low: f64, benchmark: f64) -> Verdict {
    if s_low > benchmark {
        Verdict::Accept
    } else {
        Verdict::Reject
    }
}

/// Numeric value of a resolved benchmark.
fn benchmark_value(mode: &BenchmarkMode, bias: &BiasEstimate) -> Result<f64> {
    match mode {
        BenchmarkMode::Nominal => Ok(NOMINAL_CEILING),
        BenchmarkMode::Effective { known_eps } => rac_effective_ceiling(*known_eps),
        BenchmarkMode::Robust { eps_max: EpsMaxSource::Given(e) } => robust_ceiling(*e),
        BenchmarkMode::Robust { eps_max: EpsMaxSource::DataDriven } => robust_ceiling(bias.eps_max),
        BenchmarkMode::Nonstationary { schedule } => nonstationary_ceiling(schedule),
    }
}

/// Scores a trace, bounds the score, and compares the bound to the benchmark.
///
/// The Azuma bound uses `n = N` for unconditional scoring and `n = n_kept`
/// for conditional scoring.
pub fn certify(
    trace: &Trace,
    scoring: ScoringMode,
    benchmark: &BenchmarkMode,
    params: &ConfidenceParams,
) -> Result<ScoreReport> {
    params.validate()?;
    let n = trace.len();
    if n == 0 {
        return Err(Error::domain("no rounds"));
    }
    let n_kept = trace.kept_count();
    let s_uncond = trace.score_unconditional()?;
    let s_cond = if n_kept > 0 { Some(trace.score_conditional()?) } else { None };
    let (s_hat, n_eval) = match scoring {
        ScoringMode::Unconditional => (s_uncond, n),
        ScoringMode::Conditional => match s_cond {
            Some(s) => (s, n_kept),
            None => return Err(Error::domain("conditional score undefined: no kept rounds")),
        },
    };
    let s_low = azuma_lower(s_hat, n_eval, params.alpha)?;

    let n0 = trace.rounds().iter().filter(|r| !r.y.is_one()).count();
    let bias = bias_interval(n0, n, params.beta)?;
    let value = benchmark_value(benchmark, &bias)?;
    let delta_rob = s_low - value;
    let delta_rob_minimax = matches!(benchmark, BenchmarkMode::Robust { .. }).then_some(delta_rob);

    let evaluation_tag = match (scoring, benchmark) {
        (ScoringMode::Unconditional, BenchmarkMode::Nominal) | (ScoringMode::Conditional, _) => EvaluationTag::Careless,
        (ScoringMode::Unconditional, _) => EvaluationTag::Aligned,
    };

    Ok(ScoreReport {
        format_version: FORMAT_VERSION,
        n,
        n_kept,
        scoring,
        s_uncond,
        s_cond,
        s_low,
        bias,
        benchmark_mode: benchmark.kind(),
        benchmark_value: value,
        delta_rob,
        delta_rob_minimax,
        verdict: verdict_for(s_low, value),
        evaluation_tag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rac_core::{Bit, RoundRecord};

    /// `x` successes pattern with all queries y=0 except where `ys` says 1.
    fn trace(x: &[u8], kept: &[u8]) -> Trace {
        let rounds = x
            .iter()
            .zip(kept)
            .enumerate()
            .map(|(i, (&xi, &ki))| {
                let out = Bit::new(xi).unwrap();
                RoundRecord {
                    kept: Bit::new(ki).unwrap(),
                    ..RoundRecord::new(i as u32 + 1, Bit::ONE, Bit::ZERO, Bit::ZERO, out, out)
                }
            })
            .collect();
        Trace::new(rounds, 0, "t").unwrap()
    }

    #[test]
    fn presets() {
        assert_eq!(evaluation_preset("CARELESS").unwrap(), (ScoringMode::Conditional, BenchmarkSpec::Nominal));
        assert_eq!(
            evaluation_preset("ALIGNED").unwrap(),
            (ScoringMode::Unconditional, BenchmarkSpec::Effective { known_eps: None })
        );
        assert!(evaluation_preset("LAX").is_err());
    }

    #[test]
    fn conditional_on_empty_kept_set_fails() {
        let t = trace(&[1, 0], &[0, 0]);
        assert!(certify(&t, ScoringMode::Conditional, &BenchmarkMode::Nominal, &ConfidenceParams::default()).is_err());
        let r = certify(&t, ScoringMode::Unconditional, &BenchmarkMode::Nominal, &ConfidenceParams::default()).unwrap();
        assert_eq!(r.s_cond, None);
        assert_eq!(r.verdict, Verdict::Reject);
    }

    #[test]
    fn gap_and_verdict_are_consistent() {
        let x: Vec<u8> = (0..2000).map(|i| u8::from(i % 10 != 0)).collect();
        let t = trace(&x, &vec![1; 2000]);
        let p = ConfidenceParams::default();
        let r = certify(&t, ScoringMode::Unconditional, &BenchmarkMode::Nominal, &p).unwrap();
        assert_eq!(r.s_uncond, 0.9);
        assert!((r.s_low - azuma_lower(0.9, 2000, 0.05).unwrap()).abs() < 1e-15);
        assert_eq!(r.delta_rob, r.s_low - 0.75);
        assert_eq!(r.verdict, Verdict::Accept);
        assert_eq!(r.evaluation_tag, EvaluationTag::Careless);
        assert_eq!(r.delta_rob_minimax, None);

        let r = certify(&t, ScoringMode::Unconditional, &BenchmarkMode::Effective { known_eps: 0.5 }, &p).unwrap();
        assert_eq!(r.benchmark_value, 1.0);
        assert_eq!(r.verdict, Verdict::Reject);
        assert_eq!(r.evaluation_tag, EvaluationTag::Aligned);
    }

    #[test]
    fn acceptance_is_strict() {
        assert_eq!(verdict_for(0.75, 0.75), Verdict::Reject);
        assert_eq!(verdict_for(0.75 + 1e-12, 0.75), Verdict::Accept);
    }

    #[test]
    fn data_driven_robust_uses_trace_counts() {
        // every query is y=0: ε̂ = 1/2, ε_max clamps at 1/2, benchmark 1.0
        let t = trace(&[1; 50], &[1; 50]);
        let r = certify(
            &t,
            ScoringMode::Unconditional,
            &BenchmarkMode::Robust { eps_max: EpsMaxSource::DataDriven },
            &ConfidenceParams::default(),
        )
        .unwrap();
        assert_eq!(r.bias.eps_hat, 0.5);
        assert_eq!(r.benchmark_value, 1.0);
        assert_eq!(r.delta_rob_minimax, Some(r.delta_rob));
        assert_eq!(r.verdict, Verdict::Reject);
    }

    #[test]
    fn conditional_bound_uses_kept_count() {
        let t = trace(&[1, 0, 1, 0, 1, 1, 1, 1], &[1, 0, 1, 0, 1, 1, 1, 1]);
        let r = certify(&t, ScoringMode::Conditional, &BenchmarkMode::Nominal, &ConfidenceParams::default()).unwrap();
        assert_eq!(r.s_cond, Some(1.0));
        assert!((r.s_low - azuma_lower(1.0, 6, 0.05).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn resolve_benchmark_spec() {
        let iid = InputModelSpec::IidBias { epsilon: 0.1 };
        let ctx = BenchmarkContext { model: Some(&iid), schedule: None, n: 10 };
        assert_eq!(
            BenchmarkSpec::Effective { known_eps: None }.resolve(ctx).unwrap(),
            BenchmarkMode::Effective { known_eps: 0.1 }
        );
        let sine = InputModelSpec::DriftSine { epsilon0: 0.1, amp: 0.05, period: 4.0 };
        let ctx = BenchmarkContext { model: Some(&sine), schedule: None, n: 4 };
        match (BenchmarkSpec::Effective { known_eps: None }).resolve(ctx).unwrap() {
            BenchmarkMode::Nonstationary { schedule } => {
                assert_eq!(schedule.len(), 4);
                assert!((schedule[0] - 0.15).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        let walk = InputModelSpec::DriftWalk { step: 0.1, bound: 0.2 };
        let ctx = BenchmarkContext { model: Some(&walk), schedule: None, n: 4 };
        assert!(BenchmarkSpec::Nonstationary.resolve(ctx).is_err());
        let ctx = BenchmarkContext { model: None, schedule: None, n: 4 };
        assert!(BenchmarkSpec::Effective { known_eps: None }.resolve(ctx).is_err());
        assert_eq!(
            BenchmarkSpec::Robust { eps_max: None }.resolve(ctx).unwrap(),
            BenchmarkMode::Robust { eps_max: EpsMaxSource::DataDriven }
        );
    }

    #[test]
    fn report_serialises_flat() {
        let t = trace(&[1, 0, 1, 1], &[1, 1, 1, 1]);
        let r = certify(&t, ScoringMode::Unconditional, &BenchmarkMode::Nominal, &ConfidenceParams::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let obj = v.as_object().unwrap();
        for key in ["format_version", "s_low", "eps_hat", "bias_delta", "eps_max", "verdict", "delta_rob"] {
            assert!(obj.contains_key(key), "{key}");
        }
        assert!(obj.values().all(|x| !x.is_object() && !x.is_array()));
        let back: ScoreReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
