//! Generative laws for the per-round inputs `(a0, a1, y)`.
//!
//! Preparation bits are always fair and independent. The query bit follows
//! one of four laws. Bias is measured as `ε = Pr(y = 0) − 1/2`.
//!
//! Besides the inputs, every draw reports the conditional bias that was used
//! to sample `y` given the past. The schedule-aware classical benchmark is
//! built from that sequence.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rac_core::Bit;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputModelSpec {
    /// IID queries with `Pr(y=0) = 1/2 + epsilon`.
    IidBias { epsilon: f64 },
    /// First-order chain with `p00 = Pr(y_t=0 | y_{t-1}=0)` and
    /// `p10 = Pr(y_t=0 | y_{t-1}=1)`, started from its stationary law.
    Markov { p00: f64, p10: f64 },
    /// `ε_t = epsilon0 + amp·sin(2πt/period)`.
    DriftSine { epsilon0: f64, amp: f64, period: f64 },
    /// `ε_{t+1} = clip(ε_t ± step, ±bound)`, starting at 0.
    DriftWalk { step: f64, bound: f64 },
}

impl InputModelSpec {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::domain(format!("{name}={v} is not a probability")))
            }
        };
        match *self {
            InputModelSpec::IidBias { epsilon } => {
                if !(-0.5..=0.5).contains(&epsilon) {
                    return Err(Error::domain(format!("iid_bias: |epsilon|={} exceeds 1/2", epsilon.abs())));
                }
            }
            InputModelSpec::Markov { p00, p10 } => {
                unit("p00", p00)?;
                unit("p10", p10)?;
                if p00 == 1.0 && p10 == 0.0 {
                    return Err(Error::domain("reducible chain: p00=1 and p10=0"));
                }
            }
            InputModelSpec::DriftSine { epsilon0, amp, period } => {
                if period.is_nan() || period <= 0.0 {
                    return Err(Error::domain("drift_sine: period must be positive"));
                }
                if !(0.0..=0.5).contains(&(epsilon0.abs() + amp.abs())) {
                    return Err(Error::domain("drift_sine: |epsilon0| + amp must not exceed 1/2"));
                }
            }
            InputModelSpec::DriftWalk { step, bound } => {
                if !step.is_finite() || step < 0.0 {
                    return Err(Error::domain("drift_walk: step must be non-negative"));
                }
                if !(0.0..=0.5).contains(&bound) {
                    return Err(Error::domain("drift_walk: bound must lie in [0, 1/2]"));
                }
            }
        }
        Ok(())
    }

    /// Short identifier recorded in traces.
    pub fn tag(&self) -> String {
        match *self {
            InputModelSpec::IidBias { epsilon } => format!("iid_bias(eps={epsilon})"),
            InputModelSpec::Markov { p00, p10 } => format!("markov(p00={p00},p10={p10})"),
            InputModelSpec::DriftSine { epsilon0, amp, period } => {
                format!("drift_sine(eps0={epsilon0},amp={amp},T={period})")
            }
            InputModelSpec::DriftWalk { step, bound } => format!("drift_walk(step={step},bound={bound})"),
        }
    }

    /// Long-run bias of the query law: ε for IID, the stationary bias for the
    /// chain, `epsilon0` for the sine drift and 0 for the symmetric walk.
    pub fn nominal_bias(&self) -> Result<f64> {
        match *self {
            InputModelSpec::IidBias { epsilon } => Ok(epsilon),
            InputModelSpec::Markov { p00, p10 } => stationary_bias(p00, p10),
            InputModelSpec::DriftSine { epsilon0, .. } => Ok(epsilon0),
            InputModelSpec::DriftWalk { .. } => Ok(0.0),
        }
    }

    pub fn is_iid(&self) -> bool {
        matches!(self, InputModelSpec::IidBias { .. })
    }
}

/// Mutable generator state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InputState {
    /// Last query bit; `None` before the first Markov draw.
    pub prev_y: Option<Bit>,
    /// Current bias of the random-walk drift.
    pub walk_eps: f64,
    /// Index of the next round (1-based).
    pub t: u64,
}

impl InputState {
    pub fn new() -> Self {
        InputState { prev_y: None, walk_eps: 0.0, t: 1 }
    }
}

/// Inputs of one round plus the conditional bias used to draw `y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inputs {
    pub a0: Bit,
    pub a1: Bit,
    pub y: Bit,
    pub bias: f64,
}

/// Draws the inputs of round `state.t` and advances the state.
pub fn next_inputs<R: Rng + ?Sized>(spec: &InputModelSpec, state: &mut InputState, rng: &mut R) -> Inputs {
    let a0 = Bit::from(rng.gen::<bool>());
    let a1 = Bit::from(rng.gen::<bool>());
    let bias = match *spec {
        InputModelSpec::IidBias { epsilon } => epsilon,
        InputModelSpec::Markov { p00, p10 } => match state.prev_y {
            None => stationary_bias(p00, p10).unwrap_or(0.0),
            Some(prev) if prev.is_one() => p10 - 0.5,
            Some(_) => p00 - 0.5,
        },
        InputModelSpec::DriftSine { epsilon0, amp, period } => sine_bias(epsilon0, amp, period, state.t),
        InputModelSpec::DriftWalk { .. } => state.walk_eps,
    };
    let y = Bit::from(rng.gen::<f64>() >= 0.5 + bias);

    if let InputModelSpec::DriftWalk { step, bound } = *spec {
        let delta = if rng.gen::<bool>() { step } else { -step };
        state.walk_eps = (state.walk_eps + delta).clamp(-bound, bound);
    }
    state.prev_y = Some(y);
    state.t += 1;
    Inputs { a0, a1, y, bias }
}

/// `q − 1/2` with `q = p10 / (1 − p00 + p10)` the stationary `Pr(y=0)`.
pub fn stationary_bias(p00: f64, p10: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p00) || !(0.0..=1.0).contains(&p10) {
        return Err(Error::domain("transition probabilities must lie in [0,1]"));
    }
    if p00 == 1.0 && p10 == 0.0 {
        return Err(Error::domain("reducible chain: p00=1 and p10=0"));
    }
    Ok(p10 / (1.0 - p00 + p10) - 0.5)
}

/// Transition pair `(p00, p10)` whose stationary bias is `eps_target` and
/// whose overall probability of repeating the previous query is `p_stay`.
///
/// Balance of the flows between the two states fixes the switching flow at
/// `(1 − p_stay)/2`; the pair is infeasible when that flow exceeds the mass
/// of either state.
pub fn markov_from_stay(p_stay: f64, eps_target: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&p_stay) {
        return Err(Error::domain("p_stay must lie in [0,1) for an irreducible chain"));
    }
    if eps_target.is_nan() || eps_target.abs() >= 0.5 {
        return Err(Error::domain("target bias must satisfy |eps| < 1/2"));
    }
    let q = 0.5 + eps_target;
    let flow = (1.0 - p_stay) / 2.0;
    if flow > q || flow > 1.0 - q {
        return Err(Error::domain(format!("infeasible chain: p_stay={p_stay} cannot realise bias {eps_target}")));
    }
    Ok((1.0 - flow / q, flow / (1.0 - q)))
}

fn sine_bias(epsilon0: f64, amp: f64, period: f64, t: u64) -> f64 {
    (epsilon0 + amp * (2.0 * PI * t as f64 / period).sin()).clamp(-0.5, 0.5)
}

/// Deterministic bias schedule of the sine drift at round `t`.
pub fn bias_at(spec: &InputModelSpec, t: u64) -> Result<f64> {
    match *spec {
        InputModelSpec::DriftSine { epsilon0, amp, period } => Ok(sine_bias(epsilon0, amp, period, t)),
        _ => Err(Error::domain("bias_at requires a drift_sine model")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn draw_ys(spec: &InputModelSpec, n: usize, seed: u64) -> Vec<Inputs> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut st = InputState::new();
        (0..n).map(|_| next_inputs(spec, &mut st, &mut rng)).collect()
    }

    fn freq_y0(xs: &[Inputs]) -> f64 {
        xs.iter().filter(|i| !i.y.is_one()).count() as f64 / xs.len() as f64
    }

    #[test]
    fn full_bias_always_queries_a0() {
        let xs = draw_ys(&InputModelSpec::IidBias { epsilon: 0.5 }, 10_000, 1);
        assert!(xs.iter().all(|i| !i.y.is_one()));
        let xs = draw_ys(&InputModelSpec::IidBias { epsilon: -0.5 }, 10_000, 1);
        assert!(xs.iter().all(|i| i.y.is_one()));
    }

    #[test]
    fn unbiased_frequency() {
        let f = freq_y0(&draw_ys(&InputModelSpec::IidBias { epsilon: 0.0 }, 100_000, 2));
        assert!((f - 0.5).abs() < 0.01, "{f}");
    }

    #[test]
    fn iid_frequency_converges_at_three_sigma() {
        for &eps in &[-0.3, -0.1, 0.05, 0.2, 0.4] {
            let n = 100_000;
            let q = 0.5 + eps;
            let f = freq_y0(&draw_ys(&InputModelSpec::IidBias { epsilon: eps }, n, 3));
            let sigma = (q * (1.0 - q) / n as f64).sqrt();
            assert!((f - q).abs() < 3.0 * sigma, "eps={eps} f={f}");
        }
    }

    #[test]
    fn markov_long_run_frequency() {
        let spec = InputModelSpec::Markov { p00: 0.7, p10: 0.5 };
        let xs = draw_ys(&spec, 101_000, 4);
        let f = freq_y0(&xs[1000..]);
        assert!((f - 0.625).abs() < 0.01, "{f}");
    }

    #[test]
    fn markov_stationary_frequency_three_sigma() {
        // Autocorrelation λ = p00 − p10 inflates the variance by (1+λ)/(1−λ).
        let (p00, p10) = (0.8, 0.4);
        let q = 0.5 + stationary_bias(p00, p10).unwrap();
        let lambda: f64 = p00 - p10;
        let n = 200_000;
        let xs = draw_ys(&InputModelSpec::Markov { p00, p10 }, n + 1000, 5);
        let f = freq_y0(&xs[1000..]);
        let sigma = (q * (1.0 - q) / n as f64 * (1.0 + lambda) / (1.0 - lambda)).sqrt();
        assert!((f - q).abs() < 3.0 * sigma, "f={f} q={q}");
    }

    #[test]
    fn stationary_bias_examples() {
        assert!((stationary_bias(0.7, 0.5).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(stationary_bias(0.5, 0.5).unwrap(), 0.0);
        assert!(stationary_bias(1.0, 0.0).is_err());
    }

    #[test]
    fn stay_parameterisation_solves_stationarity() {
        let (p00, p10) = markov_from_stay(0.8, 0.1).unwrap();
        assert!((stationary_bias(p00, p10).unwrap() - 0.1).abs() < 1e-12);
        let q = 0.6;
        let stay = q * p00 + (1.0 - q) * (1.0 - p10);
        assert!((stay - 0.8).abs() < 1e-12);
        assert!(markov_from_stay(0.0, 0.3).is_err());
        assert!(markov_from_stay(1.0, 0.0).is_err());
    }

    #[test]
    fn sine_schedule_examples() {
        let s = InputModelSpec::DriftSine { epsilon0: 0.1, amp: 0.05, period: 4.0 };
        assert!((bias_at(&s, 1).unwrap() - 0.15).abs() < 1e-15);
        assert!((bias_at(&s, 2).unwrap() - 0.1).abs() < 1e-15);
        let s = InputModelSpec::DriftSine { epsilon0: 0.45, amp: 0.1, period: 4.0 };
        assert_eq!(bias_at(&s, 1).unwrap(), 0.5);
        assert!(bias_at(&InputModelSpec::IidBias { epsilon: 0.0 }, 1).is_err());
    }

    #[test]
    fn walk_stays_bounded() {
        let spec = InputModelSpec::DriftWalk { step: 0.05, bound: 0.2 };
        let xs = draw_ys(&spec, 50_000, 6);
        assert!(xs.iter().all(|i| i.bias.abs() <= 0.2 + 1e-12));
        assert!(xs.iter().any(|i| i.bias.abs() > 0.15));
    }

    #[test]
    fn same_seed_same_stream() {
        for spec in [
            InputModelSpec::IidBias { epsilon: 0.1 },
            InputModelSpec::Markov { p00: 0.7, p10: 0.5 },
            InputModelSpec::DriftSine { epsilon0: 0.0, amp: 0.1, period: 100.0 },
            InputModelSpec::DriftWalk { step: 0.01, bound: 0.3 },
        ] {
            assert_eq!(draw_ys(&spec, 5000, 9), draw_ys(&spec, 5000, 9));
        }
    }

    #[test]
    fn preparation_bits_uncorrelated_with_query() {
        fn corr(u: &[f64], v: &[f64]) -> f64 {
            let n = u.len() as f64;
            let (mu, mv) = (u.iter().sum::<f64>() / n, v.iter().sum::<f64>() / n);
            let cov: f64 = u.iter().zip(v).map(|(a, b)| (a - mu) * (b - mv)).sum();
            let su: f64 = u.iter().map(|a| (a - mu).powi(2)).sum::<f64>().sqrt();
            let sv: f64 = v.iter().map(|b| (b - mv).powi(2)).sum::<f64>().sqrt();
            cov / (su * sv)
        }
        let n = 50_000;
        for spec in [
            InputModelSpec::IidBias { epsilon: 0.2 },
            InputModelSpec::Markov { p00: 0.9, p10: 0.3 },
            InputModelSpec::DriftSine { epsilon0: 0.1, amp: 0.2, period: 500.0 },
            InputModelSpec::DriftWalk { step: 0.02, bound: 0.4 },
        ] {
            let xs = draw_ys(&spec, n, 11);
            let y: Vec<f64> = xs.iter().map(|i| i.y.index() as f64).collect();
            let a0: Vec<f64> = xs.iter().map(|i| i.a0.index() as f64).collect();
            let a1: Vec<f64> = xs.iter().map(|i| i.a1.index() as f64).collect();
            let limit = 4.0 / (n as f64).sqrt();
            assert!(corr(&a0, &y).abs() < limit, "{spec:?}");
            assert!(corr(&a1, &y).abs() < limit, "{spec:?}");
        }
    }

    #[test]
    fn validation() {
        assert!(InputModelSpec::IidBias { epsilon: 0.6 }.validate().is_err());
        assert!(InputModelSpec::Markov { p00: 1.0, p10: 0.0 }.validate().is_err());
        assert!(InputModelSpec::DriftSine { epsilon0: 0.3, amp: 0.3, period: 10.0 }.validate().is_err());
        assert!(InputModelSpec::DriftSine { epsilon0: 0.1, amp: 0.1, period: 0.0 }.validate().is_err());
        assert!(InputModelSpec::DriftWalk { step: 0.1, bound: 0.6 }.validate().is_err());
        assert!(InputModelSpec::DriftWalk { step: 0.1, bound: 0.5 }.validate().is_ok());
    }
}
