//! Post-hoc selection rules that decide which rounds are kept.
//!
//! Selection runs offline over a completed trace. The adversarial rule
//! discards failures first, so for a fixed discard budget it dominates any
//! online rule that only sees the history so far.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rac_core::Trace;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectionSpec {
    #[default]
    None,
    /// Discard `round(f·N)` rounds uniformly at random.
    Random { discard_fraction: f64 },
    /// Discard `round(f·N)` rounds, failures first.
    Adversarial { discard_fraction: f64 },
}

impl SelectionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectionSpec::None => Ok(()),
            SelectionSpec::Random { discard_fraction: f } | SelectionSpec::Adversarial { discard_fraction: f } => {
                if (0.0..1.0).contains(&f) {
                    Ok(())
                } else {
                    Err(Error::domain(format!("discard_fraction={f} must lie in [0,1)")))
                }
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SelectionSpec::None => "none",
            SelectionSpec::Random { .. } => "random",
            SelectionSpec::Adversarial { .. } => "adversarial",
        }
    }

    /// Number of rounds discarded from a trace of length `n` (half-up rounding).
    pub fn discard_count(&self, n: usize) -> usize {
        match *self {
            SelectionSpec::None => 0,
            SelectionSpec::Random { discard_fraction: f } | SelectionSpec::Adversarial { discard_fraction: f } => {
                ((f * n as f64 + 0.5).floor() as usize).min(n)
            }
        }
    }
}

/// Sets kept flags on a trace whose rounds are all still kept.
pub fn apply_selection<R: Rng + ?Sized>(trace: &Trace, spec: &SelectionSpec, rng: &mut R) -> Result<Trace> {
    spec.validate()?;
    if trace.rounds().iter().any(|r| !r.is_kept()) {
        return Err(Error::domain("double selection: trace already carries discarded rounds"));
    }
    let n = trace.len();
    let k = spec.discard_count(n);
    let mut kept = vec![true; n];
    match spec {
        SelectionSpec::None => return Ok(trace.clone()),
        SelectionSpec::Random { .. } => {
            for i in sample(rng, n, k) {
                kept[i] = false;
            }
        }
        SelectionSpec::Adversarial { .. } => {
            let (failures, successes): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| !trace.rounds()[i].succeeded());
            if k <= failures.len() {
                for j in sample(rng, failures.len(), k) {
                    kept[failures[j]] = false;
                }
            } else {
                for &i in &failures {
                    kept[i] = false;
                }
                for j in sample(rng, successes.len(), k - failures.len()) {
                    kept[successes[j]] = false;
                }
            }
        }
    }
    trace.with_kept(&kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rac_core::{Bit, RoundRecord};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trace_of(x: &[u8]) -> Trace {
        let one = Bit::ONE;
        let rounds = x
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                let out = Bit::new(xi).unwrap();
                RoundRecord::new(i as u32 + 1, one, Bit::ZERO, Bit::ZERO, out, out)
            })
            .collect();
        Trace::new(rounds, 0, "test").unwrap()
    }

    fn kept(t: &Trace) -> Vec<u8> {
        t.rounds().iter().map(|r| u8::from(r.kept)).collect()
    }

    #[test]
    fn adversarial_discards_all_failures() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = trace_of(&[1, 0, 1, 0]);
        let s = apply_selection(&t, &SelectionSpec::Adversarial { discard_fraction: 0.5 }, &mut rng).unwrap();
        assert_eq!(kept(&s), vec![1, 0, 1, 0]);
        assert_eq!(s.score_conditional().unwrap(), 1.0);
        assert_eq!(s.score_unconditional().unwrap(), 0.5);
    }

    #[test]
    fn none_keeps_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = trace_of(&[1, 0, 0, 1, 1]);
        let s = apply_selection(&t, &SelectionSpec::None, &mut rng).unwrap();
        assert_eq!(kept(&s), vec![1; 5]);
    }

    #[test]
    fn adversarial_partial_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = [1, 1, 0, 1, 1, 0, 1, 1, 0, 1];
        let t = trace_of(&x);
        let s = apply_selection(&t, &SelectionSpec::Adversarial { discard_fraction: 0.2 }, &mut rng).unwrap();
        let dropped: Vec<usize> = (0..10).filter(|&i| !s.rounds()[i].is_kept()).collect();
        assert_eq!(dropped.len(), 2);
        assert!(dropped.iter().all(|&i| x[i] == 0));
        assert_eq!(s.score_conditional().unwrap(), 7.0 / 8.0);
    }

    #[test]
    fn adversarial_spills_into_successes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = trace_of(&[1, 0, 1, 1, 1, 1, 1, 1, 1, 1]);
        let s = apply_selection(&t, &SelectionSpec::Adversarial { discard_fraction: 0.3 }, &mut rng).unwrap();
        assert!(!s.rounds()[1].is_kept());
        assert_eq!(s.kept_count(), 7);
        assert_eq!(s.score_conditional().unwrap(), 1.0);
    }

    #[test]
    fn random_discards_exact_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = trace_of(&[1; 101]);
        let s = apply_selection(&t, &SelectionSpec::Random { discard_fraction: 0.25 }, &mut rng).unwrap();
        // 25.25 rounds half-up to 25
        assert_eq!(s.kept_count(), 76);
    }

    #[test]
    fn half_up_rounding() {
        let s = SelectionSpec::Random { discard_fraction: 0.5 };
        assert_eq!(s.discard_count(5), 3);
        assert_eq!(s.discard_count(4), 2);
        assert_eq!(SelectionSpec::Adversarial { discard_fraction: 0.2 }.discard_count(10), 2);
    }

    #[test]
    fn double_selection_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = trace_of(&[1, 0, 1, 0]);
        let s = apply_selection(&t, &SelectionSpec::Random { discard_fraction: 0.5 }, &mut rng).unwrap();
        let err = apply_selection(&s, &SelectionSpec::None, &mut rng).unwrap_err();
        assert!(err.to_string().contains("double selection"));
    }

    #[test]
    fn fraction_validation() {
        assert!(SelectionSpec::Random { discard_fraction: 1.0 }.validate().is_err());
        assert!(SelectionSpec::Adversarial { discard_fraction: -0.1 }.validate().is_err());
    }
}
