//! Classical benchmarks.
//!
//! Closed forms for the RAC (nominal, bias-effective, robust, schedule-aware)
//! and an exact solver for any finite prepare-and-measure task with a linear
//! score. Classical behaviours with shared randomness form a polytope whose
//! vertices are deterministic encoder/decoder pairs, and a linear score over
//! a polytope peaks at a vertex, so enumerating every pair gives the ceiling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ceiling of the RAC under uniform queries.
pub const NOMINAL_CEILING: f64 = 0.75;

/// Largest strategy count `pam_ceiling_enumerate` accepts.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

fn check_bias(eps: f64, what: &str) -> Result<()> {
    if eps.abs() <= 0.5 {
        Ok(())
    } else {
        Err(Error::domain(format!("{what}={eps} outside [-1/2, 1/2]")))
    }
}

/// `3/4 + |ε|/2`: forward the bit of the more frequent query.
pub fn rac_effective_ceiling(eps: f64) -> Result<f64> {
    check_bias(eps, "eps")?;
    Ok(0.75 + eps.abs() / 2.0)
}

/// Supremum of the effective ceiling over `|ε| ≤ eps_max`, attained at the boundary.
pub fn robust_ceiling(eps_max: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&eps_max) {
        return Err(Error::domain(format!("eps_max={eps_max} outside [0, 1/2]")));
    }
    Ok(0.75 + eps_max / 2.0)
}

/// Average per-round optimum for a classical device that knows the bias of
/// every round.
pub fn nonstationary_ceiling(schedule: &[f64]) -> Result<f64> {
    if schedule.is_empty() {
        return Err(Error::domain("empty bias schedule"));
    }
    let mut total = 0.0;
    for &eps in schedule {
        check_bias(eps, "schedule entry")?;
        total += 0.75 + eps.abs() / 2.0;
    }
    Ok(total / schedule.len() as f64)
}

/// Long-run ceiling for a stationary first-order query chain when the device
/// may condition on the previous query.
pub fn markov_ceiling(p00: f64, p10: f64) -> Result<f64> {
    let q = 0.5 + crate::input_models::stationary_bias(p00, p10)?;
    Ok(0.75 + (q * (p00 - 0.5).abs() + (1.0 - q) * (p10 - 0.5).abs()) / 2.0)
}

/// Finite prepare-and-measure task with linear score
/// `S = Σ c[a,y,b]·π(a,y)·p(b|a,y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PamTask {
    pub n_a: usize,
    pub n_y: usize,
    pub n_b: usize,
    /// Message alphabet bound `d = |M|`.
    pub n_m: usize,
    /// `c[a,y,b]` in (a,y,b)-major order.
    pub coeffs: Vec<f64>,
    /// `π(a,y)` in (a,y)-major order.
    pub input_law: Vec<f64>,
}

/// Deterministic classical strategy. `decoder[m * n_y + y]` is the output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub encoder: Vec<usize>,
    pub decoder: Vec<usize>,
}

impl PamTask {
    /// The 2→1 RAC with `Pr(y=0) = p_y0`. Input `a = 2·a0 + a1`.
    pub fn rac(p_y0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_y0) {
            return Err(Error::domain("Pr(y=0) must lie in [0,1]"));
        }
        let p_y = [p_y0, 1.0 - p_y0];
        let mut coeffs = Vec::with_capacity(16);
        let mut input_law = Vec::with_capacity(8);
        for a in 0..4usize {
            let bits = [a >> 1, a & 1];
            for y in 0..2usize {
                input_law.push(0.25 * p_y[y]);
                for b in 0..2usize {
                    coeffs.push(if b == bits[y] { 1.0 } else { 0.0 });
                }
            }
        }
        Ok(PamTask { n_a: 4, n_y: 2, n_b: 2, n_m: 2, coeffs, input_law })
    }

    /// RAC with bias `ε = Pr(y=0) − 1/2`.
    pub fn rac_biased(eps: f64) -> Result<Self> {
        check_bias(eps, "eps")?;
        Self::rac(0.5 + eps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_a == 0 || self.n_y == 0 || self.n_b == 0 || self.n_m == 0 {
            return Err(Error::domain("alphabet sizes must be at least 1"));
        }
        if self.coeffs.len() != self.n_a * self.n_y * self.n_b {
            return Err(Error::domain(format!(
                "coeffs has {} entries, expected n_a*n_y*n_b = {}",
                self.coeffs.len(),
                self.n_a * self.n_y * self.n_b
            )));
        }
        if self.input_law.len() != self.n_a * self.n_y {
            return Err(Error::domain(format!(
                "input_law has {} entries, expected n_a*n_y = {}",
                self.input_law.len(),
                self.n_a * self.n_y
            )));
        }
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("coefficients must be finite"));
        }
        if self.input_law.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::domain("input law entries must be non-negative"));
        }
        let total: f64 = self.input_law.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("input law sums to {total}, not 1")));
        }
        Ok(())
    }

    /// `|M|^|A| · |B|^(|M|·|Y|)`, saturating on overflow.
    pub fn strategy_count(&self) -> u128 {
        let enc = (self.n_m as u128).checked_pow(self.n_a as u32);
        let dec = (self.n_b as u128).checked_pow((self.n_m * self.n_y) as u32);
        match (enc, dec) {
            (Some(e), Some(d)) => e.saturating_mul(d),
            _ => u128::MAX,
        }
    }

    /// `w[a][y][b] = π(a,y)·c[a,y,b]`, flattened.
    fn weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.coeffs.len());
        for a in 0..self.n_a {
            for y in 0..self.n_y {
                let p = self.input_law[a * self.n_y + y];
                for b in 0..self.n_b {
                    w.push(p * self.coeffs[(a * self.n_y + y) * self.n_b + b]);
                }
            }
        }
        w
    }

    /// Expected score of a deterministic strategy.
    pub fn strategy_score(&self, s: &DeterministicStrategy) -> Result<f64> {
        self.check_strategy(s)?;
        let w = self.weights();
        let mut total = 0.0;
        for a in 0..self.n_a {
            let m = s.encoder[a];
            let mut row = 0.0;
            for y in 0..self.n_y {
                let b = s.decoder[m * self.n_y + y];
                row += w[(a * self.n_y + y) * self.n_b + b];
            }
            total += row;
        }
        Ok(total)
    }

    fn check_strategy(&self, s: &DeterministicStrategy) -> Result<()> {
        if s.encoder.len() != self.n_a || s.decoder.len() != self.n_m * self.n_y {
            return Err(Error::domain("strategy tables do not match the task alphabets"));
        }
        if s.encoder.iter().any(|&m| m >= self.n_m) || s.decoder.iter().any(|&b| b >= self.n_b) {
            return Err(Error::domain("strategy table entry outside its alphabet"));
        }
        Ok(())
    }
}

/// Writes the base-`radix` digits of `index` into `digits`, most significant first.
fn digits_of(mut index: u64, radix: usize, digits: &mut [usize]) {
    for d in digits.iter_mut().rev() {
        *d = (index % radix as u64) as usize;
        index /= radix as u64;
    }
}

/// Advances a most-significant-first odometer. Returns false on wrap-around.
fn increment(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    decoder: u64,
    encoder: u64,
}

impl Best {
    fn pick(self, other: Best) -> Best {
        if other.value > self.value
            || (other.value == self.value && (other.decoder, other.encoder) < (self.decoder, self.encoder))
        {
            other
        } else {
            self
        }
    }
}

/// Exact classical ceiling of a finite task by enumerating every
/// deterministic encoder/decoder pair.
///
/// Strategies are ordered lexicographically by decoder table, then encoder
/// table, each read with its first entry most significant; the first
/// maximiser in that order is returned, independent of thread count.
pub fn pam_ceiling_enumerate(task: &PamTask) -> Result<(f64, DeterministicStrategy)> {
    task.validate()?;
    let count = task.strategy_count();
    if count > ENUMERATION_LIMIT {
        return Err(Error::Capacity { count, limit: ENUMERATION_LIMIT });
    }
    let (n_a, n_y, n_b, n_m) = (task.n_a, task.n_y, task.n_b, task.n_m);
    let n_dec = (n_b as u64).pow((n_m * n_y) as u32);
    let w = task.weights();

    let best = (0..n_dec)
        .into_par_iter()
        .map(|d| {
            let mut decoder = vec![0usize; n_m * n_y];
            digits_of(d, n_b, &mut decoder);
            // h[a][m]: contribution of input a when it is encoded as m
            let mut h = vec![0.0; n_a * n_m];
            for a in 0..n_a {
                for m in 0..n_m {
                    let mut row = 0.0;
                    for y in 0..n_y {
                        row += w[(a * n_y + y) * n_b + decoder[m * n_y + y]];
                    }
                    h[a * n_m + m] = row;
                }
            }
            let mut encoder = vec![0usize; n_a];
            let mut best = Best { value: f64::NEG_INFINITY, decoder: d, encoder: 0 };
            let mut e = 0u64;
            loop {
                let mut total = 0.0;
                for (a, &m) in encoder.iter().enumerate() {
                    total += h[a * n_m + m];
                }
                if total > best.value {
                    best = Best { value: total, decoder: d, encoder: e };
                }
                if !increment(&mut encoder, n_m) {
                    break;
                }
                e += 1;
            }
            best
        })
        .reduce(|| Best { value: f64::NEG_INFINITY, decoder: u64::MAX, encoder: u64::MAX }, Best::pick);

    let mut encoder = vec![0usize; n_a];
    let mut decoder = vec![0usize; n_m * n_y];
    digits_of(best.encoder, n_m, &mut encoder);
    digits_of(best.decoder, n_b, &mut decoder);
    Ok((best.value, DeterministicStrategy { encoder, decoder }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effective_ceiling_examples() {
        assert_eq!(rac_effective_ceiling(0.0).unwrap(), 0.75);
        assert!((rac_effective_ceiling(0.1).unwrap() - 0.80).abs() < 1e-15);
        assert!((rac_effective_ceiling(-0.2).unwrap() - 0.85).abs() < 1e-15);
        assert!(rac_effective_ceiling(0.51).is_err());
    }

    #[test]
    fn robust_ceiling_examples() {
        assert_eq!(robust_ceiling(0.0).unwrap(), 0.75);
        assert!((robust_ceiling(0.2).unwrap() - 0.85).abs() < 1e-15);
        assert_eq!(robust_ceiling(0.5).unwrap(), 1.0);
        assert!(robust_ceiling(-0.1).is_err());
        assert!(robust_ceiling(0.6).is_err());
    }

    #[test]
    fn robust_is_max_over_grid() {
        for &eps_max in &[0.0, 0.05, 0.13, 0.3, 0.5] {
            let grid_max = (0..=100)
                .map(|i| -eps_max + 2.0 * eps_max * i as f64 / 100.0)
                .map(|e: f64| rac_effective_ceiling(e.clamp(-0.5, 0.5)).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((robust_ceiling(eps_max).unwrap() - grid_max).abs() < 1e-12);
        }
    }

    #[test]
    fn nonstationary_examples() {
        assert!((nonstationary_ceiling(&[0.1; 37]).unwrap() - 0.80).abs() < 1e-12);
        let alt: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 0.2 } else { -0.2 }).collect();
        assert!((nonstationary_ceiling(&alt).unwrap() - 0.85).abs() < 1e-12);
        assert!(nonstationary_ceiling(&[]).is_err());
        assert!(nonstationary_ceiling(&[0.1, 0.7]).is_err());
    }

    #[test]
    fn nonstationary_sine_period() {
        // One full period of 0.1 + 0.05 sin(2πt/8), summed term by term.
        let period = 8.0;
        let schedule: Vec<f64> =
            (1..=8).map(|t| 0.1 + 0.05 * (2.0 * std::f64::consts::PI * t as f64 / period).sin()).collect();
        let mean_abs = schedule.iter().map(|e: &f64| e.abs()).sum::<f64>() / 8.0;
        assert!((nonstationary_ceiling(&schedule).unwrap() - (0.75 + mean_abs / 2.0)).abs() < 1e-12);
        // the schedule stays positive, so the mean is just 0.1
        assert!((nonstationary_ceiling(&schedule).unwrap() - 0.80).abs() < 1e-12);
    }

    #[test]
    fn markov_ceiling_matches_two_state_average() {
        // q = 0.625; conditional biases 0.2 after y=0 and 0 after y=1
        assert!((markov_ceiling(0.7, 0.5).unwrap() - (0.75 + 0.625 * 0.2 / 2.0)).abs() < 1e-15);
        // IID chain reduces to the stationary effective ceiling
        assert!((markov_ceiling(0.6, 0.6).unwrap() - rac_effective_ceiling(0.1).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn rac_uniform_enumeration() {
        let (v, s) = pam_ceiling_enumerate(&PamTask::rac(0.5).unwrap()).unwrap();
        assert_eq!(v, 0.75);
        // first maximiser: decoder answers 0 on y=0 and m on y=1, encoder forwards a1
        assert_eq!(s.decoder, vec![0, 0, 0, 1]);
        assert_eq!(s.encoder, vec![0, 1, 0, 1]);
    }

    #[test]
    fn rac_biased_enumeration() {
        let (v, s) = pam_ceiling_enumerate(&PamTask::rac(0.6).unwrap()).unwrap();
        assert!((v - 0.80).abs() < 1e-12);
        // forwards a0
        assert_eq!(s.encoder, vec![0, 0, 1, 1]);
    }

    #[test]
    fn unconstrained_message_is_perfect() {
        let mut task = PamTask::rac(0.5).unwrap();
        task.n_m = 4;
        let (v, s) = pam_ceiling_enumerate(&task).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!((task.strategy_score(&s).unwrap() - v).abs() < 1e-15);
    }

    #[test]
    fn ceiling_grows_with_message_alphabet() {
        let mut prev = f64::NEG_INFINITY;
        for n_m in 1..=4 {
            let mut task = PamTask::rac(0.55).unwrap();
            task.n_m = n_m;
            let (v, _) = pam_ceiling_enumerate(&task).unwrap();
            assert!(v >= prev - 1e-15, "n_m={n_m}");
            prev = v;
        }
    }

    #[test]
    fn guard_reports_count() {
        let task = PamTask { n_a: 8, n_y: 4, n_b: 2, n_m: 4, coeffs: vec![0.0; 64], input_law: vec![1.0 / 32.0; 32] };
        match pam_ceiling_enumerate(&task) {
            Err(Error::Capacity { count, limit }) => {
                assert_eq!(count, 4u128.pow(8) * 2u128.pow(16));
                assert_eq!(limit, ENUMERATION_LIMIT);
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn task_validation() {
        let mut t = PamTask::rac(0.5).unwrap();
        t.input_law[0] += 0.1;
        assert!(t.validate().is_err());
        let mut t = PamTask::rac(0.5).unwrap();
        t.coeffs.pop();
        assert!(t.validate().is_err());
        let mut t = PamTask::rac(0.5).unwrap();
        t.n_b = 0;
        assert!(t.validate().is_err());
    }

    #[test]
    fn odometer_matches_digits() {
        let mut digits = vec![0usize; 3];
        let mut expect = vec![0usize; 3];
        for i in 1..27u64 {
            assert!(increment(&mut digits, 3));
            digits_of(i, 3, &mut expect);
            assert_eq!(digits, expect);
        }
        assert!(!increment(&mut digits, 3));
    }
}
