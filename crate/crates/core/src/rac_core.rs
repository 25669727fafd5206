//! Trial structure of the 2→1 random access code.
//!
//! Each round the preparation device receives two bits `(a0, a1)`, the
//! measurement device receives a query `y`, one classical bit `m` crosses
//! the channel and the measurement device answers `b`. The round succeeds
//! when `b == a_y`.
//!
//! Two scoring rules are provided. The unconditional score normalises by
//! every attempted round, so a discarded round counts as a failure. The
//! conditional score normalises by the kept rounds only, which lets a
//! selection rule inflate it.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Schema version written into trace headers and reports.
pub const FORMAT_VERSION: u32 = 1;

/// A binary symbol. Serialises as the integer `0` or `1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Bit(bool);

impl Bit {
    pub const ZERO: Bit = Bit(false);
    pub const ONE: Bit = Bit(true);

    pub fn new(value: u8) -> Result<Self> {
        match value {
            0 => Ok(Bit::ZERO),
            1 => Ok(Bit::ONE),
            v => Err(Error::domain(format!("bit value {v} is not in {{0,1}}"))),
        }
    }

    #[inline]
    pub fn is_one(self) -> bool {
        self.0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn flip(self) -> Bit {
        Bit(!self.0)
    }
}

impl From<bool> for Bit {
    fn from(b: bool) -> Self {
        Bit(b)
    }
}

impl From<Bit> for u8 {
    fn from(b: Bit) -> u8 {
        b.0 as u8
    }
}

impl From<Bit> for bool {
    fn from(b: Bit) -> bool {
        b.0
    }
}

impl TryFrom<u8> for Bit {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Bit::new(v)
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0 as u8)
    }
}

/// Success indicator of one RAC round: `b == a_y`.
#[inline]
pub fn success(a0: Bit, a1: Bit, y: Bit, b: Bit) -> bool {
    let target = if y.is_one() { a1 } else { a0 };
    b == target
}

/// One trial. Field order matches the JSONL and CSV column order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundRecord {
    pub t: u32,
    pub a0: Bit,
    pub a1: Bit,
    pub y: Bit,
    pub m: Bit,
    pub b: Bit,
    pub x: Bit,
    pub kept: Bit,
}

impl RoundRecord {
    /// Builds a kept round, deriving `x` from the inputs and output.
    pub fn new(t: u32, a0: Bit, a1: Bit, y: Bit, m: Bit, b: Bit) -> Self {
        RoundRecord { t, a0, a1, y, m, b, x: success(a0, a1, y, b).into(), kept: Bit::ONE }
    }

    #[inline]
    pub fn succeeded(&self) -> bool {
        self.x.is_one()
    }

    #[inline]
    pub fn is_kept(&self) -> bool {
        self.kept.is_one()
    }

    fn check(&self) -> Result<()> {
        if self.x.is_one() != success(self.a0, self.a1, self.y, self.b) {
            return Err(Error::domain(format!("round {}: success flag x={} disagrees with b == a_y", self.t, self.x)));
        }
        Ok(())
    }
}

/// Which rounds enter the score denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    /// Divide by all attempted rounds; discarded rounds count as failures.
    Unconditional,
    /// Divide by kept rounds only.
    Conditional,
}

impl fmt::Display for ScoringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoringMode::Unconditional => "unconditional",
            ScoringMode::Conditional => "conditional",
        })
    }
}

/// Σ kept·x over all rounds, divided by the round count.
pub fn score_unconditional(rounds: &[RoundRecord]) -> Result<f64> {
    if rounds.is_empty() {
        return Err(Error::domain("no rounds"));
    }
    let hits = rounds.iter().filter(|r| r.is_kept() && r.succeeded()).count();
    Ok(hits as f64 / rounds.len() as f64)
}

/// Σ x over kept rounds, divided by the kept count.
pub fn score_conditional(rounds: &[RoundRecord]) -> Result<f64> {
    let (kept, hits) =
        rounds.iter().filter(|r| r.is_kept()).fold((0usize, 0usize), |(k, h), r| (k + 1, h + r.succeeded() as usize));
    if kept == 0 {
        return Err(Error::domain("conditional score undefined: no kept rounds"));
    }
    Ok(hits as f64 / kept as f64)
}

/// Header line of a persisted trace.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceHeader {
    format_version: u32,
    seed: u64,
    model_tag: String,
    n: usize,
}

/// An ordered, immutable sequence of rounds with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    rounds: Vec<RoundRecord>,
    seed: u64,
    model_tag: String,
}

impl Trace {
    /// Validates index contiguity (1..=N) and the success flag of every round.
    pub fn new(rounds: Vec<RoundRecord>, seed: u64, model_tag: impl Into<String>) -> Result<Self> {
        if rounds.len() > i32::MAX as usize {
            return Err(Error::domain("trace longer than 2^31-1 rounds"));
        }
        for (i, r) in rounds.iter().enumerate() {
            if r.t as usize != i + 1 {
                return Err(Error::domain(format!(
                    "round indices must be 1..N contiguous: position {} holds t={}",
                    i + 1,
                    r.t
                )));
            }
            r.check()?;
        }
        Ok(Trace { rounds, seed, model_tag: model_tag.into() })
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn kept_count(&self) -> usize {
        self.rounds.iter().filter(|r| r.is_kept()).count()
    }

    pub fn score_unconditional(&self) -> Result<f64> {
        score_unconditional(&self.rounds)
    }

    pub fn score_conditional(&self) -> Result<f64> {
        score_conditional(&self.rounds)
    }

    pub fn score(&self, mode: ScoringMode) -> Result<f64> {
        match mode {
            ScoringMode::Unconditional => self.score_unconditional(),
            ScoringMode::Conditional => self.score_conditional(),
        }
    }

    /// Returns a copy with replaced kept flags. Other fields are untouched.
    pub fn with_kept(&self, kept: &[bool]) -> Result<Trace> {
        if kept.len() != self.rounds.len() {
            return Err(Error::domain("kept mask length differs from trace length"));
        }
        let rounds = self.rounds.iter().zip(kept).map(|(r, &k)| RoundRecord { kept: k.into(), ..*r }).collect();
        Ok(Trace { rounds, seed: self.seed, model_tag: self.model_tag.clone() })
    }

    /// Writes a header line followed by one JSON object per round.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = TraceHeader {
            format_version: FORMAT_VERSION,
            seed: self.seed,
            model_tag: self.model_tag.clone(),
            n: self.rounds.len(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for r in &self.rounds {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads a JSONL trace. The header line is optional, so logs from
    /// external tooling that carry only round objects are accepted.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Trace> {
        let mut rounds = Vec::new();
        let mut seed = 0;
        let mut model_tag = String::from("external");
        let mut declared_n = None;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            if rounds.is_empty() && declared_n.is_none() && line.contains("\"format_version\"") {
                let h: TraceHeader =
                    serde_json::from_str(&line).map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?;
                if h.format_version != FORMAT_VERSION {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("unsupported format_version {}", h.format_version),
                    });
                }
                seed = h.seed;
                model_tag = h.model_tag;
                declared_n = Some(h.n);
                continue;
            }
            let rec: RoundRecord =
                serde_json::from_str(&line).map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?;
            rec.check().map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?;
            rounds.push(rec);
        }
        if let Some(n) = declared_n {
            if n != rounds.len() {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("header declares {n} rounds, found {}", rounds.len()),
                });
            }
        }
        Trace::new(rounds, seed, model_tag)
    }

    /// Reads a header-free CSV log with columns `t,a0,a1,y,m,b,x,kept`.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Trace> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
        let mut rounds = Vec::new();
        for (i, row) in reader.deserialize::<RoundRecord>().enumerate() {
            let rec = row.map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
            rec.check().map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
            rounds.push(rec);
        }
        Trace::new(rounds, 0, "external")
    }
}
