//! TOML run configuration with dotted `key=value` overrides.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rac_cert::harness::RunConfig;
use serde::Deserialize;
use toml::{Table, Value};

/// Command-line overrides applied after the file and the `--set` pairs.
#[derive(Clone, Debug, Default)]
pub struct FlagOverrides {
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub rounds: Option<usize>,
}

impl FlagOverrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(a) = self.alpha {
            cfg.confidence.alpha = a;
        }
        if let Some(b) = self.beta {
            cfg.confidence.beta = b;
        }
        if let Some(n) = self.rounds {
            cfg.n_rounds = n;
        }
    }
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a bare string so `--set scoring=conditional` needs no quoting.
fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

pub fn apply_set(root: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) =
        assignment.split_once('=').ok_or_else(|| anyhow!("override `{assignment}` is not of the form key=value"))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        bail!("override `{assignment}` has an empty key segment");
    }
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut table = root;
    for p in parents {
        let entry = table.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        table = entry.as_table_mut().ok_or_else(|| anyhow!("override `{key}`: `{p}` is not a section"))?;
    }
    table.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Loads `path` (or `fallback` when absent), applies `--set` pairs and flag
/// overrides, and validates. Unknown keys anywhere are errors.
pub fn load(path: Option<&Path>, fallback: &RunConfig, sets: &[String], flags: &FlagOverrides) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            if sets.is_empty() {
                toml::from_str::<RunConfig>(&text).with_context(|| format!("invalid config {}", p.display()))?
            } else {
                let mut root: Table =
                    toml::from_str(&text).with_context(|| format!("invalid config {}", p.display()))?;
                for s in sets {
                    apply_set(&mut root, s)?;
                }
                RunConfig::deserialize(Value::Table(root)).context("invalid config after overrides")?
            }
        }
        None => {
            let mut root = Table::try_from(fallback).context("encoding default config")?;
            for s in sets {
                apply_set(&mut root, s)?;
            }
            RunConfig::deserialize(Value::Table(root)).context("invalid config after overrides")?
        }
    };
    flags.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}
