use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fibercap::bounds::{PowerGrid, RateMethod};
use fibercap::channel::{REFERENCE_ETA, REFERENCE_SIGMA_A2};
use fibercap::ChannelParams;

use crate::{CliError, Result};

/// Every setting is optional here; [`RawConfig::build`] fills defaults and
/// checks what each method needs.
///
/// Keys match the command-line flags without the leading dashes; `-` and
/// `_` are interchangeable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub eta: Option<f64>,
    pub sigma_a2: Option<f64>,
    pub memory: Option<usize>,
    pub method: Option<RateMethod>,
    pub pmin_dbm: Option<f64>,
    pub pmax_dbm: Option<f64>,
    pub pstep_dbm: Option<f64>,
    pub ns: Option<usize>,
    pub nq: Option<usize>,
    pub eps: Option<f64>,
    pub k: Option<usize>,
    pub budget: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub label: Option<String>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| CliError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl RawConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "eta" => self.eta = Some(parse(&key, value)?),
            "sigma_a2" => self.sigma_a2 = Some(parse(&key, value)?),
            "memory" => self.memory = Some(parse(&key, value)?),
            "method" => self.method = Some(parse(&key, value)?),
            "pmin_dbm" => self.pmin_dbm = Some(parse(&key, value)?),
            "pmax_dbm" => self.pmax_dbm = Some(parse(&key, value)?),
            "pstep_dbm" => self.pstep_dbm = Some(parse(&key, value)?),
            "ns" => self.ns = Some(parse(&key, value)?),
            "nq" => self.nq = Some(parse(&key, value)?),
            "eps" => self.eps = Some(parse(&key, value)?),
            "k" => self.k = Some(parse(&key, value)?),
            "budget" => self.budget = Some(parse(&key, value)?),
            "seed" => self.seed = Some(parse(&key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "label" => self.label = Some(value.to_string()),
            _ => return Err(CliError::UnknownKey(key)),
        }
        Ok(())
    }

    /// Parses `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::Syntax {
                line: i + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            raw.set(key, value).map_err(|e| CliError::Syntax {
                line: i + 1,
                reason: e.to_string(),
            })?;
        }
        Ok(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_str(&text)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merge(self, other: RawConfig) -> Self {
        Self {
            eta: other.eta.or(self.eta),
            sigma_a2: other.sigma_a2.or(self.sigma_a2),
            memory: other.memory.or(self.memory),
            method: other.method.or(self.method),
            pmin_dbm: other.pmin_dbm.or(self.pmin_dbm),
            pmax_dbm: other.pmax_dbm.or(self.pmax_dbm),
            pstep_dbm: other.pstep_dbm.or(self.pstep_dbm),
            ns: other.ns.or(self.ns),
            nq: other.nq.or(self.nq),
            eps: other.eps.or(self.eps),
            k: other.k.or(self.k),
            budget: other.budget.or(self.budget),
            seed: other.seed.or(self.seed),
            out: other.out.or(self.out),
            label: other.label.or(self.label),
        }
    }

    pub fn build(self) -> Result<RunConfig> {
        let chan = ChannelParams::new(
            self.eta.unwrap_or(REFERENCE_ETA),
            self.sigma_a2.unwrap_or(REFERENCE_SIGMA_A2),
            self.memory.unwrap_or(1),
        )?;
        let grid = GridSpec {
            min_dbm: self.pmin_dbm.unwrap_or(-40.0),
            max_dbm: self.pmax_dbm.unwrap_or(10.0),
            step_db: self.pstep_dbm.unwrap_or(0.5),
        };
        grid.power_grid()?;
        let method = match self.method.unwrap_or(RateMethod::ClosedForm) {
            RateMethod::ClosedForm => Method::ClosedForm,
            RateMethod::Gn => Method::Gn,
            RateMethod::MonteCarlo => {
                let need = |field| CliError::MissingField {
                    method: "mc".into(),
                    field,
                };
                Method::MonteCarlo {
                    ns: self.ns.ok_or_else(|| need("ns"))?,
                    nq: self.nq.ok_or_else(|| need("nq"))?,
                    eps: self.eps.ok_or_else(|| need("eps"))?,
                }
            }
            RateMethod::Mixture => {
                let need = |field| CliError::MissingField {
                    method: "cgm".into(),
                    field,
                };
                Method::Mixture {
                    k: self.k.ok_or_else(|| need("k"))?,
                    budget: self.budget.ok_or_else(|| need("budget"))?,
                }
            }
        };
        let label = self
            .label
            .unwrap_or_else(|| format!("{}-n{}", method.kind(), chan.memory()));
        Ok(RunConfig {
            chan,
            grid,
            method,
            seed: self.seed.unwrap_or(1),
            out: self.out,
            label,
        })
    }
}

/// Power sweep in dBm, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min_dbm: f64,
    pub max_dbm: f64,
    pub step_db: f64,
}

impl GridSpec {
    pub fn power_grid(&self) -> Result<PowerGrid> {
        Ok(PowerGrid::from_dbm_range(
            self.min_dbm,
            self.max_dbm,
            self.step_db,
        )?)
    }
}

/// Rate method together with the settings it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    ClosedForm,
    Gn,
    /// Sample count, quantizer points per axis and tail probability.
    MonteCarlo {
        ns: usize,
        nq: usize,
        eps: f64,
    },
    /// Mixture order and objective evaluations per grid point.
    Mixture {
        k: usize,
        budget: usize,
    },
}

impl Method {
    pub fn kind(&self) -> RateMethod {
        match self {
            Method::ClosedForm => RateMethod::ClosedForm,
            Method::Gn => RateMethod::Gn,
            Method::MonteCarlo { .. } => RateMethod::MonteCarlo,
            Method::Mixture { .. } => RateMethod::Mixture,
        }
    }
}

/// A validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub chan: ChannelParams,
    pub grid: GridSpec,
    pub method: Method,
    pub seed: u64,
    /// CSV destination; standard output when absent.
    pub out: Option<PathBuf>,
    /// Column name prefix in comparisons.
    pub label: String,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        RawConfig::from_file(path)?.build()
    }
}
