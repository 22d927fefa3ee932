//! Run configuration files: one JSON document per run, tagged by `command`.

use std::path::{Path, PathBuf};

use hignn::dynamics::ForceModel;
use hignn::oracle::{Domain, SamplerConfig};
use hignn::training::TrainConfig;
use hignn::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GenData,
    Train,
    Predict,
    Simulate,
    Bench,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GenData => "gen-data",
            Command::Train => "train",
            Command::Predict => "predict",
            Command::Simulate => "simulate",
            Command::Bench => "bench",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Command::GenData, Command::Train, Command::Predict, Command::Simulate, Command::Bench]
            .into_iter()
            .find(|c| c.name() == s)
    }
}

fn config_error(reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name: "config", reason: reason.into() }
}

/// Reads the `command` field, then parses the whole document as `T`.
pub fn parse_config<T: DeserializeOwned>(text: &str, expected: Command) -> Result<T> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let found = value
        .get("command")
        .and_then(serde_json::Value::as_str)
        .ok_or_else(|| config_error("missing string field `command`"))?;
    match Command::parse(found) {
        Some(c) if c == expected => {}
        Some(c) => {
            return Err(config_error(format!(
                "config is for `{}` but `{}` was invoked",
                c.name(),
                expected.name()
            )))
        }
        None => return Err(config_error(format!("unknown command `{found}`"))),
    }
    Ok(serde_json::from_value(value)?)
}

pub fn load_config<T: DeserializeOwned>(path: &Path, expected: Command) -> Result<T> {
    parse_config(&std::fs::read_to_string(path)?, expected)
}

/// Fails unless the file's directory exists.
pub fn check_writable(path: &Path) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    if dir.is_dir() {
        Ok(())
    } else {
        Err(config_error(format!("output directory {} does not exist", dir.display())))
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: format!("must be positive, got {v}") })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenDataConfig {
    pub command: String,
    #[serde(default)]
    pub seed: u64,
    pub count: usize,
    #[serde(default)]
    pub sampler: SamplerConfig,
    pub output: PathBuf,
}

impl GenDataConfig {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParameter { name: "count", reason: "must be at least 1".into() });
        }
        self.sampler.validate()?;
        check_writable(&self.output)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCmdConfig {
    pub command: String,
    /// Seeds the split, shuffling and initialization; replaces `train.seed`.
    #[serde(default)]
    pub seed: u64,
    pub data: PathBuf,
    pub model_output: PathBuf,
    pub history_output: PathBuf,
    #[serde(default)]
    pub train: TrainConfig,
}

impl TrainCmdConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        check_writable(&self.model_output)?;
        check_writable(&self.history_output)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    pub command: String,
    #[serde(default)]
    pub seed: u64,
    pub model: PathBuf,
    /// CSV with header `x,y,z`, one particle per row.
    pub positions: PathBuf,
    /// CSV with header `x,y,z`, one particle per row.
    pub forces: PathBuf,
    pub output: PathBuf,
    #[serde(default = "unbounded")]
    pub domain: Domain,
    /// Overrides the face cutoff stored in the model.
    #[serde(default)]
    pub face_r_cut: Option<f64>,
}

impl PredictConfig {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if let Some(r) = self.face_r_cut {
            positive("face_r_cut", r)?;
        }
        check_writable(&self.output)
    }
}

fn unbounded() -> Domain {
    Domain::Unbounded
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    Surrogate {
        model: PathBuf,
        #[serde(default)]
        face_r_cut: Option<f64>,
    },
    Oracle { order: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// `n_side^3` spheres on a cubic lattice centered on `center`.
    CubicLattice {
        n_side: usize,
        spacing: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    /// Positions from a CSV with header `x,y,z`.
    File { path: PathBuf },
    /// `count` non-overlapping spheres placed uniformly in a cube of edge
    /// `extent` anchored at the origin, using the run seed.
    Random { count: usize, extent: f64, min_gap: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub command: String,
    #[serde(default)]
    pub seed: u64,
    pub backend: BackendConfig,
    pub force: ForceModel,
    pub initial: InitialConfig,
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "one_usize")]
    pub output_every: usize,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "one")]
    pub viscosity: f64,
    #[serde(default = "unbounded")]
    pub domain: Domain,
    pub output: PathBuf,
    /// Run metadata as JSON; defaults to the trajectory path with `.meta.json`.
    #[serde(default)]
    pub meta_output: Option<PathBuf>,
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        positive("dt", self.dt)?;
        positive("radius", self.radius)?;
        positive("viscosity", self.viscosity)?;
        self.domain.validate()?;
        if self.output_every == 0 {
            return Err(Error::InvalidParameter { name: "output_every", reason: "must be at least 1".into() });
        }
        if let Some(m) = &self.force.morse {
            m.validate()?;
        }
        match &self.backend {
            BackendConfig::Oracle { order } => {
                hignn::oracle::OracleTerms::for_order(*order)?;
            }
            BackendConfig::Surrogate { face_r_cut: Some(r), .. } => positive("face_r_cut", *r)?,
            BackendConfig::Surrogate { .. } => {}
        }
        match &self.initial {
            InitialConfig::CubicLattice { n_side, spacing, .. } => {
                if *n_side == 0 {
                    return Err(Error::InvalidParameter { name: "n_side", reason: "must be at least 1".into() });
                }
                positive("spacing", *spacing)?;
            }
            InitialConfig::Random { count, extent, min_gap } => {
                if *count == 0 {
                    return Err(Error::InvalidParameter { name: "count", reason: "must be at least 1".into() });
                }
                positive("extent", *extent)?;
                if !(min_gap.is_finite() && *min_gap >= 0.0) {
                    return Err(Error::InvalidParameter { name: "min_gap", reason: format!("must be non-negative, got {min_gap}") });
                }
            }
            InitialConfig::File { .. } => {}
        }
        check_writable(&self.output)?;
        if let Some(m) = &self.meta_output {
            check_writable(m)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeBench {
    pub ls: Vec<f64>,
    #[serde(default = "down")]
    pub direction: [f64; 3],
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainBench {
    pub ns: Vec<usize>,
    pub l: f64,
    #[serde(default = "down")]
    pub direction: [f64; 3],
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingBench {
    pub ns: Vec<usize>,
    #[serde(default = "three")]
    pub spacing: f64,
    pub output: PathBuf,
}

fn down() -> [f64; 3] {
    [0.0, 0.0, -1.0]
}

fn three() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub command: String,
    #[serde(default)]
    pub seed: u64,
    /// Surrogate model. Without one, only oracle variants are tabulated.
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "one")]
    pub viscosity: f64,
    #[serde(default)]
    pub lattice: Option<LatticeBench>,
    #[serde(default)]
    pub chain: Option<ChainBench>,
    #[serde(default)]
    pub timing: Option<TimingBench>,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        positive("radius", self.radius)?;
        positive("viscosity", self.viscosity)?;
        if let Some(l) = &self.lattice {
            for &x in &l.ls {
                if !(x > 2.0 * self.radius) {
                    return Err(Error::InvalidParameter {
                        name: "lattice.ls",
                        reason: format!("spacing {x} does not exceed the contact distance"),
                    });
                }
            }
            check_writable(&l.output)?;
        }
        if let Some(c) = &self.chain {
            if c.ns.contains(&0) {
                return Err(Error::InvalidParameter { name: "chain.ns", reason: "chains need at least one particle".into() });
            }
            if !(c.l >= 2.0 * self.radius) {
                return Err(Error::InvalidParameter { name: "chain.l", reason: format!("spacing {} overlaps", c.l) });
            }
            check_writable(&c.output)?;
        }
        if let Some(t) = &self.timing {
            if self.model.is_none() {
                return Err(Error::InvalidParameter { name: "timing", reason: "needs a surrogate model".into() });
            }
            if !(t.spacing >= 2.0 * self.radius) {
                return Err(Error::InvalidParameter { name: "timing.spacing", reason: format!("spacing {} overlaps", t.spacing) });
            }
            check_writable(&t.output)?;
        }
        Ok(())
    }
}
