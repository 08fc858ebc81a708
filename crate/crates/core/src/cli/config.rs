use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::{ControlBounds, CostWeights, FbsConfig, ScenarioMask};
use crate::econ::IncidenceConvention;
use crate::error::{Error, Result};
use crate::integrator::TimeGrid;
use crate::model::{ModelParams, ParamId, StateVec};
use crate::sensitivity::{default_r0_ranges, ParamRange, DEFAULT_SAMPLES};

/// Environment variable that overrides the output directory of the config
/// file (but not `--out-dir`).
pub const OUT_DIR_ENV: &str = "TB_CONTROL_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityConfig {
    pub samples: usize,
    /// Half-width of the default ranges relative to the baseline value.
    pub range_fraction: f64,
    /// Explicit ranges; when absent the default ranges are used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranges: Option<Vec<ParamRange>>,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            range_fraction: 0.5,
            ranges: None,
        }
    }
}

/// Everything a run needs. Populations are in persons; the model itself
/// integrates in units of `population_unit` persons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: ModelParams,
    pub initial_state: StateVec,
    pub population_unit: f64,
    pub n0: f64,
    /// Months.
    pub horizon: f64,
    pub steps: usize,
    pub bounds: ControlBounds,
    pub weights: CostWeights,
    pub fbs: FbsConfig,
    pub masks: Vec<ScenarioMask>,
    pub seed: u64,
    pub sensitivity: SensitivityConfig,
    pub incidence: IncidenceConvention,
    pub cet: f64,
    /// Calendar label of the first simulated year.
    pub start_year: i32,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcomes_file: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::reference(),
            initial_state: StateVec::new(7.557e8, 3.443e8, 2.31e7, 1.892e6, 1.6082e5),
            population_unit: 1e6,
            n0: 1.1e9,
            horizon: 60.0,
            steps: 1200,
            bounds: ControlBounds::default(),
            weights: CostWeights::default(),
            fbs: FbsConfig::default(),
            masks: ScenarioMask::all().to_vec(),
            seed: 0,
            sensitivity: SensitivityConfig::default(),
            incidence: IncidenceConvention::default(),
            cet: 1.190,
            start_year: 2021,
            out_dir: PathBuf::from("results"),
            format: OutputFormat::Csv,
            outcomes_file: None,
        }
    }
}

/// Values given on the command line; each replaces the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub horizon: Option<f64>,
    pub masks: Option<Vec<String>>,
    pub cet: Option<f64>,
    pub format: Option<OutputFormat>,
    pub outcomes_file: Option<PathBuf>,
}

/// Where a validation message should point: a line in the file, a flag, or
/// nothing.
struct Locator<'a> {
    text: Option<&'a str>,
    overridden: BTreeSet<&'static str>,
}

impl Locator<'_> {
    fn fail(&self, key: &'static str, msg: impl std::fmt::Display) -> Error {
        if self.overridden.contains(key) {
            return Error::Config(format!("--{}: {msg}", key.replace('_', "-")));
        }
        let line = self.text.and_then(|t| {
            let needle = format!("\"{key}\"");
            t.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
        });
        match line {
            Some(n) => Error::Config(format!("line {n}: {key}: {msg}")),
            None => Error::Config(format!("{key}: {msg}")),
        }
    }
}

impl RunConfig {
    /// Parse a JSON config. Syntax errors and unknown keys carry line numbers.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}: {e}", e.line())))?;
        cfg.validate_with(&Locator {
            text: Some(text),
            overridden: BTreeSet::new(),
        })?;
        Ok(cfg)
    }

    /// Read the config (defaults when `path` is `None`), apply the
    /// environment and flag overrides, then validate.
    pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<Self> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| {
                Error::Config(format!("cannot read {}: {e}", p.display()))
            })?),
            None => None,
        };
        let mut cfg = match &text {
            Some(t) => serde_json::from_str(t)
                .map_err(|e| Error::Config(format!("line {}: {e}", e.line())))?,
            None => RunConfig::default(),
        };
        let mut overridden = BTreeSet::new();
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                cfg.out_dir = PathBuf::from(dir);
            }
        }
        if let Some(v) = &ov.out_dir {
            cfg.out_dir = v.clone();
            overridden.insert("out_dir");
        }
        if let Some(v) = ov.seed {
            cfg.seed = v;
            overridden.insert("seed");
        }
        if let Some(v) = ov.steps {
            cfg.steps = v;
            overridden.insert("steps");
        }
        if let Some(v) = ov.horizon {
            cfg.horizon = v;
            overridden.insert("horizon");
        }
        if let Some(v) = ov.cet {
            cfg.cet = v;
            overridden.insert("cet");
        }
        if let Some(v) = ov.format {
            cfg.format = v;
        }
        if let Some(v) = &ov.outcomes_file {
            cfg.outcomes_file = Some(v.clone());
        }
        if let Some(list) = &ov.masks {
            cfg.masks = parse_masks(list).map_err(|e| Error::Config(format!("--masks: {e}")))?;
            overridden.insert("masks");
        }
        cfg.validate_with(&Locator {
            text: text.as_deref(),
            overridden,
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(&Locator {
            text: None,
            overridden: BTreeSet::new(),
        })
    }

    fn validate_with(&self, at: &Locator<'_>) -> Result<()> {
        if let Err(e) = self.params.validate() {
            // Point at the first parameter whose reset makes the set valid.
            let reference = ModelParams::reference();
            let culprit = ParamId::ALL
                .into_iter()
                .find(|id| self.params.with(*id, reference.get(*id)).validate().is_ok());
            return Err(match culprit {
                Some(id) => at.fail(id.key(), e),
                None => at.fail("params", e),
            });
        }
        if !self.initial_state.to_array().iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(at.fail("initial_state", "compartments must be finite and >= 0"));
        }
        if !(self.population_unit.is_finite() && self.population_unit > 0.0) {
            return Err(at.fail("population_unit", "must be finite and > 0"));
        }
        if !(self.n0.is_finite() && self.n0 > 0.0) {
            return Err(at.fail("n0", "must be finite and > 0"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(at.fail("horizon", "must be finite and > 0"));
        }
        if self.steps == 0 {
            return Err(at.fail("steps", "must be >= 1"));
        }
        self.bounds.validate().map_err(|e| at.fail("bounds", e))?;
        self.weights.validate().map_err(|e| at.fail("weights", e))?;
        self.fbs.validate().map_err(|e| at.fail("fbs", e))?;
        if self.masks.is_empty() {
            return Err(at.fail("masks", "at least one scenario is required"));
        }
        let distinct: BTreeSet<_> = self.masks.iter().collect();
        if distinct.len() != self.masks.len() {
            return Err(at.fail("masks", "scenarios must not repeat"));
        }
        let k = ParamId::R0_INPUTS.len();
        if self.sensitivity.samples < k + 2 {
            return Err(at.fail("samples", format!("must be >= {}", k + 2)));
        }
        if !(self.sensitivity.range_fraction > 0.0 && self.sensitivity.range_fraction < 1.0) {
            return Err(at.fail("range_fraction", "must lie in (0, 1)"));
        }
        if let Some(ranges) = &self.sensitivity.ranges {
            for r in ranges {
                r.validate().map_err(|e| at.fail("ranges", e))?;
            }
        }
        self.incidence.validate().map_err(|e| at.fail("incidence", e))?;
        if self.cet.is_nan() {
            return Err(at.fail("cet", "must be a number"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(0.0, self.horizon, self.steps)
    }

    /// Initial state in model units.
    pub fn model_initial_state(&self) -> StateVec {
        self.initial_state.scaled(1.0 / self.population_unit)
    }

    /// `N(0)` in model units.
    pub fn model_n0(&self) -> f64 {
        self.n0 / self.population_unit
    }

    pub fn prcc_ranges(&self) -> Result<Vec<ParamRange>> {
        match &self.sensitivity.ranges {
            Some(r) => Ok(r.clone()),
            None if self.sensitivity.range_fraction == 0.5 => default_r0_ranges(&self.params),
            None => ParamId::R0_INPUTS
                .iter()
                .map(|id| ParamRange::around(&self.params, *id, self.sensitivity.range_fraction))
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Parse mask names; `all` expands to the eight scenarios.
pub fn parse_masks(list: &[String]) -> Result<Vec<ScenarioMask>> {
    let mut out = Vec::new();
    for item in list {
        if item.trim().eq_ignore_ascii_case("all") {
            out.extend(ScenarioMask::all());
        } else {
            out.push(item.parse()?);
        }
    }
    Ok(out)
}
