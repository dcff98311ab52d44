//! Experiment configuration: a JSON tree with lattice, initial-state, run,
//! sweep and output blocks, plus dotted `key=value` overrides.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use rlmix_core::lattice::{CouplingParams, DeltaRule, LatticeSpec};
use rlmix_core::mixing::{RunOptions, MAX_HORIZON_FACTOR};

use crate::error::CliError;

/// A real number that may be written as `0.25`, `"0.25pi"` or `"pi/4"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(pub f64);

impl Angle {
    pub fn parse(text: &str) -> Option<f64> {
        let t = text.trim().replace(' ', "").to_ascii_lowercase();
        if let Some(rest) = t.strip_prefix("pi/") {
            return rest.parse::<f64>().ok().filter(|d| *d != 0.0).map(|d| PI / d);
        }
        if let Some(head) = t.strip_suffix("pi") {
            let head = head.strip_suffix('*').unwrap_or(head);
            return match head {
                "" => Some(PI),
                "-" => Some(-PI),
                h => h.parse::<f64>().ok().map(|x| x * PI),
            };
        }
        t.parse().ok()
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::Number(n) => n.as_f64().map(Angle).ok_or_else(|| de::Error::custom("angle out of range")),
            Value::String(s) => Angle::parse(&s).map(Angle).ok_or_else(|| de::Error::custom(format!("bad angle {s:?}"))),
            other => Err(de::Error::custom(format!("expected a number or \"<x>pi\", got {other}"))),
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let turns = self.0 / PI;
        let rounded = (turns * 1e12).round() / 1e12;
        if (turns - rounded).abs() < 1e-15 && rounded != 0.0 {
            s.serialize_str(&format!("{rounded}pi"))
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyName {
    Dbs,
    Linear,
    Ring,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta {
    Balanced,
    Value(f64),
}

impl<'de> Deserialize<'de> for Delta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "balanced" => Ok(Delta::Balanced),
            Value::Number(n) => n.as_f64().map(Delta::Value).ok_or_else(|| de::Error::custom("delta out of range")),
            other => Err(de::Error::custom(format!("delta must be a number or \"balanced\", got {other}"))),
        }
    }
}

impl Serialize for Delta {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Delta::Balanced => s.serialize_str("balanced"),
            Delta::Value(v) => s.serialize_f64(*v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub topology: TopologyName,
    #[serde(default = "default_n_lossy")]
    pub n_lossy: usize,
    pub v: f64,
    #[serde(default = "default_phi")]
    pub phi: Angle,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_delta")]
    pub delta: Delta,
}

fn default_n_lossy() -> usize {
    1
}

fn default_phi() -> Angle {
    Angle(PI / 4.0)
}

fn default_gamma() -> f64 {
    1.0
}

fn default_delta() -> Delta {
    Delta::Balanced
}

impl LatticeConfig {
    pub fn spec(&self) -> Result<LatticeSpec, CliError> {
        let params = CouplingParams::new(self.v, self.phi.0, self.gamma)?;
        let spec = match self.topology {
            TopologyName::Dbs => LatticeSpec::dbs(params),
            TopologyName::Linear => LatticeSpec::linear(params, self.n_lossy)?,
            TopologyName::Ring => {
                let rule = match self.delta {
                    Delta::Balanced => DeltaRule::Balanced,
                    Delta::Value(d) => DeltaRule::Value(d),
                };
                LatticeSpec::ring(params, self.n_lossy, rule)?
            }
        };
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        match self.topology {
            TopologyName::Dbs => 3,
            TopologyName::Linear => 2 * self.n_lossy + 1,
            TopologyName::Ring => 2 * self.n_lossy,
        }
    }

    pub fn v_over_gamma(&self) -> f64 {
        self.v / self.gamma
    }
}

/// Lossless node named by position, resolved per lattice size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    First,
    Middle,
    Last,
    Opposite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LosslessRef {
    Index(usize),
    Named(Position),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEntry {
    pub node: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Exactly one field must be set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateConfig {
    /// 1-based node number in interleaved order (`alpha_1, beta_1, ...`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    /// `k` selects `alpha_k`; names resolve per size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lossless: Option<LosslessRef>,
    /// CSV with `node_index, re_amp, im_amp` rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dark: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<AmplitudeEntry>>,
}

impl InitialStateConfig {
    pub fn sources(&self) -> usize {
        [
            self.node.is_some(),
            self.lossless.is_some(),
            self.recipe_file.is_some(),
            self.dark == Some(true),
            self.amplitudes.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_extension")]
    pub max_extension: f64,
    /// Worker threads for sweeps; all cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
}

fn default_epsilon() -> f64 {
    1e-3
}

fn default_step() -> f64 {
    0.01
}

fn default_extension() -> f64 {
    MAX_HORIZON_FACTOR
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            t_max: None,
            step: default_step(),
            max_extension: default_extension(),
            parallelism: None,
        }
    }
}

impl RunConfig {
    pub fn options(&self) -> RunOptions {
        RunOptions { t_max: self.t_max, step: self.step, max_extension: self.max_extension }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    V,
    Phi,
    Gamma,
    NLossy,
    Delta,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::V => "v",
            Parameter::Phi => "phi",
            Parameter::Gamma => "gamma",
            Parameter::NLossy => "n_lossy",
            Parameter::Delta => "delta",
        }
    }

    /// Column header used in CSV output.
    pub fn column(self) -> &'static str {
        match self {
            Parameter::V => "v_over_gamma",
            other => other.name(),
        }
    }

    pub fn apply(self, lattice: &LatticeConfig, x: f64) -> Result<LatticeConfig, CliError> {
        let mut out = lattice.clone();
        match self {
            Parameter::V => out.v = x * lattice.gamma,
            Parameter::Phi => out.phi = Angle(x),
            Parameter::Gamma => out.gamma = x,
            Parameter::NLossy => {
                if x < 0.5 || (x - x.round()).abs() > 1e-9 {
                    return Err(CliError::config(format!("n_lossy must be a positive integer, got {x}")));
                }
                out.n_lossy = x.round() as usize;
            }
            Parameter::Delta => out.delta = Delta::Value(x),
        }
        Ok(out)
    }

    /// Human-readable value; angles as multiples of pi.
    pub fn pretty(self, x: f64) -> String {
        match self {
            Parameter::Phi => format!("{}pi", (x / PI * 1e6).round() / 1e6),
            _ => self.format(x),
        }
    }

    pub fn format(self, x: f64) -> String {
        match self {
            Parameter::NLossy => format!("{}", x.round() as i64),
            _ => format!("{x}"),
        }
    }
}

/// Values of one lattice field, as an explicit list or an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub parameter: Parameter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<Angle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<Angle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Angle>>,
}

impl Axis {
    pub fn list(parameter: Parameter, values: &[f64]) -> Self {
        Self { parameter, from: None, to: None, steps: None, values: Some(values.iter().map(|x| Angle(*x)).collect()) }
    }

    pub fn range(parameter: Parameter, from: f64, to: f64, steps: usize) -> Self {
        Self { parameter, from: Some(Angle(from)), to: Some(Angle(to)), steps: Some(steps), values: None }
    }

    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let name = self.parameter.name();
        match (&self.values, self.from, self.to, self.steps) {
            (Some(v), None, None, None) if !v.is_empty() => Ok(v.iter().map(|a| a.0).collect()),
            (Some(_), None, None, None) => Err(CliError::config(format!("sweep over {name} has an empty value list"))),
            (None, Some(a), Some(b), Some(n)) if n >= 1 => {
                if n == 1 {
                    return Ok(vec![a.0]);
                }
                if self.parameter == Parameter::NLossy {
                    let (lo, hi) = (a.0.round() as i64, b.0.round() as i64);
                    if hi < lo {
                        return Err(CliError::config(format!("sweep over {name} has an empty range")));
                    }
                    let mut sizes: Vec<f64> = (0..n)
                        .map(|i| (lo as f64 + (hi - lo) as f64 * i as f64 / (n - 1) as f64).round())
                        .collect();
                    sizes.dedup();
                    return Ok(sizes);
                }
                Ok((0..n).map(|i| a.0 + (b.0 - a.0) * i as f64 / (n - 1) as f64).collect())
            }
            _ => Err(CliError::config(format!(
                "sweep over {name} needs either a nonempty `values` list or `from`, `to` and `steps` >= 1"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeConfig {
    /// Explicit 1-based support nodes; otherwise `support_size` lossless nodes around the centre.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_size: Option<usize>,
    /// Explicit mode indices (ascending decay order); otherwise the `kill` slowest non-dark modes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kill_modes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kill: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub prefix: String,
    #[serde(default)]
    pub plot: bool,
    /// Sampling step (units of 1/gamma) for population and distance series.
    #[serde(default = "default_sample_step")]
    pub sample_step: f64,
}

fn default_sample_step() -> f64 {
    0.1
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, prefix: String::new(), plot: false, sample_step: default_sample_step() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub initial_state: InitialStateConfig,
    #[serde(default)]
    pub run: RunConfig,
    /// Inner axis: one output row (or block) per value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Axis>,
    /// Outer axis: repeats the whole sweep for each value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<RecipeConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn new(lattice: LatticeConfig) -> Self {
        Self {
            lattice,
            initial_state: InitialStateConfig::default(),
            run: RunConfig::default(),
            sweep: None,
            series: None,
            recipe: None,
            output: OutputConfig::default(),
        }
    }

    pub fn from_str(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_value(value).map_err(|e| CliError::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, applies `--set` overrides in order, then validates.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let mut value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        for item in overrides {
            apply_override(&mut value, item)?;
        }
        let mut cfg = Self::from_value(value)?;
        if let (Some(file), Some(base)) = (cfg.initial_state.recipe_file.as_mut(), path.parent()) {
            if file.is_relative() && !file.exists() {
                *file = base.join(&*file);
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let l = &self.lattice;
        if !(l.v.is_finite() && l.v >= 0.0 && l.gamma.is_finite() && l.gamma > 0.0) {
            return Err(CliError::config("lattice: v must be >= 0 and gamma > 0".into()));
        }
        match l.topology {
            TopologyName::Linear if l.n_lossy < 1 => return Err(CliError::config("lattice: n_lossy must be >= 1".into())),
            TopologyName::Ring if l.n_lossy < 2 => {
                return Err(CliError::config("lattice: a ring needs n_lossy >= 2".into()))
            }
            _ => {}
        }
        if self.initial_state.sources() > 1 {
            return Err(CliError::config("initial_state: give exactly one of node, lossless, recipe_file, dark, amplitudes".into()));
        }
        let r = &self.run;
        if !(r.epsilon > 0.0 && r.epsilon.is_finite()) {
            return Err(CliError::config("run: epsilon must be positive".into()));
        }
        if !(r.step > 0.0 && r.step.is_finite()) || r.t_max.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
            return Err(CliError::config("run: step and t_max must be positive".into()));
        }
        if r.max_extension < 1.0 || r.parallelism == Some(0) {
            return Err(CliError::config("run: max_extension must be >= 1 and parallelism >= 1".into()));
        }
        if !(self.output.sample_step > 0.0) {
            return Err(CliError::config("output: sample_step must be positive".into()));
        }
        for (label, axis) in [("sweep", &self.sweep), ("series", &self.series)] {
            if let Some(axis) = axis {
                axis.points().map_err(|e| CliError::config(format!("{label}: {}", e.message)))?;
                if axis.parameter == Parameter::NLossy && l.topology == TopologyName::Dbs {
                    return Err(CliError::config(format!("{label}: the DBS has a fixed size")));
                }
                if axis.parameter == Parameter::Delta && l.topology != TopologyName::Ring {
                    return Err(CliError::config(format!("{label}: delta only exists for rings")));
                }
            }
        }
        if let (Some(a), Some(b)) = (&self.sweep, &self.series) {
            if a.parameter == b.parameter {
                return Err(CliError::config("sweep and series must vary different parameters".into()));
            }
        }
        if let Some(rc) = &self.recipe {
            if rc.support.is_some() == rc.support_size.is_some() || rc.kill_modes.is_some() == rc.kill.is_some() {
                return Err(CliError::config(
                    "recipe: give exactly one of support/support_size and one of kill_modes/kill".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Sets a dotted path such as `lattice.v=2.5` or `sweep.values=[1,2]`.
/// The value is read as JSON when it parses, as a string otherwise.
pub fn apply_override(root: &mut Value, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override {item:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::config(format!("override {item:?} has an empty key")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        if !node.is_object() {
            return Err(CliError::config(format!("override {key}: {part} is not inside an object")));
        }
        node = node
            .as_object_mut()
            .expect("checked object")
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    match node.as_object_mut() {
        Some(map) => {
            map.insert(parts[parts.len() - 1].to_string(), value);
            Ok(())
        }
        None => Err(CliError::config(format!("override {key}: parent is not an object"))),
    }
}
