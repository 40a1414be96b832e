//! Scenarios, run configuration, output writers, the verification suite and
//! refinement studies.

pub mod converge;
pub mod fields;
pub mod io;
pub mod suite;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coords::Params;
use crate::error::{Error, Result};
use crate::evolution::{simulate, ReconstructionMode, RunConfig, Scheme, SimulationResult};
use crate::grid::{default_grading, make_vacuum_grid, Grid, State};
use crate::profile::EvenProfile;

pub use converge::{converge, ConvergeReport, ConvergeRow};
pub use suite::{picard_study, run_criterion, run_suite, CriterionResult, PicardStudy, SuiteReport};

/// How the initial state is put on the grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// Discrete data whose top hierarchy level matches the profile exactly; the
    /// hierarchy energy then converges under refinement.
    #[default]
    Prepared,
    /// Pointwise samples.
    Sampled,
}

/// Properties a `simulate` run is expected to show.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    /// The run certifies a positive time.
    PositiveTStar,
    /// The run reaches `t_final` without breaking the bounds.
    ReachesFinalTime,
    /// The zeroth energy drifts by at most `1e-8` (midpoint runs).
    ZerothConserved,
}

impl Property {
    /// The name used in configuration files.
    pub fn name(self) -> &'static str {
        match self {
            Property::PositiveTStar => "positive_t_star",
            Property::ReachesFinalTime => "reaches_final_time",
            Property::ZerothConserved => "zeroth_conserved",
        }
    }
}

fn default_amplitude() -> f64 {
    0.1
}
fn default_c0() -> f64 {
    1.25
}
fn default_n() -> usize {
    256
}
fn default_dt() -> f64 {
    1e-3
}
fn default_t_final() -> f64 {
    3.0
}
fn default_record_every() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub gamma: f64,
    /// Velocity amplitude of the built-in family; ignored when `profile` is given.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Explicit coefficients of `phi/xi` and `u` in powers of `xi^2`.
    #[serde(default)]
    pub profile: Option<EvenProfile>,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Grading exponent; `None` picks the default for `k`.
    #[serde(default)]
    pub grading: Option<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Runs stop earlier at the first step that breaks the certification bounds.
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub initial_data: InitialData,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub expected: Vec<Property>,
}

impl Scenario {
    fn builtin(name: &str, gamma: f64) -> Scenario {
        Scenario {
            name: name.to_string(),
            gamma,
            amplitude: default_amplitude(),
            profile: None,
            c0: default_c0(),
            n: default_n(),
            grading: None,
            dt: default_dt(),
            t_final: default_t_final(),
            scheme: Scheme::Midpoint,
            initial_data: InitialData::Prepared,
            record_every: default_record_every(),
            expected: vec![Property::PositiveTStar, Property::ZerothConserved],
        }
    }

    pub fn params(&self) -> Result<Params> {
        Params::normalized(self.gamma).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn profile(&self) -> EvenProfile {
        self.profile.clone().unwrap_or_else(|| EvenProfile::standard(self.amplitude))
    }

    pub fn grading(&self) -> Result<f64> {
        Ok(self.grading.unwrap_or(default_grading(self.params()?.k())))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(format!("scenario {}: {m}", self.name)));
        self.params()?;
        if self.n < 8 {
            return cfg(format!("n must be at least 8, got {}", self.n));
        }
        if let Some(p) = self.grading {
            if !(p >= 1.0 && p.is_finite()) {
                return cfg(format!("grading must be at least 1, got {p}"));
            }
        }
        if !(self.amplitude.is_finite()) {
            return cfg("amplitude must be finite".into());
        }
        self.profile().validate().map_err(|e| Error::Config(format!("scenario {}: {e}", self.name)))?;
        self.run_config()?.validate().map_err(|e| Error::Config(format!("scenario {}: {e}", self.name)))
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        Ok(RunConfig {
            params: self.params()?,
            n: self.n,
            grading: self.grading()?,
            dt: self.dt,
            t_final: self.t_final,
            scheme: self.scheme,
            c0: self.c0,
            adapt: true,
            record_every: self.record_every,
        })
    }

    /// A copy at another resolution.
    pub fn with_n(&self, n: usize) -> Scenario {
        Scenario { n, ..self.clone() }
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        make_vacuum_grid(self.n, self.grading()?, self.params()?.k())
    }

    pub fn initial_state(&self) -> Result<State> {
        let params = self.params()?;
        let grid = self.grid()?;
        let profile = self.profile();
        match self.initial_data {
            InitialData::Prepared => Ok(profile.prepare(&grid, params.k(), params.s())?.state),
            InitialData::Sampled => profile.sample(&grid),
        }
    }

    pub fn simulate(&self) -> Result<SimulationResult> {
        simulate(&self.run_config()?, &self.initial_state()?, 0.0)
    }

    /// Checks the `expected` list against a finished run: each property with the reason
    /// it fails, or `None` when it holds.
    pub fn check_expected(&self, run: &SimulationResult) -> Vec<(Property, Option<String>)> {
        let mut out = Vec::new();
        for &p in &self.expected {
            let bad = match p {
                Property::PositiveTStar => (run.t_star <= 0.0).then(|| format!("T* = {} is not positive", run.t_star)),
                Property::ReachesFinalTime => (!run.completed).then(|| {
                    format!("run stopped at {}: {}", run.t_star, run.violation.clone().unwrap_or_default())
                }),
                Property::ZerothConserved => (self.scheme == Scheme::Midpoint && run.zeroth_drift() > 1e-8)
                    .then(|| format!("zeroth energy drift {:e} exceeds 1e-8", run.zeroth_drift())),
            };
            out.push((p, bad));
        }
        out
    }
}

/// The four built-in scenarios: `gamma` in `{3, 5/3, 2, 4}`, i.e. `k` in `{1, 2, 3/2, 5/6}`.
pub fn builtin_scenarios() -> Vec<Scenario> {
    vec![
        Scenario::builtin("gamma3", 3.0),
        Scenario::builtin("gamma5_3", 5.0 / 3.0),
        Scenario::builtin("gamma2", 2.0),
        Scenario::builtin("gamma4", 4.0),
    ]
}

pub fn builtin(name: &str) -> Option<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Builtin(String),
    Inline(Scenario),
}

fn default_fraction() -> f64 {
    0.5
}
fn default_n_max() -> usize {
    12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSettings {
    /// Horizon as a fraction of the certified time of a direct run.
    #[serde(default = "default_fraction")]
    pub horizon_fraction: f64,
    /// Absolute horizon; overrides `horizon_fraction`.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub tol: f64,
    #[serde(default)]
    pub reconstruction: ReconstructionMode,
}

impl Default for PicardSettings {
    fn default() -> Self {
        PicardSettings {
            horizon_fraction: default_fraction(),
            horizon: None,
            n_max: default_n_max(),
            tol: 0.0,
            reconstruction: ReconstructionMode::default(),
        }
    }
}

fn default_ns() -> Vec<usize> {
    vec![64, 128, 256]
}
fn default_probes() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}
fn default_converge_t() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSettings {
    #[serde(default = "default_ns")]
    pub ns: Vec<usize>,
    /// Comparison time; clipped to the certified time of the coarsest run.
    #[serde(default = "default_converge_t")]
    pub t: f64,
    /// Interior points where the solutions are compared.
    #[serde(default = "default_probes")]
    pub probes: Vec<f64>,
    #[serde(default = "default_min_order")]
    pub min_order: f64,
}

fn default_min_order() -> f64 {
    1.9
}

impl Default for ConvergeSettings {
    fn default() -> Self {
        ConvergeSettings { ns: default_ns(), t: default_converge_t(), probes: default_probes(), min_order: default_min_order() }
    }
}

fn all_criteria() -> Vec<u8> {
    (1..=10).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySettings {
    #[serde(default = "all_criteria")]
    pub criteria: Vec<u8>,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings { criteria: all_criteria() }
    }
}

fn default_scenario_ref() -> ScenarioRef {
    ScenarioRef::Builtin("gamma3".into())
}

/// Top-level JSON configuration read by the CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_scenario_ref")]
    pub scenario: ScenarioRef,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub picard: PicardSettings,
    #[serde(default)]
    pub converge: ConvergeSettings,
    #[serde(default)]
    pub verify: VerifySettings,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            scenario: default_scenario_ref(),
            seed: None,
            picard: PicardSettings::default(),
            converge: ConvergeSettings::default(),
            verify: VerifySettings::default(),
        }
    }
}

pub const DEFAULT_SEED: u64 = 20240611;

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Config::from_json(&text)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        match &self.scenario {
            ScenarioRef::Inline(s) => Ok(s.clone()),
            ScenarioRef::Builtin(name) => builtin(name).ok_or_else(|| {
                let known: Vec<String> = builtin_scenarios().into_iter().map(|s| s.name).collect();
                Error::Config(format!("unknown scenario {name:?}; built-ins are {}", known.join(", ")))
            }),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario()?.validate()?;
        let p = &self.picard;
        if !(p.horizon_fraction > 0.0 && p.horizon_fraction <= 1.0) {
            return Err(Error::Config(format!("picard.horizon_fraction must lie in (0, 1], got {}", p.horizon_fraction)));
        }
        if let Some(h) = p.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Config(format!("picard.horizon must be positive, got {h}")));
            }
        }
        if !(p.tol >= 0.0) {
            return Err(Error::Config("picard.tol must be non-negative".into()));
        }
        let c = &self.converge;
        if c.ns.len() < 3 || c.ns.windows(2).any(|w| w[1] != 2 * w[0]) || c.ns[0] < 8 {
            return Err(Error::Config("converge.ns needs at least three doubling resolutions from n >= 8".into()));
        }
        if !(c.t > 0.0) || c.probes.is_empty() || c.probes.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
            return Err(Error::Config("converge.t must be positive and probes must lie in (0, 1)".into()));
        }
        if self.verify.criteria.iter().any(|c| !(1..=10).contains(c)) {
            return Err(Error::Config("verify.criteria must be numbers from 1 to 10".into()));
        }
        Ok(())
    }
}

/// Machine-readable record written by every CLI run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub verb: String,
    pub scenario: String,
    pub params: SummaryParams,
    pub certified_t_star: Option<f64>,
    pub max_energy_ratio: Option<f64>,
    pub phi_over_xi_envelope: Option<[f64; 2]>,
    pub verdicts: Vec<Verdict>,
    pub seed: u64,
    pub threads: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryParams {
    pub gamma: f64,
    pub k: f64,
    pub s: usize,
    pub entropy_const: f64,
    pub total_mass: f64,
    pub c0: f64,
    pub n: usize,
    pub grading: f64,
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub initial_data: InitialData,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl SummaryParams {
    pub fn of(s: &Scenario) -> Result<SummaryParams> {
        let p = s.params()?;
        Ok(SummaryParams {
            gamma: p.gamma,
            k: p.k(),
            s: p.s(),
            entropy_const: p.entropy_const,
            total_mass: p.total_mass,
            c0: s.c0,
            n: s.n,
            grading: s.grading()?,
            dt: s.dt,
            t_final: s.t_final,
            scheme: s.scheme,
            initial_data: s.initial_data,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_have_the_expected_k() {
        let ks: Vec<f64> = builtin_scenarios().iter().map(|s| s.params().unwrap().k()).collect();
        assert_eq!(ks, vec![1.0, 2.0, 1.5, (4.0 + 1.0) / 6.0]);
        assert_eq!(builtin("gamma3").unwrap().params().unwrap().s(), 4);
    }

    #[test]
    fn builtins_validate() {
        for s in builtin_scenarios() {
            s.validate().unwrap();
            let (lo, hi) = s.profile().psi_range();
            assert!(lo >= 1.0 / s.c0 && hi <= s.c0, "{}: [{lo}, {hi}]", s.name);
        }
    }

    #[test]
    fn config_defaults_and_rejections() {
        let c = Config::from_json("{}").unwrap();
        assert_eq!(c.scenario().unwrap().name, "gamma3");
        assert_eq!(c.seed(), DEFAULT_SEED);
        let c = Config::from_json(r#"{"scenario": {"name": "x", "gamma": 2.0, "n": 64}, "seed": 7}"#).unwrap();
        assert_eq!(c.scenario().unwrap().n, 64);
        assert_eq!(c.seed(), 7);
        for bad in [
            r#"{"scenario": "nope"}"#,
            r#"{"scenario": {"name": "x", "gamma": 0.5}}"#,
            r#"{"scenario": {"name": "x", "gamma": 2.0, "dt": -1}}"#,
            r#"{"unknown": 1}"#,
            r#"{"converge": {"ns": [64, 100, 200]}}"#,
            r#"{"verify": {"criteria": [11]}}"#,
            "not json",
        ] {
            assert!(matches!(Config::from_json(bad), Err(Error::Config(_))), "{bad}");
        }
    }
}
