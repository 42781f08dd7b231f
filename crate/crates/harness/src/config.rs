//! Experiment configuration files (TOML).
//!
//! Every table rejects unknown keys. Lengths may be given as numbers or as
//! multiples of pi (`"160pi"`, `"2*pi"`, `"pi"`).

use std::f64::consts::PI;
use std::path::Path;

use aflow_core::diagnostics::DiagnosticsOptions;
use aflow_core::integrator::{Model, Sampling, SolverConfig, TimeStepPolicy};
use aflow_core::models::{generate_initial_data, InitialDataSpec, InitialKind};
use aflow_core::spectral::{build_grid, helmholtz_apply, Grid, ModelParams, SpectralVectorField};
use serde::Deserialize;

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    Decay,
    Counterexample,
    AlphaSweep,
    TruncationStudy,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Decay => "decay",
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::AlphaSweep => "alpha_sweep",
            ExperimentKind::TruncationStudy => "truncation_study",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Length {
    Number(f64),
    Text(String),
}

impl Length {
    pub fn value(&self) -> Result<f64> {
        match self {
            Length::Number(x) => Ok(*x),
            Length::Text(s) => parse_pi_multiple(s)
                .ok_or_else(|| HarnessError::Config(format!("cannot read length `{s}` (use a number or e.g. \"160pi\")"))),
        }
    }
}

fn parse_pi_multiple(s: &str) -> Option<f64> {
    let t = s.trim().to_ascii_lowercase();
    let head = t.strip_suffix("pi")?.trim().trim_end_matches('*').trim();
    if head.is_empty() {
        return Some(PI);
    }
    head.parse::<f64>().ok().map(|c| c * PI)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub points_per_dim: usize,
    pub box_length: Length,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    #[default]
    Vche,
    Nse,
    Heat,
}

impl Equation {
    pub fn model(&self) -> Model {
        match self {
            Equation::Vche => Model::Vche,
            Equation::Nse => Model::Nse,
            Equation::Heat => Model::Heat,
        }
    }
}

fn default_dealias() -> f64 {
    aflow_core::spectral::params::DEFAULT_DEALIAS_FRACTION
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub nu: f64,
    pub alpha: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
    /// Only read by `simulate`.
    #[serde(default)]
    pub equation: Equation,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: Option<f64>,
    pub cfl: Option<f64>,
    pub max_dt: Option<f64>,
    pub t_end: f64,
    pub sample_every: Option<f64>,
    pub samples_per_decade: Option<f64>,
    pub checkpoint_every: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    TaylorGreen,
    LocalizedVortex,
    BandRandom,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// The profile is the filtered velocity `u`; `v = u - alpha^2 Lap u`.
    U,
    #[default]
    V,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub kind: ProfileKind,
    pub amplitude: f64,
    #[serde(default = "one")]
    pub epsilon: f64,
    pub band: Option<[f64; 2]>,
    #[serde(default)]
    pub seed: u64,
    pub vortex_radius: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: ProfileKind,
    pub amplitude: f64,
    #[serde(default = "one")]
    pub epsilon: f64,
    pub band: Option<[f64; 2]>,
    #[serde(default)]
    pub seed: u64,
    pub vortex_radius: Option<f64>,
    #[serde(default)]
    pub target: Target,
    pub perturbation: Option<ProfileSection>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub split_d: Option<f64>,
    #[serde(default = "yes")]
    pub time_derivative: bool,
    #[serde(default = "yes")]
    pub orthogonality: bool,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self { split_d: None, time_derivative: true, orthogonality: true }
    }
}

fn tol_leading() -> f64 {
    0.15
}
fn tol_higher() -> f64 {
    0.25
}
fn tol_baseline() -> f64 {
    0.1
}
fn min_samples() -> usize {
    8
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// Window start; default 10.
    pub t_a: Option<f64>,
    /// Window end; default and upper limit `0.1 / (nu k_min^2)`.
    pub t_b: Option<f64>,
    #[serde(default = "tol_leading")]
    pub tolerance_leading: f64,
    #[serde(default = "tol_higher")]
    pub tolerance_higher: f64,
    #[serde(default = "tol_baseline")]
    pub baseline_tolerance: f64,
    /// Norms judged for the verdict; default all.
    pub judged: Option<Vec<String>>,
    #[serde(default = "min_samples")]
    pub min_samples: usize,
    /// Also run the NSE from the same data and fit its slopes.
    #[serde(default)]
    pub nse_comparison: bool,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            t_a: None,
            t_b: None,
            tolerance_leading: tol_leading(),
            tolerance_higher: tol_higher(),
            baseline_tolerance: tol_baseline(),
            judged: None,
            min_samples: min_samples(),
            nse_comparison: false,
        }
    }
}

fn energy_fraction() -> f64 {
    0.9
}
fn norm_tolerance() -> f64 {
    0.02
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSection {
    pub epsilons: Vec<f64>,
    /// Horizon after which a run that has not halved its energy is stopped.
    pub t_max: f64,
    #[serde(default = "energy_fraction")]
    pub energy_fraction: f64,
    #[serde(default = "norm_tolerance")]
    pub norm_tolerance: f64,
}

fn min_order() -> f64 {
    0.5
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSweepSection {
    pub alphas: Vec<f64>,
    #[serde(default = "min_order")]
    pub min_order: f64,
}

fn energy_slack() -> f64 {
    1e-10
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    /// Effective resolutions `m`; each run keeps the modes a 2/3-rule grid
    /// of `m` points would keep.
    pub truncations: Vec<usize>,
    #[serde(default = "energy_slack")]
    pub energy_slack: f64,
}

fn default_out() -> String {
    "aflow-out".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub grid: GridSection,
    pub model: ModelSection,
    pub solver: SolverSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub fit: FitSection,
    pub counterexample: Option<CounterexampleSection>,
    pub alpha_sweep: Option<AlphaSweepSection>,
    pub truncation: Option<TruncationSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.solver;
        if s.dt.is_some() == s.cfl.is_some() {
            return Err(HarnessError::Config("[solver] needs exactly one of `dt` or `cfl`".into()));
        }
        if s.sample_every.is_some() == s.samples_per_decade.is_some() {
            return Err(HarnessError::Config(
                "[solver] needs exactly one of `sample_every` or `samples_per_decade`".into(),
            ));
        }
        let need = |present: bool, name: &str| {
            if present {
                Ok(())
            } else {
                Err(HarnessError::Config(format!(
                    "missing section [{name}] required by experiment `{}`",
                    self.experiment.name()
                )))
            }
        };
        match self.experiment {
            ExperimentKind::Counterexample => need(self.counterexample.is_some(), "counterexample")?,
            ExperimentKind::AlphaSweep => need(self.alpha_sweep.is_some(), "alpha_sweep")?,
            ExperimentKind::TruncationStudy => need(self.truncation.is_some(), "truncation")?,
            _ => {}
        }
        self.grid()?;
        self.params()?;
        self.solver_config()?.validate()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(build_grid(self.grid.dim, self.grid.points_per_dim, self.grid.box_length.value()?)?)
    }

    pub fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams::with_dealias(self.model.nu, self.model.alpha, self.model.dealias_fraction)?)
    }

    pub fn diagnostics_options(&self) -> DiagnosticsOptions {
        DiagnosticsOptions {
            split_d: self.diagnostics.split_d,
            time_derivative: self.diagnostics.time_derivative,
            orthogonality: self.diagnostics.orthogonality,
            ..Default::default()
        }
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let step = match (s.dt, s.cfl) {
            (Some(dt), None) => TimeStepPolicy::Fixed(dt),
            (None, Some(cfl)) => TimeStepPolicy::Adaptive { cfl_number: cfl, max_dt: s.max_dt },
            _ => return Err(HarnessError::Config("[solver] needs exactly one of `dt` or `cfl`".into())),
        };
        let sampling = match s.samples_per_decade {
            Some(per_decade) => Sampling::Geometric { per_decade },
            None => Sampling::Uniform,
        };
        Ok(SolverConfig {
            params: self.params()?,
            step,
            t_end: s.t_end,
            sample_every: s.sample_every.unwrap_or(f64::INFINITY),
            sampling,
            checkpoint_every: s.checkpoint_every,
            diagnostics: self.diagnostics_options(),
        })
    }

    /// Lowest-mode validity limit `0.1 / (nu k_min^2)`.
    pub fn validity_limit(&self) -> Result<f64> {
        let k = self.grid()?.min_nonzero_wavenumber();
        Ok(0.1 / (self.model.nu * k * k))
    }

    pub fn initial_spec(&self) -> InitialDataSpec {
        let i = &self.initial;
        profile_spec(i.kind, i.amplitude, i.epsilon, i.band, i.seed, i.vortex_radius)
    }

    /// Initial momentum `v0` for filter length `alpha`.
    pub fn initial_field(&self, grid: &Grid, alpha: f64) -> Result<SpectralVectorField> {
        self.initial_field_with(grid, alpha, &self.initial_spec())
    }

    /// As [`Self::initial_field`] with the main profile replaced by `spec`.
    pub fn initial_field_with(&self, grid: &Grid, alpha: f64, spec: &InitialDataSpec) -> Result<SpectralVectorField> {
        let mut profile = generate_initial_data(spec, grid)?;
        if let Some(p) = &self.initial.perturbation {
            let extra = generate_initial_data(
                &profile_spec(p.kind, p.amplitude, p.epsilon, p.band, p.seed, p.vortex_radius),
                grid,
            )?;
            profile = aflow_core::spectral::leray_project(&profile.add_scaled(1.0, &extra)?);
        }
        Ok(match self.initial.target {
            Target::U => helmholtz_apply(&profile, alpha),
            Target::V => profile,
        })
    }

    pub fn output_dir(&self) -> &str {
        &self.output.dir
    }
}

fn profile_spec(
    kind: ProfileKind,
    amplitude: f64,
    epsilon: f64,
    band: Option<[f64; 2]>,
    seed: u64,
    vortex_radius: Option<f64>,
) -> InitialDataSpec {
    let kind = match kind {
        ProfileKind::TaylorGreen => InitialKind::TaylorGreen,
        ProfileKind::LocalizedVortex => InitialKind::LocalizedVortex,
        ProfileKind::BandRandom => InitialKind::BandRandom,
    };
    let mut spec = InitialDataSpec::new(kind, amplitude);
    spec.epsilon = epsilon;
    if let Some([lo, hi]) = band {
        spec.band = (lo, hi);
    }
    spec.seed = seed;
    if let Some(r) = vortex_radius {
        spec.vortex_radius = r;
    }
    spec
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
experiment = "simulate"

[grid]
dim = 2
points_per_dim = 16
box_length = "2pi"

[model]
nu = 0.1
alpha = 0.5

[solver]
dt = 0.01
t_end = 0.1
sample_every = 0.05

[initial]
kind = "taylor_green"
amplitude = 1.0
target = "u"
"#;

    #[test]
    fn parses_reference_shape() {
        let c = ExperimentConfig::from_toml_str(BASE).unwrap();
        assert_eq!(c.experiment, ExperimentKind::Simulate);
        assert!((c.grid.box_length.value().unwrap() - 2.0 * PI).abs() < 1e-15);
        assert_eq!(c.model.dealias_fraction, 2.0 / 3.0);
        let g = c.grid().unwrap();
        let v = c.initial_field(&g, 0.5).unwrap();
        // v = (1 + 2 alpha^2) u for the unit cell
        assert!((v.norm_sq() - 1.5f64.powi(2) * 2.0 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn pi_multiples() {
        assert_eq!(parse_pi_multiple("pi"), Some(PI));
        assert_eq!(parse_pi_multiple("160pi"), Some(160.0 * PI));
        assert_eq!(parse_pi_multiple("2 * pi"), Some(2.0 * PI));
        assert_eq!(parse_pi_multiple("2x"), None);
    }

    #[test]
    fn missing_key_is_named() {
        let text = BASE.replace("nu = 0.1\n", "");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("nu"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = BASE.replace("alpha = 0.5", "alpha = 0.5\nbeta = 1.0");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("beta"), "{err}");
    }

    #[test]
    fn solver_choices_are_exclusive() {
        let text = BASE.replace("dt = 0.01", "dt = 0.01\ncfl = 0.5");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        let text = BASE.replace("experiment = \"simulate\"", "experiment = \"alpha_sweep\"");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("[alpha_sweep]"));
    }
}
