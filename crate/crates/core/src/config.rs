//! Run configuration, read from TOML.
//!
//! ```toml
//! [grid]
//! x_min = -3.0
//! x_max = 3.0
//! n_cells = 512
//!
//! [time]
//! tau = 1e-3
//! horizon = 0.5
//!
//! [model]
//! preset = "decoupled_pme"
//!
//! [initial]
//! kind = "barenblatt"
//! t0 = 0.1
//! ```
//!
//! Every other block is optional. See the repository README for the full schema.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{DiagnosticsSettings, CHECK_NAMES};
use crate::exact::Barenblatt;
use crate::fv::FvConfig;
use crate::grid::{normalize, Grid1D, SpeciesPair};
use crate::jko::JkoConfig;
use crate::model::{presets, DiffusionLaw, DiffusionSpec, KernelForm, ModelSpec, PotentialKind, PotentialSpec};

/// Configuration errors, with the offending key and, when known, its line.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("schema error{}: {message}", fmt_line(*line))]
    Schema { line: Option<usize>, key: Option<String>, message: String },
    #[error("range error in `{key}`{}: {message}", fmt_line(*line))]
    Range { line: Option<usize>, key: String, message: String },
}

fn fmt_line(line: Option<usize>) -> String {
    line.map(|l| format!(" at line {l}")).unwrap_or_default()
}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub tau: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Zero,
    DecoupledPme,
    Example1,
    Example2,
    Example3,
    Counterexample,
    CoupledGaussian,
    SymmetricAttraction,
    Custom,
}

/// Numeric parameters of a preset; unset entries take the preset defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PresetParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r1_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "is_default_params")]
    pub params: PresetParams,
    /// Coefficient table of the diffusion law; required by `custom`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusion: Option<DiffusionSpec>,
    /// Kernel overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1: Option<KernelForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<KernelForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<KernelForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<KernelForm>,
}

fn is_default_params(p: &PresetParams) -> bool {
    *p == PresetParams::default()
}

/// One blob of initial mass: a parabolic bump or a Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blob {
    pub center: f64,
    /// Half-width of a bump, standard deviation of a Gaussian.
    pub width: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Cell averages of the Barenblatt profile at time `t0`.
    Barenblatt { t0: f64 },
    Bumps { species1: Vec<Blob>, species2: Vec<Blob> },
    Gaussians { species1: Vec<Blob>, species2: Vec<Blob> },
}

/// Inner-solver settings; the step size lives in `[time]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub inner_tol: f64,
    pub max_inner_iters: usize,
    pub n_q: usize,
    pub step_shrink: f64,
    pub step_grow: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let j = JkoConfig::default();
        Self {
            inner_tol: j.inner_tol,
            max_inner_iters: j.max_inner_iters,
            n_q: j.n_q,
            step_shrink: j.step_shrink,
            step_grow: j.step_grow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FvBlock {
    pub dt_fv: f64,
    pub limiter: bool,
    /// Defaults to `tau`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_interval: Option<f64>,
    /// Largest accepted L¹ gap between the two solvers in `compare`.
    pub agreement_tol: f64,
}

impl Default for FvBlock {
    fn default() -> Self {
        Self { dt_fv: 0.0, limiter: false, snapshot_interval: None, agreement_tol: 0.03 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub enabled: bool,
    /// Checks to keep in the report; empty keeps all.
    pub checks: Vec<String>,
    /// Fit the entropy constant on the built-in corpus instead of using `entropy_c`.
    pub calibrate_entropy: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holder_c: Option<f64>,
    pub holder_pairs: usize,
    pub s_max: f64,
    pub n_heat_steps: usize,
    pub weak_residuals: bool,
    /// Largest accepted L¹ error against the Barenblatt profile.
    pub barenblatt_tol: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        let d = DiagnosticsSettings::default();
        Self {
            enabled: true,
            checks: Vec::new(),
            calibrate_entropy: true,
            entropy_c: None,
            holder_c: None,
            holder_pairs: d.holder_pairs,
            s_max: d.s_max,
            n_heat_steps: d.n_heat_steps,
            weak_residuals: d.weak_residuals,
            barenblatt_tol: 0.05,
        }
    }
}

impl DiagnosticsConfig {
    /// Settings with the certified constants left at zero.
    pub fn settings(&self) -> DiagnosticsSettings {
        DiagnosticsSettings {
            c1: 0.0,
            c_exd2: 0.0,
            holder_pairs: self.holder_pairs,
            holder_c: self.holder_c,
            entropy_c: if self.calibrate_entropy { None } else { self.entropy_c },
            s_max: self.s_max,
            n_heat_steps: self.n_heat_steps,
            weak_residuals: self.weak_residuals,
        }
    }

    pub fn keeps(&self, check: &str) -> bool {
        self.checks.is_empty() || self.checks.iter().any(|c| c == check)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative paths are resolved against the output root.
    pub dir: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into(), formats: vec![Format::Csv, Format::Json] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub model: ModelConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub fv: FvBlock,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Line of the first `key = ...` assignment in `text`, 1-based.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(leaf).map_or(false, |rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> ConfigResult<RunConfig> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        ConfigError::Schema { line, key: None, message: e.message().to_string() }
    })?;
    config.validate().map_err(|e| match e {
        ConfigError::Range { key, message, .. } => ConfigError::Range { line: line_of(text, &key), key, message },
        ConfigError::Schema { key, message, .. } => {
            ConfigError::Schema { line: key.as_deref().and_then(|k| line_of(text, k)), key, message }
        }
    })?;
    Ok(config)
}

fn range(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Range { line: None, key: key.into(), message: message.into() }
}

fn schema(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema { line: None, key: Some(key.into()), message: message.into() }
}

/// Exponent and growth checks shared by presets and custom laws.
fn validate_diffusion(d: &DiffusionSpec) -> ConfigResult<()> {
    for (i, m, alpha) in [(1, d.m1, d.alpha1), (2, d.m2, d.alpha2)] {
        if !(m > 1.0) || !m.is_finite() {
            return Err(range(&format!("m{i}"), format!("m{i} = {m}, but assumption D1 requires m{i} > 1")));
        }
        if !(alpha >= m && alpha < 3.0 * m) {
            return Err(range(
                &format!("alpha{i}"),
                format!("alpha{i} = {alpha} must lie in [m{i}, 3 m{i}) = [{m}, {})", 3.0 * m),
            ));
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes to TOML")
    }

    pub fn validate(&self) -> ConfigResult<()> {
        let g = &self.grid;
        if !(g.x_min.is_finite() && g.x_max.is_finite() && g.x_min < g.x_max) {
            return Err(range("x_max", format!("need finite x_min < x_max, got [{}, {}]", g.x_min, g.x_max)));
        }
        if g.n_cells < 2 {
            return Err(range("n_cells", "at least 2 cells are required"));
        }
        if !(self.time.tau > 0.0) || !self.time.tau.is_finite() {
            return Err(range("tau", format!("tau = {} must be positive", self.time.tau)));
        }
        if !(self.time.horizon >= 0.0) || !self.time.horizon.is_finite() {
            return Err(range("horizon", format!("horizon = {} must be nonnegative", self.time.horizon)));
        }
        self.jko_config().validate().map_err(|e| range("solver", e.to_string()))?;
        if let Some(s) = self.fv.snapshot_interval {
            if !(s > 0.0) {
                return Err(range("snapshot_interval", "must be positive"));
            }
        }
        if !(self.fv.dt_fv >= 0.0) {
            return Err(range("dt_fv", "must be nonnegative"));
        }
        let d = &self.diagnostics;
        if let Some(c) = d.checks.iter().find(|c| !CHECK_NAMES.contains(&c.as_str())) {
            return Err(schema("checks", format!("unknown check `{c}`; known: {}", CHECK_NAMES.join(", "))));
        }
        if !d.calibrate_entropy && d.entropy_c.is_none() {
            return Err(schema("calibrate_entropy", "entropy_c is required when calibrate_entropy = false"));
        }
        if !(d.s_max > 0.0) || d.n_heat_steps == 0 {
            return Err(range("s_max", "s_max must be positive and n_heat_steps at least 1"));
        }
        let model = self.build_model()?;
        validate_diffusion(&model.diffusion)?;
        self.build_initial(&model)?;
        Ok(())
    }

    pub fn build_grid(&self) -> ConfigResult<Grid1D> {
        Grid1D::new(self.grid.x_min, self.grid.x_max, self.grid.n_cells).map_err(|e| range("n_cells", e.to_string()))
    }

    pub fn jko_config(&self) -> JkoConfig {
        let s = &self.solver;
        JkoConfig {
            tau: self.time.tau,
            inner_tol: s.inner_tol,
            max_inner_iters: s.max_inner_iters,
            n_q: s.n_q,
            step_shrink: s.step_shrink,
            step_grow: s.step_grow,
        }
    }

    pub fn fv_config(&self) -> FvConfig {
        FvConfig {
            dt_fv: self.fv.dt_fv,
            limiter: self.fv.limiter,
            snapshot_interval: self.fv.snapshot_interval.unwrap_or(self.time.tau),
        }
    }

    pub fn build_model(&self) -> ConfigResult<ModelSpec> {
        let m = &self.model;
        let p = &m.params;
        let allowed: &[&str] = match m.preset {
            Preset::Zero | Preset::Counterexample | Preset::Custom => &[],
            Preset::DecoupledPme | Preset::Example1 | Preset::CoupledGaussian | Preset::SymmetricAttraction => {
                &["a", "b", "m1", "m2"]
            }
            Preset::Example2 => &["a", "b", "c", "m1", "m2"],
            Preset::Example3 => &["a", "b", "m1", "r1_max"],
        };
        let given = [("a", p.a), ("b", p.b), ("c", p.c), ("m1", p.m1), ("m2", p.m2), ("r1_max", p.r1_max)];
        if let Some((name, _)) = given.iter().find(|(n, v)| v.is_some() && !allowed.contains(n)) {
            return Err(schema(name, format!("parameter `{name}` is not used by preset {:?}", m.preset)));
        }
        let get = |v: Option<f64>, default: f64| v.unwrap_or(default);
        let (m1, m2) = (get(p.m1, 2.0), get(p.m2, 2.0));
        let mut model = match m.preset {
            Preset::Zero => presets::zero_model(),
            Preset::Counterexample => presets::diffusion_only(presets::counterexample_diffusion()),
            Preset::DecoupledPme => {
                presets::diffusion_only(presets::decoupled_diffusion(get(p.a, 1.0), get(p.b, 1.0), m1, m2))
            }
            Preset::Example1 => {
                presets::diffusion_only(presets::example1_diffusion(get(p.a, 1.0), get(p.b, 0.5), m1, m2))
            }
            Preset::Example2 => presets::diffusion_only(presets::example2_diffusion(
                get(p.a, 1.0),
                get(p.b, 1.0),
                get(p.c, 0.5),
                m1,
                m2,
            )),
            Preset::Example3 => presets::diffusion_only(presets::example3_diffusion(
                get(p.a, 1.0),
                get(p.b, 1.0),
                get(p.m1, 1.5),
                get(p.r1_max, 10.0),
            )),
            Preset::CoupledGaussian => ModelSpec {
                diffusion: presets::example1_diffusion(get(p.a, 1.0), get(p.b, 0.5), m1, m2),
                ..presets::coupled_gaussian()
            },
            Preset::SymmetricAttraction => ModelSpec {
                diffusion: presets::decoupled_diffusion(get(p.a, 0.5), get(p.b, 0.5), m1, m2),
                ..presets::symmetric_attraction()
            },
            Preset::Custom => match &m.diffusion {
                Some(d) => presets::diffusion_only(d.clone()),
                None => return Err(schema("diffusion", "preset `custom` needs a [model.diffusion] table")),
            },
        };
        if let (Some(d), false) = (&m.diffusion, m.preset == Preset::Custom) {
            model.diffusion = d.clone();
        }
        let kernels = [
            (&m.h1, &mut model.h1, PotentialKind::SelfH1),
            (&m.h2, &mut model.h2, PotentialKind::SelfH2),
            (&m.k1, &mut model.k1, PotentialKind::CrossK1),
            (&m.k2, &mut model.k2, PotentialKind::CrossK2),
        ];
        for (form, slot, kind) in kernels {
            if let Some(form) = form {
                *slot = PotentialSpec::new(kind, *form);
            }
        }
        model.validate().map_err(|e| schema("model", e.to_string()))?;
        Ok(model)
    }

    pub fn build_initial(&self, model: &ModelSpec) -> ConfigResult<SpeciesPair> {
        let grid = self.build_grid()?;
        let pair = match &self.initial {
            InitialConfig::Barenblatt { t0 } => {
                if !(*t0 > 0.0) {
                    return Err(range("t0", "t0 must be positive"));
                }
                let [b1, b2] = barenblatt_pair(model).ok_or_else(|| {
                    schema("kind", "barenblatt initial data needs a decoupled power law without kernels")
                })?;
                let rho1 = b1.cell_averages(&grid, *t0).map_err(|e| range("t0", e.to_string()))?;
                let rho2 = b2.cell_averages(&grid, *t0).map_err(|e| range("t0", e.to_string()))?;
                SpeciesPair::new(rho1, rho2)
            }
            InitialConfig::Bumps { species1, species2 } | InitialConfig::Gaussians { species1, species2 } => {
                let gaussian = matches!(self.initial, InitialConfig::Gaussians { .. });
                let build = |blobs: &[Blob], key: &str| -> ConfigResult<_> {
                    if blobs.is_empty() {
                        return Err(range(key, "at least one blob is required"));
                    }
                    if let Some(b) = blobs.iter().find(|b| !(b.width > 0.0) || !(b.weight > 0.0)) {
                        return Err(range(key, format!("blob at {} needs positive width and weight", b.center)));
                    }
                    let raw = grid.sample(|x| {
                        blobs
                            .iter()
                            .map(|b| {
                                let r = (x - b.center) / b.width;
                                b.weight * if gaussian { (-0.5 * r * r).exp() } else { (1.0 - r * r).max(0.0) }
                            })
                            .sum()
                    });
                    normalize(&raw, &grid).map_err(|e| range(key, e.to_string()))
                };
                SpeciesPair::new(build(species1, "species1")?, build(species2, "species2")?)
            }
        };
        pair.map_err(|e| schema("initial", e.to_string()))
    }
}

/// Exact solutions of both species when the model is `aρ₁^{m₁} + bρ₂^{m₂}`
/// with no kernels.
pub fn barenblatt_pair(model: &ModelSpec) -> Option<[Barenblatt; 2]> {
    let kernels_zero = [&model.h1, &model.h2, &model.k1, &model.k2].iter().all(|k| k.is_zero());
    let d = &model.diffusion;
    match d.law {
        DiffusionLaw::PowerSum { a, b, c, .. } if kernels_zero && c == 0.0 && a > 0.0 && b > 0.0 => {
            Some([Barenblatt::for_power_law(a, d.m1).ok()?, Barenblatt::for_power_law(b, d.m2).ok()?])
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
x_min = -3.0
x_max = 3.0
n_cells = 64

[time]
tau = 1e-3
horizon = 0.01

[model]
preset = "decoupled_pme"

[initial]
kind = "barenblatt"
t0 = 0.1
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(c.output, OutputConfig::default());
        assert!(c.diagnostics.enabled && c.diagnostics.checks.is_empty());
        assert_eq!(c.fv_config().snapshot_interval, 1e-3);
        assert_eq!(c.jko_config().tau, 1e-3);
    }

    #[test]
    fn m_equal_one_is_a_range_error() {
        let text = MINIMAL.replace("preset = \"decoupled_pme\"", "preset = \"decoupled_pme\"\nparams = { m1 = 1.0 }");
        match parse_config(&text) {
            Err(ConfigError::Range { key, message, .. }) => {
                assert_eq!(key, "m1");
                assert!(message.contains("D1"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn alpha_at_three_m_is_a_range_error() {
        let text = MINIMAL.replace("preset = \"decoupled_pme\"", "preset = \"custom\"")
            + r#"
[model.diffusion]
m1 = 2.0
m2 = 2.0
alpha1 = 6.0
alpha2 = 2.0
law = { form = "power_sum", a = 1.0, b = 1.0, c = 0.0, k = 2.0 }
"#;
        let text = text.replace("kind = \"barenblatt\"\nt0 = 0.1", "kind = \"bumps\"\nspecies1 = [{ center = 0.0, width = 1.0 }]\nspecies2 = [{ center = 0.5, width = 1.0 }]");
        match parse_config(&text) {
            Err(ConfigError::Range { key, line, .. }) => {
                assert_eq!(key, "alpha1");
                assert!(line.is_some());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_preset_and_keys_are_schema_errors() {
        let bad = MINIMAL.replace("decoupled_pme", "no_such_preset");
        assert!(matches!(parse_config(&bad), Err(ConfigError::Schema { line: Some(_), .. })));
        let bad = MINIMAL.replace("n_cells = 64", "n_cells = 64\ncells = 3");
        assert!(matches!(parse_config(&bad), Err(ConfigError::Schema { .. })));
        let bad = MINIMAL.replace("preset = \"decoupled_pme\"", "preset = \"zero\"\nparams = { a = 2.0 }");
        assert!(matches!(parse_config(&bad), Err(ConfigError::Schema { .. })));
    }

    #[test]
    fn barenblatt_requires_a_pme_model() {
        let bad = MINIMAL.replace("decoupled_pme", "coupled_gaussian");
        assert!(matches!(parse_config(&bad), Err(ConfigError::Schema { .. })));
    }

    #[test]
    fn round_trip_through_toml() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.model.preset = Preset::CoupledGaussian;
        c.model.params.b = Some(0.25);
        c.model.k2 = Some(KernelForm::Gaussian { weight: 0.3, width: 0.9 });
        c.initial = InitialConfig::Gaussians {
            species1: vec![Blob { center: -0.5, width: 0.3, weight: 1.0 }],
            species2: vec![Blob { center: 0.1 + 0.2, width: 0.4, weight: 2.0 }],
        };
        c.diagnostics.checks = vec!["holder".into()];
        c.fv.snapshot_interval = Some(2e-3);
        let text = c.to_toml();
        assert_eq!(parse_config(&text).unwrap(), c);
    }

    #[test]
    fn custom_eta_polynomial_round_trips() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.model.preset = Preset::Custom;
        c.model.diffusion = Some(presets::example1_diffusion(1.0, 0.5, 2.0, 2.0));
        c.initial = InitialConfig::Bumps {
            species1: vec![Blob { center: 0.0, width: 1.0, weight: 1.0 }],
            species2: vec![Blob { center: 0.5, width: 0.5, weight: 1.0 }],
        };
        let back = parse_config(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.build_model().unwrap().diffusion, presets::example1_diffusion(1.0, 0.5, 2.0, 2.0));
    }
}
