//! Run configuration: flat dotted keys (`solver.dt = 0.01`) or TOML tables,
//! with unknown keys rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::absorption::Shape;
use crate::bogovskii::{Ball, CompactField, PlanarShape};
use crate::criterion::{check_registry, BoundForm, DEFAULT_DELTAS};
use crate::error::{Error, Result};
use crate::initial::{initial_registry, InitialParams};
use crate::scenario::scenario_registry;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seeds the initial data and the certificate ensemble.
    pub seed: u64,
    /// Control horizon; the scenario preset's value when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_star: Option<f64>,
    pub scenario: ScenarioConfig,
    pub grid: GridConfig,
    pub solver: SolverSection,
    pub initial: InitialSection,
    pub gcc: GccSection,
    pub verify: VerifySection,
    pub certificate: CertificateSection,
    pub bogovskii: BogovskiiSection,
    pub output: OutputSection,
}

/// Source of σ: a preset name, explicit shapes, or a raw matrix file.
/// At most one may be given; none means the `uniform` preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub shapes: Vec<Shape>,
    /// `n_x × n_x` matrix, CSV (`.csv`) or raw binary.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_file: Option<PathBuf>,
    pub smoothing_width: f64,
    pub amplitude: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            preset: None,
            shapes: Vec::new(),
            sigma_file: None,
            smoothing_width: 0.05,
            amplitude: 1.0,
        }
    }
}

/// Resolved form of [`ScenarioConfig`].
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    Preset(String),
    Shapes(Vec<Shape>),
    Raw(PathBuf),
}

impl ScenarioConfig {
    pub fn source(&self) -> Result<ScenarioSource> {
        let given = [self.preset.is_some(), !self.shapes.is_empty(), self.sigma_file.is_some()];
        if given.iter().filter(|&&g| g).count() > 1 {
            return Err(Error::Config(
                "give only one of scenario.preset, scenario.shapes, scenario.sigma_file".into(),
            ));
        }
        Ok(if let Some(p) = &self.sigma_file {
            ScenarioSource::Raw(p.clone())
        } else if !self.shapes.is_empty() {
            ScenarioSource::Shapes(self.shapes.clone())
        } else {
            ScenarioSource::Preset(self.preset.clone().unwrap_or_else(|| "uniform".into()))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_x: usize,
    pub n_theta: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_x: 64, n_theta: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    /// `min(0.01, 0.1 / max(1, ‖σ‖_∞))` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
    pub record_every: usize,
    pub zero_mass: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            dt: None,
            t_end: 10.0,
            record_every: 10,
            zero_mass: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub preset: String,
    pub amplitude: f64,
    pub mode: [i64; 2],
    pub center: [f64; 2],
    pub theta0: f64,
    pub width: f64,
    pub max_wavenumber: i64,
    pub max_angular_mode: i64,
}

impl Default for InitialSection {
    fn default() -> Self {
        let p = InitialParams::default();
        Self {
            preset: "random".into(),
            amplitude: p.amplitude,
            mode: p.mode,
            center: p.center,
            theta0: p.theta0,
            width: p.width,
            max_wavenumber: p.max_wavenumber,
            max_angular_mode: p.max_angular_mode,
        }
    }
}

impl InitialSection {
    pub fn params(&self, seed: u64) -> InitialParams {
        InitialParams {
            amplitude: self.amplitude,
            mode: self.mode,
            center: self.center,
            theta0: self.theta0,
            width: self.width,
            max_wavenumber: self.max_wavenumber,
            max_angular_mode: self.max_angular_mode,
            seed,
        }
    }
}

/// Overrides of the field-tied sampling defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GccSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angles: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_quad: Option<f64>,
    pub threshold: f64,
    /// χ is scaled so that its minimal ray integral is `1 + chi_margin`.
    pub chi_margin: f64,
    /// Time slabs of ψ written to `psi.bin` by `gcc` (0 disables the dump).
    pub psi_slabs: usize,
}

impl Default for GccSection {
    fn default() -> Self {
        Self {
            positions: None,
            angles: None,
            dt_quad: None,
            threshold: 1e-9,
            chi_margin: 1e-3,
            psi_slabs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub inequalities: Vec<String>,
    pub deltas: Vec<f64>,
    /// Directory written by `simulate`; its config is replayed and the
    /// reproduced series compared with the stored one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run_dir: Option<PathBuf>,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            inequalities: check_registry().names().into_iter().map(String::from).collect(),
            deltas: DEFAULT_DELTAS.to_vec(),
            run_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertificateSection {
    pub ensemble_size: usize,
    pub held_out: usize,
    pub power_iterations: usize,
    pub bump_width: f64,
    /// Held-out horizon; `5 T*` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    pub max_wavenumber: i64,
    pub max_angular_mode: i64,
    pub form: BoundForm,
}

impl Default for CertificateSection {
    fn default() -> Self {
        Self {
            ensemble_size: 16,
            held_out: 8,
            power_iterations: 12,
            bump_width: 0.1,
            horizon: None,
            max_wavenumber: 3,
            max_angular_mode: 3,
            form: BoundForm::Norm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatumKind {
    /// Random cosine products; estimates `C_D` over the ensemble.
    Random,
    Zero,
    /// Divergence of the configured compactly supported fields.
    Manufactured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BogovskiiSection {
    /// `disk`, `square`, `thin-rectangle` or `l-shape`; ignored when `shape` is set.
    pub domain: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<PlanarShape>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ball: Option<Ball>,
    pub resolution: usize,
    /// Second resolution for the stability ratio of `C_D`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_resolution: Option<usize>,
    pub datum: DatumKind,
    pub ensemble: usize,
    pub modes: usize,
    pub fields: Vec<CompactField>,
}

impl Default for BogovskiiSection {
    fn default() -> Self {
        Self {
            domain: "disk".into(),
            shape: None,
            ball: None,
            resolution: 64,
            compare_resolution: None,
            datum: DatumKind::Random,
            ensemble: 8,
            modes: 3,
            fields: vec![CompactField {
                center: [0.2, -0.1],
                radius: 0.5,
                direction: [1.0, 0.5],
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub gnuplot: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            gnuplot: false,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = config.scenario.sigma_file.as_mut() {
            rebase(p);
        }
        if let Some(p) = config.verify.run_dir.as_mut() {
            rebase(p);
        }
        Ok(config)
    }

    /// Checks that every referenced preset and check exists.
    pub fn validate(&self) -> Result<()> {
        if let ScenarioSource::Preset(name) = self.scenario.source()? {
            scenario_registry().get(&name)?;
        }
        initial_registry().get(&self.initial.preset)?;
        let checks = check_registry();
        for name in &self.verify.inequalities {
            checks.get(name)?;
        }
        if self.bogovskii.shape.is_some() != self.bogovskii.ball.is_some() {
            return Err(Error::Config("bogovskii.shape and bogovskii.ball go together".into()));
        }
        if let Some(t) = self.t_star {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::param("t_star", "must be positive"));
            }
        }
        Ok(())
    }

    /// Control horizon after applying the preset default.
    pub fn resolved_t_star(&self) -> Result<f64> {
        if let Some(t) = self.t_star {
            return Ok(t);
        }
        Ok(match self.scenario.source()? {
            ScenarioSource::Preset(name) => scenario_registry().get(&name)?.t_star(),
            _ => 2.0,
        })
    }

    /// The config as TOML, for echoing into reports.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }
}
