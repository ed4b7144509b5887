//! TOML configuration: scene files and run configurations.
//!
//! A scene file holds the background, the contrast mode, the inclusions and
//! optionally the imaging grid:
//!
//! ```toml
//! contrast_mode = "permittivity"
//!
//! [background]
//! epsilon_b = 8.854e-12
//! mu_b = 1.257e-6
//! frequency = 2e9
//!
//! [[inhomogeneities]]
//! center = [0.07, 0.05]
//! radius = 0.01
//! epsilon_a = 4.427e-11
//! mu_a = 1.257e-6
//!
//! [grid]
//! x_min = -0.1
//! x_max = 0.1
//! y_min = -0.1
//! y_max = 0.1
//! nx = 256
//! ny = 256
//! ```
//!
//! A run configuration references a scene file (relative paths resolve
//! against the configuration's own directory) and lists everything a
//! command needs; see [`RunConfig`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::fresnel::FresnelColumns;
use super::{hash_bytes, read_to_string, write_bytes};
use crate::error::{Error, Result};
use crate::forward::{Generator, MatrixKind, NoiseSpec};
use crate::music::{RankPolicy, Side, TestFamily, DEFAULT_PEAK_CAP};
use crate::scene::{RoiGrid, Scene, DEFAULT_GRID_SIZE};
use crate::theory::Polarization;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    #[serde(flatten)]
    pub scene: Scene,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<RoiGrid>,
}

impl SceneFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let f: SceneFile =
            toml::from_str(text).map_err(|e| Error::Invalid(format!("scene file: {e}")))?;
        f.scene.validate()?;
        if let Some(g) = &f.grid {
            g.validate()?;
        }
        Ok(f)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Invalid(format!("scene serialization: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_bytes(path, self.to_toml()?.as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySpec {
    /// Array sizes for the full-view layout.
    pub n: Vec<usize>,
    /// Matrix kinds written by `simulate`; `bistatic` uses the restricted
    /// 72 x 36 (receivers x transmitters) aperture regardless of `n`.
    pub kinds: Vec<MatrixKind>,
}

impl Default for ArraySpec {
    fn default() -> Self {
        ArraySpec {
            n: vec![36],
            kinds: vec![MatrixKind::Full, MatrixKind::DiagonalFree],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Signal-to-noise ratio in dB; omit for noiseless data.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn spec(&self) -> NoiseSpec {
        NoiseSpec {
            snr_db: self.snr_db.unwrap_or(f64::INFINITY),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImagingOptions {
    /// Polarization direction angle (degrees) for dipole test vectors.
    pub xi_deg: Option<f64>,
    /// Take the maximum over a sweep of polarization directions instead.
    pub te_sweep: bool,
    pub side: Option<Side>,
    pub peak_cap: f64,
}

impl Default for ImagingOptions {
    fn default() -> Self {
        ImagingOptions {
            xi_deg: None,
            te_sweep: false,
            side: None,
            peak_cap: DEFAULT_PEAK_CAP,
        }
    }
}

impl ImagingOptions {
    /// Test family for a polarization. TE uses `xi = (1, 0)` unless an angle
    /// or the sweep is configured.
    pub fn family(&self, pol: Polarization) -> TestFamily {
        match pol {
            Polarization::Tm => TestFamily::Tm,
            Polarization::Te if self.te_sweep => TestFamily::TeSweep,
            Polarization::Te => TestFamily::te_angle(self.xi_deg.unwrap_or(0.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scene: PathBuf,
    pub frequencies: Vec<f64>,
    #[serde(default)]
    pub array: ArraySpec,
    #[serde(default = "default_generator")]
    pub generator: Generator,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub grid: Option<RoiGrid>,
    #[serde(default = "default_polarization")]
    pub polarization: Polarization,
    #[serde(default)]
    pub rank: RankPolicy,
    #[serde(default)]
    pub imaging: ImagingOptions,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub fresnel: FresnelColumns,
}

fn default_generator() -> Generator {
    Generator::Born
}

fn default_polarization() -> Polarization {
    Polarization::Tm
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A parsed run configuration with its scene loaded and paths resolved.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub scene_file: SceneFile,
    /// Hash over the configuration text and the referenced scene text.
    pub hash: String,
}

impl LoadedConfig {
    /// Grid from the run configuration, else the scene file, else a square
    /// grid of the default size covering the inclusions.
    pub fn grid(&self) -> Result<RoiGrid> {
        if let Some(g) = self.config.grid.or(self.scene_file.grid) {
            return Ok(g);
        }
        let reach = self
            .scene_file
            .scene
            .inhomogeneities
            .iter()
            .map(|d| d.center.abs().max() + d.radius)
            .fold(0.0, f64::max);
        RoiGrid::square(1.25 * reach.max(1e-3), DEFAULT_GRID_SIZE)
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Invalid(format!("run configuration: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequencies.is_empty() {
            return Err(Error::Invalid("at least one frequency is required".into()));
        }
        if let Some(f) = self.frequencies.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
            return Err(Error::Invalid(format!("frequency must be finite and > 0, got {f}")));
        }
        let needs_n = self
            .array
            .kinds
            .iter()
            .any(|k| *k != MatrixKind::Bistatic);
        if needs_n && self.array.n.is_empty() {
            return Err(Error::Invalid("array.n must list at least one size".into()));
        }
        if let Some(&n) = self.array.n.iter().find(|&&n| n < 3) {
            return Err(Error::Invalid(format!("array size must be at least 3, got {n}")));
        }
        if self.array.kinds.is_empty() {
            return Err(Error::Invalid("array.kinds must not be empty".into()));
        }
        if let Some(s) = self.noise.snr_db {
            if s.is_nan() {
                return Err(Error::Invalid("snr_db must be a number".into()));
            }
        }
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        if !(self.imaging.peak_cap.is_finite() && self.imaging.peak_cap > 0.0) {
            return Err(Error::Invalid("peak_cap must be finite and > 0".into()));
        }
        self.fresnel.validate()
    }

    /// Read, validate, and load the referenced scene.
    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let text = read_to_string(path)?;
        let mut config = Self::from_toml(&text)?;
        config.validate()?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        if config.scene.is_relative() {
            config.scene = base.join(&config.scene);
        }
        if config.output_dir.is_relative() {
            config.output_dir = base.join(&config.output_dir);
        }
        let scene_text = read_to_string(&config.scene)?;
        let scene_file = SceneFile::from_toml(&scene_text)?;
        let mut bytes = text.into_bytes();
        bytes.push(0);
        bytes.extend_from_slice(scene_text.as_bytes());
        Ok(LoadedConfig {
            config,
            scene_file,
            hash: hash_bytes(&bytes),
        })
    }
}
