//! Physical configuration: background medium, small inclusions, the
//! transmitter/receiver direction sets with their measurement mask, and the
//! imaging region.

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// Vacuum permittivity used in the anechoic-chamber configuration (F/m).
pub const VACUUM_PERMITTIVITY: f64 = 8.854e-12;
/// Vacuum permeability used in the anechoic-chamber configuration (H/m).
pub const VACUUM_PERMEABILITY: f64 = 1.257e-6;

/// Homogeneous background medium at a single ordinary frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Background {
    /// Permittivity (F/m).
    pub epsilon_b: f64,
    /// Permeability (H/m).
    pub mu_b: f64,
    /// Ordinary frequency f (Hz).
    pub frequency: f64,
}

impl Background {
    pub fn new(epsilon_b: f64, mu_b: f64, frequency: f64) -> Result<Self> {
        let bg = Background {
            epsilon_b,
            mu_b,
            frequency,
        };
        bg.validate()?;
        Ok(bg)
    }

    pub fn vacuum(frequency: f64) -> Result<Self> {
        Self::new(VACUUM_PERMITTIVITY, VACUUM_PERMEABILITY, frequency)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("epsilon_b", self.epsilon_b),
            ("mu_b", self.mu_b),
            ("frequency", self.frequency),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Background wavenumber `k_b = 2 pi f sqrt(eps_b mu_b)` in rad/m.
    pub fn wavenumber(&self) -> f64 {
        wavenumber(self)
    }

    pub fn with_frequency(&self, frequency: f64) -> Result<Self> {
        Self::new(self.epsilon_b, self.mu_b, frequency)
    }
}

pub fn wavenumber(background: &Background) -> f64 {
    2.0 * PI * background.frequency * (background.epsilon_b * background.mu_b).sqrt()
}

/// A small disk-shaped inclusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inhomogeneity {
    /// Center (m).
    pub center: Vec2,
    /// Radius (m).
    pub radius: f64,
    pub epsilon_a: f64,
    pub mu_a: f64,
}

impl Inhomogeneity {
    pub fn new(center: Vec2, radius: f64, epsilon_a: f64, mu_a: f64) -> Result<Self> {
        let inc = Inhomogeneity {
            center,
            radius,
            epsilon_a,
            mu_a,
        };
        inc.validate()?;
        Ok(inc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center.x.is_finite() && self.center.y.is_finite()) {
            return Err(Error::Invalid("inclusion center must be finite".into()));
        }
        for (name, v) in [
            ("radius", self.radius),
            ("epsilon_a", self.epsilon_a),
            ("mu_a", self.mu_a),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Which material parameter differs from the background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContrastMode {
    /// Permittivity contrast, `mu_a == mu_b` (TM polarization).
    Permittivity,
    /// Permeability contrast, `eps_a == eps_b` (TE polarization).
    Permeability,
}

impl std::fmt::Display for ContrastMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ContrastMode::Permittivity => "permittivity",
            ContrastMode::Permeability => "permeability",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub background: Background,
    pub contrast_mode: ContrastMode,
    pub inhomogeneities: Vec<Inhomogeneity>,
}

impl Scene {
    pub fn new(
        background: Background,
        contrast_mode: ContrastMode,
        inhomogeneities: Vec<Inhomogeneity>,
    ) -> Result<Self> {
        let scene = Scene {
            background,
            contrast_mode,
            inhomogeneities,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        self.background.validate()?;
        let k = self.background.wavenumber();
        for (i, inc) in self.inhomogeneities.iter().enumerate() {
            inc.validate()?;
            match self.contrast_mode {
                ContrastMode::Permittivity if inc.mu_a != self.background.mu_b => {
                    return Err(Error::Invalid(format!(
                        "inclusion {i}: permittivity mode requires mu_a == mu_b"
                    )));
                }
                ContrastMode::Permeability if inc.epsilon_a != self.background.epsilon_b => {
                    return Err(Error::Invalid(format!(
                        "inclusion {i}: permeability mode requires epsilon_a == epsilon_b"
                    )));
                }
                _ => {}
            }
            if k * inc.radius > 0.5 {
                log::warn!(
                    "inclusion {i}: k_b * radius = {:.3} exceeds 0.5, small-inclusion model is inaccurate",
                    k * inc.radius
                );
            }
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        self.background.wavenumber()
    }

    pub fn centers(&self) -> Vec<Vec2> {
        self.inhomogeneities.iter().map(|i| i.center).collect()
    }

    /// Same inclusions at a different frequency.
    pub fn at_frequency(&self, frequency: f64) -> Result<Self> {
        Scene::new(
            self.background.with_frequency(frequency)?,
            self.contrast_mode,
            self.inhomogeneities.clone(),
        )
    }
}

/// Dense boolean matrix, rows = receivers, columns = transmitters.
/// `true` marks a measured entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn full(rows: usize, cols: usize) -> Self {
        Mask {
            rows,
            cols,
            data: vec![true; rows * cols],
        }
    }

    /// Square mask with only the diagonal unmeasured.
    pub fn diagonal_free(n: usize) -> Self {
        Self::from_fn(n, n, |m, t| m != t)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mask { rows, cols, data }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.cols + col] = value;
    }

    pub fn count_measured(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn count_missing(&self) -> usize {
        self.data.len() - self.count_measured()
    }

    pub fn and(&self, other: &Mask) -> Result<Mask> {
        if self.shape() != other.shape() {
            return Err(Error::Shape {
                expected: self.shape(),
                got: other.shape(),
            });
        }
        Ok(Mask {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a && *b).collect(),
        })
    }

    pub fn all(&self) -> bool {
        self.data.iter().all(|&b| b)
    }

    pub fn is_diagonal_free(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| (0..self.cols).all(|c| self.get(r, c) == (r != c)))
    }
}

/// Transmit (incident) and receive (observation) directions together with
/// the measurement mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    pub incident: Vec<Vec2>,
    pub observation: Vec<Vec2>,
    pub mask: Mask,
}

impl ArrayConfig {
    pub fn new(incident: Vec<Vec2>, observation: Vec<Vec2>, mask: Mask) -> Result<Self> {
        let array = ArrayConfig {
            incident,
            observation,
            mask,
        };
        array.validate()?;
        Ok(array)
    }

    /// Full-view configuration with `N` uniform incident directions and the
    /// backscattering observation set `obs_n = -inc_n`.
    pub fn symmetric(n: usize) -> Result<Self> {
        let incident = uniform_directions(n)?;
        let observation = incident.iter().map(|d| -d).collect();
        Self::new(incident, observation, Mask::full(n, n))
    }

    /// Restricted-aperture bistatic layout: 36 transmitters at 10 degree
    /// steps, 72 receivers at 5 degree steps, and for each transmitter only
    /// receivers between 60 and 300 degrees away from it are measured.
    pub fn fresnel() -> Self {
        let tx_deg: Vec<f64> = (0..FRESNEL_TX).map(|i| 10.0 * i as f64).collect();
        let rx_deg: Vec<f64> = (0..FRESNEL_RX).map(|i| 5.0 * i as f64).collect();
        let incident = tx_deg.iter().map(|&t| -unit_from_degrees(t)).collect();
        let observation = rx_deg.iter().map(|&r| unit_from_degrees(r)).collect();
        let mask = fresnel_mask();
        ArrayConfig {
            incident,
            observation,
            mask,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.incident.is_empty() || self.observation.is_empty() {
            return Err(Error::Invalid("direction sets must be nonempty".into()));
        }
        for d in self.incident.iter().chain(&self.observation) {
            if ((d.norm()) - 1.0).abs() > 1e-12 {
                return Err(Error::Invalid(format!(
                    "direction ({}, {}) is not a unit vector",
                    d.x, d.y
                )));
            }
        }
        let shape = (self.observation.len(), self.incident.len());
        if self.mask.shape() != shape {
            return Err(Error::Shape {
                expected: shape,
                got: self.mask.shape(),
            });
        }
        Ok(())
    }

    pub fn n_transmitters(&self) -> usize {
        self.incident.len()
    }

    pub fn n_receivers(&self) -> usize {
        self.observation.len()
    }

    pub fn with_mask(&self, mask: Mask) -> Result<Self> {
        Self::new(self.incident.clone(), self.observation.clone(), mask)
    }
}

pub const FRESNEL_TX: usize = 36;
pub const FRESNEL_RX: usize = 72;

/// Receiver `r` (5 degree index) is measured for transmitter `t` (10 degree
/// index) iff its angular offset from the transmitter lies in [60, 300]
/// degrees.
pub fn fresnel_mask() -> Mask {
    Mask::from_fn(FRESNEL_RX, FRESNEL_TX, |r, t| {
        let offset = (5 * r + 360 - 10 * t) % 360;
        (60..=300).contains(&offset)
    })
}

pub fn unit_from_degrees(deg: f64) -> Vec2 {
    let r = deg.to_radians();
    Vec2::new(r.cos(), r.sin())
}

/// `theta_n = (cos(2 pi n / N), sin(2 pi n / N))` for `n = 1..=N`.
pub fn uniform_directions(n: usize) -> Result<Vec<Vec2>> {
    if n < 3 {
        return Err(Error::Invalid(format!("need at least 3 directions, got {n}")));
    }
    Ok((1..=n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            Vec2::new(a.cos(), a.sin())
        })
        .collect())
}

/// Rectangular region of interest sampled at pixel centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

/// Grid resolution used when none is configured.
pub const DEFAULT_GRID_SIZE: usize = 256;

impl RoiGrid {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = RoiGrid {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::Invalid(format!(
                "degenerate grid bounds x [{}, {}], y [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::Invalid(format!(
                "grid needs at least 2x2 pixels, got {}x{}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    /// Center of pixel `(i, j)`, `i` along x.
    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.x_min + (i as f64 + 0.5) * self.dx(),
            self.y_min + (j as f64 + 0.5) * self.dy(),
        )
    }

    /// Row-major linear index with x fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn point_at(&self, idx: usize) -> Vec2 {
        self.point(idx % self.nx, idx / self.nx)
    }

    /// Pixel whose center is nearest to `p` (clamped to the grid).
    pub fn nearest(&self, p: &Vec2) -> (usize, usize) {
        let fi = ((p.x - self.x_min) / self.dx() - 0.5).round();
        let fj = ((p.y - self.y_min) / self.dy() - 0.5).round();
        let i = fi.clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = fj.clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    /// Square ROI `(-half, half)^2`.
    pub fn square(half: f64, n: usize) -> Result<Self> {
        Self::new(-half, half, -half, half, n, n)
    }
}

/// The three-inclusion anechoic-chamber benchmark.
#[derive(Debug, Clone)]
pub struct PaperSetup {
    pub scene: Scene,
    pub array: ArrayConfig,
    pub grid: RoiGrid,
}

pub const PAPER_CENTERS: [(f64, f64); 3] = [(0.07, 0.05), (-0.07, 0.00), (0.02, -0.05)];
pub const PAPER_RADIUS: f64 = 0.01;
pub const PAPER_CONTRAST: f64 = 5.0;
pub const PAPER_ROI_HALF_WIDTH: f64 = 0.1;

/// Vacuum background, ROI `(-0.1, 0.1)^2`, three disks of radius 0.01 m
/// with a 5x contrast in the active parameter, observed by `n` symmetric
/// full-view directions.
pub fn paper_scene(mode: ContrastMode, frequency: f64, n: usize) -> Result<PaperSetup> {
    let background = Background::vacuum(frequency)?;
    let (eps, mu) = match mode {
        ContrastMode::Permittivity => (PAPER_CONTRAST * background.epsilon_b, background.mu_b),
        ContrastMode::Permeability => (background.epsilon_b, PAPER_CONTRAST * background.mu_b),
    };
    let inhomogeneities = PAPER_CENTERS
        .iter()
        .map(|&(x, y)| Inhomogeneity::new(Vec2::new(x, y), PAPER_RADIUS, eps, mu))
        .collect::<Result<Vec<_>>>()?;
    Ok(PaperSetup {
        scene: Scene::new(background, mode, inhomogeneities)?,
        array: ArrayConfig::symmetric(n)?,
        grid: RoiGrid::square(PAPER_ROI_HALF_WIDTH, DEFAULT_GRID_SIZE)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_directions() {
        let d = uniform_directions(4).unwrap();
        let want = [(0.0, 1.0), (-1.0, 0.0), (0.0, -1.0), (1.0, 0.0)];
        for (v, w) in d.iter().zip(want) {
            assert!((v.x - w.0).abs() < 1e-15 && (v.y - w.1).abs() < 1e-15);
        }
    }

    #[test]
    fn first_direction_is_not_zero_angle() {
        let d = uniform_directions(12).unwrap();
        assert!((d[0].y.atan2(d[0].x) - 2.0 * PI / 12.0).abs() < 1e-15);
        for w in d.windows(2) {
            let gap = w[0].dot(&w[1]).clamp(-1.0, 1.0).acos();
            assert!((gap.to_degrees() - 30.0).abs() < 1e-9);
        }
    }

    #[test]
    fn too_few_directions() {
        assert!(uniform_directions(2).is_err());
        assert!(ArrayConfig::symmetric(2).is_err());
    }

    #[test]
    fn wavenumber_values() {
        let bg1 = Background::new(8.854e-12, 1.257e-6, 1e9).unwrap();
        let bg2 = bg1.with_frequency(2e9).unwrap();
        let bg4 = bg1.with_frequency(4e9).unwrap();
        assert!((bg1.wavenumber() - 20.96).abs() < 0.01);
        assert_eq!(bg2.wavenumber(), 2.0 * bg1.wavenumber());
        assert!((bg4.wavenumber() - 83.845).abs() < 0.001);
    }

    #[test]
    fn paper_scene_contrasts() {
        let p = paper_scene(ContrastMode::Permittivity, 1e9, 12).unwrap();
        let bg = p.scene.background;
        for inc in &p.scene.inhomogeneities {
            assert_eq!(inc.epsilon_a, 5.0 * bg.epsilon_b);
            assert_eq!(inc.mu_a, bg.mu_b);
            assert_eq!(inc.radius, 0.01);
        }
        assert_eq!(p.scene.inhomogeneities[0].center, Vec2::new(0.07, 0.05));
        let p = paper_scene(ContrastMode::Permeability, 2e9, 12).unwrap();
        let bg = p.scene.background;
        for inc in &p.scene.inhomogeneities {
            assert_eq!(inc.mu_a, 5.0 * bg.mu_b);
            assert_eq!(inc.epsilon_a, bg.epsilon_b);
        }
        assert_eq!(p.grid.x_min, -0.1);
        assert_eq!(p.grid.y_max, 0.1);
    }

    #[test]
    fn contrast_mode_mismatch_rejected() {
        let bg = Background::vacuum(1e9).unwrap();
        let inc = Inhomogeneity::new(Vec2::zeros(), 0.01, bg.epsilon_b, 2.0 * bg.mu_b).unwrap();
        assert!(Scene::new(bg, ContrastMode::Permittivity, vec![inc]).is_err());
        assert!(Scene::new(bg, ContrastMode::Permeability, vec![inc]).is_ok());
    }

    #[test]
    fn fresnel_mask_counts() {
        let m = fresnel_mask();
        assert_eq!(m.shape(), (72, 36));
        assert_eq!(m.count_missing(), 36 * 23);
        for t in 0..36 {
            let measured = (0..72).filter(|&r| m.get(r, t)).count();
            assert_eq!(measured, 49);
            // receiver co-located with the transmitter is never measured
            assert!(!m.get(2 * t, t));
        }
    }

    #[test]
    fn grid_geometry() {
        let g = RoiGrid::square(0.1, 4).unwrap();
        assert!((g.point(0, 0).x + 0.075).abs() < 1e-15);
        assert_eq!(g.index(1, 2), 9);
        assert_eq!(g.nearest(&Vec2::new(0.07, -0.07)), (3, 0));
        assert!(RoiGrid::new(0.0, 0.0, 0.0, 1.0, 4, 4).is_err());
        assert!(RoiGrid::new(0.0, 1.0, 0.0, 1.0, 1, 4).is_err());
    }
}
