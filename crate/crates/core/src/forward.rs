//! Far-field data synthesis and multistatic response (MSR) matrix assembly.
//!
//! Two generators are available. [`born_farfield`] evaluates the
//! small-inclusion asymptotic far-field formula summed over inclusions.
//! [`foldy_lax_farfield`] couples the same point scatterers through the 2D
//! outgoing Green's function `(i/4) H0(k r)`; with a single inclusion it
//! reduces to the Born value exactly.
//!
//! Matrix convention: rows index receivers (observation directions), columns
//! index transmitters (incident directions).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{ArrayConfig, ContrastMode, Mask, Scene, Vec2};
use crate::specfun;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixKind {
    Full,
    DiagonalFree,
    Bistatic,
}

impl MatrixKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MatrixKind::Full => "full",
            MatrixKind::DiagonalFree => "diagonal-free",
            MatrixKind::Bistatic => "bistatic",
        }
    }
}

impl std::str::FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(MatrixKind::Full),
            "diagonal-free" => Ok(MatrixKind::DiagonalFree),
            "bistatic" => Ok(MatrixKind::Bistatic),
            other => Err(Error::Invalid(format!("unknown matrix kind '{other}'"))),
        }
    }
}

/// Additive white Gaussian noise at a target SNR. `snr_db = +inf` disables it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            snr_db: f64::INFINITY,
            seed: 0,
        }
    }

    pub fn is_active(&self) -> bool {
        self.snr_db.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Born,
    FoldyLax,
}

impl Generator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Generator::Born => "born",
            Generator::FoldyLax => "foldy-lax",
        }
    }
}

impl std::str::FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "born" => Ok(Generator::Born),
            "foldy-lax" => Ok(Generator::FoldyLax),
            _ => Err(Error::Invalid(format!("unknown generator '{s}'"))),
        }
    }
}

/// Multistatic response matrix together with its acquisition metadata.
///
/// Entries where `mask` is false are stored as exact complex zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MsrMatrix {
    pub entries: DMatrix<Complex64>,
    pub mask: Mask,
    pub kind: MatrixKind,
    pub incident: Vec<Vec2>,
    pub observation: Vec<Vec2>,
    pub frequency: f64,
    pub wavenumber: f64,
    pub noise: Option<NoiseSpec>,
}

impl MsrMatrix {
    pub fn shape(&self) -> (usize, usize) {
        self.entries.shape()
    }

    pub fn n_receivers(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_transmitters(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.entries.is_square()
    }

    /// Frobenius norm over measured entries only.
    pub fn measured_norm(&self) -> f64 {
        let (rows, cols) = self.shape();
        let mut acc = 0.0;
        for c in 0..cols {
            for r in 0..rows {
                if self.mask.get(r, c) {
                    acc += self.entries[(r, c)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    /// Largest `|M_mn - M_nm|` relative to the largest entry magnitude.
    pub fn symmetry_defect(&self) -> Option<f64> {
        if !self.is_square() {
            return None;
        }
        let n = self.entries.nrows();
        let scale = self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Some(0.0);
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)]).norm());
            }
        }
        Some(worst / scale)
    }

    pub fn validate(&self) -> Result<()> {
        let shape = (self.observation.len(), self.incident.len());
        if self.entries.shape() != shape {
            return Err(Error::Shape {
                expected: shape,
                got: self.entries.shape(),
            });
        }
        if self.mask.shape() != shape {
            return Err(Error::Shape {
                expected: shape,
                got: self.mask.shape(),
            });
        }
        for c in 0..shape.1 {
            for r in 0..shape.0 {
                if !self.mask.get(r, c) && self.entries[(r, c)] != Complex64::new(0.0, 0.0) {
                    return Err(Error::Invalid(format!(
                        "unmeasured entry ({r}, {c}) is not zero"
                    )));
                }
            }
        }
        if self.kind == MatrixKind::DiagonalFree && !self.mask.is_diagonal_free() {
            return Err(Error::Invalid(
                "diagonal-free matrix needs a square mask with only the diagonal unmeasured".into(),
            ));
        }
        Ok(())
    }
}

/// `alpha^2 pi k^2 (1 + i) / (4 sqrt(k pi))`, the common factor of the
/// asymptotic far-field formula.
pub fn born_prefactor(k: f64, radius: f64) -> Complex64 {
    Complex64::new(1.0, 1.0) * (radius * radius * PI * k * k / (4.0 * (k * PI).sqrt()))
}

/// Permittivity and permeability contrast terms of one inclusion.
///
/// The permeability term is only present when `mu_a != mu_b`; for equal
/// permeabilities the far field carries no dipole part.
fn contrast_terms(scene: &Scene, idx: usize) -> (f64, f64) {
    let bg = &scene.background;
    let inc = &scene.inhomogeneities[idx];
    let eps_term = (inc.epsilon_a - bg.epsilon_b) / (bg.epsilon_b * bg.mu_b).sqrt();
    let mu_term = if inc.mu_a != bg.mu_b {
        2.0 * bg.mu_b / (inc.mu_a + bg.mu_b)
    } else {
        0.0
    };
    (eps_term, mu_term)
}

/// Born far-field pattern `u_inf(obs, inc)` of the whole scene.
pub fn born_farfield(scene: &Scene, obs: &Vec2, inc: &Vec2) -> Complex64 {
    let k = scene.wavenumber();
    let cos_angle = obs.dot(inc);
    let diff = obs - inc;
    let mut total = Complex64::new(0.0, 0.0);
    for (idx, incl) in scene.inhomogeneities.iter().enumerate() {
        let (eps_term, mu_term) = contrast_terms(scene, idx);
        let amplitude = born_prefactor(k, incl.radius) * (eps_term - mu_term * cos_angle);
        let phase = -k * diff.dot(&incl.center);
        total += amplitude * Complex64::cis(phase);
    }
    total
}

/// Far-field factor of the 2D outgoing Green's function:
/// `(i/4) H0(k|x - y|) ~ gamma e^{ik|x|} / sqrt|x| e^{-ik obs.y}`.
fn green_farfield_factor(k: f64) -> Complex64 {
    Complex64::cis(PI / 4.0) / (8.0 * PI * k).sqrt()
}

/// Full matrix from the point-scatterer Foldy-Lax system.
pub fn foldy_lax_farfield(scene: &Scene, array: &ArrayConfig) -> Result<MsrMatrix> {
    if scene.contrast_mode != ContrastMode::Permittivity {
        return Err(Error::Invalid(
            "Foldy-Lax generation is only available in permittivity mode".into(),
        ));
    }
    let k = scene.wavenumber();
    let centers = scene.centers();
    let p = centers.len();
    for a in 0..p {
        for b in 0..a {
            if centers[a] == centers[b] {
                return Err(Error::Invalid(format!(
                    "inclusions {b} and {a} share a center"
                )));
            }
        }
    }
    let gamma = green_farfield_factor(k);
    // per-scatterer source strength relative to the exciting field
    let strength: Vec<Complex64> = (0..p)
        .map(|i| {
            let (eps_term, _) = contrast_terms(scene, i);
            born_prefactor(k, scene.inhomogeneities[i].radius) * eps_term / gamma
        })
        .collect();

    let mut system = DMatrix::<Complex64>::identity(p, p);
    for a in 0..p {
        for b in 0..p {
            if a != b {
                let r = (centers[a] - centers[b]).norm();
                let g = Complex64::new(0.0, 0.25) * specfun::hankel1(0, k * r)?;
                system[(a, b)] -= strength[a] * g;
            }
        }
    }
    let sv = crate::linalg::singular_values(&system)?;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !condition.is_finite() || condition > 1e12 {
        return Err(Error::Resonance { condition });
    }

    let n_tx = array.n_transmitters();
    let rhs = DMatrix::<Complex64>::from_fn(p, n_tx, |a, t| {
        strength[a] * Complex64::cis(k * array.incident[t].dot(&centers[a]))
    });
    let sources = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::Resonance { condition })?;

    let n_rx = array.n_receivers();
    let entries = DMatrix::<Complex64>::from_fn(n_rx, n_tx, |r, t| {
        let obs = &array.observation[r];
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..p {
            acc += Complex64::cis(-k * obs.dot(&centers[a])) * sources[(a, t)];
        }
        gamma * acc
    });
    Ok(MsrMatrix {
        entries,
        mask: Mask::full(n_rx, n_tx),
        kind: MatrixKind::Full,
        incident: array.incident.clone(),
        observation: array.observation.clone(),
        frequency: scene.background.frequency,
        wavenumber: k,
        noise: None,
    })
}

/// Full matrix `M[m][n] = u_inf(obs_m, inc_n)` from the chosen generator.
pub fn assemble_msr(scene: &Scene, array: &ArrayConfig, generator: Generator) -> Result<MsrMatrix> {
    scene.validate()?;
    array.validate()?;
    match generator {
        Generator::FoldyLax => foldy_lax_farfield(scene, array),
        Generator::Born => {
            let n_rx = array.n_receivers();
            let n_tx = array.n_transmitters();
            let rows: Vec<Vec<Complex64>> = (0..n_rx)
                .into_par_iter()
                .map(|r| {
                    array
                        .incident
                        .iter()
                        .map(|inc| born_farfield(scene, &array.observation[r], inc))
                        .collect()
                })
                .collect();
            let entries = DMatrix::from_fn(n_rx, n_tx, |r, c| rows[r][c]);
            Ok(MsrMatrix {
                entries,
                mask: Mask::full(n_rx, n_tx),
                kind: MatrixKind::Full,
                incident: array.incident.clone(),
                observation: array.observation.clone(),
                frequency: scene.background.frequency,
                wavenumber: scene.wavenumber(),
                noise: None,
            })
        }
    }
}

/// Zero the monostatic (diagonal) entries.
pub fn strip_diagonal(msr: &MsrMatrix) -> Result<MsrMatrix> {
    if !msr.is_square() {
        let (r, c) = msr.shape();
        return Err(Error::Shape {
            expected: (r, r),
            got: (r, c),
        });
    }
    let n = msr.entries.nrows();
    let mut out = msr.clone();
    let mask = msr.mask.and(&Mask::diagonal_free(n))?;
    for i in 0..n {
        out.entries[(i, i)] = Complex64::new(0.0, 0.0);
    }
    out.mask = mask;
    out.kind = MatrixKind::DiagonalFree;
    Ok(out)
}

/// Zero every entry where `mask` is false and record the combined mask.
pub fn apply_mask(msr: &MsrMatrix, mask: &Mask) -> Result<MsrMatrix> {
    let combined = msr.mask.and(mask)?;
    let mut out = msr.clone();
    let (rows, cols) = msr.shape();
    for c in 0..cols {
        for r in 0..rows {
            if !combined.get(r, c) {
                out.entries[(r, c)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    out.mask = combined;
    out.kind = MatrixKind::Bistatic;
    Ok(out)
}

/// Add circularly-symmetric complex Gaussian noise to the measured entries so
/// that `10 log10(|S|_F^2 / E|N|_F^2) = snr_db`.
pub fn add_noise(msr: &MsrMatrix, spec: &NoiseSpec) -> Result<MsrMatrix> {
    if spec.snr_db.is_nan() || spec.snr_db == f64::NEG_INFINITY {
        return Err(Error::Invalid(format!("snr_db must be finite or +inf, got {}", spec.snr_db)));
    }
    if !spec.is_active() {
        return Ok(msr.clone());
    }
    let measured = msr.mask.count_measured();
    if measured == 0 {
        return Ok(msr.clone());
    }
    let signal_power = msr.measured_norm().powi(2);
    let variance = signal_power / (measured as f64 * 10f64.powf(spec.snr_db / 10.0));
    let component_sigma = (variance / 2.0).sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut out = msr.clone();
    let (rows, cols) = msr.shape();
    for r in 0..rows {
        for c in 0..cols {
            if msr.mask.get(r, c) {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                out.entries[(r, c)] += Complex64::new(re, im) * component_sigma;
            }
        }
    }
    out.noise = Some(*spec);
    Ok(out)
}
