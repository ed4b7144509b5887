//! Subspace (MUSIC-type) imaging from a decomposed MSR matrix.
//!
//! Receiver-side (left) test vectors are built over the negated observation
//! directions, so they carry `exp(-i k obs_j . x)`; in the symmetric
//! backscattering layout this coincides with the transmitter-side vector
//! `exp(i k inc_n . x)`. The right singular vectors of `M = U S V*` span the
//! complex conjugate of the transmitter steering vectors, so right-side
//! residuals are evaluated as `|Q conj(f(x))|` with `Q = I - V_r V_r*`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{MatrixKind, MsrMatrix};
use crate::scene::{RoiGrid, Vec2};

/// Map values are clipped here; the theoretical peak is infinite.
pub const DEFAULT_PEAK_CAP: f64 = 1e6;
/// Number of polarization angles scanned by [`TestFamily::TeSweep`].
pub const XI_SWEEP_COUNT: usize = 16;

#[derive(Debug, Clone)]
pub struct SubspaceDecomposition {
    /// Nonincreasing singular values.
    pub singular_values: Vec<f64>,
    /// Left singular vectors as columns (`n_rx x p`, `p = min(shape)`).
    pub left: DMatrix<Complex64>,
    /// Right singular vectors as columns (`n_tx x p`).
    pub right: DMatrix<Complex64>,
    pub signal_rank: Option<usize>,
    pub incident: Vec<Vec2>,
    pub observation: Vec<Vec2>,
    pub wavenumber: f64,
    pub frequency: f64,
    pub kind: MatrixKind,
}

impl SubspaceDecomposition {
    pub fn with_rank(mut self, policy: RankPolicy) -> Result<Self> {
        self.signal_rank = Some(select_signal_rank(&self.singular_values, policy)?);
        Ok(self)
    }

    pub fn normalized_spectrum(&self) -> Vec<f64> {
        let s1 = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values
            .iter()
            .map(|s| if s1 > 0.0 { s / s1 } else { 0.0 })
            .collect()
    }

    /// Number of singular values at or above `rel * sigma_1`.
    pub fn numerical_rank(&self, rel: f64) -> usize {
        let s1 = self.singular_values[0];
        self.singular_values.iter().filter(|&&s| s > rel * s1).count()
    }
}

/// Thin SVD with singular values sorted nonincreasing.
pub fn decompose(msr: &MsrMatrix) -> Result<SubspaceDecomposition> {
    let m = &msr.entries;
    let norm = m.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Numerical(
            "MSR matrix has no nonzero finite entries".into(),
        ));
    }
    let (singular_values, left, right) = crate::linalg::thin_svd(m)?;

    let recon = &left * DMatrix::from_diagonal(&DVector::from_iterator(
        singular_values.len(),
        singular_values.iter().map(|&s| Complex64::new(s, 0.0)),
    )) * right.adjoint();
    let err = (m - recon).norm();
    if err > 1e-10 * norm {
        return Err(Error::Numerical(format!(
            "SVD reconstruction error {:.3e} exceeds tolerance",
            err / norm
        )));
    }
    Ok(SubspaceDecomposition {
        singular_values,
        left,
        right,
        signal_rank: None,
        incident: msr.incident.clone(),
        observation: msr.observation.clone(),
        wavenumber: msr.wavenumber,
        frequency: msr.frequency,
        kind: msr.kind,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankPolicy {
    Fixed(usize),
    /// Keep every singular value at or above `tau * sigma_1`.
    Threshold(f64),
}

impl Default for RankPolicy {
    fn default() -> Self {
        RankPolicy::Threshold(0.1)
    }
}

pub fn select_signal_rank(sigma: &[f64], policy: RankPolicy) -> Result<usize> {
    let p = sigma.len();
    if p < 2 {
        return Err(Error::Invalid(
            "need at least two singular values to split signal and noise".into(),
        ));
    }
    if sigma.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Invalid("singular values must be nonincreasing".into()));
    }
    match policy {
        RankPolicy::Fixed(r) => {
            if r == 0 || r >= p {
                Err(Error::Invalid(format!(
                    "signal rank must lie in 1..{p}, got {r}"
                )))
            } else {
                Ok(r)
            }
        }
        RankPolicy::Threshold(tau) => {
            if !(tau.is_finite() && tau > 0.0 && tau <= 1.0) {
                return Err(Error::Invalid(format!("threshold must lie in (0, 1], got {tau}")));
            }
            if sigma[0] <= 0.0 {
                return Err(Error::Numerical("largest singular value is zero".into()));
            }
            let r = sigma.iter().take_while(|&&s| s >= tau * sigma[0]).count();
            if r >= p {
                log::warn!("threshold {tau} keeps every singular value; using rank {}", p - 1);
                Ok(p - 1)
            } else {
                Ok(r)
            }
        }
    }
}

/// Unit-norm steering vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TestVector(pub Vec<Complex64>);

impl TestVector {
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn conj(&self) -> TestVector {
        TestVector(self.0.iter().map(|z| z.conj()).collect())
    }
}

/// Component `n` is `exp(i k d_n . x) / sqrt(N)`.
pub fn test_vector_tm(x: &Vec2, directions: &[Vec2], k: f64) -> Result<TestVector> {
    if directions.is_empty() {
        return Err(Error::Invalid("test vector needs at least one direction".into()));
    }
    Ok(tm_unchecked(x, directions, k))
}

fn tm_unchecked(x: &Vec2, directions: &[Vec2], k: f64) -> TestVector {
    let scale = 1.0 / (directions.len() as f64).sqrt();
    TestVector(
        directions
            .iter()
            .map(|d| Complex64::cis(k * d.dot(x)) * scale)
            .collect(),
    )
}

/// Component `n` is `sqrt(2/N) (d_n . xi) exp(i k d_n . x)`.
pub fn test_vector_te(x: &Vec2, xi: &Vec2, directions: &[Vec2], k: f64) -> Result<TestVector> {
    if directions.is_empty() {
        return Err(Error::Invalid("test vector needs at least one direction".into()));
    }
    if (xi.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!(
            "polarization direction ({}, {}) is not a unit vector",
            xi.x, xi.y
        )));
    }
    Ok(te_unchecked(x, xi, directions, k))
}

fn te_unchecked(x: &Vec2, xi: &Vec2, directions: &[Vec2], k: f64) -> TestVector {
    let scale = (2.0 / directions.len() as f64).sqrt();
    TestVector(
        directions
            .iter()
            .map(|d| Complex64::cis(k * d.dot(x)) * (scale * d.dot(xi)))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Both,
}

/// `I - B B*` for an orthonormal basis `B` of the signal subspace.
#[derive(Debug, Clone)]
pub struct NoiseProjector {
    basis: DMatrix<Complex64>,
}

impl NoiseProjector {
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn signal_rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = v.to_vec();
        self.apply_in_place(&mut out);
        out
    }

    fn apply_in_place(&self, v: &mut [Complex64]) {
        let n = self.basis.nrows();
        for c in 0..self.basis.ncols() {
            let col = self.basis.column(c);
            let mut coef = Complex64::new(0.0, 0.0);
            for i in 0..n {
                coef += col[i].conj() * v[i];
            }
            for i in 0..n {
                v[i] -= col[i] * coef;
            }
        }
    }

    /// `|P v|`, computed from the explicit residual vector.
    pub fn residual_norm(&self, v: &[Complex64]) -> f64 {
        let mut r = v.to_vec();
        self.apply_in_place(&mut r);
        r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        DMatrix::identity(self.dim(), self.dim()) - &self.basis * self.basis.adjoint()
    }
}

pub fn noise_projection(dec: &SubspaceDecomposition, side: Side) -> Result<NoiseProjector> {
    let r = dec
        .signal_rank
        .ok_or_else(|| Error::Invalid("signal rank has not been selected".into()))?;
    let source = match side {
        Side::Left => &dec.left,
        Side::Right => &dec.right,
        Side::Both => {
            return Err(Error::Invalid(
                "a single projector needs side left or right".into(),
            ))
        }
    };
    Ok(NoiseProjector {
        basis: source.columns(0, r).into_owned(),
    })
}

/// Steering-vector family probed against the noise subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFamily {
    /// Scalar vectors `exp(i k d . x)`.
    Tm,
    /// Dipole vectors weighted by `d . xi`.
    Te { xi: [f64; 2] },
    /// Maximum of the dipole map over equispaced `xi` angles.
    TeSweep,
}

impl TestFamily {
    pub fn te_angle(deg: f64) -> Self {
        let r = deg.to_radians();
        TestFamily::Te {
            xi: [r.cos(), r.sin()],
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestFamily::Tm => "tm".into(),
            TestFamily::Te { xi } => format!("te(xi={},{})", xi[0], xi[1]),
            TestFamily::TeSweep => "te-sweep".into(),
        }
    }

    fn xis(&self) -> Vec<Option<Vec2>> {
        match self {
            TestFamily::Tm => vec![None],
            TestFamily::Te { xi } => vec![Some(Vec2::new(xi[0], xi[1]))],
            TestFamily::TeSweep => (0..XI_SWEEP_COUNT)
                .map(|i| {
                    let a = std::f64::consts::PI * i as f64 / XI_SWEEP_COUNT as f64;
                    Some(Vec2::new(a.cos(), a.sin()))
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMeta {
    pub family: TestFamily,
    pub side: Side,
    pub kind: MatrixKind,
    pub signal_rank: usize,
    pub frequency: f64,
    pub wavenumber: f64,
    pub n_transmitters: usize,
    pub n_receivers: usize,
}

/// Imaging-function values over a grid, row-major with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagingMap {
    pub grid: RoiGrid,
    pub values: Vec<f64>,
    pub peak_cap: f64,
    pub meta: MapMeta,
}

impl ImagingMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Global maximum pixel; lowest linear index wins ties.
    pub fn argmax(&self) -> (usize, usize) {
        let idx = argmax_index(&self.values, |_| true);
        (idx % self.grid.nx, idx / self.grid.nx)
    }

    /// Maximum pixel within `radius` metres of `center`.
    pub fn argmax_near(&self, center: &Vec2, radius: f64) -> Option<(usize, usize)> {
        let g = &self.grid;
        let mut best: Option<(usize, f64)> = None;
        for idx in 0..self.values.len() {
            if (g.point_at(idx) - center).norm() <= radius {
                let v = self.values[idx];
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((idx, v));
                }
            }
        }
        best.map(|(idx, _)| (idx % g.nx, idx / g.nx))
    }

    /// True if pixel `(i, j)` is no smaller than any of its 8 neighbours.
    pub fn is_local_max(&self, i: usize, j: usize) -> bool {
        let v = self.get(i, j);
        let (nx, ny) = (self.grid.nx as isize, self.grid.ny as isize);
        for dj in -1isize..=1 {
            for di in -1isize..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (a, b) = (i as isize + di, j as isize + dj);
                if a >= 0 && b >= 0 && a < nx && b < ny && self.get(a as usize, b as usize) > v {
                    return false;
                }
            }
        }
        true
    }

    /// All local maxima as `(i, j)` pixel indices.
    pub fn local_maxima(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                if self.is_local_max(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Value below which the given fraction of pixels lies.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        let pos = ((v.len() - 1) as f64 * q.clamp(0.0, 1.0)).round() as usize;
        v[pos]
    }
}

fn argmax_index(values: &[f64], keep: impl Fn(usize) -> bool) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if keep(i) && v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

fn capped_inverse(residual: f64, cap: f64) -> f64 {
    if residual * cap <= 1.0 {
        cap
    } else {
        1.0 / residual
    }
}

fn side_value(
    projector: &NoiseProjector,
    x: &Vec2,
    directions: &[Vec2],
    k: f64,
    family: &TestFamily,
    conjugate: bool,
    cap: f64,
) -> f64 {
    family
        .xis()
        .into_iter()
        .map(|xi| {
            let mut t = match xi {
                None => tm_unchecked(x, directions, k),
                Some(xi) => te_unchecked(x, &xi, directions, k),
            };
            if conjugate {
                t = t.conj();
            }
            capped_inverse(projector.residual_norm(&t.0), cap)
        })
        .fold(0.0, f64::max)
}

/// Evaluate `1 / |P_noise f(x)|` (or the half-sum of left and right
/// variants for [`Side::Both`]) at every grid pixel.
pub fn image_map(
    dec: &SubspaceDecomposition,
    grid: &RoiGrid,
    family: TestFamily,
    side: Side,
    peak_cap: f64,
) -> Result<ImagingMap> {
    grid.validate()?;
    let rank = dec
        .signal_rank
        .ok_or_else(|| Error::Invalid("signal rank has not been selected".into()))?;
    if !(peak_cap.is_finite() && peak_cap > 0.0) {
        return Err(Error::Invalid(format!("peak cap must be finite and > 0, got {peak_cap}")));
    }
    if let TestFamily::Te { xi } = family {
        let n = Vec2::new(xi[0], xi[1]).norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid("polarization direction must be a unit vector".into()));
        }
    }
    let k = dec.wavenumber;
    let rx_dirs: Vec<Vec2> = dec.observation.iter().map(|d| -d).collect();
    let left = match side {
        Side::Left | Side::Both => Some(noise_projection(dec, Side::Left)?),
        Side::Right => None,
    };
    let right = match side {
        Side::Right | Side::Both => Some(noise_projection(dec, Side::Right)?),
        Side::Left => None,
    };
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let x = grid.point_at(idx);
            let l = left
                .as_ref()
                .map(|p| side_value(p, &x, &rx_dirs, k, &family, false, peak_cap));
            let r = right
                .as_ref()
                .map(|p| side_value(p, &x, &dec.incident, k, &family, true, peak_cap));
            match (l, r) {
                (Some(a), Some(b)) => 0.5 * (a + b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => unreachable!(),
            }
        })
        .collect();
    Ok(ImagingMap {
        grid: *grid,
        values,
        peak_cap,
        meta: MapMeta {
            family,
            side,
            kind: dec.kind,
            signal_rank: rank,
            frequency: dec.frequency,
            wavenumber: k,
            n_transmitters: dec.incident.len(),
            n_receivers: dec.observation.len(),
        },
    })
}

/// Half-sum of the receiver-side and transmitter-side maps for a masked or
/// non-square matrix.
pub fn combined_bistatic_map(
    msr: &MsrMatrix,
    grid: &RoiGrid,
    policy: RankPolicy,
) -> Result<ImagingMap> {
    let dec = decompose(msr)?.with_rank(policy)?;
    image_map(&dec, grid, TestFamily::Tm, Side::Both, DEFAULT_PEAK_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::uniform_directions;

    #[test]
    fn rank_selection() {
        let s = [1.0, 0.05, 0.01, 0.0];
        assert_eq!(select_signal_rank(&s, RankPolicy::Threshold(0.1)).unwrap(), 1);
        assert_eq!(select_signal_rank(&s, RankPolicy::Fixed(2)).unwrap(), 2);
        assert!(select_signal_rank(&s, RankPolicy::Fixed(0)).is_err());
        assert!(select_signal_rank(&s, RankPolicy::Fixed(4)).is_err());
        assert!(select_signal_rank(&[0.1, 1.0], RankPolicy::Fixed(1)).is_err());
        assert!(select_signal_rank(&s, RankPolicy::Threshold(0.0)).is_err());
    }

    #[test]
    fn tm_vector_at_origin() {
        let d = uniform_directions(9).unwrap();
        let f = test_vector_tm(&Vec2::zeros(), &d, 30.0).unwrap();
        for c in &f.0 {
            assert!((c - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        }
        assert!(test_vector_tm(&Vec2::zeros(), &[], 1.0).is_err());
    }

    #[test]
    fn te_vector_n4() {
        let d = uniform_directions(4).unwrap();
        let f = test_vector_te(&Vec2::zeros(), &Vec2::new(1.0, 0.0), &d, 10.0).unwrap();
        let h = 0.5f64.sqrt();
        let want = [0.0, -h, 0.0, h];
        for (c, w) in f.0.iter().zip(want) {
            assert!((c - Complex64::new(w, 0.0)).norm() < 1e-15);
        }
        assert!(test_vector_te(&Vec2::zeros(), &Vec2::new(1.0, 1.0), &d, 1.0).is_err());
    }

    #[test]
    fn te_component_vanishes_for_perpendicular_xi() {
        let d = uniform_directions(8).unwrap();
        let xi = Vec2::new(-d[2].y, d[2].x);
        let f = test_vector_te(&Vec2::new(0.1, 0.3), &xi, &d, 20.0).unwrap();
        assert!(f.0[2].norm() < 1e-16);
    }

    #[test]
    fn capped_inverse_behaviour() {
        assert_eq!(capped_inverse(0.0, 1e6), 1e6);
        assert_eq!(capped_inverse(1e-7, 1e6), 1e6);
        assert_eq!(capped_inverse(0.5, 1e6), 2.0);
    }
}
