//! Closed-form structure of the diagonal-free imaging functions and the
//! direction-sum identities behind them, plus an empirical-vs-predicted
//! comparison harness.

use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{born_prefactor, MatrixKind};
use crate::music::{ImagingMap, MapMeta, Side, TestFamily};
use crate::scene::{Background, Inhomogeneity, RoiGrid, Vec2};
use crate::specfun::{j0, j1, j2};

/// Parameters of the single-inclusion predictors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub n: usize,
    pub wavenumber: f64,
    pub center: Vec2,
    pub c_eps: f64,
    pub c_mu: f64,
}

impl TheoryParams {
    pub fn new(n: usize, wavenumber: f64, center: Vec2) -> Result<Self> {
        if n < 3 {
            return Err(Error::Invalid(format!("need N >= 3 directions, got {n}")));
        }
        if !(wavenumber.is_finite() && wavenumber > 0.0) {
            return Err(Error::Invalid(format!("wavenumber must be > 0, got {wavenumber}")));
        }
        Ok(TheoryParams {
            n,
            wavenumber,
            center,
            c_eps: c_eps(n),
            c_mu: c_mu(n),
        })
    }
}

/// `C_eps = 1 / (N - 1)^2`.
pub fn c_eps(n: usize) -> f64 {
    let m = n as f64 - 1.0;
    1.0 / (m * m)
}

/// `C_mu = (4 + 2 sqrt 2) / (N^2 - 4N + 4 + 2 sqrt 2)`, the value that turns
/// the dipole structure into a pure `(1 - J1^2)^(-1/2)` profile.
pub fn c_mu(n: usize) -> f64 {
    let nf = n as f64;
    (4.0 + 2.0 * SQRT_2) / (nf * nf - 4.0 * nf + 4.0 + 2.0 * SQRT_2)
}

/// `(N^2 - 2N + 1) / (N^2 - 2N)`.
pub fn tm_prefactor(n: usize) -> f64 {
    let nf = n as f64;
    (nf * nf - 2.0 * nf + 1.0) / (nf * nf - 2.0 * nf)
}

/// `(1/N) sum_n exp(i k d_n . x)`; tends to `J0(k|x|)` for uniform directions.
pub fn identity_j0_sum(x: &Vec2, directions: &[Vec2], k: f64) -> Complex64 {
    let sum: Complex64 = directions.iter().map(|d| Complex64::cis(k * d.dot(x))).sum();
    sum / directions.len() as f64
}

/// `sum_n (xi . d_n) exp(i k d_n . x)`.
pub fn identity_j1_sum(x: &Vec2, xi: &Vec2, directions: &[Vec2], k: f64) -> Complex64 {
    directions
        .iter()
        .map(|d| Complex64::cis(k * d.dot(x)) * xi.dot(d))
        .sum()
}

/// `i N (x_hat . xi) J1(k|x|)`.
pub fn identity_j1_closed(x: &Vec2, xi: &Vec2, n: usize, k: f64) -> Result<Complex64> {
    let r = x.norm();
    if r == 0.0 {
        return Err(Error::Domain("closed form needs x != 0".into()));
    }
    let xh = x / r;
    Ok(Complex64::new(0.0, n as f64 * xh.dot(xi) * j1(k * r)))
}

/// `sum_n (theta_m . d_n)(xi . d_n) exp(i k d_n . x)`.
pub fn identity_j2_sum(
    x: &Vec2,
    xi: &Vec2,
    theta_m: &Vec2,
    directions: &[Vec2],
    k: f64,
) -> Complex64 {
    directions
        .iter()
        .map(|d| Complex64::cis(k * d.dot(x)) * (theta_m.dot(d) * xi.dot(d)))
        .sum()
}

/// `(N/2)(theta_m . xi)(J0 + J2) - N (x_hat . theta_m)(x_hat . xi) J2`, at `k|x|`.
/// At `x = 0` this is the limit `(N/2)(theta_m . xi)`.
pub fn identity_j2_closed(x: &Vec2, xi: &Vec2, theta_m: &Vec2, n: usize, k: f64) -> f64 {
    let nf = n as f64;
    let r = x.norm();
    if r == 0.0 {
        return 0.5 * nf * theta_m.dot(xi);
    }
    let xh = x / r;
    let (a, b) = (j0(k * r), j2(k * r));
    0.5 * nf * theta_m.dot(xi) * (a + b) - nf * xh.dot(theta_m) * xh.dot(xi) * b
}

fn cap_inverse(den: f64, cap: f64) -> f64 {
    if den <= 0.0 || den * cap <= 1.0 {
        cap
    } else {
        1.0 / den
    }
}

/// Predicted residual `|P_noise f(x)| = (1 - C_eps)(1 - J0^2)^(1/2)`.
pub fn theorem_tm_residual(x: &Vec2, params: &TheoryParams) -> f64 {
    let a = j0(params.wavenumber * (x - params.center).norm());
    let s = ((1.0 - a) * (1.0 + a)).max(0.0).sqrt();
    (1.0 - params.c_eps) * s
}

/// `((N^2 - 2N + 1)/(N^2 - 2N)) (1 - J0(k|x - z|)^2)^(-1/2)`, capped.
pub fn theorem_tm_map(x: &Vec2, params: &TheoryParams, cap: f64) -> f64 {
    let a = j0(params.wavenumber * (x - params.center).norm());
    let s = ((1.0 - a) * (1.0 + a)).max(0.0).sqrt();
    if s > 0.0 {
        (tm_prefactor(params.n) / s).min(cap)
    } else {
        cap
    }
}

/// Squared residual of the dipole predictor,
/// `(1-C)^2 - 2C(1-C) N (N/2-2) J1^2 + C^2 (N^2/2)(N/2-2)^2 J1^2`.
pub fn theorem_te_bracket(x: &Vec2, params: &TheoryParams) -> Result<f64> {
    if params.n < 5 {
        return Err(Error::Invalid(format!(
            "dipole predictor needs N >= 5, got {}",
            params.n
        )));
    }
    let nf = params.n as f64;
    let c = params.c_mu;
    let h = nf / 2.0 - 2.0;
    let b = j1(params.wavenumber * (x - params.center).norm());
    let b2 = b * b;
    Ok((1.0 - c).powi(2) - 2.0 * c * (1.0 - c) * nf * h * b2 + c * c * nf * nf / 2.0 * h * h * b2)
}

/// Inverse square root of [`theorem_te_bracket`], capped.
pub fn theorem_te_map(x: &Vec2, params: &TheoryParams, cap: f64) -> Result<f64> {
    let bracket = theorem_te_bracket(x, params)?;
    Ok(cap_inverse(bracket.max(0.0).sqrt(), cap))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Tm,
    Te,
}

/// Predicted diagonal-free map over a grid.
pub fn predicted_map(
    grid: &RoiGrid,
    params: &TheoryParams,
    polarization: Polarization,
    cap: f64,
) -> Result<ImagingMap> {
    grid.validate()?;
    if polarization == Polarization::Te && params.n < 5 {
        return Err(Error::Invalid("dipole predictor needs N >= 5".into()));
    }
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let x = grid.point_at(idx);
            match polarization {
                Polarization::Tm => theorem_tm_map(&x, params, cap),
                // N >= 5 checked above
                Polarization::Te => theorem_te_map(&x, params, cap).unwrap_or(cap),
            }
        })
        .collect();
    let (family, rank) = match polarization {
        Polarization::Tm => (TestFamily::Tm, 1),
        Polarization::Te => (TestFamily::Tm, 2),
    };
    Ok(ImagingMap {
        grid: *grid,
        values,
        peak_cap: cap,
        meta: MapMeta {
            family,
            side: Side::Left,
            kind: MatrixKind::DiagonalFree,
            signal_rank: rank,
            frequency: 0.0,
            wavenumber: params.wavenumber,
            n_transmitters: params.n,
            n_receivers: params.n,
        },
    })
}

/// Agreement metrics on reciprocal fields `1/F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub linf: f64,
    pub l2_rel: f64,
    pub correlation: f64,
    pub pixels: usize,
}

impl ComparisonReport {
    pub fn to_key_value(&self) -> String {
        format!(
            "linf: {}\nl2_rel: {}\ncorrelation: {}\npixels: {}\n",
            self.linf, self.l2_rel, self.correlation, self.pixels
        )
    }

    pub fn to_csv(&self) -> String {
        format!(
            "linf,l2_rel,correlation,pixels\n{},{},{},{}\n",
            self.linf, self.l2_rel, self.correlation, self.pixels
        )
    }
}

/// Compare `1/F` fields pixelwise, skipping pixels within `exclusion_radius`
/// of any center.
pub fn compare_maps(
    empirical: &ImagingMap,
    predicted: &ImagingMap,
    centers: &[Vec2],
    exclusion_radius: f64,
) -> Result<ComparisonReport> {
    if empirical.grid != predicted.grid || empirical.values.len() != predicted.values.len() {
        return Err(Error::Invalid("maps are on different grids".into()));
    }
    let grid = &empirical.grid;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for idx in 0..grid.len() {
        let p = grid.point_at(idx);
        if centers.iter().any(|c| (p - c).norm() <= exclusion_radius) {
            continue;
        }
        a.push(1.0 / empirical.values[idx]);
        b.push(1.0 / predicted.values[idx]);
    }
    if a.is_empty() {
        return Err(Error::Invalid("exclusion radius removes every pixel".into()));
    }
    let mut linf = 0.0f64;
    let mut diff2 = 0.0;
    let mut ref2 = 0.0;
    for (x, y) in a.iter().zip(&b) {
        linf = linf.max((x - y).abs());
        diff2 += (x - y) * (x - y);
        ref2 += y * y;
    }
    let l2_rel = if ref2 > 0.0 {
        (diff2 / ref2).sqrt()
    } else {
        diff2.sqrt()
    };
    Ok(ComparisonReport {
        linf,
        l2_rel,
        correlation: pearson(&a, &b),
        pixels: a.len(),
    })
}

/// Pearson correlation; identical constant fields give 1, otherwise a
/// constant field gives 0.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    if a == b {
        return 1.0;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
    }
}

/// `C_eps` from the diagonal of `K K* / sigma_1^2`, whose diagonal entries
/// all equal `C_eps (N - 1)` for a single inclusion.
pub fn c_eps_from_gram(k_matrix: &DMatrix<Complex64>, sigma1: f64) -> f64 {
    let n = k_matrix.nrows();
    let gram = k_matrix * k_matrix.adjoint();
    let mean_diag = (0..n).map(|i| gram[(i, i)].re).sum::<f64>() / n as f64;
    mean_diag / (sigma1 * sigma1 * (n as f64 - 1.0))
}

/// `C_eps = |c|^2 / sigma_1^2` with `c` the single-inclusion Born amplitude
/// `alpha^2 pi k^2 (1+i)/(4 sqrt(k pi)) (eps_a - eps_b)/sqrt(eps_b mu_b)`.
pub fn c_eps_from_parameters(inc: &Inhomogeneity, bg: &Background, sigma1: f64) -> f64 {
    let k = bg.wavenumber();
    let amp = born_prefactor(k, inc.radius).norm() * (inc.epsilon_a - bg.epsilon_b)
        / (bg.epsilon_b * bg.mu_b).sqrt();
    (amp / sigma1).powi(2)
}

/// `C_mu = |c_mu|^2 / sigma^2` with the dipole amplitude
/// `alpha^2 pi k^2 (1+i)/(4 sqrt(k pi)) 2 mu_b/(mu_a + mu_b)`.
pub fn c_mu_from_parameters(inc: &Inhomogeneity, bg: &Background, sigma: f64) -> f64 {
    let k = bg.wavenumber();
    let amp = born_prefactor(k, inc.radius).norm() * 2.0 * bg.mu_b / (inc.mu_a + bg.mu_b);
    (amp / sigma).powi(2)
}
