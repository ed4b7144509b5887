//! Command implementations shared by the binary and the tests.
//!
//! Each command returns the paths it wrote. Work for independent
//! (frequency, N) combinations runs in parallel; files are written
//! afterwards in a fixed order so that output is reproducible.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forward::{add_noise, apply_mask, assemble_msr, strip_diagonal, MatrixKind, MsrMatrix};
use crate::io::config::LoadedConfig;
use crate::io::fresnel::{export_fresnel, ingest_fresnel, FresnelColumns};
use crate::io::map_file::{read_map_csv, write_map_csv, write_map_pgm, write_spectrum_csv};
use crate::io::msr_file::{read_msr, write_msr};
use crate::io::{hash_bytes, Provenance};
use crate::music::{decompose, image_map, RankPolicy, Side, TestFamily};
use crate::scene::{uniform_directions, ArrayConfig, RoiGrid, Scene, Vec2};
use crate::theory::{
    compare_maps, identity_j0_sum, identity_j1_closed, identity_j1_sum, identity_j2_closed,
    identity_j2_sum, predicted_map, ComparisonReport, Polarization, TheoryParams,
};

/// Frequency label used in file names, in GHz.
pub fn frequency_label(f: f64) -> String {
    format!("{}GHz", f / 1e9)
}

/// Per-matrix noise seed derived from the run seed and the combination, so
/// that each matrix gets an independent realization.
pub fn derive_seed(base: u64, frequency: f64, n: usize, kind: MatrixKind) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(frequency.to_bits().to_le_bytes());
    h.update((n as u64).to_le_bytes());
    h.update(kind.as_str().as_bytes());
    let d = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&d[..8]);
    u64::from_le_bytes(b)
}

struct Job {
    frequency: f64,
    n: usize,
    kinds: Vec<MatrixKind>,
}

fn simulate_one(scene: &Scene, cfg: &LoadedConfig, seed: u64, job: &Job) -> Result<Vec<(String, MsrMatrix)>> {
    let c = &cfg.config;
    let scene = scene.at_frequency(job.frequency)?;
    let label = frequency_label(job.frequency);
    let mut out = Vec::new();
    let noise_for = |kind: MatrixKind, n: usize| {
        let mut spec = c.noise.spec();
        spec.seed = derive_seed(seed, job.frequency, n, kind);
        spec
    };
    if job.n > 0 {
        let full = assemble_msr(&scene, &ArrayConfig::symmetric(job.n)?, c.generator)?;
        for &kind in &job.kinds {
            let clean = match kind {
                MatrixKind::Full => full.clone(),
                MatrixKind::DiagonalFree => strip_diagonal(&full)?,
                MatrixKind::Bistatic => continue,
            };
            let m = add_noise(&clean, &noise_for(kind, job.n))?;
            out.push((format!("msr_{label}_n{}_{}.txt", job.n, kind.as_str()), m));
        }
    } else {
        let layout = ArrayConfig::fresnel();
        let full = assemble_msr(&scene, &layout, c.generator)?;
        let masked = apply_mask(&full, &layout.mask)?;
        let m = add_noise(&masked, &noise_for(MatrixKind::Bistatic, 0))?;
        out.push((format!("msr_{label}_bistatic.txt"), m));
    }
    Ok(out)
}

/// Generate MSR matrix files for every configured frequency, array size and
/// kind. Bistatic matrices are additionally exported together as a
/// measurement file `fresnel_synthetic.exp`.
pub fn cmd_simulate(cfg: &LoadedConfig, seed: Option<u64>, output_dir: &Path) -> Result<Vec<PathBuf>> {
    let c = &cfg.config;
    let seed = seed.unwrap_or(c.noise.seed);
    let scene = &cfg.scene_file.scene;
    let mut jobs = Vec::new();
    for &f in &c.frequencies {
        let sym: Vec<MatrixKind> = c
            .array
            .kinds
            .iter()
            .copied()
            .filter(|k| *k != MatrixKind::Bistatic)
            .collect();
        if !sym.is_empty() {
            for &n in &c.array.n {
                jobs.push(Job {
                    frequency: f,
                    n,
                    kinds: sym.clone(),
                });
            }
        }
        if c.array.kinds.contains(&MatrixKind::Bistatic) {
            jobs.push(Job {
                frequency: f,
                n: 0,
                kinds: vec![MatrixKind::Bistatic],
            });
        }
    }
    let results: Vec<Vec<(String, MsrMatrix)>> = jobs
        .par_iter()
        .map(|job| simulate_one(scene, cfg, seed, job))
        .collect::<Result<_>>()?;
    let prov = Provenance::new(cfg.hash.clone(), Some(seed)).with_generator(Some(c.generator));
    let mut written = Vec::new();
    let mut bistatic = Vec::new();
    for (name, m) in results.into_iter().flatten() {
        let path = output_dir.join(&name);
        write_msr(&path, &m, &prov)?;
        info!("wrote {}", path.display());
        written.push(path);
        if m.kind == MatrixKind::Bistatic {
            bistatic.push(m);
        }
    }
    if !bistatic.is_empty() {
        let path = output_dir.join("fresnel_synthetic.exp");
        export_fresnel(&path, &bistatic, &c.fresnel)?;
        written.push(path);
    }
    Ok(written)
}

/// Options for [`cmd_image`].
#[derive(Debug, Clone)]
pub struct ImageOptions {
    pub grid: RoiGrid,
    pub rank: RankPolicy,
    pub family: TestFamily,
    /// Defaults to left for square matrices and both for bistatic ones.
    pub side: Option<Side>,
    pub peak_cap: f64,
    pub config_hash: Option<String>,
}

/// Decompose an MSR file and write `<stem>_map.csv`, `<stem>_map.pgm` and
/// `<stem>_spectrum.csv`.
pub fn cmd_image(matrix: &Path, opts: &ImageOptions, output_dir: &Path) -> Result<Vec<PathBuf>> {
    let (msr, in_prov) = read_msr(matrix)?;
    let dec = decompose(&msr)?.with_rank(opts.rank)?;
    let side = opts.side.unwrap_or(match msr.kind {
        MatrixKind::Bistatic => Side::Both,
        _ => Side::Left,
    });
    let map = image_map(&dec, &opts.grid, opts.family, side, opts.peak_cap)?;
    let hash = opts.config_hash.clone().unwrap_or_else(|| {
        let mut s = in_prov.config_hash.clone();
        let _ = write!(s, "|{:?}", opts);
        hash_bytes(s.as_bytes())
    });
    let prov = Provenance::new(hash, in_prov.seed).with_generator(in_prov.generator);
    let stem = matrix
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "msr".into());
    let csv = output_dir.join(format!("{stem}_map.csv"));
    let pgm = output_dir.join(format!("{stem}_map.pgm"));
    let spec = output_dir.join(format!("{stem}_spectrum.csv"));
    write_map_csv(&csv, &map, &prov)?;
    write_map_pgm(&pgm, &map, &prov)?;
    write_spectrum_csv(&spec, &dec, &prov)?;
    info!("signal rank {} for {}", dec.signal_rank.unwrap_or(0), matrix.display());
    Ok(vec![csv, pgm, spec])
}

/// What an empirical map is compared against.
#[derive(Debug, Clone)]
pub enum CompareTarget {
    /// Closed-form single-inclusion predictor; `N` and `k` come from the map.
    Theory {
        center: Vec2,
        polarization: Polarization,
    },
    /// Another map file on the same grid.
    Map(PathBuf),
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub min_correlation: f64,
    pub max_l2_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            min_correlation: 0.99,
            max_l2_rel: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub report: ComparisonReport,
    pub pass: bool,
}

/// Compare an empirical map with a predictor or a second map, excluding
/// pixels within `exclusion_px` pixel widths of the center.
pub fn cmd_compare(
    map_path: &Path,
    target: &CompareTarget,
    exclusion_px: f64,
    tol: Tolerances,
    output_dir: Option<&Path>,
) -> Result<CompareOutcome> {
    let (emp, _) = read_map_csv(map_path)?;
    let g = emp.grid;
    let (other, centers) = match target {
        CompareTarget::Theory {
            center,
            polarization,
        } => {
            let params = TheoryParams::new(emp.meta.n_transmitters, emp.meta.wavenumber, *center)?;
            (predicted_map(&g, &params, *polarization, emp.peak_cap)?, vec![*center])
        }
        CompareTarget::Map(p) => (read_map_csv(p)?.0, Vec::new()),
    };
    let radius = exclusion_px * g.dx().max(g.dy());
    let report = compare_maps(&emp, &other, &centers, radius)?;
    let pass = report.correlation >= tol.min_correlation && report.l2_rel <= tol.max_l2_rel;
    if let Some(dir) = output_dir {
        let mut kv = report.to_key_value();
        let _ = writeln!(kv, "pass: {pass}");
        crate::io::write_bytes(&dir.join("compare_report.txt"), kv.as_bytes())?;
        crate::io::write_bytes(&dir.join("compare_report.csv"), report.to_csv().as_bytes())?;
    }
    Ok(CompareOutcome { report, pass })
}

/// Read a measurement file and write one bistatic MSR file per frequency.
pub fn cmd_ingest(
    input: &Path,
    columns: &FresnelColumns,
    output_dir: &Path,
    config_hash: Option<String>,
) -> Result<Vec<PathBuf>> {
    let mats = ingest_fresnel(input, columns)?;
    let hash = config_hash.unwrap_or_else(|| {
        let bytes = std::fs::read(input).unwrap_or_default();
        hash_bytes(&bytes)
    });
    let prov = Provenance::new(hash, None);
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "fresnel".into());
    let mut out = Vec::new();
    for m in &mats {
        let path = output_dir.join(format!("{stem}_{}.txt", frequency_label(m.frequency)));
        write_msr(&path, m, &prov)?;
        out.push(path);
    }
    Ok(out)
}

/// Maximum deviations of the direction-sum identities from their closed
/// forms over random points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub n: usize,
    pub points: usize,
    pub j0_err: f64,
    pub j1_err: f64,
    pub j2_err: f64,
    pub second_moment_err: f64,
}

impl IdentityReport {
    pub fn passes(&self) -> bool {
        let nf = self.n as f64;
        self.j0_err <= 1e-8
            && self.j1_err <= 1e-7 * nf
            && self.j2_err <= 1e-6 * nf
            && self.second_moment_err <= 1e-12 * nf
    }

    pub fn to_key_value(&self) -> String {
        format!(
            "n: {}\npoints: {}\nj0_max_err: {:e}\nj1_max_err: {:e}\nj2_max_err: {:e}\nsecond_moment_max_err: {:e}\npass: {}\n",
            self.n,
            self.points,
            self.j0_err,
            self.j1_err,
            self.j2_err,
            self.second_moment_err,
            self.passes()
        )
    }
}

/// Check the identities at `points` random `x` with `k|x| <= kr_max`, each
/// with a random unit `xi` and a random direction index.
pub fn cmd_validate_identities(n: usize, points: usize, kr_max: f64, seed: u64) -> Result<IdentityReport> {
    if points == 0 {
        return Err(Error::Invalid("need at least one sample point".into()));
    }
    let dirs = uniform_directions(n)?;
    let k = 1.0;
    let nf = n as f64;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rep = IdentityReport {
        n,
        points,
        j0_err: 0.0,
        j1_err: 0.0,
        j2_err: 0.0,
        second_moment_err: 0.0,
    };
    for _ in 0..points {
        let r = kr_max * rng.random::<f64>().sqrt();
        let a = std::f64::consts::TAU * rng.random::<f64>();
        let x = Vec2::new(r * a.cos(), r * a.sin());
        let b = std::f64::consts::TAU * rng.random::<f64>();
        let xi = Vec2::new(b.cos(), b.sin());
        let m = rng.random_range(0..n);
        let j0 = crate::specfun::bessel_j(0, r)?;
        rep.j0_err = rep.j0_err.max((identity_j0_sum(&x, &dirs, k) - j0).norm());
        if r > 0.0 {
            let want = identity_j1_closed(&x, &xi, n, k)?;
            rep.j1_err = rep.j1_err.max((identity_j1_sum(&x, &xi, &dirs, k) - want).norm());
        }
        let want2 = identity_j2_closed(&x, &xi, &dirs[m], n, k);
        rep.j2_err = rep
            .j2_err
            .max((identity_j2_sum(&x, &xi, &dirs[m], &dirs, k) - want2).norm());
        let moment: f64 = dirs.iter().map(|d| xi.dot(d).powi(2)).sum();
        rep.second_moment_err = rep.second_moment_err.max((moment - nf / 2.0).abs());
    }
    Ok(rep)
}
