//! ASCII bistatic measurement files with per-line transmitter angle,
//! receiver angle, frequency, and complex total and incident fields.
//!
//! The column layout is not fixed: [`FresnelColumns`] names the 0-based
//! column of every field, how many leading lines to skip, and the comment
//! prefix. Fields may be separated by whitespace and/or commas.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{parse_err, parse_f64, read_to_string, write_bytes};
use crate::error::{Error, Result};
use crate::forward::{MatrixKind, MsrMatrix};
use crate::scene::{fresnel_mask, ArrayConfig, Background, Mask, FRESNEL_RX, FRESNEL_TX};

const TX_STEP_DEG: f64 = 10.0;
const RX_STEP_DEG: f64 = 5.0;
const LATTICE_TOL_DEG: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FresnelColumns {
    pub tx_deg: usize,
    pub rx_deg: usize,
    pub frequency: usize,
    pub total_re: usize,
    pub total_im: usize,
    pub incident_re: usize,
    pub incident_im: usize,
    /// Lines dropped unconditionally from the top of the file.
    pub skip_lines: usize,
    pub comment_prefix: String,
    /// Multiplier turning the frequency column into Hz (1e9 for GHz files).
    pub frequency_scale: f64,
}

impl Default for FresnelColumns {
    fn default() -> Self {
        FresnelColumns {
            tx_deg: 0,
            rx_deg: 1,
            frequency: 2,
            total_re: 3,
            total_im: 4,
            incident_re: 5,
            incident_im: 6,
            skip_lines: 0,
            comment_prefix: "#".into(),
            frequency_scale: 1.0,
        }
    }
}

impl FresnelColumns {
    fn indices(&self) -> [usize; 7] {
        [
            self.tx_deg,
            self.rx_deg,
            self.frequency,
            self.total_re,
            self.total_im,
            self.incident_re,
            self.incident_im,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let idx = self.indices();
        for (a, x) in idx.iter().enumerate() {
            if idx[a + 1..].contains(x) {
                return Err(Error::Invalid(format!("column {x} is assigned twice")));
            }
        }
        if !(self.frequency_scale.is_finite() && self.frequency_scale > 0.0) {
            return Err(Error::Invalid("frequency_scale must be finite and > 0".into()));
        }
        Ok(())
    }

    fn width(&self) -> usize {
        self.indices().iter().max().copied().unwrap_or(0) + 1
    }
}

/// One measurement line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelRecord {
    pub tx_deg: f64,
    pub rx_deg: f64,
    pub frequency: f64,
    pub total: Complex64,
    pub incident: Complex64,
}

impl FresnelRecord {
    pub fn scattered(&self) -> Complex64 {
        self.total - self.incident
    }
}

fn lattice_index(deg: f64, step: f64, count: usize) -> Option<usize> {
    if !(0.0..360.0).contains(&deg) {
        return None;
    }
    let q = deg / step;
    let r = q.round();
    if (q - r).abs() * step > LATTICE_TOL_DEG {
        return None;
    }
    let i = r as usize;
    (i < count).then_some(i)
}

pub fn parse_records(text: &str, path: &Path, cols: &FresnelColumns) -> Result<Vec<(usize, FresnelRecord)>> {
    cols.validate()?;
    let width = cols.width();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(cols.skip_lines) {
        let ln = i + 1;
        let t = line.trim();
        if t.is_empty() || (!cols.comment_prefix.is_empty() && t.starts_with(&cols.comment_prefix)) {
            continue;
        }
        let f: Vec<&str> = t
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if f.len() < width {
            return Err(parse_err(
                path,
                ln,
                format!("expected at least {width} columns, found {}", f.len()),
            ));
        }
        let rec = FresnelRecord {
            tx_deg: parse_f64(path, ln, f[cols.tx_deg])?,
            rx_deg: parse_f64(path, ln, f[cols.rx_deg])?,
            frequency: parse_f64(path, ln, f[cols.frequency])? * cols.frequency_scale,
            total: Complex64::new(
                parse_f64(path, ln, f[cols.total_re])?,
                parse_f64(path, ln, f[cols.total_im])?,
            ),
            incident: Complex64::new(
                parse_f64(path, ln, f[cols.incident_re])?,
                parse_f64(path, ln, f[cols.incident_im])?,
            ),
        };
        if !(rec.frequency.is_finite() && rec.frequency > 0.0) {
            return Err(parse_err(path, ln, "frequency must be finite and > 0"));
        }
        out.push((ln, rec));
    }
    Ok(out)
}

/// Build one masked 72x36 scattered-field matrix per frequency, in
/// ascending frequency order. Unmeasured pairs are masked out; a measured
/// set that differs from the standard 60-300 degree aperture is accepted
/// with a warning.
pub fn ingest_fresnel(path: &Path, cols: &FresnelColumns) -> Result<Vec<MsrMatrix>> {
    let text = read_to_string(path)?;
    ingest_fresnel_str(&text, path, cols)
}

pub fn ingest_fresnel_str(text: &str, path: &Path, cols: &FresnelColumns) -> Result<Vec<MsrMatrix>> {
    let records = parse_records(text, path, cols)?;
    if records.is_empty() {
        return Err(parse_err(path, 0, "no measurement records"));
    }
    let mut by_freq: BTreeMap<u64, Vec<(usize, FresnelRecord)>> = BTreeMap::new();
    for (ln, r) in records {
        // positive finite floats order like their bit patterns
        by_freq.entry(r.frequency.to_bits()).or_default().push((ln, r));
    }
    let layout = ArrayConfig::fresnel();
    let standard = fresnel_mask();
    let mut out = Vec::with_capacity(by_freq.len());
    for (bits, recs) in by_freq {
        let frequency = f64::from_bits(bits);
        let mut entries = DMatrix::<Complex64>::zeros(FRESNEL_RX, FRESNEL_TX);
        let mut mask = Mask::from_fn(FRESNEL_RX, FRESNEL_TX, |_, _| false);
        for (ln, r) in recs {
            let t = lattice_index(r.tx_deg, TX_STEP_DEG, FRESNEL_TX).ok_or_else(|| {
                parse_err(path, ln, format!("transmitter angle {} is off the 10 degree lattice", r.tx_deg))
            })?;
            let m = lattice_index(r.rx_deg, RX_STEP_DEG, FRESNEL_RX).ok_or_else(|| {
                parse_err(path, ln, format!("receiver angle {} is off the 5 degree lattice", r.rx_deg))
            })?;
            if mask.get(m, t) {
                return Err(parse_err(
                    path,
                    ln,
                    format!("duplicate record for tx {} rx {} at {frequency} Hz", r.tx_deg, r.rx_deg),
                ));
            }
            mask.set(m, t, true);
            entries[(m, t)] = r.scattered();
        }
        if mask != standard {
            warn!(
                "{}: {} Hz has {} measured pairs, standard aperture has {}",
                path.display(),
                frequency,
                mask.count_measured(),
                standard.count_measured()
            );
        }
        let msr = MsrMatrix {
            entries,
            mask,
            kind: MatrixKind::Bistatic,
            incident: layout.incident.clone(),
            observation: layout.observation.clone(),
            frequency,
            wavenumber: Background::vacuum(frequency)?.wavenumber(),
            noise: None,
        };
        msr.validate()?;
        out.push(msr);
    }
    Ok(out)
}

/// Write measured entries of Fresnel-layout matrices as records with
/// `total = scattered` and zero incident field, so that ingestion
/// reproduces the entries exactly (for `frequency_scale = 1`).
pub fn export_fresnel_string(msrs: &[MsrMatrix], cols: &FresnelColumns) -> Result<String> {
    cols.validate()?;
    let width = cols.width();
    let mut s = String::new();
    if !cols.comment_prefix.is_empty() {
        let _ = writeln!(
            s,
            "{} tx_deg rx_deg frequency total_re total_im incident_re incident_im",
            cols.comment_prefix
        );
    }
    let mut fields = vec![String::from("0"); width];
    for msr in msrs {
        if msr.shape() != (FRESNEL_RX, FRESNEL_TX) {
            return Err(Error::Shape {
                expected: (FRESNEL_RX, FRESNEL_TX),
                got: msr.shape(),
            });
        }
        for t in 0..FRESNEL_TX {
            for m in 0..FRESNEL_RX {
                if !msr.mask.get(m, t) {
                    continue;
                }
                let z = msr.entries[(m, t)];
                fields[cols.tx_deg] = format!("{}", TX_STEP_DEG * t as f64);
                fields[cols.rx_deg] = format!("{}", RX_STEP_DEG * m as f64);
                fields[cols.frequency] = format!("{}", msr.frequency / cols.frequency_scale);
                fields[cols.total_re] = format!("{}", z.re);
                fields[cols.total_im] = format!("{}", z.im);
                fields[cols.incident_re] = "0".into();
                fields[cols.incident_im] = "0".into();
                s.push_str(&fields.join(" "));
                s.push('\n');
            }
        }
    }
    Ok(s)
}

pub fn export_fresnel(path: &Path, msrs: &[MsrMatrix], cols: &FresnelColumns) -> Result<()> {
    write_bytes(path, export_fresnel_string(msrs, cols)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice() {
        assert_eq!(lattice_index(350.0, 10.0, 36), Some(35));
        assert_eq!(lattice_index(355.0, 10.0, 36), None);
        assert_eq!(lattice_index(360.0, 5.0, 72), None);
        assert_eq!(lattice_index(-5.0, 5.0, 72), None);
        assert_eq!(lattice_index(60.0000000001, 5.0, 72), Some(12));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "# header\n0 60 1e9 1 2 0 0\n0 65 1e9 oops 2 0 0\n";
        let err = ingest_fresnel_str(text, Path::new("x.exp"), &FresnelColumns::default()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn off_lattice_angle_rejected() {
        let text = "5 60 1e9 1 2 0 0\n";
        assert!(ingest_fresnel_str(text, Path::new("x"), &FresnelColumns::default()).is_err());
    }

    #[test]
    fn duplicate_columns_rejected() {
        let c = FresnelColumns {
            rx_deg: 0,
            ..FresnelColumns::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn scattered_is_total_minus_incident() {
        let text = "10,65,2e9,3,4,1,1\n";
        let m = ingest_fresnel_str(text, Path::new("x"), &FresnelColumns::default()).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].entries[(13, 1)], Complex64::new(2.0, 3.0));
        assert_eq!(m[0].mask.count_measured(), 1);
    }
}
