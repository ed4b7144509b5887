//! Text format for MSR matrices.
//!
//! ```text
//! # music-scatter msr
//! # version: 0.1.0
//! # config_hash: 0123456789abcdef
//! # seed: 42
//! shape: <receivers> <transmitters>
//! frequency: <Hz>
//! wavenumber: <rad/m>
//! kind: full | diagonal-free | bistatic
//! noise: none | <snr_db> <seed>
//! tx <n> <x> <y>          one line per transmitter (incident direction), 1-based
//! rx <m> <x> <y>          one line per receiver (observation direction), 1-based
//! entries:
//! <m> <n> <re> <im> <mask>  one line per entry, m outer, mask 0 or 1
//! ```

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{
    parse_err, parse_f64, parse_usize, read_to_string, write_bytes, Provenance,
};
use crate::error::Result;
use crate::forward::{MatrixKind, MsrMatrix, NoiseSpec};
use crate::scene::{Mask, Vec2};

pub fn msr_to_string(msr: &MsrMatrix, prov: &Provenance) -> String {
    let (rows, cols) = msr.shape();
    let mut s = prov.header_lines("msr");
    let _ = writeln!(s, "shape: {rows} {cols}");
    let _ = writeln!(s, "frequency: {}", msr.frequency);
    let _ = writeln!(s, "wavenumber: {}", msr.wavenumber);
    let _ = writeln!(s, "kind: {}", msr.kind.as_str());
    match msr.noise {
        None => s.push_str("noise: none\n"),
        Some(n) => {
            let _ = writeln!(s, "noise: {} {}", n.snr_db, n.seed);
        }
    }
    for (i, d) in msr.incident.iter().enumerate() {
        let _ = writeln!(s, "tx {} {} {}", i + 1, d.x, d.y);
    }
    for (i, d) in msr.observation.iter().enumerate() {
        let _ = writeln!(s, "rx {} {} {}", i + 1, d.x, d.y);
    }
    s.push_str("entries:\n");
    for m in 0..rows {
        for n in 0..cols {
            let z = msr.entries[(m, n)];
            let _ = writeln!(
                s,
                "{} {} {} {} {}",
                m + 1,
                n + 1,
                z.re,
                z.im,
                u8::from(msr.mask.get(m, n))
            );
        }
    }
    s
}

pub fn write_msr(path: &Path, msr: &MsrMatrix, prov: &Provenance) -> Result<()> {
    write_bytes(path, msr_to_string(msr, prov).as_bytes())
}

pub fn read_msr(path: &Path) -> Result<(MsrMatrix, Provenance)> {
    let text = read_to_string(path)?;
    parse_msr(&text, path)
}

fn value_after<'a>(path: &Path, line_no: usize, line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(':'))
        .map(str::trim)
        .ok_or_else(|| parse_err(path, line_no, format!("expected '{key}:'")))
}

pub fn parse_msr(text: &str, path: &Path) -> Result<(MsrMatrix, Provenance)> {
    let mut prov = Provenance::default();
    let mut body: Vec<(usize, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if let Some(c) = line.strip_prefix('#') {
            if let Some((key, val)) = c.trim().split_once(':') {
                prov.read_header(path, line_no, key, val.trim())?;
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        body.push((line_no, line));
    }
    let mut it = body.into_iter();
    let mut next = |key: &str| -> Result<(usize, String)> {
        let (n, l) = it
            .next()
            .ok_or_else(|| parse_err(path, 0, format!("missing '{key}'")))?;
        Ok((n, l.to_string()))
    };

    let (ln, l) = next("shape")?;
    let dims: Vec<&str> = value_after(path, ln, &l, "shape")?.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_err(path, ln, "shape needs two integers"));
    }
    let rows = parse_usize(path, ln, dims[0])?;
    let cols = parse_usize(path, ln, dims[1])?;
    let (ln, l) = next("frequency")?;
    let frequency = parse_f64(path, ln, value_after(path, ln, &l, "frequency")?)?;
    let (ln, l) = next("wavenumber")?;
    let wavenumber = parse_f64(path, ln, value_after(path, ln, &l, "wavenumber")?)?;
    let (ln, l) = next("kind")?;
    let kind: MatrixKind = value_after(path, ln, &l, "kind")?
        .parse()
        .map_err(|_| parse_err(path, ln, "unknown kind"))?;
    let (ln, l) = next("noise")?;
    let noise_str = value_after(path, ln, &l, "noise")?;
    let noise = if noise_str == "none" {
        None
    } else {
        let parts: Vec<&str> = noise_str.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(parse_err(path, ln, "noise needs '<snr_db> <seed>' or 'none'"));
        }
        let seed = parts[1]
            .parse::<u64>()
            .map_err(|_| parse_err(path, ln, "bad noise seed"))?;
        Some(NoiseSpec {
            snr_db: parse_f64(path, ln, parts[0])?,
            seed,
        })
    };

    let mut read_dirs = |tag: &str, count: usize| -> Result<Vec<Vec2>> {
        let mut dirs = Vec::with_capacity(count);
        for expect in 1..=count {
            let (ln, l) = next(tag)?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 4 || f[0] != tag {
                return Err(parse_err(path, ln, format!("expected '{tag} <index> <x> <y>'")));
            }
            if parse_usize(path, ln, f[1])? != expect {
                return Err(parse_err(path, ln, format!("expected {tag} index {expect}")));
            }
            dirs.push(Vec2::new(parse_f64(path, ln, f[2])?, parse_f64(path, ln, f[3])?));
        }
        Ok(dirs)
    };
    let incident = read_dirs("tx", cols)?;
    let observation = read_dirs("rx", rows)?;

    let (ln, l) = next("entries")?;
    if l.trim() != "entries:" {
        return Err(parse_err(path, ln, "expected 'entries:'"));
    }
    let mut entries = DMatrix::<Complex64>::zeros(rows, cols);
    let mut mask = Mask::full(rows, cols);
    for m in 0..rows {
        for n in 0..cols {
            let (ln, l) = next("entry")?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 5 {
                return Err(parse_err(path, ln, "entry needs 'm n re im mask'"));
            }
            if parse_usize(path, ln, f[0])? != m + 1 || parse_usize(path, ln, f[1])? != n + 1 {
                return Err(parse_err(path, ln, format!("expected entry ({}, {})", m + 1, n + 1)));
            }
            entries[(m, n)] = Complex64::new(parse_f64(path, ln, f[2])?, parse_f64(path, ln, f[3])?);
            match f[4] {
                "1" => {}
                "0" => mask.set(m, n, false),
                _ => return Err(parse_err(path, ln, "mask must be 0 or 1")),
            }
        }
    }
    if let Some((ln, _)) = it.next() {
        return Err(parse_err(path, ln, "trailing content after entries"));
    }
    let msr = MsrMatrix {
        entries,
        mask,
        kind,
        incident,
        observation,
        frequency,
        wavenumber,
        noise,
    };
    msr.validate()?;
    Ok((msr, prov))
}
