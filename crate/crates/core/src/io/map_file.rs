//! Imaging-map CSV and PGM output, plus the singular-value spectrum CSV.
//!
//! The map CSV carries its grid and metadata in the `#` header so that it
//! can be read back into an [`ImagingMap`]:
//!
//! ```text
//! # music-scatter map
//! # version: ..
//! # config_hash: ..
//! # seed: ..
//! # grid: <x_min> <x_max> <y_min> <y_max> <nx> <ny>
//! # peak_cap: <cap>
//! # family: tm | te-sweep | te:<xi_x>,<xi_y>
//! # side: left | right | both
//! # kind: full | diagonal-free | bistatic
//! # signal_rank: <r>
//! # frequency: <Hz>
//! # wavenumber: <rad/m>
//! # transmitters: <n>
//! # receivers: <m>
//! x,y,value
//! ```
//!
//! Rows follow the grid's linear order (x fastest).

use std::fmt::Write as _;
use std::path::Path;

use super::{
    parse_err, parse_f64, parse_usize, read_to_string, write_bytes, Provenance,
};
use crate::error::Result;
use crate::forward::MatrixKind;
use crate::music::{ImagingMap, MapMeta, Side, SubspaceDecomposition, TestFamily};
use crate::scene::RoiGrid;

fn family_code(f: &TestFamily) -> String {
    match f {
        TestFamily::Tm => "tm".into(),
        TestFamily::TeSweep => "te-sweep".into(),
        TestFamily::Te { xi } => format!("te:{},{}", xi[0], xi[1]),
    }
}

fn parse_family(s: &str) -> Option<TestFamily> {
    match s {
        "tm" => Some(TestFamily::Tm),
        "te-sweep" => Some(TestFamily::TeSweep),
        _ => {
            let (a, b) = s.strip_prefix("te:")?.split_once(',')?;
            Some(TestFamily::Te {
                xi: [a.parse().ok()?, b.parse().ok()?],
            })
        }
    }
}

fn side_code(s: Side) -> &'static str {
    match s {
        Side::Left => "left",
        Side::Right => "right",
        Side::Both => "both",
    }
}

fn parse_side(s: &str) -> Option<Side> {
    match s {
        "left" => Some(Side::Left),
        "right" => Some(Side::Right),
        "both" => Some(Side::Both),
        _ => None,
    }
}

pub fn map_to_csv(map: &ImagingMap, prov: &Provenance) -> String {
    let g = &map.grid;
    let m = &map.meta;
    let mut s = prov.header_lines("map");
    let _ = writeln!(
        s,
        "# grid: {} {} {} {} {} {}",
        g.x_min, g.x_max, g.y_min, g.y_max, g.nx, g.ny
    );
    let _ = writeln!(s, "# peak_cap: {}", map.peak_cap);
    let _ = writeln!(s, "# family: {}", family_code(&m.family));
    let _ = writeln!(s, "# side: {}", side_code(m.side));
    let _ = writeln!(s, "# kind: {}", m.kind.as_str());
    let _ = writeln!(s, "# signal_rank: {}", m.signal_rank);
    let _ = writeln!(s, "# frequency: {}", m.frequency);
    let _ = writeln!(s, "# wavenumber: {}", m.wavenumber);
    let _ = writeln!(s, "# transmitters: {}", m.n_transmitters);
    let _ = writeln!(s, "# receivers: {}", m.n_receivers);
    s.push_str("x,y,value\n");
    for (idx, v) in map.values.iter().enumerate() {
        let p = g.point_at(idx);
        let _ = writeln!(s, "{},{},{}", p.x, p.y, v);
    }
    s
}

pub fn write_map_csv(path: &Path, map: &ImagingMap, prov: &Provenance) -> Result<()> {
    write_bytes(path, map_to_csv(map, prov).as_bytes())
}

pub fn read_map_csv(path: &Path) -> Result<(ImagingMap, Provenance)> {
    let text = read_to_string(path)?;
    parse_map_csv(&text, path)
}

#[derive(Default)]
struct MapHeader {
    grid: Option<RoiGrid>,
    peak_cap: Option<f64>,
    family: Option<TestFamily>,
    side: Option<Side>,
    kind: Option<MatrixKind>,
    signal_rank: Option<usize>,
    frequency: Option<f64>,
    wavenumber: Option<f64>,
    transmitters: Option<usize>,
    receivers: Option<usize>,
}

pub fn parse_map_csv(text: &str, path: &Path) -> Result<(ImagingMap, Provenance)> {
    let mut prov = Provenance::default();
    let mut h = MapHeader::default();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((i, line)) = lines.peek().copied() {
        let Some(c) = line.strip_prefix('#') else { break };
        lines.next();
        let ln = i + 1;
        let Some((key, val)) = c.trim().split_once(':') else { continue };
        let val = val.trim();
        if prov.read_header(path, ln, key, val)? {
            continue;
        }
        match key {
            "grid" => {
                let f: Vec<&str> = val.split_whitespace().collect();
                if f.len() != 6 {
                    return Err(parse_err(path, ln, "grid needs six fields"));
                }
                h.grid = Some(RoiGrid::new(
                    parse_f64(path, ln, f[0])?,
                    parse_f64(path, ln, f[1])?,
                    parse_f64(path, ln, f[2])?,
                    parse_f64(path, ln, f[3])?,
                    parse_usize(path, ln, f[4])?,
                    parse_usize(path, ln, f[5])?,
                )?);
            }
            "peak_cap" => h.peak_cap = Some(parse_f64(path, ln, val)?),
            "family" => {
                h.family =
                    Some(parse_family(val).ok_or_else(|| parse_err(path, ln, "unknown family"))?)
            }
            "side" => h.side = Some(parse_side(val).ok_or_else(|| parse_err(path, ln, "unknown side"))?),
            "kind" => {
                h.kind = Some(val.parse().map_err(|_| parse_err(path, ln, "unknown kind"))?)
            }
            "signal_rank" => h.signal_rank = Some(parse_usize(path, ln, val)?),
            "frequency" => h.frequency = Some(parse_f64(path, ln, val)?),
            "wavenumber" => h.wavenumber = Some(parse_f64(path, ln, val)?),
            "transmitters" => h.transmitters = Some(parse_usize(path, ln, val)?),
            "receivers" => h.receivers = Some(parse_usize(path, ln, val)?),
            _ => {}
        }
    }
    let missing = |what: &str| parse_err(path, 0, format!("header is missing '{what}'"));
    let grid = h.grid.ok_or_else(|| missing("grid"))?;
    match lines.next() {
        Some((_, "x,y,value")) => {}
        Some((i, _)) => return Err(parse_err(path, i + 1, "expected column header 'x,y,value'")),
        None => return Err(parse_err(path, 0, "missing column header")),
    }
    let mut values = Vec::with_capacity(grid.len());
    for (i, line) in lines {
        let ln = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(parse_err(path, ln, "expected 'x,y,value'"));
        }
        let idx = values.len();
        if idx >= grid.len() {
            return Err(parse_err(path, ln, "more rows than grid pixels"));
        }
        let p = grid.point_at(idx);
        if parse_f64(path, ln, f[0])? != p.x || parse_f64(path, ln, f[1])? != p.y {
            return Err(parse_err(path, ln, "pixel coordinates do not match the grid"));
        }
        values.push(parse_f64(path, ln, f[2])?);
    }
    if values.len() != grid.len() {
        return Err(parse_err(
            path,
            0,
            format!("expected {} rows, found {}", grid.len(), values.len()),
        ));
    }
    let map = ImagingMap {
        grid,
        values,
        peak_cap: h.peak_cap.ok_or_else(|| missing("peak_cap"))?,
        meta: MapMeta {
            family: h.family.ok_or_else(|| missing("family"))?,
            side: h.side.ok_or_else(|| missing("side"))?,
            kind: h.kind.ok_or_else(|| missing("kind"))?,
            signal_rank: h.signal_rank.ok_or_else(|| missing("signal_rank"))?,
            frequency: h.frequency.ok_or_else(|| missing("frequency"))?,
            wavenumber: h.wavenumber.ok_or_else(|| missing("wavenumber"))?,
            n_transmitters: h.transmitters.ok_or_else(|| missing("transmitters"))?,
            n_receivers: h.receivers.ok_or_else(|| missing("receivers"))?,
        },
    };
    Ok((map, prov))
}

/// 8-bit binary PGM, min-max normalized per map, top row = largest y.
pub fn map_to_pgm(map: &ImagingMap, prov: &Provenance) -> Vec<u8> {
    let g = &map.grid;
    let lo = map.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = map.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut header = String::from("P5\n");
    header.push_str(&prov.header_lines("map-pgm"));
    let _ = writeln!(header, "# normalization: per-map min-max, min={lo} max={hi}");
    let _ = writeln!(header, "# family: {}", family_code(&map.meta.family));
    let _ = write!(header, "{} {}\n255\n", g.nx, g.ny);
    let mut out = header.into_bytes();
    out.reserve(g.len());
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            let v = map.values[g.index(i, j)];
            let t = if span > 0.0 { (v - lo) / span } else { 0.0 };
            out.push((t * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}

pub fn write_map_pgm(path: &Path, map: &ImagingMap, prov: &Provenance) -> Result<()> {
    write_bytes(path, &map_to_pgm(map, prov))
}

/// Spectrum CSV with columns `n,sigma,sigma_normalized`, 1-based `n`.
pub fn spectrum_to_csv(dec: &SubspaceDecomposition, prov: &Provenance) -> String {
    let mut s = prov.header_lines("spectrum");
    let _ = writeln!(s, "# frequency: {}", dec.frequency);
    let _ = writeln!(s, "# kind: {}", dec.kind.as_str());
    s.push_str("n,sigma,sigma_normalized\n");
    for (i, (sv, nv)) in dec
        .singular_values
        .iter()
        .zip(dec.normalized_spectrum())
        .enumerate()
    {
        let _ = writeln!(s, "{},{},{}", i + 1, sv, nv);
    }
    s
}

pub fn write_spectrum_csv(path: &Path, dec: &SubspaceDecomposition, prov: &Provenance) -> Result<()> {
    write_bytes(path, spectrum_to_csv(dec, prov).as_bytes())
}
