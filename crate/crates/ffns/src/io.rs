//! On-disk formats: binary field snapshots, trajectory directories with a
//! line-delimited manifest, per-check CSV tables and the JSON summary.
//!
//! # Snapshot layout
//!
//! | offset | size | field                                             |
//! |-------:|-----:|---------------------------------------------------|
//! | 0      | 8    | magic `FFNSSNAP`                                  |
//! | 8      | 4    | endianness tag `0x01020304` in the writer's order |
//! | 12     | 4    | format version (`1`)                              |
//! | 16     | 4    | dimension `d`                                     |
//! | 20     | 4    | points per axis `N`                               |
//! | 24     | 8    | half-width `L`                                    |
//! | 32     | 8    | time                                              |
//! | 40     | 4    | component count                                   |
//! | 44     | 4    | flags (bit 0: divergence-free)                    |
//! | 48     | …    | `f64` samples, component-major, each component in |
//! |        |      | row-major node order (last axis fastest)          |
//!
//! Integers are `u32`. All fields use the byte order announced by the tag.

use std::fs;
use std::io::{BufWriter, Cursor, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, ByteOrder, LittleEndian, ReadBytesExt, WriteBytesExt};
use ffns_core::grid::{BoxGrid, VectorFieldGrid};
use ffns_core::Dim;
use serde::Serialize;

use crate::checks::CheckResult;
use crate::error::{FfnsError, Result};
use crate::solver::Trajectory;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"FFNSSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;
pub const ENDIAN_TAG: u32 = 0x0102_0304;
pub const HEADER_LEN: usize = 48;
pub const MANIFEST: &str = "manifest.txt";
const MANIFEST_HEADER: &str = "ffns-trajectory 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endian {
    Little,
    Big,
}

/// A snapshot together with the time stamped in its header.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub field: VectorFieldGrid,
}

fn put_all<B: ByteOrder>(out: &mut Vec<u8>, field: &VectorFieldGrid, time: f64) {
    let grid = field.grid();
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.write_u32::<B>(ENDIAN_TAG).unwrap();
    out.write_u32::<B>(SNAPSHOT_VERSION).unwrap();
    out.write_u32::<B>(grid.dim().n() as u32).unwrap();
    out.write_u32::<B>(grid.n() as u32).unwrap();
    out.write_f64::<B>(grid.half_width()).unwrap();
    out.write_f64::<B>(time).unwrap();
    out.write_u32::<B>(field.components().len() as u32).unwrap();
    out.write_u32::<B>(u32::from(field.is_divergence_free()))
        .unwrap();
    for comp in field.components() {
        for v in comp {
            out.write_f64::<B>(*v).unwrap();
        }
    }
}

pub fn encode_snapshot(field: &VectorFieldGrid, time: f64, endian: Endian) -> Vec<u8> {
    let mut out =
        Vec::with_capacity(HEADER_LEN + 8 * field.components().len() * field.grid().len());
    match endian {
        Endian::Little => put_all::<LittleEndian>(&mut out, field, time),
        Endian::Big => put_all::<BigEndian>(&mut out, field, time),
    }
    out
}

fn bad(path: &Path, message: impl Into<String>) -> FfnsError {
    FfnsError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn get_all<B: ByteOrder>(path: &Path, bytes: &[u8]) -> Result<Snapshot> {
    let mut r = Cursor::new(&bytes[12..]);
    let version = r.read_u32::<B>().unwrap();
    if version != SNAPSHOT_VERSION {
        return Err(bad(path, format!("unsupported snapshot version {version}")));
    }
    let d = r.read_u32::<B>().unwrap() as usize;
    let n = r.read_u32::<B>().unwrap() as usize;
    let l = r.read_f64::<B>().unwrap();
    let time = r.read_f64::<B>().unwrap();
    let comps = r.read_u32::<B>().unwrap() as usize;
    let flags = r.read_u32::<B>().unwrap();
    let dim = Dim::new(d).map_err(|e| bad(path, e.to_string()))?;
    let grid = BoxGrid::new(dim, l, n).map_err(|e| bad(path, e.to_string()))?;
    if comps != d {
        return Err(bad(
            path,
            format!("{comps} components for a {d}-dimensional field"),
        ));
    }
    let expected = HEADER_LEN + 8 * comps * grid.len();
    if bytes.len() != expected {
        return Err(bad(
            path,
            format!("length {} but header implies {expected}", bytes.len()),
        ));
    }
    let mut data = vec![vec![0.0; grid.len()]; comps];
    let mut body = &bytes[HEADER_LEN..];
    for c in data.iter_mut() {
        body.read_f64_into::<B>(c).unwrap();
    }
    let field = VectorFieldGrid::new(grid, data)
        .map_err(|e| bad(path, e.to_string()))?
        .with_divergence_free(flags & 1 == 1);
    Ok(Snapshot { time, field })
}

/// Decodes a snapshot in either byte order; `path` only labels errors.
pub fn decode_snapshot(path: &Path, bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN {
        return Err(bad(path, "truncated header"));
    }
    if &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(bad(path, "not a snapshot (bad magic)"));
    }
    match LittleEndian::read_u32(&bytes[8..12]) {
        ENDIAN_TAG => get_all::<LittleEndian>(path, bytes),
        t if t == ENDIAN_TAG.swap_bytes() => get_all::<BigEndian>(path, bytes),
        t => Err(bad(path, format!("unknown endianness tag {t:#010x}"))),
    }
}

pub fn write_snapshot(path: &Path, field: &VectorFieldGrid, time: f64) -> Result<()> {
    fs::write(path, encode_snapshot(field, time, Endian::Little))
        .map_err(|e| FfnsError::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| FfnsError::io(path, e))?;
    decode_snapshot(path, &bytes)
}

fn snapshot_name(m: usize) -> String {
    format!("slice_{m:05}.snap")
}

/// Writes snapshots and the manifest into `dir`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| FfnsError::io(dir, e))?;
    let g = traj.grid;
    let mut text = String::new();
    text.push_str(MANIFEST_HEADER);
    text.push('\n');
    text.push_str(&format!("scenario_hash {}\n", traj.scenario_hash));
    text.push_str(&format!(
        "grid {} {} {:?}\n",
        g.dim().n(),
        g.n(),
        g.half_width()
    ));
    text.push_str(&format!("contractive {}\n", traj.contractive));
    text.push_str(&format!(
        "max_divergence_residual {:?}\n",
        traj.max_divergence_residual
    ));
    for (k, v) in traj.iteration_log.iter().enumerate() {
        text.push_str(&format!("sweep {} {v:?}\n", k + 1));
    }
    for (m, (t, snap)) in traj.times.iter().zip(&traj.snapshots).enumerate() {
        let name = snapshot_name(m);
        write_snapshot(&dir.join(&name), snap, *t)?;
        let res = traj.residuals.get(m).copied().unwrap_or(0.0);
        text.push_str(&format!("slice {m} {t:?} {name} {res:?}\n"));
    }
    let path = dir.join(MANIFEST);
    fs::write(&path, text).map_err(|e| FfnsError::io(&path, e))
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, tok: Option<&str>) -> Result<T> {
    tok.and_then(|s| s.parse().ok())
        .ok_or_else(|| bad(path, format!("line {line}: malformed manifest entry")))
}

/// Reloads a trajectory written by [`write_trajectory`].
pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| FfnsError::io(&path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(MANIFEST_HEADER) {
        return Err(bad(&path, "missing manifest header"));
    }
    let mut hash = String::new();
    let mut grid = None;
    let mut contractive = None;
    let mut max_div = 0.0;
    let mut log = Vec::new();
    let mut times = Vec::new();
    let mut snaps = Vec::new();
    let mut residuals = Vec::new();
    for (i, line) in lines.enumerate() {
        let ln = i + 2;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("scenario_hash") => hash = field(&path, ln, tok.next())?,
            Some("grid") => {
                let d: usize = field(&path, ln, tok.next())?;
                let n: usize = field(&path, ln, tok.next())?;
                let l: f64 = field(&path, ln, tok.next())?;
                let dim = Dim::new(d).map_err(|e| bad(&path, e.to_string()))?;
                grid = Some(BoxGrid::new(dim, l, n).map_err(|e| bad(&path, e.to_string()))?);
            }
            Some("contractive") => contractive = Some(field::<bool>(&path, ln, tok.next())?),
            Some("max_divergence_residual") => max_div = field(&path, ln, tok.next())?,
            Some("sweep") => {
                let k: usize = field(&path, ln, tok.next())?;
                if k != log.len() + 1 {
                    return Err(bad(&path, format!("line {ln}: sweeps out of order")));
                }
                log.push(field(&path, ln, tok.next())?);
            }
            Some("slice") => {
                let m: usize = field(&path, ln, tok.next())?;
                let t: f64 = field(&path, ln, tok.next())?;
                let name: String = field(&path, ln, tok.next())?;
                let res: f64 = field(&path, ln, tok.next())?;
                if m != times.len() {
                    return Err(bad(&path, format!("line {ln}: slices out of order")));
                }
                let snap = read_snapshot(&dir.join(&name))?;
                if snap.time.to_bits() != t.to_bits() {
                    return Err(bad(
                        &path,
                        format!("line {ln}: {name} is stamped t = {}", snap.time),
                    ));
                }
                if Some(*snap.field.grid()) != grid {
                    return Err(bad(
                        &path,
                        format!("line {ln}: {name} is on a different grid"),
                    ));
                }
                times.push(t);
                snaps.push(snap.field);
                residuals.push(res);
            }
            Some(other) => return Err(bad(&path, format!("line {ln}: unknown entry {other}"))),
            None => {}
        }
    }
    let grid = grid.ok_or_else(|| bad(&path, "no grid entry"))?;
    if times.is_empty() {
        return Err(bad(&path, "no slices"));
    }
    let mut traj = Trajectory::new(grid, times, snaps, log, residuals, hash);
    if let Some(c) = contractive {
        traj.contractive = c;
    }
    traj.max_divergence_residual = max_div;
    Ok(traj)
}

/// Short hash prefix used in report file names.
pub fn hash_prefix(hash: &str) -> &str {
    &hash[..hash.len().min(16)]
}

pub fn csv_name(hash: &str, check: &str, suffix: &str) -> String {
    if suffix.is_empty() {
        format!("{}_{check}.csv", hash_prefix(hash))
    } else {
        format!("{}_{check}-{suffix}.csv", hash_prefix(hash))
    }
}

pub fn summary_name(hash: &str) -> String {
    format!("{}_summary.json", hash_prefix(hash))
}

/// Writes every table of a check and returns the file paths.
pub fn write_check_tables(dir: &Path, hash: &str, check: &CheckResult) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for table in &check.tables {
        let path = dir.join(csv_name(hash, &check.name, &table.suffix));
        let file = fs::File::create(&path).map_err(|e| FfnsError::io(&path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        if table.rows.is_empty() {
            w.write_record(["abscissa", "value", "prediction", "residual"])
                .map_err(|e| bad(&path, e.to_string()))?;
        }
        for row in &table.rows {
            w.serialize(row).map_err(|e| bad(&path, e.to_string()))?;
        }
        w.flush().map_err(|e| FfnsError::io(&path, e))?;
        out.push(path);
    }
    Ok(out)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| FfnsError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| bad(path, e.to_string()))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| FfnsError::io(path, e))
}

/// Snapshots in `dir` sorted by their header times, for sampled forces.
pub fn read_snapshot_series(dir: &Path) -> Result<Vec<Snapshot>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| FfnsError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "snap"))
        .collect();
    paths.sort();
    let mut snaps = paths
        .iter()
        .map(|p| read_snapshot(p))
        .collect::<Result<Vec<_>>>()?;
    snaps.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(snaps)
}
