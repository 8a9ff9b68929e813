//! File formats: the functional time series, field checkpoints and the
//! retained late-time snapshots. Every float is written with Rust's shortest
//! round-trip formatting, so reading a file back reproduces the bits.
//!
//! Series columns, in order:
//!
//! ```text
//! t, dt, mass_u, mass_v, mass_w, linf_u, argmax_radius, entropy, F, D, wt_l2,
//! per cutoff r:  M_phi(r=…), F_phi(r=…), D_phi(r=…), R_phi(r=…),
//!                gradw_l2_phi(r=…), mt_ratio(r=…), jensen_gap(r=…),
//! per ball r:    ball_mass(r=…),
//! pointwise_w_monitor,
//! lyap_defect,
//! per cutoff r:  loc_defect(r=…), jensen_scale(r=…), sobolev_slack(r=…)
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::functionals::{FunctionalSample, LocalizedValues};
use crate::solver::FieldState;

pub const FIXED_COLUMNS: [&str; 11] =
    ["t", "dt", "mass_u", "mass_v", "mass_w", "linf_u", "argmax_radius", "entropy", "F", "D", "wt_l2"];

pub const CUTOFF_COLUMNS: [&str; 7] =
    ["M_phi", "F_phi", "D_phi", "R_phi", "gradw_l2_phi", "mt_ratio", "jensen_gap"];

pub const TRAILING_CUTOFF_COLUMNS: [&str; 3] = ["loc_defect", "jensen_scale", "sobolev_slack"];

pub const CHECKPOINT_MAGIC: &str = "growup-checkpoint-v1";

/// Radii that label the per-cutoff and per-ball column groups.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesLayout {
    pub cutoff_radii: Vec<f64>,
    pub ball_radii: Vec<f64>,
}

impl SeriesLayout {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
        for r in &self.cutoff_radii {
            h.extend(CUTOFF_COLUMNS.iter().map(|c| format!("{c}(r={r})")));
        }
        h.extend(self.ball_radii.iter().map(|r| format!("ball_mass(r={r})")));
        h.push("pointwise_w_monitor".into());
        h.push("lyap_defect".into());
        for r in &self.cutoff_radii {
            h.extend(TRAILING_CUTOFF_COLUMNS.iter().map(|c| format!("{c}(r={r})")));
        }
        h
    }

    /// Recover the layout from a header, checking every column name.
    pub fn from_header(header: &[String]) -> std::result::Result<Self, String> {
        let radius_of = |name: &str, prefix: &str| -> Option<f64> {
            name.strip_prefix(prefix)?.strip_prefix("(r=")?.strip_suffix(')')?.parse().ok()
        };
        let mut cutoff_radii = Vec::new();
        let mut k = FIXED_COLUMNS.len();
        while let Some(r) = header.get(k).and_then(|h| radius_of(h, CUTOFF_COLUMNS[0])) {
            cutoff_radii.push(r);
            k += CUTOFF_COLUMNS.len();
        }
        let mut ball_radii = Vec::new();
        while let Some(r) = header.get(k).and_then(|h| radius_of(h, "ball_mass")) {
            ball_radii.push(r);
            k += 1;
        }
        let layout = Self { cutoff_radii, ball_radii };
        let expected = layout.header();
        if expected.as_slice() != header {
            let at = expected.iter().zip(header).position(|(a, b)| a != b).unwrap_or(expected.len().min(header.len()));
            return Err(format!(
                "unexpected header at column {at}: expected {:?}, found {:?}",
                expected.get(at),
                header.get(at)
            ));
        }
        Ok(layout)
    }

    pub fn row(&self, s: &FunctionalSample) -> Vec<String> {
        let mut out: Vec<f64> =
            vec![s.t, s.dt, s.mass_u, s.mass_v, s.mass_w, s.linf_u, s.argmax_radius, s.entropy, s.f, s.d, s.wt_l2];
        for l in &s.localized {
            out.extend([l.mass_phi, l.f_phi, l.d_phi, l.r_phi, l.gradw_l2_phi, l.mt_ratio, l.jensen_gap]);
        }
        out.extend(&s.ball_masses);
        out.push(s.pointwise_w);
        out.push(s.lyap_defect);
        for (l, d) in s.localized.iter().zip(&s.loc_defects) {
            out.extend([*d, l.jensen_scale, l.sobolev_slack]);
        }
        out.iter().map(|x| x.to_string()).collect()
    }

    pub fn parse_row(&self, v: &[f64]) -> FunctionalSample {
        let nc = self.cutoff_radii.len();
        let nb = self.ball_radii.len();
        let base = FIXED_COLUMNS.len();
        let trail = base + CUTOFF_COLUMNS.len() * nc + nb + 2;
        let localized = (0..nc)
            .map(|j| {
                let c = &v[base + CUTOFF_COLUMNS.len() * j..];
                let t = &v[trail + TRAILING_CUTOFF_COLUMNS.len() * j..];
                LocalizedValues {
                    mass_phi: c[0],
                    f_phi: c[1],
                    d_phi: c[2],
                    r_phi: c[3],
                    gradw_l2_phi: c[4],
                    mt_ratio: c[5],
                    jensen_gap: c[6],
                    jensen_scale: t[1],
                    sobolev_slack: t[2],
                }
            })
            .collect();
        let balls = base + CUTOFF_COLUMNS.len() * nc;
        FunctionalSample {
            t: v[0],
            dt: v[1],
            mass_u: v[2],
            mass_v: v[3],
            mass_w: v[4],
            linf_u: v[5],
            argmax_radius: v[6],
            entropy: v[7],
            f: v[8],
            d: v[9],
            wt_l2: v[10],
            localized,
            ball_masses: v[balls..balls + nb].to_vec(),
            pointwise_w: v[balls + nb],
            lyap_defect: v[balls + nb + 1],
            loc_defects: (0..nc).map(|j| v[trail + TRAILING_CUTOFF_COLUMNS.len() * j]).collect(),
        }
    }
}

/// Incremental writer for the series file.
pub struct SeriesWriter {
    path: PathBuf,
    layout: SeriesLayout,
    inner: csv::Writer<BufWriter<File>>,
}

impl SeriesWriter {
    pub fn create(path: &Path, layout: SeriesLayout) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut inner = csv::Writer::from_writer(BufWriter::new(file));
        inner.write_record(layout.header()).map_err(|e| csv_error(path, e))?;
        Ok(Self { path: path.to_path_buf(), layout, inner })
    }

    pub fn write(&mut self, s: &FunctionalSample) -> Result<()> {
        self.inner.write_record(self.layout.row(s)).map_err(|e| csv_error(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn csv_error(path: &Path, source: csv::Error) -> Error {
    Error::Csv { path: path.to_path_buf(), source }
}

pub fn write_series(path: &Path, layout: &SeriesLayout, samples: &[FunctionalSample]) -> Result<()> {
    let mut w = SeriesWriter::create(path, layout.clone())?;
    for s in samples {
        w.write(s)?;
    }
    w.finish()
}

/// Raw numeric content of a series file, before interpretation.
pub struct SeriesTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_series_table(path: &Path) -> Result<SeriesTable> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = rdr.headers().map_err(|e| csv_error(path, e))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.parse::<f64>().map_err(|_| {
                    Error::format(path, format!("row {}, column {}: not a number: {field:?}", line + 2, col + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(SeriesTable { header, rows })
}

pub fn read_series(path: &Path) -> Result<(SeriesLayout, Vec<FunctionalSample>)> {
    let table = read_series_table(path)?;
    let layout = SeriesLayout::from_header(&table.header).map_err(|m| Error::format(path, m))?;
    let samples = table.rows.iter().map(|r| layout.parse_row(r)).collect();
    Ok((layout, samples))
}

/// Grid identity and provenance stored with every checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointHeader {
    pub radius: f64,
    pub cells: usize,
    pub config_hash: String,
}

/// Write `state` as
///
/// ```text
/// growup-checkpoint-v1
/// radius,cells,config_hash,t,step_count
/// <values>
/// u,v,w,u0,v0,w0
/// <one row per cell>
/// ```
pub fn write_checkpoint(path: &Path, header: &CheckpointHeader, state: &FieldState) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{CHECKPOINT_MAGIC}").map_err(io)?;
    writeln!(out, "radius,cells,config_hash,t,step_count").map_err(io)?;
    writeln!(out, "{},{},{},{},{}", header.radius, header.cells, header.config_hash, state.t, state.step_count)
        .map_err(io)?;
    writeln!(out, "u,v,w,u0,v0,w0").map_err(io)?;
    for i in 0..state.cells() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            state.u[i],
            state.v[i],
            state.w[i],
            state.u0()[i],
            state.v0()[i],
            state.w0()[i]
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_checkpoint(path: &Path) -> Result<(CheckpointHeader, FieldState)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::format(path, format!("truncated before {what}")))?
            .map_err(|e| Error::io(path, e))
    };
    if next("magic")? != CHECKPOINT_MAGIC {
        return Err(Error::format(path, "not a checkpoint file"));
    }
    if next("header")? != "radius,cells,config_hash,t,step_count" {
        return Err(Error::format(path, "bad checkpoint header"));
    }
    let meta = next("metadata")?;
    let f: Vec<&str> = meta.split(',').collect();
    if f.len() != 5 {
        return Err(Error::format(path, "metadata must have 5 fields"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::format(path, format!("not a number: {s:?}")));
    let radius = num(f[0])?;
    let cells: usize = f[1].parse().map_err(|_| Error::format(path, "bad cell count"))?;
    let t = num(f[3])?;
    let step_count: u64 = f[4].parse().map_err(|_| Error::format(path, "bad step count"))?;
    if next("column header")? != "u,v,w,u0,v0,w0" {
        return Err(Error::format(path, "bad column header"));
    }
    let mut cols: [Vec<f64>; 6] = Default::default();
    for _ in 0..cells {
        let line = next("cell rows")?;
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 6 {
            return Err(Error::format(path, "cell rows must have 6 fields"));
        }
        for (c, p) in cols.iter_mut().zip(parts) {
            c.push(num(p)?);
        }
    }
    let [u, v, w, u0, v0, w0] = cols;
    let header = CheckpointHeader { radius, cells, config_hash: f[2].to_string() };
    Ok((header, FieldState::resume(u, v, w, t, step_count, [u0, v0, w0])))
}

/// Retained `u` fields, one row each: `t, u_0, …, u_{N−1}`.
pub fn write_snapshots(path: &Path, snaps: &[(f64, Vec<f64>)]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for (t, u) in snaps {
        write!(out, "{t}").map_err(io)?;
        for x in u {
            write!(out, ",{x}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_snapshots(path: &Path) -> Result<Vec<(f64, Vec<f64>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| {
            let v = l
                .split(',')
                .map(|s| s.parse::<f64>().map_err(|_| Error::format(path, format!("not a number: {s:?}"))))
                .collect::<Result<Vec<f64>>>()?;
            Ok((v[0], v[1..].to_vec()))
        })
        .collect()
}
