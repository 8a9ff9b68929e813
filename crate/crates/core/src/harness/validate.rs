//! Row-wise invariant checks on a series file.

use std::path::Path;

use crate::error::Result;
use crate::functionals::FunctionalSample;
use crate::harness::io::{read_series_table, SeriesLayout};

/// Relative slack for `M_φ ≤ ∫u` and nested ordering (summation order differs).
const MASS_SLACK: f64 = 1e-12;
const JENSEN_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub rows: usize,
    pub violations: Vec<String>,
}

impl Validation {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_sample(s: &FunctionalSample) -> Vec<String> {
    let mut v = Vec::new();
    let finite = [s.t, s.dt, s.mass_u, s.mass_v, s.mass_w, s.linf_u, s.argmax_radius, s.entropy, s.f, s.d, s.wt_l2]
        .iter()
        .chain(s.localized.iter().flat_map(|l| {
            [l.mass_phi, l.f_phi, l.d_phi, l.r_phi, l.gradw_l2_phi, l.mt_ratio, l.jensen_gap, l.jensen_scale]
        }).collect::<Vec<_>>().iter())
        .all(|x| x.is_finite());
    if !finite {
        v.push("non-finite value".into());
    }
    if !(s.mass_u > 0.0) {
        v.push(format!("mass_u = {} is not positive", s.mass_u));
    }
    if !(s.d >= 0.0) {
        v.push(format!("D = {} is negative", s.d));
    }
    if !(s.linf_u >= 0.0 && s.mass_v >= 0.0) {
        v.push("negative sup-norm or v mass".into());
    }
    let cap = s.mass_u * (1.0 + MASS_SLACK);
    for (j, l) in s.localized.iter().enumerate() {
        if !(l.d_phi >= 0.0) {
            v.push(format!("cutoff {j}: D_phi = {} is negative", l.d_phi));
        }
        if !(l.mass_phi >= 0.0 && l.mass_phi <= cap) {
            v.push(format!("cutoff {j}: M_phi = {} outside [0, {}]", l.mass_phi, s.mass_u));
        }
        if l.jensen_gap < -JENSEN_SLACK * l.jensen_scale {
            v.push(format!("cutoff {j}: jensen_gap = {} below tolerance", l.jensen_gap));
        }
        if l.sobolev_slack < 0.0 {
            v.push(format!("cutoff {j}: sobolev slack {} is negative", l.sobolev_slack));
        }
    }
    // radii are stored decreasing, so M_phi must not increase along the row
    for (j, w) in s.localized.windows(2).enumerate() {
        if w[1].mass_phi > w[0].mass_phi * (1.0 + MASS_SLACK) {
            v.push(format!("cutoffs {j}, {}: nested masses out of order", j + 1));
        }
    }
    v
}

pub fn validate_series(path: &Path) -> Result<Validation> {
    let table = read_series_table(path)?;
    let mut violations = Vec::new();
    let layout = match SeriesLayout::from_header(&table.header) {
        Ok(l) => l,
        Err(m) => return Ok(Validation { rows: table.rows.len(), violations: vec![m] }),
    };
    if layout.cutoff_radii.windows(2).any(|w| w[1] >= w[0]) {
        violations.push("cutoff radii are not strictly decreasing".into());
    }
    let width = layout.header().len();
    let mut prev_t = f64::NEG_INFINITY;
    for (k, row) in table.rows.iter().enumerate() {
        let line = k + 2;
        if row.len() != width {
            violations.push(format!("line {line}: {} fields, expected {width}", row.len()));
            continue;
        }
        let s = layout.parse_row(row);
        if !(s.t >= prev_t) {
            violations.push(format!("line {line}: time does not increase"));
        }
        prev_t = s.t;
        violations.extend(check_sample(&s).into_iter().map(|m| format!("line {line}: {m}")));
    }
    Ok(Validation { rows: table.rows.len(), violations })
}
