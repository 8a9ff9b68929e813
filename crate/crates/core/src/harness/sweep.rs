//! Mass sweeps: one run per multiple of 8π, executed concurrently, with one
//! summary row per run.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::EIGHT_PI;
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::run::run;

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: RunConfig,
    pub mass_multipliers: Vec<f64>,
    pub output_root: PathBuf,
}

impl SweepSpec {
    /// Multipliers must be positive; they are sorted here.
    pub fn new(base: RunConfig, mut mass_multipliers: Vec<f64>, output_root: PathBuf) -> Result<Self> {
        if mass_multipliers.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::Config("sweep mass multipliers must be positive".into()));
        }
        mass_multipliers.sort_by(f64::total_cmp);
        Ok(Self { base, mass_multipliers, output_root })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub multiplier: f64,
    pub total_mass: f64,
    pub termination: String,
    pub growth_verdict: String,
    pub f_trend: String,
    pub m_hat: Option<f64>,
    pub eps_reg_attained: Option<bool>,
    pub eightpi_attained: Option<bool>,
    pub locus: Option<f64>,
    pub error: String,
}

pub fn run_directory(root: &Path, multiplier: f64) -> PathBuf {
    root.join(format!("mass_{multiplier}x8pi"))
}

fn run_one(spec: &SweepSpec, m: f64) -> SweepRow {
    let total_mass = m * EIGHT_PI;
    let mut row = SweepRow {
        multiplier: m,
        total_mass,
        termination: "failed".into(),
        growth_verdict: String::new(),
        f_trend: String::new(),
        m_hat: None,
        eps_reg_attained: None,
        eightpi_attained: None,
        locus: None,
        error: String::new(),
    };
    let mut cfg = spec.base.clone();
    cfg.init.total_mass = total_mass;
    let dir = run_directory(&spec.output_root, m);
    cfg.output.directory = dir.clone();
    match cfg.resolve().and_then(|cfg| run(&cfg, &dir)) {
        Ok(out) => {
            let r = out.report;
            row.termination = format!("{:?}", r.status.termination).to_lowercase();
            row.growth_verdict = r.growth.verdict.as_str().into();
            row.f_trend = r.f_trend.verdict.as_str().into();
            row.m_hat = r.delta_weight.m_hat;
            row.eps_reg_attained = r.eps_regularity.map(|e| e.attained.iter().all(|&a| a));
            row.eightpi_attained = r.eightpi.map(|e| e.attained);
            row.locus = r.locus.radius;
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

/// Run every multiplier and write `summary.csv` under the output root.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    std::fs::create_dir_all(&spec.output_root).map_err(|e| Error::io(&spec.output_root, e))?;
    let rows: Vec<SweepRow> = spec.mass_multipliers.par_iter().map(|&m| run_one(spec, m)).collect();
    let path = spec.output_root.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Csv { path: path.clone(), source: e })?;
    if rows.is_empty() {
        w.write_record([
            "multiplier",
            "total_mass",
            "termination",
            "growth_verdict",
            "f_trend",
            "m_hat",
            "eps_reg_attained",
            "eightpi_attained",
            "locus",
            "error",
        ])
        .map_err(|e| Error::Csv { path: path.clone(), source: e })?;
    }
    for r in &rows {
        w.serialize(r).map_err(|e| Error::Csv { path: path.clone(), source: e })?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}
