//! Run configuration: a sectioned TOML document with a strict schema.
//!
//! Radii left unset default to fixed fractions of the disk radius; after
//! [`RunConfig::resolve`] every optional field holds its effective value so
//! the serialized copy in a run directory reproduces the run exactly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub init: InitConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub cutoffs: CutoffConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub radius: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Annulus,
    TwoScale,
    /// Constant density; `sigma` is ignored.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    Zero,
    CopyU,
    Constant,
    /// `w₀ = (I − Δ)⁻¹u₀`; only meaningful for `w0_mode`.
    Elliptic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    pub family: Family,
    pub total_mass: f64,
    pub sigma: f64,
    #[serde(default = "zero_mode")]
    pub v0_mode: FieldMode,
    #[serde(default)]
    pub v0_constant: f64,
    #[serde(default = "zero_mode")]
    pub w0_mode: FieldMode,
    #[serde(default)]
    pub w0_constant: f64,
    /// Mass fraction of the core in the two-scale family.
    #[serde(default = "default_core_fraction")]
    pub core_fraction: f64,
    /// Width of the two-scale pedestal; defaults to `R/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pedestal_sigma: Option<f64>,
}

fn zero_mode() -> FieldMode {
    FieldMode::Zero
}

fn default_core_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: u64,
    /// Defaults to `t_end/64, t_end/32, …, t_end`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_times: Option<Vec<f64>>,
}

fn default_stride() -> u64 {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CutoffConfig {
    /// Cutoff radii; defaults to `R·{1/4, 1/8, 1/16, 1/32, 1/64}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    pub exponent: u32,
    /// Exponent `a` of the exponential moment.
    pub mt_exponent: f64,
    /// Exponent `p` of the pointwise `w` monitor.
    pub pointwise_p: f64,
    /// Radii of the ε-regularity balls; defaults to `0.05R`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ball_radii: Option<Vec<f64>>,
    pub sobolev_seed: u64,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self { radii: None, exponent: 8, mt_exponent: 1.0, pointwise_p: 1.5, ball_radii: None, sobolev_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    pub window_fraction: f64,
    pub t_stat: f64,
    /// Relative band around the final `F` that counts as flat.
    pub asymptote_tol: f64,
    pub eightpi_tol: f64,
    pub mass_tol: f64,
    /// Inner radius of the annulus for stationary residuals; defaults to the
    /// support radius `2r_min` of the smallest cutoff.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_cut: Option<f64>,
    /// Number of `u` fields kept for the snapshot-Cauchy distance.
    pub retained_snapshots: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            window_fraction: 0.25,
            t_stat: 5.0,
            asymptote_tol: 0.01,
            eightpi_tol: 0.05,
            mass_tol: 0.05,
            rho_cut: None,
            retained_snapshots: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub csv: String,
    pub report: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("runs/default"), csv: "series.csv".into(), report: "report.toml".into() }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::ConfigParse { path: origin.to_string(), message: e.to_string() })?;
        cfg.resolve()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configuration always serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn dr(&self) -> f64 {
        self.domain.radius / self.domain.cells as f64
    }

    /// Fill defaults and check every invariant.
    pub fn resolve(mut self) -> Result<Self> {
        let rr = self.domain.radius;
        if !(rr.is_finite() && rr > 0.0) {
            return Err(invalid("domain.radius must be positive"));
        }
        if self.domain.cells < crate::grid::MIN_CELLS {
            return Err(invalid(format!("domain.cells must be at least {}", crate::grid::MIN_CELLS)));
        }
        let dr = self.dr();

        let init = &self.init;
        if !(init.total_mass.is_finite() && init.total_mass > 0.0) {
            return Err(invalid("init.total_mass must be positive"));
        }
        if !(init.sigma.is_finite() && init.sigma > 0.0) {
            return Err(invalid("init.sigma must be positive"));
        }
        if init.sigma <= 2.0 * dr {
            return Err(Error::Resolution(format!("init.sigma = {} must exceed 2Δr = {}", init.sigma, 2.0 * dr)));
        }
        if init.v0_mode == FieldMode::Elliptic {
            return Err(invalid("init.v0_mode must be one of zero, copy_u, constant"));
        }
        if !(init.v0_constant >= 0.0 && init.v0_constant.is_finite()) {
            return Err(invalid("init.v0_constant must be nonnegative"));
        }
        if !(init.w0_constant >= 0.0 && init.w0_constant.is_finite()) {
            return Err(invalid("init.w0_constant must be nonnegative"));
        }
        if !(init.core_fraction > 0.0 && init.core_fraction <= 1.0) {
            return Err(invalid("init.core_fraction must lie in (0, 1]"));
        }
        if init.family == Family::TwoScale && self.init.pedestal_sigma.is_none() {
            self.init.pedestal_sigma = Some(0.5 * rr);
        }
        if let Some(p) = self.init.pedestal_sigma {
            if p <= 2.0 * dr {
                return Err(Error::Resolution(format!("init.pedestal_sigma = {p} must exceed 2Δr")));
            }
        }

        let t_end = self.time.t_end;
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(invalid("time.t_end must be positive"));
        }
        if self.time.sample_stride == 0 {
            return Err(invalid("time.sample_stride must be positive"));
        }
        let mut snaps = self
            .time
            .snapshot_times
            .take()
            .unwrap_or_else(|| (0..=6).rev().map(|k| t_end / f64::from(1u32 << k)).collect());
        if snaps.iter().any(|&s| !(0.0..=t_end).contains(&s)) {
            return Err(invalid("time.snapshot_times must lie in [0, t_end]"));
        }
        snaps.sort_by(f64::total_cmp);
        snaps.dedup();
        self.time.snapshot_times = Some(snaps);

        self.solver.validate()?;

        let c = &mut self.cutoffs;
        let mut radii = c.radii.take().unwrap_or_else(|| (2..=6).map(|k| rr / f64::from(1u32 << k)).collect());
        if radii.is_empty() {
            return Err(invalid("cutoffs.radii must not be empty"));
        }
        if radii.iter().any(|&r| !(r > 0.0 && 2.0 * r < rr)) {
            return Err(invalid("cutoffs.radii must satisfy 0 < 2r < R"));
        }
        radii.sort_by(|a, b| b.total_cmp(a));
        radii.dedup();
        c.radii = Some(radii);
        if c.exponent < 4 {
            return Err(invalid("cutoffs.exponent must be at least 4"));
        }
        if !(c.mt_exponent > 0.0) {
            return Err(invalid("cutoffs.mt_exponent must be positive"));
        }
        if !(c.pointwise_p > 1.0 && c.pointwise_p < 2.0) {
            return Err(invalid("cutoffs.pointwise_p must lie in (1, 2)"));
        }
        let balls = c.ball_radii.take().unwrap_or_else(|| vec![0.05 * rr]);
        if balls.iter().any(|&r| !(r > 0.0 && r <= rr)) {
            return Err(invalid("cutoffs.ball_radii must lie in (0, R]"));
        }
        c.ball_radii = Some(balls);

        let d = &self.diagnostics;
        if !(d.window_fraction > 0.0 && d.window_fraction <= 1.0) {
            return Err(invalid("diagnostics.window_fraction must lie in (0, 1]"));
        }
        if !(d.t_stat > 0.0) {
            return Err(invalid("diagnostics.t_stat must be positive"));
        }
        for (name, v) in [
            ("asymptote_tol", d.asymptote_tol),
            ("eightpi_tol", d.eightpi_tol),
            ("mass_tol", d.mass_tol),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(format!("diagnostics.{name} must lie in (0, 1)")));
            }
        }
        if d.retained_snapshots < 2 {
            return Err(invalid("diagnostics.retained_snapshots must be at least 2"));
        }
        if let Some(rc) = d.rho_cut {
            if !(rc >= 4.0 * dr * (1.0 - 1e-12) && rc < rr) {
                return Err(invalid("diagnostics.rho_cut must lie in [4Δr, R)"));
            }
        }
        if self.output.csv.is_empty() || self.output.report.is_empty() {
            return Err(invalid("output.csv and output.report must be non-empty"));
        }
        Ok(self)
    }

    pub fn cutoff_radii(&self) -> &[f64] {
        self.cutoffs.radii.as_deref().expect("resolved config")
    }

    pub fn ball_radii(&self) -> &[f64] {
        self.cutoffs.ball_radii.as_deref().expect("resolved config")
    }

    pub fn snapshot_times(&self) -> &[f64] {
        self.time.snapshot_times.as_deref().expect("resolved config")
    }

    /// Stationary-residual radius given the smallest cutoff actually used.
    pub fn rho_cut(&self, smallest_cutoff: f64) -> f64 {
        self.diagnostics.rho_cut.unwrap_or((2.0 * smallest_cutoff).max(4.0 * self.dr()))
    }
}
