//! End-of-run report. [`analyze`] consumes only what a run directory stores
//! (series, final checkpoint, retained snapshots, termination status), so the
//! report written at the end of a run and the one regenerated from disk are
//! identical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    classify_growth, column, curve_is_monotone, delta_weight_estimate, eightpi_check, eps_reg_threshold,
    eps_regularity, f_trend, growup_locus, mass_identities, snapshot_cauchy_distance, stationary_residuals,
    stationary_limit_verdict, window_start, FTrendVerdict, GrowthVerdict, MassIdentities, StationaryResiduals,
    StationaryLimitVerdict, MIN_SAMPLES, MIN_WINDOW_SNAPSHOTS,
};
use crate::error::{Error, Result};
use crate::functionals::{estimate_k_sob, FunctionalSample};
use crate::grid::RadialGrid;
use crate::harness::config::RunConfig;
use crate::solver::FieldState;

pub const SCHEMA_VERSION: u32 = 1;

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Stiffness,
    Divergence,
    Positivity,
}

impl Termination {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Completed => 0,
            Self::Divergence | Self::Positivity => 3,
            Self::Stiffness => 4,
        }
    }

    pub fn from_error(e: &Error) -> Option<Self> {
        match e {
            Error::Stiffness { .. } => Some(Self::Stiffness),
            Error::Divergence { .. } => Some(Self::Divergence),
            Error::Positivity { .. } => Some(Self::Positivity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    pub termination: Termination,
    pub message: String,
    pub t_final: f64,
    pub steps: u64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub status: RunStatus,
    pub growth: GrowthSection,
    pub locus: LocusSection,
    pub f_trend: FTrendSection,
    pub delta_weight: DeltaWeightSection,
    /// Present only for concentrating runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_regularity: Option<EpsRegSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eightpi: Option<EightPiSection>,
    pub stationary: StationaryResiduals,
    pub mass_identities: MassIdentities,
    pub stationary_limit_verdict: StationaryLimitVerdict,
    /// `bounded_energy` when `F` is seen bounded below, `unbounded_energy` when it
    /// decreases without bound, otherwise `undetermined`.
    pub energy_branch: String,
    pub monitors: MonitorSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSection {
    pub verdict: GrowthVerdict,
    pub late_over_quartile: f64,
    pub log_slope_t_stat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocusSection {
    /// Largest argmax radius over the final decade; absent with too few samples there.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub dr: f64,
    pub at_origin: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FTrendSection {
    pub verdict: FTrendVerdict,
    pub slope: f64,
    pub t_stat: f64,
    pub f_first: f64,
    pub f_last: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaWeightSection {
    pub radii: Vec<f64>,
    pub masses: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub remainder_mass: Option<f64>,
    pub u0_mass: f64,
    pub monotone: bool,
    pub window_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cauchy_distance: Option<f64>,
    pub cauchy_snapshots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsRegSection {
    pub k_sob: f64,
    pub threshold: f64,
    pub radii: Vec<f64>,
    pub max_ball_mass: Vec<f64>,
    pub attained: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EightPiSection {
    pub radius: f64,
    pub max_mass_phi: f64,
    pub tolerance: f64,
    pub attained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSection {
    pub pointwise_w_sup: f64,
    pub mt_ratio_min: Vec<f64>,
    pub mt_ratio_max: Vec<f64>,
    /// `max lyap_defect / (|F| + D + 1)`.
    pub lyap_defect_rel_max: f64,
    /// `max loc_defect / (|F_φ| + D_φ + 1)` per cutoff.
    pub loc_defect_rel_max: Vec<f64>,
    /// `min jensen_gap / jensen_scale` per cutoff.
    pub jensen_rel_min: Vec<f64>,
    pub sobolev_slack_min: Vec<f64>,
    pub sobolev_failures: usize,
    pub mass_drift_rel: f64,
}

/// Everything [`analyze`] needs.
pub struct AnalysisInput<'a> {
    pub config: &'a RunConfig,
    pub samples: &'a [FunctionalSample],
    /// Radii of the cutoffs that were resolvable, decreasing.
    pub cutoff_radii: &'a [f64],
    pub final_state: &'a FieldState,
    pub snapshots: &'a [(f64, Vec<f64>)],
    pub status: RunStatus,
}

fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

pub fn analyze(input: AnalysisInput<'_>) -> Result<RunReport> {
    let cfg = input.config;
    let dcfg = &cfg.diagnostics;
    let grid = RadialGrid::new(cfg.domain.radius, cfg.domain.cells)?;
    let samples = input.samples;
    if samples.is_empty() {
        return Err(Error::Config("run produced no samples".into()));
    }
    let u0_mass = grid.integrate(input.final_state.u0());

    let linf = column(samples, |s| s.linf_u);
    let collapsed = input.status.termination == Termination::Stiffness;
    let enough = samples.len() >= MIN_SAMPLES;
    let growth = if enough {
        let g = classify_growth(&linf, dcfg.window_fraction, dcfg.t_stat, collapsed);
        GrowthSection { verdict: g.verdict, late_over_quartile: g.late_over_quartile, log_slope_t_stat: g.log_slope_t_stat }
    } else {
        let verdict = if collapsed { GrowthVerdict::NumericallyCollapsed } else { GrowthVerdict::Inconclusive };
        GrowthSection { verdict, late_over_quartile: f64::NAN, log_slope_t_stat: f64::NAN }
    };

    let t = column(samples, |s| s.t);
    let locus_radius = growup_locus(&t, &column(samples, |s| s.argmax_radius));
    let locus = LocusSection {
        radius: locus_radius,
        dr: grid.dr(),
        at_origin: locus_radius.is_some_and(|r| r <= 2.0 * grid.dr()),
        note: "radial grid: only persistence of the peak at the origin is checked".into(),
    };

    let fvals = column(samples, |s| s.f);
    let trend = if enough && t.iter().filter(|t| **t > 0.0).count() >= MIN_SAMPLES {
        f_trend(&t, &fvals, dcfg.t_stat, dcfg.asymptote_tol)
    } else {
        crate::diagnostics::FTrend { verdict: FTrendVerdict::Inconclusive, slope: f64::NAN, t_stat: f64::NAN }
    };
    let f_section = FTrendSection {
        verdict: trend.verdict,
        slope: trend.slope,
        t_stat: trend.t_stat,
        f_first: fvals[0],
        f_last: *fvals.last().unwrap(),
    };

    let start = window_start(samples.len(), dcfg.window_fraction);
    let window = &samples[start..];
    let profiles: Vec<Vec<f64>> = window.iter().map(|s| s.localized.iter().map(|l| l.mass_phi).collect()).collect();
    let last_mass = grid.integrate(&input.final_state.u);
    let dw = (profiles.len() >= MIN_WINDOW_SNAPSHOTS && !input.cutoff_radii.is_empty())
        .then(|| delta_weight_estimate(input.cutoff_radii, &profiles, last_mass));
    let r_min = input.cutoff_radii.last().copied().unwrap_or(2.0 * grid.dr());
    let t_window = window[0].t;
    let late: Vec<&[f64]> = input.snapshots.iter().filter(|(ts, _)| *ts >= t_window).map(|(_, u)| u.as_slice()).collect();
    let delta_weight = DeltaWeightSection {
        radii: input.cutoff_radii.to_vec(),
        masses: dw.as_ref().map(|d| d.curve.iter().map(|c| c.1).collect()).unwrap_or_default(),
        m_hat: dw.as_ref().map(|d| d.m_hat),
        remainder_mass: dw.as_ref().map(|d| d.remainder),
        u0_mass,
        monotone: dw.as_ref().is_none_or(|d| curve_is_monotone(&d.curve)),
        window_samples: window.len(),
        cauchy_distance: (late.len() >= 2).then(|| snapshot_cauchy_distance(&grid, &late, r_min)),
        cauchy_snapshots: late.len(),
    };

    let k_sob = estimate_k_sob(&grid, cfg.cutoffs.sobolev_seed);
    let concentrating = growth.verdict.is_concentrating();
    let eps_regularity = concentrating.then(|| {
        let radii = cfg.ball_radii().to_vec();
        let max_ball_mass: Vec<f64> = (0..radii.len()).map(|b| max_of(window.iter().map(|s| s.ball_masses[b]))).collect();
        let attained = (0..radii.len())
            .map(|b| eps_regularity(&window.iter().map(|s| s.ball_masses[b]).collect::<Vec<_>>(), &k_sob))
            .collect();
        EpsRegSection { k_sob: k_sob.k_sob, threshold: eps_reg_threshold(&k_sob), radii, max_ball_mass, attained }
    });
    let eightpi = (concentrating && !input.cutoff_radii.is_empty()).then(|| {
        let j = input.cutoff_radii.len() - 1;
        let series: Vec<f64> = window.iter().map(|s| s.localized[j].mass_phi).collect();
        EightPiSection {
            radius: input.cutoff_radii[j],
            max_mass_phi: max_of(series.iter().copied()),
            tolerance: dcfg.eightpi_tol,
            attained: eightpi_check(&series, dcfg.eightpi_tol),
        }
    });

    let rho_cut = cfg.rho_cut(r_min);
    let stationary = stationary_residuals(&grid, input.final_state, rho_cut);
    let masses = mass_identities(&grid, input.final_state, u0_mass, rho_cut, dcfg.mass_tol);
    let stationary_limit = stationary_limit_verdict(trend.verdict, growth.verdict, &masses, u0_mass, dcfg.mass_tol);
    let energy_branch = match trend.verdict {
        FTrendVerdict::BoundedBelow => "bounded_energy",
        FTrendVerdict::DecreasingUnbounded => "unbounded_energy",
        FTrendVerdict::Inconclusive => "undetermined",
    }
    .to_string();

    let nc = input.cutoff_radii.len();
    let per_cutoff = |f: &dyn Fn(&FunctionalSample, usize) -> f64, reduce_max: bool| -> Vec<f64> {
        (0..nc)
            .map(|j| {
                let it = samples.iter().map(|s| f(s, j));
                if reduce_max {
                    max_of(it)
                } else {
                    min_of(it)
                }
            })
            .collect()
    };
    let monitors = MonitorSection {
        pointwise_w_sup: max_of(samples.iter().map(|s| s.pointwise_w)),
        mt_ratio_min: per_cutoff(&|s, j| s.localized[j].mt_ratio, false),
        mt_ratio_max: per_cutoff(&|s, j| s.localized[j].mt_ratio, true),
        lyap_defect_rel_max: max_of(samples.iter().map(|s| s.lyap_defect / (s.f.abs() + s.d + 1.0))),
        loc_defect_rel_max: per_cutoff(
            &|s, j| s.loc_defects[j] / (s.localized[j].f_phi.abs() + s.localized[j].d_phi + 1.0),
            true,
        ),
        jensen_rel_min: per_cutoff(
            &|s, j| {
                let l = &s.localized[j];
                if l.jensen_scale > 0.0 {
                    l.jensen_gap / l.jensen_scale
                } else {
                    0.0
                }
            },
            false,
        ),
        sobolev_slack_min: per_cutoff(&|s, j| s.localized[j].sobolev_slack, false),
        sobolev_failures: samples.iter().map(|s| s.localized.iter().filter(|l| !(l.sobolev_slack >= 0.0)).count()).sum(),
        mass_drift_rel: max_of(samples.iter().map(|s| (s.mass_u - u0_mass).abs() / u0_mass)),
    };

    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        status: input.status,
        growth,
        locus,
        f_trend: f_section,
        delta_weight,
        eps_regularity,
        eightpi,
        stationary,
        mass_identities: masses,
        stationary_limit_verdict: stationary_limit,
        energy_branch,
        monitors,
    })
}

impl RunReport {
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("report always serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

impl RunStatus {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).expect("status always serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}
