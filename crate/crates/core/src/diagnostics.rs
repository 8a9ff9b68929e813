//! Verdicts computed from a finished run: growth classification, origin
//! locality of the peak, delta-weight estimation from nested cutoffs,
//! threshold checks and stationary-limit residuals.
//!
//! Every `limsup_{t→∞}` is replaced by a maximum over the late window, the
//! trailing fraction of the samples.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cutoff::Cutoff;
use crate::functionals::{mass_phi, FunctionalSample, SobolevConstant};
use crate::grid::RadialGrid;
use crate::solver::FieldState;

pub const EIGHT_PI: f64 = 8.0 * PI;

/// Minimum series length for the trend classifiers.
pub const MIN_SAMPLES: usize = 100;

/// Minimum late-window length for the delta-weight estimate.
pub const MIN_WINDOW_SNAPSHOTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthVerdict {
    Bounded,
    Growing,
    NumericallyCollapsed,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FTrendVerdict {
    BoundedBelow,
    DecreasingUnbounded,
    Inconclusive,
}

impl GrowthVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Bounded => "bounded",
            Self::Growing => "growing",
            Self::NumericallyCollapsed => "numerically_collapsed",
            Self::Inconclusive => "inconclusive",
        }
    }

    pub fn is_concentrating(&self) -> bool {
        matches!(self, Self::Growing | Self::NumericallyCollapsed)
    }
}

impl FTrendVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::BoundedBelow => "bounded_below",
            Self::DecreasingUnbounded => "decreasing_unbounded",
            Self::Inconclusive => "inconclusive",
        }
    }
}

/// Ordinary least squares `y ≈ a + b x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    /// `slope / se(slope)`; infinite for an exact fit with nonzero slope.
    pub t_stat: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    assert!(x.len() >= 3, "a trend fit needs at least three points");
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return LinearFit { intercept: my, slope: 0.0, t_stat: 0.0 };
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    // residuals at rounding level count as an exact fit
    let t_stat = if se <= 1e-12 * slope.abs() {
        if slope == 0.0 {
            0.0
        } else {
            slope.signum() * f64::INFINITY
        }
    } else {
        slope / se
    };
    LinearFit { intercept, slope, t_stat }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn interquartile_range(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.75) - quantile(&v, 0.25)
}

/// Index at which the late window of fraction `fraction` begins.
pub fn window_start(len: usize, fraction: f64) -> usize {
    assert!(fraction > 0.0 && fraction <= 1.0, "window fraction must lie in (0, 1]");
    let count = ((len as f64) * fraction).ceil() as usize;
    len - count.clamp(1, len)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthClassification {
    pub verdict: GrowthVerdict,
    /// Smallest late-window `‖u‖_∞` over its value at the first quartile.
    pub late_over_quartile: f64,
    pub log_slope_t_stat: f64,
}

/// Classify the `‖u‖_∞` series. The time column is never consulted, so the
/// verdict is invariant under reindexing of the samples.
pub fn classify_growth(linf: &[f64], horizon_fraction: f64, t_stat_min: f64, collapsed: bool) -> GrowthClassification {
    assert!(linf.len() >= MIN_SAMPLES, "classify_growth needs at least {MIN_SAMPLES} samples, got {}", linf.len());
    let n = linf.len();
    let start = window_start(n, horizon_fraction);
    let late = &linf[start..];
    let quartile = linf[n / 4];
    let late_min = late.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = late_min / quartile;
    let x: Vec<f64> = (0..late.len()).map(|i| i as f64).collect();
    let logs: Vec<f64> = late.iter().map(|v| v.ln()).collect();
    let t_stat = if late.len() >= 3 { linear_fit(&x, &logs).t_stat } else { 0.0 };

    let verdict = if collapsed {
        GrowthVerdict::NumericallyCollapsed
    } else if ratio > 10.0 && t_stat > t_stat_min {
        GrowthVerdict::Growing
    } else if stays_near_running_median(&linf[n / 2..], 1.2) {
        GrowthVerdict::Bounded
    } else {
        GrowthVerdict::Inconclusive
    };
    GrowthClassification { verdict, late_over_quartile: ratio, log_slope_t_stat: t_stat }
}

/// Every value lies within a factor `factor` of the median of the values up to it.
fn stays_near_running_median(values: &[f64], factor: f64) -> bool {
    (0..values.len()).all(|i| {
        let m = median(&values[..=i]);
        values[i] <= factor * m && values[i] * factor >= m
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FTrend {
    pub verdict: FTrendVerdict,
    /// Slope of `F` against `log t` over the last half.
    pub slope: f64,
    pub t_stat: f64,
}

/// Trend of `F` against `log t`: samples with `t ≤ 0` are skipped.
pub fn f_trend(t: &[f64], f: &[f64], t_stat_min: f64, asymptote_tol: f64) -> FTrend {
    assert_eq!(t.len(), f.len());
    assert!(t.len() >= MIN_SAMPLES, "f_trend needs at least {MIN_SAMPLES} samples, got {}", t.len());
    let (lt, fv): (Vec<f64>, Vec<f64>) = t.iter().zip(f).filter(|(t, _)| **t > 0.0).map(|(t, f)| (t.ln(), *f)).unzip();
    let n = lt.len();
    let half = n / 2;
    let late = linear_fit(&lt[half..], &fv[half..]);
    let early = linear_fit(&lt[..half], &fv[..half]);
    let early_residuals: Vec<f64> = lt[..half]
        .iter()
        .zip(&fv[..half])
        .map(|(x, y)| y - early.intercept - early.slope * x)
        .collect();
    let iqr = interquartile_range(&early_residuals);
    let drop = fv[0] - fv[n - 1];

    let f_end = fv[n - 1];
    let scale = f_end.abs().max(1.0);
    let flat = fv[half..].iter().all(|v| (v - f_end).abs() <= asymptote_tol * scale);

    // flatness first: an exponential approach to the asymptote still has a
    // significant negative slope in log t
    let verdict = if flat {
        FTrendVerdict::BoundedBelow
    } else if late.slope < 0.0 && late.t_stat < -t_stat_min && drop > 10.0 * iqr {
        FTrendVerdict::DecreasingUnbounded
    } else {
        FTrendVerdict::Inconclusive
    };
    FTrend { verdict, slope: late.slope, t_stat: late.t_stat }
}

/// Largest argmax radius over snapshots in the final decade `[t_last/10, t_last]`.
pub fn growup_locus(t: &[f64], argmax_radius: &[f64]) -> Option<f64> {
    let t_last = *t.last()?;
    let picked: Vec<f64> = t
        .iter()
        .zip(argmax_radius)
        .filter(|(t, _)| **t >= t_last / 10.0)
        .map(|(_, r)| *r)
        .collect();
    if picked.len() < 3 {
        return None;
    }
    Some(picked.into_iter().fold(0.0, f64::max))
}

/// `(r_j, M_φ(r_j))` for the cutoffs, ordered by decreasing radius.
pub fn concentration_profile(grid: &RadialGrid, u: &[f64], cutoffs: &[Cutoff]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = cutoffs.iter().map(|c| (c.radius(), mass_phi(grid, u, c))).collect();
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

/// Build cutoffs for `radii`, dropping (with a warning) those the grid cannot resolve.
pub fn resolvable_cutoffs(grid: &RadialGrid, radii: &[f64], exponent: u32) -> crate::Result<Vec<Cutoff>> {
    let mut out = Vec::new();
    for &r in radii {
        match Cutoff::build(grid, r, exponent) {
            Ok(c) => out.push(c),
            Err(crate::Error::Resolution(msg)) => log::warn!("dropping cutoff: {msg}"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaWeight {
    /// `(r_j, m̂(r_j))`, decreasing in `r_j`.
    pub curve: Vec<(f64, f64)>,
    pub m_hat: f64,
    pub remainder: f64,
}

/// `profiles[k][j]` is `M_φ(r_j)` at late-window snapshot `k`, with `radii`
/// decreasing along `j`.
pub fn delta_weight_estimate(radii: &[f64], profiles: &[Vec<f64>], last_mass: f64) -> DeltaWeight {
    assert!(
        profiles.len() >= MIN_WINDOW_SNAPSHOTS,
        "delta weight needs at least {MIN_WINDOW_SNAPSHOTS} late-window snapshots, got {}",
        profiles.len()
    );
    assert!(!radii.is_empty());
    let curve: Vec<(f64, f64)> = radii
        .iter()
        .enumerate()
        .map(|(j, &r)| (r, profiles.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max)))
        .collect();
    let m_hat = curve.last().unwrap().1;
    DeltaWeight { curve, m_hat, remainder: last_mass - m_hat }
}

/// `m̂(r)` is nondecreasing in `r`.
pub fn curve_is_monotone(curve: &[(f64, f64)]) -> bool {
    let mut sorted = curve.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted.windows(2).all(|w| w[0].1 <= w[1].1)
}

/// Largest `max|u − u′|` over pairs of snapshots, on cells with `r_i > r_min`.
pub fn snapshot_cauchy_distance(grid: &RadialGrid, snapshots: &[&[f64]], r_min: f64) -> f64 {
    let cells: Vec<usize> = (0..grid.cells()).filter(|&i| grid.cell_centers()[i] > r_min).collect();
    let mut best: f64 = 0.0;
    for a in 0..snapshots.len() {
        for b in a + 1..snapshots.len() {
            for &i in &cells {
                best = best.max((snapshots[a][i] - snapshots[b][i]).abs());
            }
        }
    }
    best
}

pub fn eps_reg_threshold(k: &SobolevConstant) -> f64 {
    1.0 / (200.0 * k.k_sob * k.k_sob)
}

/// `max(∫_{B_r} u)` over the window against `1/(200K²)`.
pub fn eps_regularity(window_ball_mass: &[f64], k: &SobolevConstant) -> bool {
    window_ball_mass.iter().cloned().fold(f64::NEG_INFINITY, f64::max) >= eps_reg_threshold(k)
}

/// `max M_φ ≥ 8π(1 − tol)` over the window at the smallest resolvable radius.
pub fn eightpi_check(window_mass_phi: &[f64], tol: f64) -> bool {
    window_mass_phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max) >= EIGHT_PI * (1.0 - tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryResiduals {
    pub rho_cut: f64,
    /// `max|u − v|`.
    pub res1: f64,
    /// `‖−Δw + w − u‖₂`.
    pub res2: f64,
    /// `‖√u ∇(log u − w)‖₂`.
    pub res3: f64,
    pub wt_l2: f64,
}

/// Residuals of the stationary system on cells with `r_i > rho_cut`.
pub fn stationary_residuals(grid: &RadialGrid, state: &FieldState, rho_cut: f64) -> StationaryResiduals {
    assert!(rho_cut >= 4.0 * grid.dr() * (1.0 - 1e-12), "rho_cut must be at least 4Δr");
    let n = grid.cells();
    let lap = grid.laplacian(&state.w);
    let inside = |i: usize| grid.cell_centers()[i] > rho_cut;
    let mut res1: f64 = 0.0;
    let mut res2 = 0.0;
    let mut wt = 0.0;
    for i in (0..n).filter(|&i| inside(i)) {
        res1 = res1.max((state.u[i] - state.v[i]).abs());
        let e = -lap[i] + state.w[i] - state.u[i];
        res2 += e * e * grid.cell_areas()[i];
        let t = lap[i] - state.w[i] + state.v[i];
        wt += t * t * grid.cell_areas()[i];
    }
    let mut res3 = 0.0;
    for k in 1..n {
        if inside(k - 1) && state.u[k - 1] > 0.0 && state.u[k] > 0.0 {
            let g = ((state.u[k].ln() - state.w[k]) - (state.u[k - 1].ln() - state.w[k - 1])) / grid.dr();
            res3 += 0.5 * (state.u[k - 1] + state.u[k]) * g * g * grid.face_weight(k);
        }
    }
    StationaryResiduals { rho_cut, res1, res2: res2.sqrt(), res3: res3.sqrt(), wt_l2: wt }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassIdentities {
    /// `|∫w − ‖u₀‖₁|`.
    pub w_gap: f64,
    /// `∫_{|x|>ρ_cut} u`.
    pub annulus_mass: f64,
    /// `annulus_mass ≤ ‖u₀‖₁ − 8π + tol‖u₀‖₁`.
    pub u_inf_bound_ok: bool,
}

pub fn mass_identities(grid: &RadialGrid, state: &FieldState, u0_mass: f64, rho_cut: f64, tol: f64) -> MassIdentities {
    let annulus_mass = grid.integrate_between(&state.u, rho_cut, f64::INFINITY);
    MassIdentities {
        w_gap: (grid.integrate(&state.w) - u0_mass).abs(),
        annulus_mass,
        u_inf_bound_ok: annulus_mass <= u0_mass - EIGHT_PI + tol * u0_mass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryLimitVerdict {
    Consistent,
    Inconsistent,
    /// `F` was not seen bounded below, so the hypothesis does not apply.
    NotApplicable,
}

/// With `F` bounded below the limit is stationary: `∫w → ‖u₀‖₁` and either
/// the run stays bounded or the annulus empties into the origin.
pub fn stationary_limit_verdict(
    trend: FTrendVerdict,
    growth: GrowthVerdict,
    masses: &MassIdentities,
    u0_mass: f64,
    tol: f64,
) -> StationaryLimitVerdict {
    if trend != FTrendVerdict::BoundedBelow {
        return StationaryLimitVerdict::NotApplicable;
    }
    let w_ok = masses.w_gap <= tol * u0_mass;
    let limit_ok = growth == GrowthVerdict::Bounded || masses.annulus_mass <= tol * u0_mass;
    if w_ok && limit_ok {
        StationaryLimitVerdict::Consistent
    } else {
        StationaryLimitVerdict::Inconsistent
    }
}

/// Extract one column of the series.
pub fn column(samples: &[FunctionalSample], f: impl Fn(&FunctionalSample) -> f64) -> Vec<f64> {
    samples.iter().map(f).collect()
}
