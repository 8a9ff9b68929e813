//! Global and localized functionals evaluated on a [`FieldState`].
//!
//! Cell integrands are weighted by the exact cell areas `a_i`; integrands
//! built from face gradients are weighted by `2πρ_kΔr` and, for localized
//! quantities, by the face values of the cutoff. Scalar factors that multiply
//! a face gradient are averaged arithmetically from the two adjacent cells.
//! `w_t` is always the residual `Δw − w + v` of the current fields, never a
//! time difference.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cutoff::Cutoff;
use crate::grid::RadialGrid;
use crate::solver::{compute_w_t, FieldState};

/// Cells whose `u` falls below this fraction of `max(u)` are left out of the
/// `u|∇(log u − w)|²` integrand.
pub const LOG_GRADIENT_CUTOFF: f64 = 1e-30;

/// Safety factor applied to the probe-family maximum in [`estimate_k_sob`].
pub const K_SOB_SAFETY: f64 = 1.5;

#[inline]
fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `∫ u log u` with `0 log 0 = 0`.
pub fn entropy(grid: &RadialGrid, u: &[f64]) -> f64 {
    assert!(u.iter().all(|&x| x >= 0.0), "entropy requires a nonnegative density");
    u.iter().zip(grid.cell_areas()).map(|(&x, a)| xlogx(x) * a).sum()
}

/// Intermediate fields shared by the global and localized functionals.
#[derive(Debug, Clone)]
pub struct DerivedFields {
    pub w_t: Vec<f64>,
    pub u_log_u: Vec<f64>,
    pub grad_u: Vec<f64>,
    pub grad_w: Vec<f64>,
    pub grad_w_t: Vec<f64>,
    /// `ū_face · |∇(log u − w)|²` on faces, zero where the log is not formed.
    pub log_dissipation: Vec<f64>,
}

impl DerivedFields {
    pub fn new(grid: &RadialGrid, state: &FieldState) -> Self {
        let n = grid.cells();
        let w_t = compute_w_t(grid, state);
        let u_log_u: Vec<f64> = state.u.iter().map(|&x| xlogx(x)).collect();
        let grad_u = grid.face_gradient(&state.u);
        let grad_w = grid.face_gradient(&state.w);
        let grad_w_t = grid.face_gradient(&w_t);

        let umax = state.u.iter().cloned().fold(0.0, f64::max);
        let floor = LOG_GRADIENT_CUTOFF * umax;
        let mut log_dissipation = vec![0.0; n + 1];
        for k in 1..n {
            let (a, b) = (state.u[k - 1], state.u[k]);
            if a > floor && b > floor && a > 0.0 && b > 0.0 {
                let g = ((b.ln() - state.w[k]) - (a.ln() - state.w[k - 1])) / grid.dr();
                log_dissipation[k] = 0.5 * (a + b) * g * g;
            }
        }
        Self { w_t, u_log_u, grad_u, grad_w, grad_w_t, log_dissipation }
    }
}

fn sq_sum_weighted(grid: &RadialGrid, z: &[f64], weight: Option<&[f64]>) -> f64 {
    match weight {
        None => z.iter().zip(grid.cell_areas()).map(|(x, a)| x * x * a).sum(),
        Some(p) => z.iter().zip(grid.cell_areas()).zip(p).map(|((x, a), p)| x * x * a * p).sum(),
    }
}

fn face_sq_sum(grid: &RadialGrid, g: &[f64], weight: Option<&[f64]>) -> f64 {
    g.iter()
        .enumerate()
        .map(|(k, x)| x * x * grid.face_weight(k) * weight.map_or(1.0, |p| p[k]))
        .sum()
}

/// `F = ∫u log u − ∫uw + ½(‖w_t‖² + ‖∇w‖² + ‖w‖²)`.
pub fn lyapunov_f(grid: &RadialGrid, state: &FieldState) -> f64 {
    lyapunov_f_with(grid, state, &DerivedFields::new(grid, state))
}

pub fn lyapunov_f_with(grid: &RadialGrid, state: &FieldState, d: &DerivedFields) -> f64 {
    let ent: f64 = d.u_log_u.iter().zip(grid.cell_areas()).map(|(x, a)| x * a).sum();
    let uw: f64 = state
        .u
        .iter()
        .zip(&state.w)
        .zip(grid.cell_areas())
        .map(|((u, w), a)| u * w * a)
        .sum();
    let quad = sq_sum_weighted(grid, &d.w_t, None)
        + face_sq_sum(grid, &d.grad_w, None)
        + sq_sum_weighted(grid, &state.w, None);
    ent - uw + 0.5 * quad
}

/// `D = ∫u|∇(log u − w)|² + 2‖w_t‖² + ‖∇w_t‖²`.
pub fn dissipation_d(grid: &RadialGrid, state: &FieldState) -> f64 {
    dissipation_d_with(grid, &DerivedFields::new(grid, state))
}

pub fn dissipation_d_with(grid: &RadialGrid, d: &DerivedFields) -> f64 {
    grid.integrate_faces(&d.log_dissipation)
        + 2.0 * sq_sum_weighted(grid, &d.w_t, None)
        + face_sq_sum(grid, &d.grad_w_t, None)
}

/// Defect of `dF/dt + D = 0` between two samples, with `D` averaged.
pub fn lyapunov_identity_residual(f0: f64, d0: f64, f1: f64, d1: f64, dt: f64) -> f64 {
    ((f1 - f0) / dt + 0.5 * (d0 + d1)).abs()
}

/// Defect of `dF_φ/dt + D_φ = dM_φ/dt + R` between two samples, with `D_φ`
/// and `R` averaged.
pub fn localized_identity_residual(before: &LocalizedValues, after: &LocalizedValues, dt: f64) -> f64 {
    let df = (after.f_phi - before.f_phi) / dt;
    let dm = (after.mass_phi - before.mass_phi) / dt;
    (df + 0.5 * (before.d_phi + after.d_phi) - dm - 0.5 * (before.r_phi + after.r_phi)).abs()
}

fn assert_verified(c: &Cutoff) {
    assert!(c.is_verified(), "cutoff at r = {} failed verification", c.radius());
}

/// `M_φ = ∫uφ`.
pub fn mass_phi(grid: &RadialGrid, u: &[f64], c: &Cutoff) -> f64 {
    u.iter().zip(grid.cell_areas()).zip(c.phi()).map(|((u, a), p)| u * a * p).sum()
}

pub fn localized_f(grid: &RadialGrid, state: &FieldState, c: &Cutoff) -> f64 {
    localized_f_with(grid, state, c, &DerivedFields::new(grid, state))
}

pub fn localized_f_with(grid: &RadialGrid, state: &FieldState, c: &Cutoff, d: &DerivedFields) -> f64 {
    assert_verified(c);
    let phi = c.phi();
    let mut cell = 0.0;
    for i in 0..grid.cells() {
        let (u, w, wt) = (state.u[i], state.w[i], d.w_t[i]);
        cell += (d.u_log_u[i] - u * w + 0.5 * (wt * wt + w * w)) * phi[i] * grid.cell_areas()[i];
    }
    cell + 0.5 * face_sq_sum(grid, &d.grad_w, Some(c.phi_face()))
}

pub fn localized_d(grid: &RadialGrid, state: &FieldState, c: &Cutoff) -> f64 {
    localized_d_with(grid, c, &DerivedFields::new(grid, state))
}

pub fn localized_d_with(grid: &RadialGrid, c: &Cutoff, d: &DerivedFields) -> f64 {
    assert_verified(c);
    let pf = c.phi_face();
    let log_term: f64 = d
        .log_dissipation
        .iter()
        .enumerate()
        .map(|(k, x)| x * pf[k] * grid.face_weight(k))
        .sum();
    log_term + 2.0 * sq_sum_weighted(grid, &d.w_t, Some(c.phi())) + face_sq_sum(grid, &d.grad_w_t, Some(pf))
}

/// `R(u,w,φ) = ∫(u log u)Δφ + ½∫w_t²Δφ + ∫{(1+w)∇u + (u log u − uw − w_t)∇w}·∇φ`.
pub fn localized_remainder(grid: &RadialGrid, state: &FieldState, c: &Cutoff) -> f64 {
    localized_remainder_with(grid, state, c, &DerivedFields::new(grid, state))
}

pub fn localized_remainder_with(grid: &RadialGrid, state: &FieldState, c: &Cutoff, d: &DerivedFields) -> f64 {
    assert_verified(c);
    let n = grid.cells();
    let lap = c.lap_phi();
    let mut cell = 0.0;
    for i in 0..n {
        cell += (d.u_log_u[i] + 0.5 * d.w_t[i] * d.w_t[i]) * lap[i] * grid.cell_areas()[i];
    }
    let gphi = c.grad_phi();
    let mut face = 0.0;
    for k in 1..n {
        if gphi[k] == 0.0 {
            continue;
        }
        let mean = |f: &dyn Fn(usize) -> f64| 0.5 * (f(k - 1) + f(k));
        let one_plus_w = 1.0 + mean(&|i| state.w[i]);
        let drift_factor = mean(&|i| d.u_log_u[i] - state.u[i] * state.w[i] - d.w_t[i]);
        face += (one_plus_w * d.grad_u[k] + drift_factor * d.grad_w[k]) * gphi[k] * grid.face_weight(k);
    }
    cell + face
}

/// `log ∫ e^{aw}φ`, accumulated in log-sum-exp form.
pub fn log_exp_moment(grid: &RadialGrid, w: &[f64], c: &Cutoff, a: f64) -> f64 {
    let terms: Vec<f64> = w
        .iter()
        .zip(grid.cell_areas())
        .zip(c.phi())
        .filter(|(_, &p)| p > 0.0)
        .map(|((w, area), p)| a * w + (area * p).ln())
        .collect();
    log_sum_exp(&terms)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `∫ e^{aw}φ`; may be `+∞` where the log form is finite.
pub fn exp_moment(grid: &RadialGrid, w: &[f64], c: &Cutoff, a: f64) -> f64 {
    log_exp_moment(grid, w, c, a).exp()
}

/// `∫|∇w|²φ`.
pub fn gradw_l2_phi(grid: &RadialGrid, w: &[f64], c: &Cutoff) -> f64 {
    face_sq_sum(grid, &grid.face_gradient(w), Some(c.phi_face()))
}

/// `log ∫e^{aw}φ − (a²/16π)∫|∇w|²φ`.
pub fn mt_ratio(grid: &RadialGrid, state: &FieldState, c: &Cutoff, a: f64) -> f64 {
    assert!(a > 0.0, "exponent must be positive");
    log_exp_moment(grid, &state.w, c, a) - a * a / (16.0 * PI) * gradw_l2_phi(grid, &state.w, c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JensenGap {
    pub gap: f64,
    /// Sum of the magnitudes of every term entering the gap, the scale for
    /// the rounding tolerance; the gap itself can be far smaller than any term.
    pub scale: f64,
}

/// `∫(u log u)φ + M_φ log ∫e^wφ − M_φ log M_φ − ∫uwφ`.
pub fn jensen_gap(grid: &RadialGrid, state: &FieldState, c: &Cutoff) -> JensenGap {
    let m = mass_phi(grid, &state.u, c);
    if m <= 0.0 {
        return JensenGap { gap: 0.0, scale: 0.0 };
    }
    let (mut ent, mut uw, mut magnitude) = (0.0, 0.0, 0.0);
    for i in 0..grid.cells() {
        let wgt = c.phi()[i] * grid.cell_areas()[i];
        let (e, x) = (xlogx(state.u[i]) * wgt, state.u[i] * state.w[i] * wgt);
        ent += e;
        uw += x;
        magnitude += e.abs() + x.abs();
    }
    let moment = m * log_exp_moment(grid, &state.w, c, 1.0);
    let rhs = ent + moment - m * m.ln();
    JensenGap { gap: rhs - uw, scale: magnitude + moment.abs() + (m * m.ln()).abs() }
}

/// Estimated constant of `‖z‖²₂ ≤ K²(‖∇z‖²₁ + ‖z‖²₁)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolevConstant {
    pub k_sob: f64,
    pub max_ratio: f64,
    pub family_size: usize,
    pub max_ratio_witness: String,
}

/// `‖z‖₂ / √(‖∇z‖²₁ + ‖z‖²₁)` for one discrete field.
pub fn sobolev_ratio(grid: &RadialGrid, z: &[f64]) -> f64 {
    let l2 = sq_sum_weighted(grid, z, None).sqrt();
    let l1: f64 = z.iter().zip(grid.cell_areas()).map(|(x, a)| x.abs() * a).sum();
    let g = grid.face_gradient(z);
    let grad_l1: f64 = g.iter().enumerate().map(|(k, x)| x.abs() * grid.face_weight(k)).sum();
    l2 / (grad_l1 * grad_l1 + l1 * l1).sqrt()
}

/// The deterministic probe family: constant, Gaussians with widths
/// logarithmically spaced in `[10⁻³R, R]`, mollified annuli, linear ramps.
pub fn sobolev_probe_family(grid: &RadialGrid, seed: u64) -> Vec<(String, Vec<f64>)> {
    let rr = grid.radius();
    let centers = grid.cell_centers();
    let mut probes = vec![("constant".to_string(), vec![1.0; grid.cells()])];
    for j in 0..40 {
        let sigma = rr * 10f64.powf(-3.0 + 3.0 * j as f64 / 39.0);
        probes.push((
            format!("gaussian(sigma={sigma:.4e})"),
            centers.iter().map(|r| (-(r * r) / (sigma * sigma)).exp()).collect(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..20 {
        let mid = rng.gen_range(0.1..0.9) * rr;
        let half = rng.gen_range(0.02..0.3) * rr;
        let soft = rng.gen_range(0.01..0.1) * rr;
        let z = centers
            .iter()
            .map(|r| {
                let d = ((r - mid).abs() - half) / soft;
                0.5 * (1.0 - d.tanh())
            })
            .collect();
        probes.push((format!("annulus(mid={mid:.4},half={half:.4},soft={soft:.4})"), z));
    }
    for &slope in &[0.25, 1.0, 4.0] {
        probes.push((format!("ramp(slope={slope})"), centers.iter().map(|r| 1.0 + slope * r / rr).collect()));
    }
    probes.push(("ramp(r)".to_string(), centers.to_vec()));
    probes
}

pub fn estimate_k_sob(grid: &RadialGrid, seed: u64) -> SobolevConstant {
    let probes = sobolev_probe_family(grid, seed);
    let mut best = (0.0, String::new());
    for (name, z) in &probes {
        let r = sobolev_ratio(grid, z);
        if r > best.0 {
            best = (r, name.clone());
        }
    }
    SobolevConstant {
        k_sob: K_SOB_SAFETY * best.0,
        max_ratio: best.0,
        family_size: probes.len(),
        max_ratio_witness: best.1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub passed: bool,
}

/// Localized inequality
/// `∫z²φ ≤ 2K²(∫_{B_2r} z)∫(|∇z|²/z)φ + K²(A²/2 + 1)(∫_{B_2r} z)²`.
pub fn sobolev_check_i(grid: &RadialGrid, z: &[f64], c: &Cutoff, k: &SobolevConstant) -> SobolevCheck {
    assert_verified(c);
    assert!(z.iter().all(|&x| x > 0.0), "the localized Sobolev check needs a positive field");
    let lhs = sq_sum_weighted(grid, z, Some(c.phi()));
    let local_mass = grid.integrate_between(z, f64::NEG_INFINITY, 2.0 * c.radius());
    let g = grid.face_gradient(z);
    let pf = c.phi_face();
    let mut fisher = 0.0;
    for kf in 1..grid.cells() {
        if pf[kf] > 0.0 {
            let zbar = 0.5 * (z[kf - 1] + z[kf]);
            fisher += g[kf] * g[kf] / zbar * pf[kf] * grid.face_weight(kf);
        }
    }
    let k2 = k.k_sob * k.k_sob;
    let a = c.grad_constant();
    let rhs = 2.0 * k2 * local_mass * fisher + k2 * (0.5 * a * a + 1.0) * local_mass * local_mass;
    SobolevCheck { lhs, rhs, slack: rhs - lhs, passed: lhs <= rhs }
}

/// Scalar monitor `max_{i≥1} w_i r_i^{(2−p)/p}`.
pub fn pointwise_w_monitor(grid: &RadialGrid, w: &[f64], p: f64) -> f64 {
    assert!(p > 1.0 && p < 2.0, "pointwise monitor exponent must lie in (1, 2)");
    let e = (2.0 - p) / p;
    w.iter()
        .zip(grid.cell_centers())
        .skip(1)
        .map(|(w, r)| w * r.powf(e))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Localized quantities for one cutoff at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizedValues {
    pub mass_phi: f64,
    pub f_phi: f64,
    pub d_phi: f64,
    pub r_phi: f64,
    pub gradw_l2_phi: f64,
    pub mt_ratio: f64,
    pub jensen_gap: f64,
    pub jensen_scale: f64,
    pub sobolev_slack: f64,
}

/// One row of the monitored time series.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    pub t: f64,
    pub dt: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub mass_w: f64,
    pub linf_u: f64,
    pub argmax_radius: f64,
    pub entropy: f64,
    pub f: f64,
    pub d: f64,
    pub wt_l2: f64,
    pub localized: Vec<LocalizedValues>,
    /// `∫_{B_r} u` for each configured ε-regularity radius.
    pub ball_masses: Vec<f64>,
    pub pointwise_w: f64,
    /// Lyapunov identity defect against the preceding step (0 for the first row).
    pub lyap_defect: f64,
    /// Localized identity defect per cutoff (0 for the first row).
    pub loc_defects: Vec<f64>,
}

/// Everything needed to turn a state into a [`FunctionalSample`].
#[derive(Debug, Clone)]
pub struct FunctionalContext {
    pub grid: RadialGrid,
    pub cutoffs: Vec<Cutoff>,
    pub k_sob: SobolevConstant,
    pub mt_exponent: f64,
    pub pointwise_p: f64,
    pub ball_radii: Vec<f64>,
}

impl FunctionalContext {
    pub fn sample(&self, state: &FieldState, dt: f64) -> FunctionalSample {
        let g = &self.grid;
        let d = DerivedFields::new(g, state);
        let localized = self.cutoffs.iter().map(|c| self.localized(state, c, &d)).collect();
        let argmax = g.argmax(&state.u);
        FunctionalSample {
            t: state.t,
            dt,
            mass_u: g.integrate(&state.u),
            mass_v: g.integrate(&state.v),
            mass_w: g.integrate(&state.w),
            linf_u: state.u[argmax],
            argmax_radius: g.cell_centers()[argmax],
            entropy: d.u_log_u.iter().zip(g.cell_areas()).map(|(x, a)| x * a).sum(),
            f: lyapunov_f_with(g, state, &d),
            d: dissipation_d_with(g, &d),
            wt_l2: sq_sum_weighted(g, &d.w_t, None),
            localized,
            ball_masses: self
                .ball_radii
                .iter()
                .map(|&r| g.integrate_between(&state.u, f64::NEG_INFINITY, r))
                .collect(),
            pointwise_w: pointwise_w_monitor(g, &state.w, self.pointwise_p),
            lyap_defect: 0.0,
            loc_defects: vec![0.0; self.cutoffs.len()],
        }
    }

    fn localized(&self, state: &FieldState, c: &Cutoff, d: &DerivedFields) -> LocalizedValues {
        let g = &self.grid;
        let jg = jensen_gap(g, state, c);
        let gradw = face_sq_sum(g, &d.grad_w, Some(c.phi_face()));
        let a = self.mt_exponent;
        let slack = if state.u.iter().all(|&x| x > 0.0) {
            sobolev_check_i(g, &state.u, c, &self.k_sob).slack
        } else {
            f64::NAN
        };
        LocalizedValues {
            mass_phi: mass_phi(g, &state.u, c),
            f_phi: localized_f_with(g, state, c, d),
            d_phi: localized_d_with(g, c, d),
            r_phi: localized_remainder_with(g, state, c, d),
            gradw_l2_phi: gradw,
            mt_ratio: log_exp_moment(g, &state.w, c, a) - a * a / (16.0 * PI) * gradw,
            jensen_gap: jg.gap,
            jensen_scale: jg.scale,
            sobolev_slack: slack,
        }
    }

    /// Fill the identity defects of `after` from the row one step earlier.
    pub fn attach_defects(before: &FunctionalSample, after: &mut FunctionalSample) {
        let dt = after.t - before.t;
        if dt <= 0.0 {
            return;
        }
        after.lyap_defect = lyapunov_identity_residual(before.f, before.d, after.f, after.d, dt);
        after.loc_defects = before
            .localized
            .iter()
            .zip(&after.localized)
            .map(|(b, a)| localized_identity_residual(b, a, dt))
            .collect();
    }
}
