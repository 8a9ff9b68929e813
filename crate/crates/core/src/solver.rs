//! Time stepping for
//!
//! ```text
//! u_t = Δu − ∇·(u∇w),   v_t = −v + u,   w_t = Δw − w + v
//! ```
//!
//! with zero-flux boundaries. One step is a Lie splitting `u → v → w`:
//! explicit first-order upwind drift followed by θ-implicit diffusion for `u`,
//! the exact exponential integrator for `v` with the new `u` frozen, and a
//! θ-implicit reaction-diffusion solve for `w` sourced by the new `v`.
//!
//! Both `u` sub-updates are in flux form against exact cell areas, so
//! `Σ u_i a_i` is preserved up to rounding independently of `dt`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::tridiag::Factorization;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Advective CFL number.
    pub cfl: f64,
    pub dt_max: f64,
    /// First step size; subsequent steps may grow by at most `dt_growth`.
    pub dt_init: f64,
    /// The splitting error in the energy identities scales with dt, so a slow ramp
    /// keeps the initial transient resolved.
    pub dt_growth: f64,
    /// CFL step sizes at or below this count towards stiffness collapse.
    pub dt_floor: f64,
    /// Consecutive floor hits that abort the run.
    pub stiff_steps: u32,
    /// Largest tolerated undershoot of `u`, relative to `max(u)`.
    pub positivity_floor: f64,
    /// Implicit weighting of diffusion (1 = backward Euler, 0.5 = Crank–Nicolson).
    pub theta: f64,
    /// Disable to obtain plain heat flow for `u`.
    pub chemotaxis: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: 0.4,
            dt_max: 1e-2,
            dt_init: 1e-6,
            dt_growth: 1.001,
            dt_floor: 1e-12,
            stiff_steps: 100,
            positivity_floor: 1e-14,
            theta: 1.0,
            chemotaxis: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return bad("solver.cfl must lie in (0, 0.9]");
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return bad("solver.dt_max must be positive");
        }
        if !(self.dt_init > 0.0 && self.dt_init.is_finite()) {
            return bad("solver.dt_init must be positive");
        }
        if !(self.dt_growth >= 1.0) {
            return bad("solver.dt_growth must be at least 1");
        }
        if !(self.dt_floor > 0.0 && self.dt_floor < self.dt_max) {
            return bad("solver.dt_floor must lie in (0, dt_max)");
        }
        if self.stiff_steps == 0 {
            return bad("solver.stiff_steps must be positive");
        }
        if !(self.positivity_floor >= 0.0 && self.positivity_floor < 1.0) {
            return bad("solver.positivity_floor must lie in [0, 1)");
        }
        if !(0.5..=1.0).contains(&self.theta) {
            return bad("solver.theta must lie in [0.5, 1]");
        }
        Ok(())
    }
}

/// Discrete solution `(u, v, w)` at time `t`, with the initial data retained.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
    pub step_count: u64,
    initial: [Vec<f64>; 3],
}

impl FieldState {
    pub fn new(u: Vec<f64>, v: Vec<f64>, w: Vec<f64>) -> Self {
        assert!(u.len() == v.len() && v.len() == w.len(), "field length mismatch");
        let initial = [u.clone(), v.clone(), w.clone()];
        Self { u, v, w, t: 0.0, step_count: 0, initial }
    }

    /// Restore a state at time `t` whose initial data is known separately.
    pub fn resume(
        u: Vec<f64>,
        v: Vec<f64>,
        w: Vec<f64>,
        t: f64,
        step_count: u64,
        initial: [Vec<f64>; 3],
    ) -> Self {
        Self { u, v, w, t, step_count, initial }
    }

    pub fn constant(cells: usize, u: f64, v: f64, w: f64) -> Self {
        Self::new(vec![u; cells], vec![v; cells], vec![w; cells])
    }

    pub fn cells(&self) -> usize {
        self.u.len()
    }

    pub fn u0(&self) -> &[f64] {
        &self.initial[0]
    }

    pub fn v0(&self) -> &[f64] {
        &self.initial[1]
    }

    pub fn w0(&self) -> &[f64] {
        &self.initial[2]
    }

    /// Name of the first field holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        [("u", &self.u), ("v", &self.v), ("w", &self.w)]
            .into_iter()
            .find(|(_, f)| f.iter().any(|x| !x.is_finite()))
            .map(|(n, _)| n)
    }
}

/// The radial Laplacian with zero boundary flux.
pub fn laplacian_radial(grid: &RadialGrid, z: &[f64]) -> Vec<f64> {
    grid.laplacian(z)
}

fn upwind_fluxes(grid: &RadialGrid, u: &[f64], w: &[f64], flux: &mut [f64]) {
    grid.face_gradient_into(w, flux);
    for k in 1..u.len() {
        let g = flux[k];
        // drift velocity is +∇w; the donor is the cell the flow leaves
        let donor = if g > 0.0 { u[k - 1] } else { u[k] };
        flux[k] = donor * g;
    }
}

fn flux_divergence(rho: &[f64], inv_center_dr: &[f64], flux: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = (rho[i + 1] * flux[i + 1] - rho[i] * flux[i]) * inv_center_dr[i];
    }
}

/// `∇·(u∇w)` in flux form with first-order upwind face values of `u`.
pub fn chemotactic_divergence(grid: &RadialGrid, u: &[f64], w: &[f64]) -> Vec<f64> {
    let mut flux = vec![0.0; grid.cells() + 1];
    upwind_fluxes(grid, u, w, &mut flux);
    let mut out = vec![0.0; grid.cells()];
    let inv: Vec<f64> = grid.cell_centers().iter().map(|r| 1.0 / (r * grid.dr())).collect();
    flux_divergence(grid.face_radii(), &inv, &flux, &mut out);
    out
}

/// `w_t = Δw − w + v` evaluated on the current fields.
pub fn compute_w_t(grid: &RadialGrid, state: &FieldState) -> Vec<f64> {
    let mut out = grid.laplacian(&state.w);
    for ((o, &w), &v) in out.iter_mut().zip(&state.w).zip(&state.v) {
        *o += v - w;
    }
    out
}

pub fn max_abs_gradient(grid: &RadialGrid, z: &[f64]) -> f64 {
    grid.face_gradient(z).iter().fold(0.0, |m, g| m.max(g.abs()))
}

/// Smallest step floor regardless of configuration.
pub const DT_FLOOR: f64 = 1e-12;

/// Advective step limit `min(dt_max, cfl·Δr / max|∇w|)`, floored at [`DT_FLOOR`].
/// Diffusion is implicit and does not constrain the step.
pub fn adaptive_dt(grid: &RadialGrid, state: &FieldState, config: &SolverConfig) -> f64 {
    if !config.chemotaxis {
        return config.dt_max;
    }
    let g = max_abs_gradient(grid, &state.w);
    let dt = if g > 0.0 { config.cfl * grid.dr() / g } else { f64::INFINITY };
    dt.min(config.dt_max).max(DT_FLOOR)
}

/// Step-size policy on top of [`adaptive_dt`]: start at `dt_init`, grow by at
/// most `dt_growth` per step, and count consecutive steps at the floor.
#[derive(Debug, Clone)]
pub struct StepController {
    last_dt: Option<f64>,
    floor_hits: u32,
}

impl Default for StepController {
    fn default() -> Self {
        Self::new()
    }
}

impl StepController {
    pub fn new() -> Self {
        Self { last_dt: None, floor_hits: 0 }
    }

    /// Next step size, never overshooting `t_end`.
    pub fn next_dt(
        &mut self,
        grid: &RadialGrid,
        state: &FieldState,
        config: &SolverConfig,
        t_end: f64,
    ) -> Result<f64> {
        let cfl_dt = adaptive_dt(grid, state, config);
        if cfl_dt <= config.dt_floor {
            self.floor_hits += 1;
            if self.floor_hits >= config.stiff_steps {
                return Err(Error::Stiffness {
                    step: state.step_count,
                    t: state.t,
                    dt: cfl_dt,
                    count: self.floor_hits,
                });
            }
        } else {
            self.floor_hits = 0;
        }
        let ramp = match self.last_dt {
            None => config.dt_init,
            Some(prev) => prev * config.dt_growth,
        };
        let mut dt = quantize_step(cfl_dt.min(ramp), config.dt_max);
        let remaining = t_end - state.t;
        if remaining <= dt * (1.0 + 1e-9) {
            dt = remaining;
        }
        self.last_dt = Some(cfl_dt.min(ramp));
        Ok(dt)
    }
}

/// Steps per octave of the step-size ladder.
pub const LADDER_STEPS_PER_OCTAVE: u32 = 16;

/// Round `dt` down onto the ladder `dt_max·2^{−k/16}`, so that runs revisit a
/// small set of step sizes and the implicit factorizations can be reused.
pub fn quantize_step(dt: f64, dt_max: f64) -> f64 {
    if dt >= dt_max {
        return dt_max;
    }
    let per = LADDER_STEPS_PER_OCTAVE as f64;
    let mut k = (per * (dt_max / dt).log2()).ceil();
    let mut q = dt_max * (-k / per).exp2();
    // guard the rounding of log2 near ladder points
    while q > dt {
        k += 1.0;
        q = dt_max * (-k / per).exp2();
    }
    q
}

/// Reusable stepping kernel with preallocated work arrays and cached
/// factorizations of the two implicit operators.
#[derive(Debug, Clone)]
pub struct Solver {
    grid: RadialGrid,
    config: SolverConfig,
    inv_center_dr: Vec<f64>,
    flux: Vec<f64>,
    work: Vec<f64>,
    diag: Vec<f64>,
    off: Vec<f64>,
    rhs: Vec<f64>,
    u_operator: CachedOperator,
    w_operator: CachedOperator,
}

#[derive(Debug, Clone, Default)]
struct CachedOperator {
    dt_bits: Option<u64>,
    factors: Factorization,
}

#[derive(Clone, Copy)]
enum Operator {
    U,
    W,
}

impl Solver {
    pub fn new(grid: RadialGrid, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let n = grid.cells();
        let inv_center_dr = grid.cell_centers().iter().map(|r| 1.0 / (r * grid.dr())).collect();
        Ok(Self {
            grid,
            config,
            inv_center_dr,
            flux: vec![0.0; n + 1],
            work: vec![0.0; n],
            diag: vec![0.0; n],
            off: vec![0.0; n - 1],
            rhs: vec![0.0; n],
            u_operator: CachedOperator::default(),
            w_operator: CachedOperator::default(),
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Advance `state` by `dt` in place.
    pub fn step(&mut self, state: &mut FieldState, dt: f64) -> Result<()> {
        assert_eq!(state.cells(), self.grid.cells());
        assert!(dt > 0.0, "step size must be positive");
        self.step_u(state, dt)?;

        let decay = (-dt).exp();
        let gain = -(-dt).exp_m1();
        for (v, &u) in state.v.iter_mut().zip(&state.u) {
            *v = decay * *v + gain * u;
        }

        self.step_w(state, dt);

        state.t += dt;
        state.step_count += 1;
        if let Some(field) = state.first_non_finite() {
            return Err(Error::Divergence { step: state.step_count, t: state.t, field });
        }
        Ok(())
    }

    fn step_u(&mut self, state: &mut FieldState, dt: f64) -> Result<()> {
        let n = self.grid.cells();
        let mass_before = self.grid.integrate(&state.u);
        if self.config.chemotaxis {
            upwind_fluxes(&self.grid, &state.u, &state.w, &mut self.flux);
            flux_divergence(self.grid.face_radii(), &self.inv_center_dr, &self.flux, &mut self.work);
            for (u, d) in state.u.iter_mut().zip(&self.work) {
                *u -= dt * d;
            }
        }
        if state.u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { step: state.step_count + 1, t: state.t + dt, field: "u" });
        }
        self.implicit_diffusion(Operator::U, &mut state.u, dt, None);
        self.enforce_positivity(&mut state.u, mass_before, state.step_count + 1, state.t + dt)?;
        // Both sub-updates telescope algebraically; in floating point the
        // implicit solve leaks ~eps·cond per step. Restore it.
        let after = self.grid.integrate(&state.u);
        debug_assert!((after - mass_before).abs() <= 1e-8 * mass_before, "mass leak {after} vs {mass_before}");
        if after > 0.0 && after != mass_before {
            let scale = mass_before / after;
            state.u.iter_mut().for_each(|x| *x *= scale);
        }
        debug_assert_eq!(state.u.len(), n);
        Ok(())
    }

    fn step_w(&mut self, state: &mut FieldState, dt: f64) {
        let src = std::mem::take(&mut state.v);
        self.implicit_diffusion(Operator::W, &mut state.w, dt, Some(&src));
        state.v = src;
    }

    /// θ-scheme for `z_t = Δz − c·z + source` (`c = 0` for `u`, `c = 1` for `w`)
    /// in the area-weighted symmetric form
    /// `(A + θdt(K + cA)) z' = (A − (1−θ)dt(K + cA)) z + dt·A·source`.
    fn implicit_diffusion(&mut self, op: Operator, z: &mut [f64], dt: f64, source: Option<&[f64]>) {
        let n = self.grid.cells();
        let theta = self.config.theta;
        let reaction = match op {
            Operator::U => 0.0,
            Operator::W => 1.0,
        };
        let rho = self.grid.face_radii();
        let area = self.grid.cell_areas();
        let k = 2.0 * PI / self.grid.dr();

        let explicit = (1.0 - theta) * dt;
        for i in 0..n {
            let mut r = area[i] * z[i];
            if explicit > 0.0 {
                let mut kz = reaction * area[i] * z[i];
                if i > 0 {
                    kz += k * rho[i] * (z[i] - z[i - 1]);
                }
                if i + 1 < n {
                    kz += k * rho[i + 1] * (z[i] - z[i + 1]);
                }
                r -= explicit * kz;
            }
            if let Some(s) = source {
                r += dt * area[i] * s[i];
            }
            self.rhs[i] = r;
        }

        let cache = match op {
            Operator::U => &mut self.u_operator,
            Operator::W => &mut self.w_operator,
        };
        if cache.dt_bits != Some(dt.to_bits()) {
            let implicit = theta * dt;
            for i in 0..n {
                let mut d = area[i] * (1.0 + implicit * reaction);
                if i > 0 {
                    d += implicit * k * rho[i];
                }
                if i + 1 < n {
                    d += implicit * k * rho[i + 1];
                    self.off[i] = -implicit * k * rho[i + 1];
                }
                self.diag[i] = d;
            }
            cache.factors.refactor(&self.diag, &self.off);
            cache.dt_bits = Some(dt.to_bits());
        }
        cache.factors.solve_in_place(&mut self.rhs);
        z.copy_from_slice(&self.rhs);
    }

    fn enforce_positivity(&self, u: &mut [f64], mass: f64, step: u64, t: f64) -> Result<()> {
        let (min, max) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
        if min >= 0.0 {
            return Ok(());
        }
        let tol = self.config.positivity_floor;
        if min < -tol * max {
            return Err(Error::Positivity { step, t, min, tol });
        }
        for x in u.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let after = self.grid.integrate(u);
        if after > 0.0 {
            let scale = mass / after;
            u.iter_mut().for_each(|x| *x *= scale);
        }
        Ok(())
    }
}
