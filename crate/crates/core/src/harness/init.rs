//! Initial data families, normalized to the configured mass.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::harness::config::{Family, FieldMode, InitConfig};
use crate::solver::FieldState;
use crate::tridiag::Factorization;

fn gaussian(grid: &RadialGrid, center: f64, sigma: f64) -> Vec<f64> {
    grid.cell_centers().iter().map(|r| (-((r - center) / sigma).powi(2)).exp()).collect()
}

fn normalized(grid: &RadialGrid, mut z: Vec<f64>, mass: f64) -> Vec<f64> {
    let m = grid.integrate(&z);
    z.iter_mut().for_each(|x| *x *= mass / m);
    z
}

/// The profile of `u₀` before the state is assembled.
pub fn initial_density(grid: &RadialGrid, init: &InitConfig) -> Result<Vec<f64>> {
    if init.sigma <= 2.0 * grid.dr() {
        return Err(Error::Resolution(format!("init.sigma = {} must exceed 2Δr = {}", init.sigma, 2.0 * grid.dr())));
    }
    let u = match init.family {
        Family::Gaussian => gaussian(grid, 0.0, init.sigma),
        Family::Annulus => gaussian(grid, 0.5 * grid.radius(), init.sigma),
        Family::TwoScale => {
            let pedestal = init.pedestal_sigma.unwrap_or(0.5 * grid.radius());
            let core = normalized(grid, gaussian(grid, 0.0, init.sigma), init.core_fraction);
            let broad = normalized(grid, gaussian(grid, 0.0, pedestal), 1.0 - init.core_fraction);
            core.iter().zip(&broad).map(|(a, b)| a + b).collect()
        }
        Family::Uniform => return Ok(vec![init.total_mass / grid.disk_area(); grid.cells()]),
    };
    let u = normalized(grid, u, init.total_mass);
    // normalization may leave the last bit off; one correction pass
    let m = grid.integrate(&u);
    let u: Vec<f64> = if m != init.total_mass { u.iter().map(|x| x * (init.total_mass / m)).collect() } else { u };
    if u.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Config("initial density is not finite and nonnegative".into()));
    }
    Ok(u)
}

/// Solve `(I − Δ)w = f` with zero-flux boundaries.
pub fn elliptic_solve(grid: &RadialGrid, f: &[f64]) -> Vec<f64> {
    let n = grid.cells();
    let k = 2.0 * PI / grid.dr();
    let rho = grid.face_radii();
    let area = grid.cell_areas();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    for i in 0..n {
        diag[i] = area[i];
        if i > 0 {
            diag[i] += k * rho[i];
        }
        if i + 1 < n {
            diag[i] += k * rho[i + 1];
            off[i] = -k * rho[i + 1];
        }
    }
    let mut rhs: Vec<f64> = f.iter().zip(area).map(|(x, a)| x * a).collect();
    Factorization::new(&diag, &off).solve_in_place(&mut rhs);
    rhs
}

pub fn init_fields(grid: &RadialGrid, init: &InitConfig) -> Result<FieldState> {
    let u = initial_density(grid, init)?;
    let n = grid.cells();
    let v = match init.v0_mode {
        FieldMode::Zero => vec![0.0; n],
        FieldMode::CopyU => u.clone(),
        FieldMode::Constant => vec![init.v0_constant; n],
        FieldMode::Elliptic => return Err(Error::Config("init.v0_mode must be one of zero, copy_u, constant".into())),
    };
    let w = match init.w0_mode {
        FieldMode::Zero => vec![0.0; n],
        FieldMode::CopyU => u.clone(),
        FieldMode::Constant => vec![init.w0_constant; n],
        FieldMode::Elliptic => elliptic_solve(grid, &u).into_iter().map(|x| x.max(0.0)).collect(),
    };
    Ok(FieldState::new(u, v, w))
}
