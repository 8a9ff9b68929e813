//! Radial cutoffs `φ = ψⁿ` centered at the origin, with measured constants
//! `A`, `B` such that `|∇φ| ≤ Aφ^{1−1/n}` and `|Δφ| ≤ Bφ^{1−2/n}` hold for
//! the discrete operators on the grid they were built for.

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

/// Inflation applied to the measured maximal ratios.
pub const CONSTANT_INFLATION: f64 = 1.05;

/// Minimum number of cell centers strictly inside the transition annulus `r < |x| < 2r`.
pub const MIN_TRANSITION_CELLS: usize = 8;

/// Quintic smoothstep profile: 1 at `s ≤ 0`, 0 at `s ≥ 1`, C² in between.
pub fn smoothstep_profile(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// Derivative of [`smoothstep_profile`] with respect to `s`.
pub fn smoothstep_profile_derivative(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    -30.0 * s * s * (1.0 - s) * (1.0 - s)
}

#[derive(Debug, Clone)]
pub struct Cutoff {
    radius: f64,
    exponent: u32,
    phi: Vec<f64>,
    phi_face: Vec<f64>,
    grad_phi: Vec<f64>,
    lap_phi: Vec<f64>,
    grad_constant: f64,
    lap_constant: f64,
    verified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffVerification {
    pub max_grad_ratio: f64,
    pub max_lap_ratio: f64,
    pub grad_constant: f64,
    pub lap_constant: f64,
    /// Face index with the largest gradient ratio.
    pub grad_witness: usize,
    /// Cell index with the largest Laplacian ratio.
    pub lap_witness: usize,
    pub passed: bool,
}

impl Cutoff {
    pub fn build(grid: &RadialGrid, radius: f64, exponent: u32) -> Result<Self> {
        if !(radius > 0.0 && 2.0 * radius < grid.radius()) {
            return Err(Error::Config(format!(
                "cutoff radius must satisfy 0 < 2r < R (r = {radius}, R = {})",
                grid.radius()
            )));
        }
        if exponent < 4 {
            return Err(Error::Config(format!("cutoff exponent must be at least 4, got {exponent}")));
        }
        let transition = grid
            .cell_centers()
            .iter()
            .filter(|&&c| c > radius && c < 2.0 * radius)
            .count();
        if transition < MIN_TRANSITION_CELLS {
            return Err(Error::Resolution(format!(
                "cutoff radius {radius} leaves {transition} cells in its transition annulus, need {MIN_TRANSITION_CELLS}"
            )));
        }

        let n = exponent as i32;
        let phi: Vec<f64> = grid
            .cell_centers()
            .iter()
            .map(|&c| smoothstep_profile((c - radius) / radius).powi(n))
            .collect();
        let cells = phi.len();
        let mut phi_face = vec![0.0; cells + 1];
        phi_face[0] = phi[0];
        for k in 1..cells {
            phi_face[k] = 0.5 * (phi[k - 1] + phi[k]);
        }
        phi_face[cells] = phi[cells - 1];
        let grad_phi = grid.face_gradient(&phi);
        let lap_phi = grid.laplacian(&phi);

        let mut cutoff = Self {
            radius,
            exponent,
            phi,
            phi_face,
            grad_phi,
            lap_phi,
            grad_constant: f64::INFINITY,
            lap_constant: f64::INFINITY,
            verified: false,
        };
        let (g, _) = cutoff.max_grad_ratio();
        let (l, _) = cutoff.max_lap_ratio();
        cutoff.grad_constant = CONSTANT_INFLATION * g;
        cutoff.lap_constant = CONSTANT_INFLATION * l;
        cutoff.verified = cutoff.verify().passed;
        Ok(cutoff)
    }

    /// Copy with the constants replaced; re-verified against the same discrete field.
    pub fn with_constants(&self, grad_constant: f64, lap_constant: f64) -> Self {
        let mut c = self.clone();
        c.grad_constant = grad_constant;
        c.lap_constant = lap_constant;
        c.verified = c.verify().passed;
        c
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    /// Per-cell values.
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Per-face values (arithmetic mean of the adjacent cells).
    pub fn phi_face(&self) -> &[f64] {
        &self.phi_face
    }

    /// Discrete gradient of the cell values on all faces.
    pub fn grad_phi(&self) -> &[f64] {
        &self.grad_phi
    }

    /// Discrete radial Laplacian of the cell values.
    pub fn lap_phi(&self) -> &[f64] {
        &self.lap_phi
    }

    /// `A`.
    pub fn grad_constant(&self) -> f64 {
        self.grad_constant
    }

    /// `B`.
    pub fn lap_constant(&self) -> f64 {
        self.lap_constant
    }

    pub fn is_verified(&self) -> bool {
        self.verified
    }

    fn max_grad_ratio(&self) -> (f64, usize) {
        let p = 1.0 - 1.0 / self.exponent as f64;
        let mut best = (0.0, 0);
        for (k, (&g, &f)) in self.grad_phi.iter().zip(&self.phi_face).enumerate() {
            if f > 0.0 {
                let ratio = g.abs() / f.powf(p);
                if ratio > best.0 {
                    best = (ratio, k);
                }
            }
        }
        best
    }

    fn max_lap_ratio(&self) -> (f64, usize) {
        let p = 1.0 - 2.0 / self.exponent as f64;
        let mut best = (0.0, 0);
        for (i, (&l, &f)) in self.lap_phi.iter().zip(&self.phi).enumerate() {
            if f > 0.0 {
                let ratio = l.abs() / f.powf(p);
                if ratio > best.0 {
                    best = (ratio, i);
                }
            }
        }
        best
    }

    /// Recompute the discrete ratios and compare against the stored constants.
    pub fn verify(&self) -> CutoffVerification {
        let (g, gi) = self.max_grad_ratio();
        let (l, li) = self.max_lap_ratio();
        CutoffVerification {
            max_grad_ratio: g,
            max_lap_ratio: l,
            grad_constant: self.grad_constant,
            lap_constant: self.lap_constant,
            grad_witness: gi,
            lap_witness: li,
            passed: g <= self.grad_constant && l <= self.lap_constant,
        }
    }
}
