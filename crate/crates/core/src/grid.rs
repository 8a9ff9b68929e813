//! Cell-centered annular mesh of the disk `B_R` and the quadratures built on it.
//!
//! The origin is the inner face of cell 0, so face radii vanish at the center
//! and the `1/r` factor of the radial divergence is only ever evaluated at cell
//! centers. Cell areas are exact annulus areas, which turns every discrete
//! conservation statement into a telescoping sum.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Smallest admissible cell count.
pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    radius: f64,
    dr: f64,
    face_radii: Vec<f64>,
    cell_centers: Vec<f64>,
    cell_areas: Vec<f64>,
}

impl RadialGrid {
    pub fn new(radius: f64, cells: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Config(format!("domain.radius must be positive, got {radius}")));
        }
        if cells < MIN_CELLS {
            return Err(Error::Config(format!(
                "domain.cells must be at least {MIN_CELLS}, got {cells}"
            )));
        }
        let dr = radius / cells as f64;
        let mut face_radii: Vec<f64> = (0..=cells).map(|i| i as f64 * dr).collect();
        face_radii[cells] = radius;
        let cell_centers = face_radii.windows(2).map(|f| 0.5 * (f[0] + f[1])).collect();
        let cell_areas = face_radii
            .windows(2)
            .map(|f| PI * (f[1] * f[1] - f[0] * f[0]))
            .collect();
        Ok(Self { radius, dr, face_radii, cell_centers, cell_areas })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cells(&self) -> usize {
        self.cell_centers.len()
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    /// `N + 1` face radii, `ρ_0 = 0` through `ρ_N = R`.
    pub fn face_radii(&self) -> &[f64] {
        &self.face_radii
    }

    pub fn cell_centers(&self) -> &[f64] {
        &self.cell_centers
    }

    pub fn cell_areas(&self) -> &[f64] {
        &self.cell_areas
    }

    /// Area of the whole disk, `πR²`.
    pub fn disk_area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    /// Quadrature weight `2πρΔr` of a face; used for integrands that live on faces.
    pub fn face_weight(&self, face: usize) -> f64 {
        2.0 * PI * self.face_radii[face] * self.dr
    }

    /// `Σ f_i a_i`, with Neumaier-compensated summation so that mass
    /// bookkeeping over millions of steps is not limited by the sum itself.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.check_len(f);
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (v, a) in f.iter().zip(&self.cell_areas) {
            let x = v * a;
            let t = sum + x;
            comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
            sum = t;
        }
        sum + comp
    }

    /// `Σ f_i a_i` over cells with center radius strictly inside `(lo, hi)`.
    pub fn integrate_between(&self, f: &[f64], lo: f64, hi: f64) -> f64 {
        self.check_len(f);
        f.iter()
            .zip(&self.cell_areas)
            .zip(&self.cell_centers)
            .filter(|(_, &r)| r > lo && r < hi)
            .map(|((v, a), _)| v * a)
            .sum()
    }

    /// Sum of a face-located integrand against the face weights `2πρΔr`.
    /// `g` has one entry per face (`N + 1`); the two boundary entries carry
    /// zero weight at the origin and are included at `ρ_N`.
    pub fn integrate_faces(&self, g: &[f64]) -> f64 {
        assert_eq!(g.len(), self.face_radii.len(), "face field length mismatch");
        g.iter().enumerate().map(|(k, v)| v * self.face_weight(k)).sum()
    }

    /// Discrete radial gradient on all `N + 1` faces. Interior faces carry
    /// `(z_i − z_{i−1})/Δr`; the origin and the outer boundary carry zero
    /// (symmetry and homogeneous Neumann respectively).
    pub fn face_gradient(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.face_radii.len()];
        self.face_gradient_into(z, &mut out);
        out
    }

    pub fn face_gradient_into(&self, z: &[f64], out: &mut [f64]) {
        self.check_len(z);
        let n = self.cells();
        assert_eq!(out.len(), n + 1);
        out[0] = 0.0;
        out[n] = 0.0;
        let inv = 1.0 / self.dr;
        for k in 1..n {
            out[k] = (z[k] - z[k - 1]) * inv;
        }
    }

    /// Radial Laplacian `(1/r)(r z_r)_r` in flux form with zero boundary flux:
    /// `(Δz)_i = [ρ_{i+1} g_{i+1} − ρ_i g_i] / (r_i Δr)`.
    pub fn laplacian(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cells()];
        self.laplacian_into(z, &mut out);
        out
    }

    pub fn laplacian_into(&self, z: &[f64], out: &mut [f64]) {
        self.check_len(z);
        let n = self.cells();
        assert_eq!(out.len(), n);
        let inv = 1.0 / self.dr;
        let rho = &self.face_radii;
        for i in 0..n {
            let inner = if i > 0 { rho[i] * (z[i] - z[i - 1]) * inv } else { 0.0 };
            let outer = if i + 1 < n { rho[i + 1] * (z[i + 1] - z[i]) * inv } else { 0.0 };
            out[i] = (outer - inner) / (self.cell_centers[i] * self.dr);
        }
    }

    /// Index of the largest entry (first one on ties).
    pub fn argmax(&self, z: &[f64]) -> usize {
        self.check_len(z);
        let mut best = 0;
        for (i, &v) in z.iter().enumerate() {
            if v > z[best] {
                best = i;
            }
        }
        best
    }

    /// Cell-center radius at which `z` peaks.
    pub fn argmax_radius(&self, z: &[f64]) -> f64 {
        self.cell_centers[self.argmax(z)]
    }

    fn check_len(&self, f: &[f64]) {
        assert_eq!(
            f.len(),
            self.cells(),
            "field has {} entries, grid has {} cells",
            f.len(),
            self.cells()
        );
    }
}
