//! Periodic velocity lattice with spectral transform tables.
//!
//! The box is `[-R, R)^dim` with `n` points per axis, `v_j = -R + j*h`,
//! `h = 2R/n`. Dual wavenumbers are `xi_q = pi*q/R` for
//! `q in [-n/2, n/2)`, stored in FFT order. The forward transform is the
//! semidiscrete Fourier transform `f_hat(xi) = h^d * sum_j f_j e^{-i xi.v_j}`
//! so that spectral values approximate the continuum transform and Parseval
//! holds with the lattice measure.

use crate::error::{Error, Result};
use crate::fft::FftPlans;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct VelocityGrid {
    pub n: usize,
    pub radius: f64,
    pub dim: usize,
    pub spacing: f64,
    plans: FftPlans,
}

/// Optional 1D spatial lattice: `x_j = j * (l_x / n_x)` on `[0, l_x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialAxis {
    pub n_x: usize,
    pub l_x: f64,
}

impl SpatialAxis {
    pub fn spacing(&self) -> f64 {
        self.l_x / self.n_x as f64
    }
    /// Spatial dual wavenumber for FFT-ordered index m.
    pub fn wavenumber(&self, m: usize) -> f64 {
        let q = signed_index(m, self.n_x);
        2.0 * std::f64::consts::PI * q as f64 / self.l_x
    }
}

/// FFT-ordered index -> signed mode index in [-n/2, n/2).
pub fn signed_index(m: usize, n: usize) -> i64 {
    if m < n.div_ceil(2) {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// `n` even and at least 8; powers of two transform fastest but any even
/// size is accepted (refinement studies use intermediate sizes).
pub fn make_grid(n: usize, radius: f64, dim: usize) -> Result<Arc<VelocityGrid>> {
    if n < 8 || n % 2 != 0 {
        return Err(Error::config(format!(
            "grid.n must be even and >= 8, got {n}"
        )));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::config(format!("grid.dim must be 1, 2 or 3, got {dim}")));
    }
    if !(radius > 0.0) {
        return Err(Error::config(format!("grid.radius must be > 0, got {radius}")));
    }
    Ok(Arc::new(VelocityGrid {
        n,
        radius,
        dim,
        spacing: 2.0 * radius / n as f64,
        plans: FftPlans::new(&[n]),
    }))
}

impl VelocityGrid {
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.n; self.dim]
    }

    /// Lattice coordinate along one axis.
    pub fn coord(&self, j: usize) -> f64 {
        -self.radius + j as f64 * self.spacing
    }

    /// Dual wavenumber along one axis for FFT-ordered index m.
    pub fn wavenumber(&self, m: usize) -> f64 {
        std::f64::consts::PI * signed_index(m, self.n) as f64 / self.radius
    }

    /// Largest wavenumber magnitude per axis (Nyquist).
    pub fn xi_max(&self) -> f64 {
        std::f64::consts::PI * self.n as f64 / (2.0 * self.radius)
    }

    /// Decompose a flat index into per-axis indices (last axis fastest).
    #[inline]
    pub fn unflatten(&self, flat: usize) -> [usize; 3] {
        let n = self.n;
        match self.dim {
            1 => [flat, 0, 0],
            2 => [flat / n, flat % n, 0],
            _ => [flat / (n * n), (flat / n) % n, flat % n],
        }
    }

    /// Velocity vector at a flat index (unused axes are zero).
    #[inline]
    pub fn velocity(&self, flat: usize) -> [f64; 3] {
        let ix = self.unflatten(flat);
        let mut v = [0.0; 3];
        for d in 0..self.dim {
            v[d] = self.coord(ix[d]);
        }
        v
    }

    /// Wavenumber vector at a flat spectral index.
    #[inline]
    pub fn xi(&self, flat: usize) -> [f64; 3] {
        let ix = self.unflatten(flat);
        let mut xi = [0.0; 3];
        for d in 0..self.dim {
            xi[d] = self.wavenumber(ix[d]);
        }
        xi
    }

    /// Semidiscrete forward transform of one velocity field.
    pub fn forward(&self, field: &[f64]) -> Vec<Complex64> {
        assert_eq!(field.len(), self.len());
        let mut data: Vec<Complex64> = field.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let dims = self.dims();
        self.plans.transform(&mut data, &dims, true);
        let hd = self.spacing.powi(self.dim as i32);
        for (m, z) in data.iter_mut().enumerate() {
            *z *= hd * self.mode_sign(m);
        }
        data
    }

    /// Inverse of [`forward`]; returns the real part (imaginary part is
    /// roundoff for Hermitian spectra).
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<f64> {
        assert_eq!(spectrum.len(), self.len());
        let mut data: Vec<Complex64> = spectrum.to_vec();
        for (m, z) in data.iter_mut().enumerate() {
            *z *= self.mode_sign(m);
        }
        let dims = self.dims();
        self.plans.transform(&mut data, &dims, false);
        let vol = (2.0 * self.radius).powi(self.dim as i32);
        data.iter().map(|z| z.re / vol).collect()
    }

    /// Phase factor translating between FFT order and the centred lattice:
    /// `(-1)^(m1+m2+m3)`.
    #[inline]
    pub fn mode_sign(&self, flat: usize) -> f64 {
        let ix = self.unflatten(flat);
        let s: usize = ix[..self.dim].iter().sum();
        if s % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Apply a real spectral multiplier `mult(xi)` in place of a field.
    pub fn apply_multiplier(&self, field: &[f64], mult: impl Fn(&[f64; 3]) -> f64) -> Vec<f64> {
        let mut spec = self.forward(field);
        for (m, z) in spec.iter_mut().enumerate() {
            *z *= mult(&self.xi(m));
        }
        self.inverse(&spec)
    }

    /// Lattice quadrature weight (midpoint rule).
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Signature string for manifests and cache keys.
    pub fn signature(&self) -> String {
        format!("grid(n={},R={},dim={})", self.n, self.radius, self.dim)
    }

    pub(crate) fn plans(&self) -> &FftPlans {
        &self.plans
    }
}
