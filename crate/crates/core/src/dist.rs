//! Real-valued fields on a velocity lattice (optionally extended by a 1D
//! spatial lattice), together with their basic physical functionals:
//! moments, entropy, Maxwellian states and the time-dependent exponential
//! weight used by the transformed Cauchy problem.

use crate::error::{Error, Result};
use crate::grid::{SpatialAxis, VelocityGrid};
use crate::parallel::det_sum;
use std::io::{Read, Write};
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct Distribution {
    pub grid: Arc<VelocityGrid>,
    pub spatial: Option<SpatialAxis>,
    /// Row-major values, spatial index slowest: `values[x * grid.len() + v]`.
    pub values: Vec<f64>,
    pub time_tag: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mass: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
}

impl Distribution {
    pub fn zeros(grid: &Arc<VelocityGrid>) -> Self {
        Distribution {
            grid: grid.clone(),
            spatial: None,
            values: vec![0.0; grid.len()],
            time_tag: 0.0,
        }
    }

    pub fn zeros_spatial(grid: &Arc<VelocityGrid>, spatial: SpatialAxis) -> Self {
        let len = grid.len() * spatial.n_x;
        Distribution {
            grid: grid.clone(),
            spatial: Some(spatial),
            values: vec![0.0; len],
            time_tag: 0.0,
        }
    }

    pub fn from_fn(grid: &Arc<VelocityGrid>, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.velocity(i))).collect();
        Distribution {
            grid: grid.clone(),
            spatial: None,
            values,
            time_tag: 0.0,
        }
    }

    pub fn n_x(&self) -> usize {
        self.spatial.as_ref().map(|s| s.n_x).unwrap_or(1)
    }

    /// Quadrature weight of one site (velocity cell, times spatial cell when
    /// a spatial axis is present).
    pub fn site_weight(&self) -> f64 {
        let dv = self.grid.cell_volume();
        match &self.spatial {
            Some(s) => dv * s.spacing(),
            None => dv,
        }
    }

    pub fn v_slice(&self, x: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[x * m..(x + 1) * m]
    }

    pub fn v_slice_mut(&mut self, x: usize) -> &mut [f64] {
        let m = self.grid.len();
        &mut self.values[x * m..(x + 1) * m]
    }

    pub fn same_shape(&self, other: &Distribution) -> bool {
        self.grid.n == other.grid.n
            && self.grid.dim == other.grid.dim
            && self.grid.radius == other.grid.radius
            && self.spatial == other.spatial
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &Distribution) {
        assert!(self.same_shape(other));
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += c * b;
        }
    }

    pub fn linear_comb(a: f64, f: &Distribution, b: f64, g: &Distribution) -> Distribution {
        assert!(f.same_shape(g));
        let mut out = f.clone();
        for (o, (x, y)) in out.values.iter_mut().zip(f.values.iter().zip(g.values.iter())) {
            *o = a * x + b * y;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        let w = self.site_weight();
        (det_sum(self.values.len(), |i| self.values[i] * self.values[i]) * w).sqrt()
    }

    pub fn assert_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Stability("non-finite value in distribution".into()))
        }
    }

    /// Physical-state check: nonnegative up to roundoff.
    pub fn min_relative(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        self.values.iter().fold(0.0f64, |m, v| m.min(*v)) / max
    }
}

/// `rho (2 pi T)^{-dim/2} exp(-|v-u|^2 / (2T))` sampled on the lattice.
pub fn maxwellian(rho: f64, u: [f64; 3], t: f64, grid: &Arc<VelocityGrid>) -> Distribution {
    assert!(rho > 0.0 && t > 0.0, "maxwellian needs rho > 0, T > 0");
    let norm = rho * (2.0 * std::f64::consts::PI * t).powf(-(grid.dim as f64) / 2.0);
    Distribution::from_fn(grid, |v| {
        let mut q = 0.0;
        for d in 0..grid.dim {
            q += (v[d] - u[d]) * (v[d] - u[d]);
        }
        norm * (-q / (2.0 * t)).exp()
    })
}

/// Time horizon of the exponential weight: `T0 = rho / (2 kappa)`
/// (infinite for `kappa = 0`).
pub fn weight_horizon(rho: f64, kappa: f64) -> f64 {
    if kappa == 0.0 {
        f64::INFINITY
    } else {
        rho / (2.0 * kappa)
    }
}

/// `mu(t, v) = exp(-(rho - kappa t)(1 + |v|^2))` for `0 <= t <= rho/(2 kappa)`.
pub fn mu_weight(t: f64, rho: f64, kappa: f64, grid: &Arc<VelocityGrid>) -> Result<Distribution> {
    let t0 = weight_horizon(rho, kappa);
    if !(0.0..=t0).contains(&t) {
        return Err(Error::domain(format!(
            "mu_weight: t = {t} outside [0, T0 = {t0}]"
        )));
    }
    let beta = rho - kappa * t;
    let mut out = Distribution::from_fn(grid, |v| {
        let q = 1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        (-beta * q).exp()
    });
    out.time_tag = t;
    Ok(out)
}

/// Pointwise product with the polynomial weight `W_l = (1+|v|^2)^{l/2}`.
pub fn weight_multiply(f: &Distribution, l: f64) -> Distribution {
    let mut out = f.clone();
    for x in 0..f.n_x() {
        let slice = out.v_slice_mut(x);
        for (i, v) in slice.iter_mut().enumerate() {
            let vel = f.grid.velocity(i);
            let q = 1.0 + vel[0] * vel[0] + vel[1] * vel[1] + vel[2] * vel[2];
            *v *= q.powf(l / 2.0);
        }
    }
    out
}

/// Lattice quadrature of `(1, v, |v|^2)` against `f`, spatial sites included.
pub fn moments(f: &Distribution) -> Moments {
    let w = f.site_weight();
    let m = f.grid.len();
    let mass = w * det_sum(f.values.len(), |i| f.values[i]);
    let mut momentum = [0.0; 3];
    for d in 0..f.grid.dim {
        momentum[d] = w * det_sum(f.values.len(), |i| f.values[i] * f.grid.velocity(i % m)[d]);
    }
    let energy = w * det_sum(f.values.len(), |i| {
        let v = f.grid.velocity(i % m);
        f.values[i] * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    });
    Moments {
        mass,
        momentum,
        energy,
    }
}

/// Entropy floor regularising `log` at vanishing densities; recorded in every
/// entropy report.
pub const ENTROPY_FLOOR: f64 = 1e-30;

/// `H = sum max(f, floor) log max(f, floor) * cell`, lattice quadrature.
pub fn entropy_h(f: &Distribution) -> f64 {
    let w = f.site_weight();
    w * det_sum(f.values.len(), |i| {
        let v = f.values[i].max(ENTROPY_FLOOR);
        v * v.ln()
    })
}

const BIN_MAGIC: u64 = 0x424b_4449_5354_3031; // "BKDIST01"

impl Distribution {
    /// Flat binary container: magic, then `dim, n, R, n_x, time_tag` as
    /// little-endian 64-bit ints/floats, then row-major f64 values.
    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&BIN_MAGIC.to_le_bytes())?;
        w.write_all(&(self.grid.dim as u64).to_le_bytes())?;
        w.write_all(&(self.grid.n as u64).to_le_bytes())?;
        w.write_all(&self.grid.radius.to_le_bytes())?;
        w.write_all(&(self.n_x() as u64).to_le_bytes())?;
        w.write_all(&self.time_tag.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Inverse of [`write_binary`]. The spatial width is not part of the
    /// container header; pass it when the field had a spatial axis (run
    /// manifests record it).
    pub fn read_binary(r: &mut impl Read, l_x: Option<f64>) -> Result<Distribution> {
        let mut u64buf = [0u8; 8];
        let mut read_u64 = |r: &mut dyn Read| -> Result<u64> {
            r.read_exact(&mut u64buf)?;
            Ok(u64::from_le_bytes(u64buf))
        };
        let magic = read_u64(r)?;
        if magic != BIN_MAGIC {
            return Err(Error::Serde("bad distribution container magic".into()));
        }
        let dim = read_u64(r)? as usize;
        let n = read_u64(r)? as usize;
        let mut f64buf = [0u8; 8];
        r.read_exact(&mut f64buf)?;
        let radius = f64::from_le_bytes(f64buf);
        let n_x = read_u64(r)? as usize;
        r.read_exact(&mut f64buf)?;
        let time_tag = f64::from_le_bytes(f64buf);
        let grid = crate::grid::make_grid(n, radius, dim)?;
        let spatial = if n_x > 1 {
            Some(SpatialAxis {
                n_x,
                l_x: l_x.ok_or_else(|| {
                    Error::Serde("spatial container needs l_x from the manifest".into())
                })?,
            })
        } else {
            None
        };
        let total = grid.len() * n_x.max(1);
        let mut values = vec![0.0; total];
        for v in &mut values {
            r.read_exact(&mut f64buf)?;
            *v = f64::from_le_bytes(f64buf);
        }
        Ok(Distribution {
            grid,
            spatial,
            values,
            time_tag,
        })
    }

    /// CSV export of the 1D slice along the first velocity axis through the
    /// centre of the remaining axes.
    pub fn write_axis_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "v,f")?;
        let n = self.grid.n;
        let mid = n / 2;
        for j in 0..n {
            let flat = match self.grid.dim {
                1 => j,
                2 => j * n + mid,
                _ => j * n * n + mid * n + mid,
            };
            writeln!(w, "{},{}", self.grid.coord(j), self.values[flat])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn grid16() -> Arc<VelocityGrid> {
        make_grid(16, 8.0, 3).unwrap()
    }

    #[test]
    fn maxwellian_moments() {
        let g = grid16();
        // T = 1 on the h = 1 lattice carries ~1e-8 Poisson aliasing.
        let m = maxwellian(2.0, [0.0; 3], 1.0, &g);
        let mom = moments(&m);
        assert!((mom.mass - 2.0).abs() < 1e-7);
        assert!(mom.momentum.iter().all(|p| p.abs() < 1e-7));
        assert!((mom.energy - 2.0 * 3.0).abs() < 1e-6);

        let shifted = maxwellian(2.0, [1.0, 0.0, 0.0], 1.0, &g);
        let mom = moments(&shifted);
        assert!((mom.momentum[0] - 2.0).abs() < 1e-7);
        assert!(mom.momentum[1].abs() < 1e-7);
    }

    #[test]
    fn maxwellian_peak_and_symmetry() {
        let g = grid16();
        let u = [1.0, 0.0, 0.0];
        let m = maxwellian(1.0, u, 1.0, &g);
        // Peak at v = u.
        let peak_idx = (0..g.len())
            .max_by(|&a, &b| m.values[a].partial_cmp(&m.values[b]).unwrap())
            .unwrap();
        assert_eq!(g.velocity(peak_idx), u);
        // f(u + w) = f(u - w) on lattice points.
        let at = |v: [f64; 3]| {
            let j: Vec<usize> = v
                .iter()
                .map(|&c| ((c + g.radius) / g.spacing).round() as usize)
                .collect();
            m.values[j[0] * 256 + j[1] * 16 + j[2]]
        };
        let w = [2.0, 1.0, -1.0];
        let a = at([u[0] + w[0], u[1] + w[1], u[2] + w[2]]);
        let b = at([u[0] - w[0], u[1] - w[1], u[2] - w[2]]);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn maxwellian_boundary_decay_supports_dealiasing() {
        // Closed-form Gaussian evaluation: for T = 1, R = 8 the corner value
        // is exp(-3 R^2 / 2) of the peak, far below 1e-20.
        let g = grid16();
        let m = maxwellian(1.0, [0.0; 3], 1.0, &g);
        let peak = m.max_abs();
        let corner = m.values[0];
        let expect = (-3.0 * 64.0 / 2.0f64).exp();
        assert!((corner / peak - expect).abs() <= 1e-12 * expect.max(1e-300));
        assert!(corner / peak < 1e-20);
    }

    #[test]
    fn entropy_matches_gaussian_closed_form() {
        let g = grid16();
        let (rho, t) = (1.5, 1.5);
        let m = maxwellian(rho, [0.0; 3], t, &g);
        let h = entropy_h(&m);
        let closed = rho * ((rho / (2.0 * std::f64::consts::PI * t).powf(1.5)).ln() - 1.5);
        assert!((h - closed).abs() < 1e-8 * closed.abs(), "h={h} closed={closed}");
    }

    #[test]
    fn entropy_uniform_and_affine_law() {
        let g = make_grid(8, 4.0, 3).unwrap();
        let c = 0.3;
        let mut f = Distribution::zeros(&g);
        f.values.fill(c);
        let vol = (2.0 * g.radius).powi(3);
        assert!((entropy_h(&f) - c * c.ln() * vol).abs() < 1e-12);

        // H(cf) = c H(f) + c log c * mass.
        let m = maxwellian(1.0, [0.0; 3], 0.8, &g);
        let h1 = entropy_h(&m);
        let mut m2 = m.clone();
        m2.scale(2.0);
        let h2 = entropy_h(&m2);
        let mass = moments(&m).mass;
        assert!((h2 - (2.0 * h1 + 2.0 * (2.0f64).ln() * mass)).abs() < 1e-9);
    }

    #[test]
    fn entropy_scaling_direction_for_concentrated_state() {
        // For a state concentrated enough that H(f) > -2 log 2, doubling the
        // density raises the entropy functional.
        let g = make_grid(32, 4.0, 3).unwrap();
        let m = maxwellian(1.0, [0.0; 3], 0.12, &g);
        let mass = moments(&m).mass;
        assert!((mass - 1.0).abs() < 1e-6);
        let h1 = entropy_h(&m);
        assert!(h1 > -2.0 * (2.0f64).ln(), "state not concentrated enough");
        let mut m2 = m.clone();
        m2.scale(2.0);
        assert!(entropy_h(&m2) > h1);
    }

    #[test]
    fn weight_multiply_identities() {
        let g = grid16();
        let f = maxwellian(1.0, [0.0; 3], 1.0, &g);
        let same = weight_multiply(&f, 0.0);
        assert_eq!(f.values, same.values);

        let back = weight_multiply(&weight_multiply(&f, 2.0), -2.0);
        for (a, b) in back.values.iter().zip(f.values.iter()) {
            assert!((a - b).abs() <= 1e-13 * b.abs().max(1e-300));
        }

        // W_2 at v = (1,1,1) equals 4.
        let mut ones = Distribution::zeros(&g);
        ones.values.fill(1.0);
        let w2 = weight_multiply(&ones, 2.0);
        let j = ((1.0 + g.radius) / g.spacing) as usize;
        assert!((w2.values[j * 256 + j * 16 + j] - 4.0).abs() < 1e-13);
    }

    #[test]
    fn mu_weight_formula_and_domain() {
        let g = grid16();
        let (rho, kappa) = (1.0, 0.25);
        let t0 = weight_horizon(rho, kappa);
        assert_eq!(t0, 2.0);
        let mu0 = mu_weight(0.0, rho, kappa, &g).unwrap();
        // mu(0, v=0) = e^{-rho}.
        let center = 8 * 256 + 8 * 16 + 8;
        assert!((mu0.values[center] - (-rho as f64).exp()).abs() < 1e-15);
        // mu(T0, v)^2 = mu(0, v) pointwise: rho - kappa T0 = rho / 2.
        let mu_t0 = mu_weight(t0, rho, kappa, &g).unwrap();
        for (a, b) in mu_t0.values.iter().zip(mu0.values.iter()) {
            assert!((a * a - b).abs() <= 1e-15 * b.max(1e-300));
        }
        // Monotone increasing in t pointwise.
        let mu_half = mu_weight(1.0, rho, kappa, &g).unwrap();
        for (a, b) in mu_half.values.iter().zip(mu0.values.iter()) {
            assert!(a >= b);
        }
        assert!(mu_weight(2.5, rho, kappa, &g).is_err());
        assert!(mu_weight(-0.1, rho, kappa, &g).is_err());
        assert!(mu_weight(100.0, 1.0, 0.0, &g).is_ok());
    }

    #[test]
    fn binary_roundtrip_is_bitwise() {
        let g = make_grid(8, 4.0, 3).unwrap();
        let mut f = maxwellian(1.0, [0.5, 0.0, 0.0], 1.3, &g);
        f.time_tag = 0.625;
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        let back = Distribution::read_binary(&mut buf.as_slice(), None).unwrap();
        assert_eq!(back.time_tag, f.time_tag);
        assert_eq!(back.values.len(), f.values.len());
        for (a, b) in back.values.iter().zip(f.values.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
