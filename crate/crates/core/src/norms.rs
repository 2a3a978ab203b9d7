//! Weighted Sobolev and Lebesgue norms, Bessel-potential derivatives and the
//! smooth spectral cutoff profile.
//!
//! The space `H^m_l` is `{ W_l f in H^m }`: the weight is applied *before*
//! the derivative. The reverse order differs by commutator terms and is not
//! used anywhere in this crate.

use crate::dist::{weight_multiply, Distribution};
use crate::error::{Error, Result};
use crate::parallel::det_sum;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSpec {
    /// Sobolev order.
    pub m: f64,
    /// Polynomial weight order.
    pub l: f64,
    /// Lebesgue exponent, 1 or 2.
    pub p: u8,
}

impl NormSpec {
    pub fn sobolev(m: f64, l: f64) -> Self {
        NormSpec { m, l, p: 2 }
    }
    pub fn lebesgue(p: u8, l: f64) -> Self {
        NormSpec { m: 0.0, l, p }
    }
    pub fn label(&self) -> String {
        format!("H{}_{}(p{})", self.m, self.l, self.p)
    }
}

/// Spectral multiplier `(1 + |xi|^2)^{m/2}` along the velocity axes,
/// slice-by-slice when a spatial axis is present.
pub fn bessel_derivative(f: &Distribution, m: f64) -> Distribution {
    if m == 0.0 {
        return f.clone();
    }
    let mut out = f.clone();
    for x in 0..f.n_x() {
        let slice = f.v_slice(x);
        let mut spec = f.grid.forward(slice);
        for (idx, z) in spec.iter_mut().enumerate() {
            let xi = f.grid.xi(idx);
            let q = 1.0 + xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            *z *= q.powf(m / 2.0);
        }
        out.v_slice_mut(x).copy_from_slice(&f.grid.inverse(&spec));
    }
    out
}

/// `|| Lambda^m (W_l f) ||_{L^2}`, evaluated in spectral space (Parseval).
pub fn weighted_sobolev_norm(f: &Distribution, ns: &NormSpec) -> Result<f64> {
    if ns.p != 2 {
        return Err(Error::unsupported("Sobolev norms are L^2-based (p = 2)"));
    }
    let wf = if ns.l == 0.0 {
        f.clone()
    } else {
        weight_multiply(f, ns.l)
    };
    let vol = (2.0 * f.grid.radius).powi(f.grid.dim as i32);
    let dx = f
        .spatial
        .as_ref()
        .map(|s| s.spacing())
        .unwrap_or(1.0);
    let mut total = 0.0;
    for x in 0..f.n_x() {
        let spec = f.grid.forward(wf.v_slice(x));
        let s = det_sum(spec.len(), |i| {
            let xi = f.grid.xi(i);
            let q = 1.0 + xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            q.powf(ns.m) * spec[i].norm_sqr()
        });
        total += s / vol * dx;
    }
    Ok(total.sqrt())
}

/// `|| W_l f ||_{L^p}` by midpoint lattice quadrature, `p in {1, 2}`.
pub fn lebesgue_weighted_norm(f: &Distribution, ns: &NormSpec) -> Result<f64> {
    let w = f.site_weight();
    let m = f.grid.len();
    let wl = |i: usize| {
        let v = f.grid.velocity(i % m);
        (1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).powf(ns.l / 2.0)
    };
    match ns.p {
        1 => Ok(w * det_sum(f.values.len(), |i| (wl(i) * f.values[i]).abs())),
        2 => Ok((w * det_sum(f.values.len(), |i| {
            let t = wl(i) * f.values[i];
            t * t
        }))
        .sqrt()),
        p => Err(Error::unsupported(format!("L^{p} norm not provided"))),
    }
}

/// Smooth cutoff profile: `S = 1` on `[0,1]`, `S = 0` on `[2, inf)`, quintic
/// smoothstep in between (C^2 at the joints), monotone nonincreasing.
pub fn smooth_cutoff_s(tau: f64) -> f64 {
    let t = tau.abs();
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let x = t - 1.0;
        1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
    }
}
