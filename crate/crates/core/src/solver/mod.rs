//! Time integration: the transformed Picard construction, an explicit RK4
//! cross-check on the untransformed equation, Strang splitting for the 1D
//! spatial extension and the exact fractional-diffusion baseline.

mod kolmogorov;
mod picard;

pub use kolmogorov::kolmogorov_exact_solve;
pub use picard::picard_solve;

use crate::collision::{q_direct, CollisionScheme};
use crate::dist::{entropy_h, moments, mu_weight, weight_horizon, Distribution, Moments};
use crate::error::{Error, Result};
use crate::grid::SpatialAxis;
use crate::norms::{weighted_sobolev_norm, NormSpec};
use crate::fft::FftPlans;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Initial exponential weight.
    pub rho: f64,
    /// Weight decay rate; `kappa = 0` is allowed for `gamma <= 0`.
    pub kappa: f64,
    /// Angular cutoff of the approximating family.
    pub eps: Option<f64>,
    pub dt: f64,
    pub horizon: f64,
    pub picard_max_iters: usize,
    pub picard_tol: f64,
    /// Monitored regularity index.
    pub k_reg: f64,
    /// Monitored weight index.
    pub l_wt: f64,
    pub spatial: Option<SpatialAxis>,
}

impl SolverConfig {
    pub fn horizon_bound(&self) -> f64 {
        weight_horizon(self.rho, self.kappa)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::config("solver.rho must be > 0"));
        }
        if self.kappa < 0.0 {
            return Err(Error::config("solver.kappa must be >= 0"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config("solver.dt must be > 0"));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::config("solver.picard_tol must be > 0"));
        }
        let t0 = self.horizon_bound();
        if self.horizon > t0 * (1.0 + 1e-12) {
            return Err(Error::config(format!(
                "solver.horizon = {} exceeds T0 = rho/(2*kappa) = {t0}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Number of time steps covering the horizon.
    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil().max(1.0) as usize
    }
}

/// Time series produced by a run. Diagnostics are pure functions of this
/// record; it round-trips bitwise through the run-directory format.
#[derive(Clone, Debug, Default)]
pub struct RunHistory {
    pub times: Vec<f64>,
    pub snapshots: Vec<(f64, Distribution)>,
    pub norm_series: BTreeMap<String, Vec<f64>>,
    pub moment_series: Vec<Moments>,
    pub entropy_series: Vec<f64>,
    pub picard_contraction: Vec<f64>,
    pub eps_tag: Option<f64>,
}

impl RunHistory {
    pub fn validate(&self) -> Result<()> {
        if !self.times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Stability("history times are not increasing".into()));
        }
        for (k, s) in &self.norm_series {
            if s.len() != self.times.len() {
                return Err(Error::Stability(format!("series {k} length mismatch")));
            }
        }
        if self.moment_series.len() != self.times.len()
            || self.entropy_series.len() != self.times.len()
        {
            return Err(Error::Stability("series length mismatch".into()));
        }
        Ok(())
    }

    pub(crate) fn record_state(&mut self, t: f64, f: &Distribution, specs: &[NormSpec]) {
        self.times.push(t);
        self.moment_series.push(moments(f));
        self.entropy_series.push(entropy_h(f));
        for ns in specs {
            let v = weighted_sobolev_norm(f, ns).unwrap_or(f64::NAN);
            self.norm_series.entry(ns.label()).or_default().push(v);
        }
    }
}

/// `g = f / mu(t)`; sites where `mu` has underflowed are masked to zero and
/// counted rather than divided.
pub fn transform_to_g(f: &Distribution, t: f64, cfg: &SolverConfig) -> Result<(Distribution, usize)> {
    let mu = mu_weight(t, cfg.rho, cfg.kappa, &f.grid)?;
    let mut out = f.clone();
    let mut masked = 0usize;
    for (v, m) in out.values.iter_mut().zip(mu.values.iter()) {
        if *m > crate::collision::MU_FLOOR {
            *v /= m;
        } else {
            *v = 0.0;
            masked += 1;
        }
    }
    out.time_tag = t;
    Ok((out, masked))
}

/// `f = mu(t) g`.
pub fn transform_to_f(g: &Distribution, t: f64, cfg: &SolverConfig) -> Result<Distribution> {
    let mu = mu_weight(t, cfg.rho, cfg.kappa, &g.grid)?;
    let mut out = g.clone();
    for (v, m) in out.values.iter_mut().zip(mu.values.iter()) {
        *v *= m;
    }
    out.time_tag = t;
    Ok(out)
}

/// Local existence horizon `T* = (1/C) log(1 + 3/(1 + 4 ||g0||^2))`.
pub fn local_existence_time(g0_norm: f64, c_const: f64) -> f64 {
    assert!(g0_norm >= 0.0 && c_const > 0.0);
    (1.0 + 3.0 / (1.0 + 4.0 * g0_norm * g0_norm)).ln() / c_const
}

/// Classical four-stage explicit integration of `f_t = Q(f, f)`.
pub fn rk4_solve(
    f0: &Distribution,
    cfg: &SolverConfig,
    cs: &crate::kernel::CrossSection,
    scheme: &CollisionScheme,
) -> Result<RunHistory> {
    cfg.validate()?;
    if f0.min_relative() < -1e-9 {
        return Err(Error::domain("rk4_solve needs nonnegative initial data"));
    }
    if cfg.kappa == 0.0 && cs.gamma > 0.0 {
        return Err(Error::config("kappa = 0 requires gamma <= 0"));
    }
    let specs = [
        NormSpec::sobolev(0.0, 0.0),
        NormSpec::sobolev(cfg.k_reg, cfg.l_wt),
    ];
    let steps = cfg.n_steps();
    let snap_every = (steps / 8).max(1);
    let mut hist = RunHistory::default();
    let mut f = f0.clone();
    f.time_tag = 0.0;
    hist.record_state(0.0, &f, &specs);
    hist.snapshots.push((0.0, f.clone()));
    let rhs = |state: &Distribution| q_direct(state, state, cs, scheme);
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        let k1 = rhs(&f)?;
        let mut s2 = f.clone();
        s2.axpy(0.5 * cfg.dt, &k1);
        let k2 = rhs(&s2)?;
        let mut s3 = f.clone();
        s3.axpy(0.5 * cfg.dt, &k2);
        let k3 = rhs(&s3)?;
        let mut s4 = f.clone();
        s4.axpy(cfg.dt, &k3);
        let k4 = rhs(&s4)?;
        f.axpy(cfg.dt / 6.0, &k1);
        f.axpy(cfg.dt / 3.0, &k2);
        f.axpy(cfg.dt / 3.0, &k3);
        f.axpy(cfg.dt / 6.0, &k4);
        f.assert_finite()?;
        let neg = f.min_relative();
        if neg < -1e-6 {
            return Err(Error::Stability(format!(
                "rk4_solve produced negativity {neg:.3e} at t = {:.6}",
                t + cfg.dt
            )));
        }
        let tn = (k + 1) as f64 * cfg.dt;
        f.time_tag = tn;
        hist.record_state(tn, &f, &specs);
        if (k + 1) % snap_every == 0 || k + 1 == steps {
            hist.snapshots.push((tn, f.clone()));
        }
    }
    Ok(hist)
}

/// One Strang step for `f_t + v1 f_x = Q(f, f)` on a 1D periodic spatial
/// lattice: half transport (exact spectral phase), full collision step per
/// spatial node (one RK4 step), half transport.
pub fn strang_step(
    f: &Distribution,
    dt: f64,
    cfg: &SolverConfig,
    cs: &crate::kernel::CrossSection,
    scheme: &CollisionScheme,
) -> Result<Distribution> {
    let spatial = f
        .spatial
        .clone()
        .ok_or_else(|| Error::config("strang_step needs a spatial axis"))?;
    let mut out = transport_half(f, &spatial, dt / 2.0);
    // Collision per spatial slice.
    let m = f.grid.len();
    for x in 0..spatial.n_x {
        let mut slice = Distribution {
            grid: f.grid.clone(),
            spatial: None,
            values: out.values[x * m..(x + 1) * m].to_vec(),
            time_tag: f.time_tag,
        };
        let k1 = q_direct(&slice, &slice, cs, scheme)?;
        let mut s2 = slice.clone();
        s2.axpy(0.5 * dt, &k1);
        let k2 = q_direct(&s2, &s2, cs, scheme)?;
        let mut s3 = slice.clone();
        s3.axpy(0.5 * dt, &k2);
        let k3 = q_direct(&s3, &s3, cs, scheme)?;
        let mut s4 = slice.clone();
        s4.axpy(dt, &k3);
        let k4 = q_direct(&s4, &s4, cs, scheme)?;
        slice.axpy(dt / 6.0, &k1);
        slice.axpy(dt / 3.0, &k2);
        slice.axpy(dt / 3.0, &k3);
        slice.axpy(dt / 6.0, &k4);
        out.values[x * m..(x + 1) * m].copy_from_slice(&slice.values);
    }
    let out = transport_half(&out, &spatial, dt / 2.0);
    let _ = cfg;
    Ok(out)
}

/// Exact spectral transport `f(x, v) -> f(x - v1 tau, v)`.
fn transport_half(f: &Distribution, spatial: &SpatialAxis, tau: f64) -> Distribution {
    let m = f.grid.len();
    let n_x = spatial.n_x;
    let plans = FftPlans::new(&[n_x]);
    let mut out = f.clone();
    let mut line = vec![Complex64::new(0.0, 0.0); n_x];
    for v_idx in 0..m {
        let v1 = f.grid.velocity(v_idx)[0];
        for (x, l) in line.iter_mut().enumerate() {
            *l = Complex64::new(f.values[x * m + v_idx], 0.0);
        }
        plans.transform(&mut line, &[n_x], true);
        for (mx, l) in line.iter_mut().enumerate() {
            let kx = spatial.wavenumber(mx);
            *l *= Complex64::from_polar(1.0, -kx * v1 * tau);
        }
        plans.transform(&mut line, &[n_x], false);
        let inv = 1.0 / n_x as f64;
        for (x, l) in line.iter().enumerate() {
            out.values[x * m + v_idx] = l.re * inv;
        }
    }
    out
}
