//! Fourier-side evaluation of `Q(g, f)` for Maxwellian molecules.
//!
//! For `gamma = 0` the operator diagonalises against plane waves:
//! `F[Q](xi) = int b(xihat . sigma) [ghat(xi^-) fhat(xi^+) - ghat(0) fhat(xi)] dsigma`
//! with `xi^{+-} = (xi +- |xi| sigma)/2`. The spectra at the off-lattice
//! points `xi^{+-}` are taken either by trilinear interpolation in frequency
//! space or by the semidiscrete transform (the frequency-side analogue of
//! the band-limited shift). This is a fully independent code path from the
//! direct evaluator and serves as its oracle.

use super::direct::sigma_nodes;
use super::{perpendicular_frame, CollisionScheme, InterpKind};
use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::grid::signed_index;
use crate::parallel::REDUCE_CHUNKS;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

pub fn q_spectral_maxwell(
    g: &Distribution,
    f: &Distribution,
    cs: &crate::kernel::CrossSection,
    scheme: &CollisionScheme,
) -> Result<Distribution> {
    if cs.gamma != 0.0 {
        return Err(Error::unsupported(
            "spectral evaluation is restricted to gamma = 0 (Maxwellian molecules)",
        ));
    }
    if !g.same_shape(f) || g.spatial.is_some() || g.grid.dim != 3 {
        return Err(Error::config(
            "spectral evaluation needs velocity-only 3D fields on one grid",
        ));
    }
    cs.validate()?;
    let grid = &g.grid;
    let n = grid.n;
    let total = grid.len();

    let ghat = grid.forward(&g.values);
    let fhat = grid.forward(&f.values);
    let ghat0 = ghat[0]; // xi = 0 entry in FFT order.
    let nodes = sigma_nodes(scheme);

    // Centred copies for frequency interpolation.
    let centred = |spec: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); total];
        for m in 0..total {
            let [mz, my, mx] = grid.unflatten(m);
            let cz = (signed_index(mz, n) + (n / 2) as i64) as usize;
            let cy = (signed_index(my, n) + (n / 2) as i64) as usize;
            let cx = (signed_index(mx, n) + (n / 2) as i64) as usize;
            out[(cz * n + cy) * n + cx] = spec[m];
        }
        out
    };
    let (gc, fc) = match scheme.interp {
        InterpKind::Trilinear => (centred(&ghat), centred(&fhat)),
        InterpKind::SpectralShift => (Vec::new(), Vec::new()),
    };

    let eval = |spec_c: &[Complex64], field: &[f64], zeta: [f64; 3]| -> Complex64 {
        match scheme.interp {
            InterpKind::Trilinear => interp_frequency(spec_c, grid, zeta),
            InterpKind::SpectralShift => semidiscrete(field, grid, zeta),
        }
    };

    let chunk = total.div_ceil(REDUCE_CHUNKS).max(1);
    let qhat: Vec<Vec<Complex64>> = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(total);
            let mut out = vec![Complex64::new(0.0, 0.0); hi - lo];
            for m in lo..hi {
                let xi = grid.xi(m);
                let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
                if r == 0.0 {
                    continue;
                }
                let k = [xi[0] / r, xi[1] / r, xi[2] / r];
                let (e1, e2) = perpendicular_frame(&k);
                let mut acc = Complex64::new(0.0, 0.0);
                for node in nodes.iter() {
                    let mut xp = [0.0; 3];
                    let mut xm = [0.0; 3];
                    for d in 0..3 {
                        let sd = node.cos_t * k[d] + node.sin_cos_p * e1[d] + node.sin_sin_p * e2[d];
                        xp[d] = 0.5 * (xi[d] + r * sd);
                        xm[d] = 0.5 * (xi[d] - r * sd);
                    }
                    let gm = eval(&gc, &g.values, xm);
                    let fp = eval(&fc, &f.values, xp);
                    acc += node.tw_b * (gm * fp - ghat0 * fhat[m]);
                }
                out[m - lo] = acc;
            }
            out
        })
        .collect();

    let mut spec = Vec::with_capacity(total);
    for part in qhat {
        spec.extend(part);
    }
    let mut out = Distribution::zeros(grid);
    out.values = grid.inverse(&spec);
    out.time_tag = f.time_tag;
    Ok(out)
}

/// Trilinear interpolation of a centred spectrum at an off-lattice
/// frequency; zero outside the resolved band (the true spectrum decays).
fn interp_frequency(
    spec_c: &[Complex64],
    grid: &crate::grid::VelocityGrid,
    zeta: [f64; 3],
) -> Complex64 {
    let n = grid.n as i64;
    let dxi = std::f64::consts::PI / grid.radius;
    let mut base = [0i64; 3];
    let mut frac = [0.0; 3];
    for d in 0..3 {
        // Centred index coordinate: t = zeta/dxi + n/2.
        let t = zeta[d] / dxi + n as f64 / 2.0;
        let fl = t.floor();
        base[d] = fl as i64;
        frac[d] = t - fl;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for corner in 0..8 {
        let iz = base[0] + ((corner >> 2) & 1) as i64;
        let iy = base[1] + ((corner >> 1) & 1) as i64;
        let ix = base[2] + (corner & 1) as i64;
        if iz < 0 || iz >= n || iy < 0 || iy >= n || ix < 0 || ix >= n {
            continue;
        }
        let wz = if corner & 4 != 0 { frac[0] } else { 1.0 - frac[0] };
        let wy = if corner & 2 != 0 { frac[1] } else { 1.0 - frac[1] };
        let wx = if corner & 1 != 0 { frac[2] } else { 1.0 - frac[2] };
        acc += wz * wy * wx * spec_c[((iz * n + iy) * n + ix) as usize];
    }
    acc
}

/// Semidiscrete transform `h^3 sum_v f(v) e^{-i zeta . v}` at an arbitrary
/// frequency, factorised over axes.
fn semidiscrete(field: &[f64], grid: &crate::grid::VelocityGrid, zeta: [f64; 3]) -> Complex64 {
    let n = grid.n;
    let ph = |zd: f64| -> Vec<Complex64> {
        (0..n)
            .map(|j| Complex64::from_polar(1.0, -zd * grid.coord(j)))
            .collect()
    };
    let pz = ph(zeta[0]);
    let py = ph(zeta[1]);
    let px = ph(zeta[2]);
    let mut acc = Complex64::new(0.0, 0.0);
    for iz in 0..n {
        for iy in 0..n {
            let pzy = pz[iz] * py[iy];
            let row = (iz * n + iy) * n;
            let mut rowacc = Complex64::new(0.0, 0.0);
            for ix in 0..n {
                rowacc += field[row + ix] * px[ix];
            }
            acc += pzy * rowacc;
        }
    }
    acc * grid.cell_volume()
}
