//! Direct (sigma-representation) evaluation of `Q(g, f)` and the weak form.
//!
//! For a fixed difference vector `u = v* - v` and node `sigma`, the
//! post-collisional points are constant shifts of `v`:
//! `v' = v + (u + |u| sigma)/2`, `v*' = v + (u - |u| sigma)/2`. The inner
//! loops therefore stream whole fields at constant offsets, and the
//! interpolation stencil of one `(u, sigma)` pair is shared by every lattice
//! site. All reductions use a fixed chunk decomposition over `u`, so results
//! are bitwise reproducible for any worker count.

use super::table::cached_u_table;
use super::{perpendicular_frame, AssemblyKind, CollisionScheme, ConserveKind, InterpKind};
use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::parallel::REDUCE_CHUNKS;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

/// `Q(g, f)`: `g` rides in the `v*` slot, `f` in the `v` slot.
pub fn q_direct(
    g: &Distribution,
    f: &Distribution,
    cs: &crate::kernel::CrossSection,
    scheme: &CollisionScheme,
) -> Result<Distribution> {
    check_inputs(g, f, cs, scheme)?;
    let mut out = evaluate(g, f, cs, scheme, Part::Full)?;
    if scheme.conserve == ConserveKind::Project {
        super::project_conservative(&mut out);
    }
    Ok(out)
}

/// Gain part only: `Q^+(g, f)(v) = iint B g(v*') f(v') dv* dsigma`.
/// Nonnegative for nonnegative inputs under the trilinear deposit.
pub fn q_gain(
    g: &Distribution,
    f: &Distribution,
    cs: &crate::kernel::CrossSection,
    scheme: &CollisionScheme,
) -> Result<Distribution> {
    check_inputs(g, f, cs, scheme)?;
    evaluate(g, f, cs, scheme, Part::GainOnly)
}

/// `nu_b * (Phi * g)` by lattice convolution: the angular mass times the
/// kinetic-factor convolution. This is the loss factor `L(g)` with the
/// `u = 0` site included, evaluated with FFTs.
pub fn loss_convolution(
    g: &Distribution,
    cs: &crate::kernel::CrossSection,
    scheme: &CollisionScheme,
) -> Result<Distribution> {
    if g.spatial.is_some() {
        return Err(Error::unsupported("loss convolution acts on velocity-only fields"));
    }
    let grid = &g.grid;
    let table = cached_u_table(grid, cs, 1)?;
    let n = grid.n;
    let total = grid.len();
    // Kernel on the difference lattice, indexed by the wrapped offset.
    let mut kernel = vec![0.0; total];
    let half = (n / 2) as i64;
    let ni = n as i64;
    kernel[0] = table.phi_zero;
    for e in &table.entries {
        let iz = (e.offset[0] + half).rem_euclid(ni) as usize;
        let iy = (e.offset[1] + half).rem_euclid(ni) as usize;
        let ix = (e.offset[2] + half).rem_euclid(ni) as usize;
        // offset + n/2 is the original lattice index; re-centre so the
        // kernel is indexed by the shift itself.
        let oz = (iz as i64 - half).rem_euclid(ni) as usize;
        let oy = (iy as i64 - half).rem_euclid(ni) as usize;
        let ox = (ix as i64 - half).rem_euclid(ni) as usize;
        kernel[(oz * n + oy) * n + ox] = e.phi;
    }
    let dims = grid.dims();
    let plans = grid.plans();
    let mut kc: Vec<Complex64> = kernel.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut gc: Vec<Complex64> = g.values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    plans.transform(&mut kc, &dims, true);
    plans.transform(&mut gc, &dims, true);
    // Correlation with an even kernel equals convolution.
    for (a, b) in gc.iter_mut().zip(kc.iter()) {
        *a *= b;
    }
    plans.transform(&mut gc, &dims, false);
    let scale = scheme.nu_b * table.measure / total as f64;
    let mut out = Distribution::zeros(grid);
    for (o, z) in out.values.iter_mut().zip(gc.iter()) {
        *o = scale * z.re;
    }
    out.time_tag = g.time_tag;
    Ok(out)
}

/// Weak form `(Q(f, g), h)_{L^2}` with the test-function difference
/// `h(v') - h(v)` formed inside the quadrature. `f` rides in the `v*` slot.
pub fn trilinear_weak_form(
    f: &Distribution,
    g: &Distribution,
    h: &Distribution,
    cs: &crate::kernel::CrossSection,
    scheme: &CollisionScheme,
) -> Result<f64> {
    check_inputs(f, g, cs, scheme)?;
    if !h.same_shape(g) {
        return Err(Error::config("weak form requires a shared grid"));
    }
    let grid = &g.grid;
    let n = grid.n;
    let total = grid.len();
    let table = cached_u_table(grid, cs, scheme.vstar_stride)?;
    let dims = grid.dims();
    let plans = grid.plans();

    let mut hc: Vec<Complex64> = h.values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    plans.transform(&mut hc, &dims, true);
    let nodes = sigma_nodes(scheme);

    let entries = &table.entries;
    let chunk = entries.len().div_ceil(REDUCE_CHUNKS);
    let partials: Vec<f64> = (0..entries.len().div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut acc = 0.0;
            let mut p = vec![0.0; total];
            let mut pc = vec![Complex64::new(0.0, 0.0); total];
            let mut corr = vec![Complex64::new(0.0, 0.0); total];
            for e in &entries[c * chunk..((c + 1) * chunk).min(entries.len())] {
                let scale = table.measure * e.phi;
                let off = wrap_offset(e.offset, n);
                let maxp = shifted_product(&mut p, &f.values, &g.values, n, off, scale);
                if maxp == 0.0 {
                    continue;
                }
                // Loss: -nu_b * <P, h>.
                let mut loss = 0.0;
                for (pv, hv) in p.iter().zip(h.values.iter()) {
                    loss += pv * hv;
                }
                acc -= scheme.nu_b * loss;
                match scheme.interp {
                    InterpKind::Trilinear => {
                        // Cross-correlation C(d) = sum_v P(v) h(v+d) for all
                        // lags at once, then eight stencil reads per node.
                        for (z, x) in pc.iter_mut().zip(p.iter()) {
                            *z = Complex64::new(*x, 0.0);
                        }
                        plans.transform(&mut pc, &dims, true);
                        for ((cz, pz), hz) in corr.iter_mut().zip(pc.iter()).zip(hc.iter()) {
                            *cz = pz.conj() * hz;
                        }
                        plans.transform(&mut corr, &dims, false);
                        let inv = 1.0 / total as f64;
                        for node in nodes.iter() {
                            let (base, w) = deposit_stencil(e, node, grid.spacing);
                            let mut gain = 0.0;
                            for (corner, wc) in w.iter().enumerate() {
                                let o = corner_offset(base, corner);
                                let idx = flat_wrapped(o, n);
                                gain += wc * corr[idx].re;
                            }
                            acc += node.tw_b * gain * inv;
                        }
                    }
                    InterpKind::SpectralShift => {
                        for (z, x) in pc.iter_mut().zip(p.iter()) {
                            *z = Complex64::new(*x, 0.0);
                        }
                        plans.transform(&mut pc, &dims, true);
                        let inv = 1.0 / total as f64;
                        for node in nodes.iter() {
                            let a = prime_shift(e, node);
                            let (px, py, pz) = phase_tables(grid, a, -1.0);
                            let mut gain = 0.0;
                            for iz in 0..n {
                                for iy in 0..n {
                                    let pzy = pz[iz] * py[iy];
                                    let row = (iz * n + iy) * n;
                                    for ix in 0..n {
                                        // conj(F[P]) F[h] e^{i xi a}: the
                                        // phase tables already hold e^{-i..},
                                        // so conjugate them here.
                                        let ph = (pzy * px[ix]).conj();
                                        gain += (pc[row + ix].conj() * hc[row + ix] * ph).re;
                                    }
                                }
                            }
                            acc += node.tw_b * gain * inv;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    Ok(partials.iter().sum::<f64>() * grid.cell_volume())
}

/// Gain with an extra on-lattice weight in the `v*` slot:
/// `out(v) = sum_{u,sigma} w b Phi wstar(v+u) U~(v+b) V~(v+a)` plus the
/// `u = 0` diagonal. This is the transformed gain with `wstar = mu(t)`:
/// every factor is evaluated directly (no exponential pullback), and the
/// trilinear variant preserves nonnegativity.
pub(super) fn gain_weighted_gather(
    wstar: &[f64],
    u_in: &Distribution,
    v_in: &Distribution,
    cs: &crate::kernel::CrossSection,
    scheme: &CollisionScheme,
) -> Result<Distribution> {
    check_inputs(u_in, v_in, cs, scheme)?;
    let grid = &u_in.grid;
    let n = grid.n;
    let total = grid.len();
    let table = cached_u_table(grid, cs, scheme.vstar_stride)?;
    let nodes = sigma_nodes(scheme);
    let dims = grid.dims();
    let plans = grid.plans();
    let spectral = scheme.interp == InterpKind::SpectralShift;
    let (uc0, vc0) = if spectral {
        let mut uc: Vec<Complex64> = u_in.values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut vc: Vec<Complex64> = v_in.values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        plans.transform(&mut uc, &dims, true);
        plans.transform(&mut vc, &dims, true);
        (uc, vc)
    } else {
        (Vec::new(), Vec::new())
    };
    let entries = &table.entries;
    let chunk = entries.len().div_ceil(REDUCE_CHUNKS).max(1);
    let n_chunks = entries.len().div_ceil(chunk);
    let partials: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut buf = vec![0.0; total];
            let mut wsh = vec![0.0; total];
            let mut utmp = vec![0.0; total];
            let mut vtmp = vec![0.0; total];
            let mut scratch = vec![Complex64::new(0.0, 0.0); total];
            for e in &entries[c * chunk..((c + 1) * chunk).min(entries.len())] {
                let scale = table.measure * e.phi;
                let off = wrap_offset(e.offset, n);
                // wsh(v) = wstar(v + u), exact lattice shift.
                shift_copy(&mut wsh, wstar, n, off);
                for node in nodes.iter() {
                    let a = prime_shift(e, node);
                    let b_shift = [e.u[0] - a[0], e.u[1] - a[1], e.u[2] - a[2]];
                    if spectral {
                        spectral_shift_field(&mut utmp, &uc0, &mut scratch, grid, b_shift);
                        spectral_shift_field(&mut vtmp, &vc0, &mut scratch, grid, a);
                    } else {
                        interp_field(&mut utmp, &u_in.values, n, b_shift, grid.spacing);
                        interp_field(&mut vtmp, &v_in.values, n, a, grid.spacing);
                    }
                    let cgain = node.tw_b * scale;
                    for (((bv, w), uu), vv) in buf
                        .iter_mut()
                        .zip(wsh.iter())
                        .zip(utmp.iter())
                        .zip(vtmp.iter())
                    {
                        *bv += cgain * w * uu * vv;
                    }
                }
            }
            buf
        })
        .collect();
    let mut values = vec![0.0; total];
    for bufv in partials {
        for (o, b) in values.iter_mut().zip(bufv.iter()) {
            *o += b;
        }
    }
    // u = 0 diagonal.
    let c0 = scheme.nu_b * table.measure * table.phi_zero;
    for (((o, w), uu), vv) in values
        .iter_mut()
        .zip(wstar.iter())
        .zip(u_in.values.iter())
        .zip(v_in.values.iter())
    {
        *o += c0 * w * uu * vv;
    }
    let mut out = Distribution::zeros(grid);
    out.values = values;
    out.time_tag = v_in.time_tag;
    Ok(out)
}

/// `out[v] = src[v + off]` with periodic wrap.
fn shift_copy(out: &mut [f64], src: &[f64], n: usize, off: [usize; 3]) {
    for z in 0..n {
        let zs = if z + off[0] >= n { z + off[0] - n } else { z + off[0] };
        for y in 0..n {
            let ys = if y + off[1] >= n { y + off[1] - n } else { y + off[1] };
            let drow = (z * n + y) * n;
            let srow = (zs * n + ys) * n;
            let split = n - off[2];
            out[drow..drow + split].copy_from_slice(&src[srow + off[2]..srow + n]);
            out[drow + split..drow + n].copy_from_slice(&src[srow..srow + off[2]]);
        }
    }
}

enum Part {
    Full,
    GainOnly,
}

fn check_inputs(
    g: &Distribution,
    f: &Distribution,
    cs: &crate::kernel::CrossSection,
    scheme: &CollisionScheme,
) -> Result<()> {
    if !g.same_shape(f) {
        return Err(Error::config("collision inputs must share one grid"));
    }
    if g.spatial.is_some() {
        return Err(Error::unsupported(
            "collision operators act on velocity-only fields; apply per spatial slice",
        ));
    }
    if g.grid.dim != 3 {
        return Err(Error::unsupported("collision operators require dim = 3"));
    }
    if cs.eps_cutoff.is_none() && !scheme.quad.paired {
        return Err(Error::config(
            "non-cutoff kernel with unpaired quadrature: integrand is not summable",
        ));
    }
    cs.validate()
}

/// Precomputed per-node data: direction parameters and kernel weight.
pub(super) struct SigmaNode {
    pub cos_t: f64,
    pub sin_cos_p: f64,
    pub sin_sin_p: f64,
    pub tw_b: f64,
}

pub(super) fn sigma_nodes(scheme: &CollisionScheme) -> Vec<SigmaNode> {
    let mut nodes = Vec::with_capacity(scheme.quad.n_nodes());
    for (i, &t) in scheme.quad.theta.iter().enumerate() {
        for &p in scheme.quad.phi.iter() {
            nodes.push(SigmaNode {
                cos_t: t.cos(),
                sin_cos_p: t.sin() * p.cos(),
                sin_sin_p: t.sin() * p.sin(),
                tw_b: scheme.tw_b[i],
            });
        }
    }
    nodes
}

/// Physical shift to the gain point: `a = (u + |u| sigma)/2` with `sigma`
/// expanded around the deviation pole `k = (v - v*)/|v - v*| = -u/|u|`
/// (the kernel angle satisfies `cos theta = k . sigma`, and `theta -> 0`
/// must be the grazing fixed point `v' -> v`). The frame is antipodally
/// symmetric, so the node set of `-u` is the exact negation of that of `u`.
#[inline]
pub(super) fn prime_shift(e: &super::table::UEntry, node: &SigmaNode) -> [f64; 3] {
    let k = [
        -e.u[0] / e.speed,
        -e.u[1] / e.speed,
        -e.u[2] / e.speed,
    ];
    let (e1, e2) = perpendicular_frame(&k);
    let mut a = [0.0; 3];
    for d in 0..3 {
        let sigma_d = node.cos_t * k[d] + node.sin_cos_p * e1[d] + node.sin_sin_p * e2[d];
        a[d] = 0.5 * (e.u[d] + e.speed * sigma_d);
    }
    a
}

/// Trilinear stencil of the shift `a`: integer base offset per axis plus the
/// eight corner weights in (z, y, x) bit order.
#[inline]
fn deposit_stencil(
    e: &super::table::UEntry,
    node: &SigmaNode,
    h: f64,
) -> ([i64; 3], [f64; 8]) {
    let a = prime_shift(e, node);
    let mut base = [0i64; 3];
    let mut frac = [0.0; 3];
    for d in 0..3 {
        let t = a[d] / h;
        let fl = t.floor();
        base[d] = fl as i64;
        frac[d] = t - fl;
    }
    let mut w = [0.0; 8];
    for corner in 0..8 {
        let wz = if corner & 4 != 0 { frac[0] } else { 1.0 - frac[0] };
        let wy = if corner & 2 != 0 { frac[1] } else { 1.0 - frac[1] };
        let wx = if corner & 1 != 0 { frac[2] } else { 1.0 - frac[2] };
        w[corner] = wz * wy * wx;
    }
    (base, w)
}

#[inline]
fn corner_offset(base: [i64; 3], corner: usize) -> [i64; 3] {
    [
        base[0] + ((corner >> 2) & 1) as i64,
        base[1] + ((corner >> 1) & 1) as i64,
        base[2] + (corner & 1) as i64,
    ]
}

#[inline]
fn wrap_offset(off: [i64; 3], n: usize) -> [usize; 3] {
    let ni = n as i64;
    [
        off[0].rem_euclid(ni) as usize,
        off[1].rem_euclid(ni) as usize,
        off[2].rem_euclid(ni) as usize,
    ]
}

#[inline]
fn flat_wrapped(off: [i64; 3], n: usize) -> usize {
    let o = wrap_offset(off, n);
    (o[0] * n + o[1]) * n + o[2]
}

/// `out[v] = scale * g[v + off] * f[v]`; returns `max |out|`.
fn shifted_product(
    out: &mut [f64],
    g: &[f64],
    f: &[f64],
    n: usize,
    off: [usize; 3],
    scale: f64,
) -> f64 {
    let mut maxabs = 0.0f64;
    for z in 0..n {
        let zg = if z + off[0] >= n { z + off[0] - n } else { z + off[0] };
        for y in 0..n {
            let yg = if y + off[1] >= n { y + off[1] - n } else { y + off[1] };
            let orow = (z * n + y) * n;
            let grow = (zg * n + yg) * n;
            let split = n - off[2];
            for x in 0..split {
                let v = scale * g[grow + off[2] + x] * f[orow + x];
                out[orow + x] = v;
                maxabs = maxabs.max(v.abs());
            }
            for x in split..n {
                let v = scale * g[grow + off[2] + x - n] * f[orow + x];
                out[orow + x] = v;
                maxabs = maxabs.max(v.abs());
            }
        }
    }
    maxabs
}

/// `dst[v + off] += c * src[v]` with periodic wrap.
fn axpy_shifted(dst: &mut [f64], src: &[f64], n: usize, off: [usize; 3], c: f64) {
    for z in 0..n {
        let zd = if z + off[0] >= n { z + off[0] - n } else { z + off[0] };
        for y in 0..n {
            let yd = if y + off[1] >= n { y + off[1] - n } else { y + off[1] };
            let srow = (z * n + y) * n;
            let drow = (zd * n + yd) * n;
            let split = n - off[2];
            for x in 0..split {
                dst[drow + off[2] + x] += c * src[srow + x];
            }
            for x in split..n {
                dst[drow + off[2] + x - n] += c * src[srow + x];
            }
        }
    }
}

/// `dst[v] += c * src[v + off]` with periodic wrap (gather).
fn gather_shifted(dst: &mut [f64], src: &[f64], n: usize, off: [usize; 3], c: f64) {
    for z in 0..n {
        let zs = if z + off[0] >= n { z + off[0] - n } else { z + off[0] };
        for y in 0..n {
            let ys = if y + off[1] >= n { y + off[1] - n } else { y + off[1] };
            let drow = (z * n + y) * n;
            let srow = (zs * n + ys) * n;
            let split = n - off[2];
            for x in 0..split {
                dst[drow + x] += c * src[srow + off[2] + x];
            }
            for x in split..n {
                dst[drow + x] += c * src[srow + off[2] + x - n];
            }
        }
    }
}

fn evaluate(
    g: &Distribution,
    f: &Distribution,
    cs: &crate::kernel::CrossSection,
    scheme: &CollisionScheme,
    part: Part,
) -> Result<Distribution> {
    let grid = &g.grid;
    let table = cached_u_table(grid, cs, scheme.vstar_stride)?;
    let nodes = sigma_nodes(scheme);
    let n = grid.n;
    let total = grid.len();
    let gain_only = matches!(part, Part::GainOnly);

    let entries = &table.entries;
    let chunk = entries.len().div_ceil(REDUCE_CHUNKS).max(1);
    let n_chunks = entries.len().div_ceil(chunk);

    let values = match (scheme.assembly, scheme.interp) {
        (AssemblyKind::Scatter, InterpKind::Trilinear) => {
            let partials: Vec<Vec<f64>> = (0..n_chunks)
                .into_par_iter()
                .map(|c| {
                    let mut buf = vec![0.0; total];
                    let mut p = vec![0.0; total];
                    for e in &entries[c * chunk..((c + 1) * chunk).min(entries.len())] {
                        let scale = table.measure * e.phi;
                        let off = wrap_offset(e.offset, n);
                        let maxp = shifted_product(&mut p, &g.values, &f.values, n, off, scale);
                        if maxp == 0.0 {
                            continue;
                        }
                        if !gain_only {
                            for (b, pv) in buf.iter_mut().zip(p.iter()) {
                                *b -= scheme.nu_b * pv;
                            }
                        }
                        for node in nodes.iter() {
                            let (base, w) = deposit_stencil(e, node, grid.spacing);
                            for (corner, &wc) in w.iter().enumerate() {
                                if wc == 0.0 {
                                    continue;
                                }
                                let o = wrap_offset(corner_offset(base, corner), n);
                                axpy_shifted(&mut buf, &p, n, o, node.tw_b * wc);
                            }
                        }
                    }
                    buf
                })
                .collect();
            let mut out = vec![0.0; total];
            for bufv in partials {
                for (o, b) in out.iter_mut().zip(bufv.iter()) {
                    *o += b;
                }
            }
            out
        }
        (AssemblyKind::Scatter, InterpKind::SpectralShift) => {
            let dims = grid.dims();
            let plans = grid.plans();
            let partials: Vec<(Vec<Complex64>, Vec<f64>)> = (0..n_chunks)
                .into_par_iter()
                .map(|c| {
                    let mut spec = vec![Complex64::new(0.0, 0.0); total];
                    let mut loss = vec![0.0; total];
                    let mut p = vec![0.0; total];
                    let mut pc = vec![Complex64::new(0.0, 0.0); total];
                    for e in &entries[c * chunk..((c + 1) * chunk).min(entries.len())] {
                        let scale = table.measure * e.phi;
                        let off = wrap_offset(e.offset, n);
                        let maxp = shifted_product(&mut p, &g.values, &f.values, n, off, scale);
                        if maxp == 0.0 {
                            continue;
                        }
                        if !gain_only {
                            for (b, pv) in loss.iter_mut().zip(p.iter()) {
                                *b -= scheme.nu_b * pv;
                            }
                        }
                        for (z, x) in pc.iter_mut().zip(p.iter()) {
                            *z = Complex64::new(*x, 0.0);
                        }
                        plans.transform(&mut pc, &dims, true);
                        for node in nodes.iter() {
                            let a = prime_shift(e, node);
                            let (px, py, pz) = phase_tables(grid, a, -1.0);
                            for iz in 0..n {
                                for iy in 0..n {
                                    let pzy = pz[iz] * py[iy] * node.tw_b;
                                    let row = (iz * n + iy) * n;
                                    for ix in 0..n {
                                        spec[row + ix] += pc[row + ix] * pzy * px[ix];
                                    }
                                }
                            }
                        }
                    }
                    (spec, loss)
                })
                .collect();
            let mut spec = vec![Complex64::new(0.0, 0.0); total];
            let mut out = vec![0.0; total];
            for (sbuf, lbuf) in partials {
                for (a, b) in spec.iter_mut().zip(sbuf.iter()) {
                    *a += b;
                }
                for (a, b) in out.iter_mut().zip(lbuf.iter()) {
                    *a += b;
                }
            }
            plans.transform(&mut spec, &dims, false);
            let inv = 1.0 / total as f64;
            for (o, z) in out.iter_mut().zip(spec.iter()) {
                *o += z.re * inv;
            }
            out
        }
        (AssemblyKind::Gather, interp) => {
            let dims = grid.dims();
            let plans = grid.plans();
            // Spectra of the inputs for the spectral-shift gather.
            let (gc0, fc0) = if interp == InterpKind::SpectralShift {
                let mut gc: Vec<Complex64> =
                    g.values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                let mut fc: Vec<Complex64> =
                    f.values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                plans.transform(&mut gc, &dims, true);
                plans.transform(&mut fc, &dims, true);
                (gc, fc)
            } else {
                (Vec::new(), Vec::new())
            };
            let partials: Vec<Vec<f64>> = (0..n_chunks)
                .into_par_iter()
                .map(|c| {
                    let mut buf = vec![0.0; total];
                    let mut p = vec![0.0; total];
                    let mut gtmp = vec![0.0; total];
                    let mut ftmp = vec![0.0; total];
                    let mut scratch = vec![Complex64::new(0.0, 0.0); total];
                    for e in &entries[c * chunk..((c + 1) * chunk).min(entries.len())] {
                        let scale = table.measure * e.phi;
                        let off = wrap_offset(e.offset, n);
                        let maxp = shifted_product(&mut p, &g.values, &f.values, n, off, scale);
                        if !gain_only && maxp != 0.0 {
                            for (b, pv) in buf.iter_mut().zip(p.iter()) {
                                *b -= scheme.nu_b * pv;
                            }
                        }
                        for node in nodes.iter() {
                            let a = prime_shift(e, node);
                            let b_shift = [e.u[0] - a[0], e.u[1] - a[1], e.u[2] - a[2]];
                            match interp {
                                InterpKind::Trilinear => {
                                    interp_field(&mut gtmp, &g.values, n, b_shift, grid.spacing);
                                    interp_field(&mut ftmp, &f.values, n, a, grid.spacing);
                                }
                                InterpKind::SpectralShift => {
                                    spectral_shift_field(
                                        &mut gtmp, &gc0, &mut scratch, grid, b_shift,
                                    );
                                    spectral_shift_field(&mut ftmp, &fc0, &mut scratch, grid, a);
                                }
                            }
                            let cgain = node.tw_b * scale;
                            for ((b, gg), ff) in
                                buf.iter_mut().zip(gtmp.iter()).zip(ftmp.iter())
                            {
                                *b += cgain * gg * ff;
                            }
                        }
                    }
                    buf
                })
                .collect();
            let mut out = vec![0.0; total];
            for bufv in partials {
                for (o, b) in out.iter_mut().zip(bufv.iter()) {
                    *o += b;
                }
            }
            out
        }
    };

    let mut out = Distribution::zeros(grid);
    let mut values = values;

    // The split gain keeps the u = 0 site: v' = v exactly, all sigma.
    if gain_only {
        let c = scheme.nu_b * table.measure * table.phi_zero;
        for ((o, gv), fv) in values.iter_mut().zip(g.values.iter()).zip(f.values.iter()) {
            *o += c * gv * fv;
        }
    }
    out.values = values;
    out.time_tag = f.time_tag;
    Ok(out)
}

/// `out[v] = interpolated src(v + shift)` with a trilinear stencil.
fn interp_field(out: &mut [f64], src: &[f64], n: usize, shift: [f64; 3], h: f64) {
    out.fill(0.0);
    let mut base = [0i64; 3];
    let mut frac = [0.0; 3];
    for d in 0..3 {
        let t = shift[d] / h;
        let fl = t.floor();
        base[d] = fl as i64;
        frac[d] = t - fl;
    }
    for corner in 0..8 {
        let wz = if corner & 4 != 0 { frac[0] } else { 1.0 - frac[0] };
        let wy = if corner & 2 != 0 { frac[1] } else { 1.0 - frac[1] };
        let wx = if corner & 1 != 0 { frac[2] } else { 1.0 - frac[2] };
        let w = wz * wy * wx;
        if w == 0.0 {
            continue;
        }
        let off = wrap_offset(corner_offset(base, corner), n);
        gather_shifted(out, src, n, off, w);
    }
}

/// Band-limited shift: `out(v) = src(v + shift)` through Fourier phases.
fn spectral_shift_field(
    out: &mut [f64],
    src_spec: &[Complex64],
    scratch: &mut [Complex64],
    grid: &crate::grid::VelocityGrid,
    shift: [f64; 3],
) {
    let n = grid.n;
    let (px, py, pz) = phase_tables(grid, shift, 1.0);
    for iz in 0..n {
        for iy in 0..n {
            let pzy = pz[iz] * py[iy];
            let row = (iz * n + iy) * n;
            for ix in 0..n {
                scratch[row + ix] = src_spec[row + ix] * pzy * px[ix];
            }
        }
    }
    let dims = grid.dims();
    grid.plans().transform(scratch, &dims, false);
    let inv = 1.0 / grid.len() as f64;
    for (o, z) in out.iter_mut().zip(scratch.iter()) {
        *o = z.re * inv;
    }
}

/// Per-axis phase tables `e^{i sign xi(m) a_d}` in FFT order.
pub(super) fn phase_tables(
    grid: &crate::grid::VelocityGrid,
    a: [f64; 3],
    sign: f64,
) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
    let n = grid.n;
    let mk = |a_d: f64| -> Vec<Complex64> {
        (0..n)
            .map(|m| Complex64::from_polar(1.0, sign * grid.wavenumber(m) * a_d))
            .collect()
    };
    (mk(a[2]), mk(a[1]), mk(a[0]))
}
