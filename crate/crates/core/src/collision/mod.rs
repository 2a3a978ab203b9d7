//! The bilinear collision operator on the periodic velocity lattice.
//!
//! `q_direct` evaluates `Q(g, f)` by summing over difference vectors
//! `u = v* - v` (the full lattice, optionally strided) and the paired
//! angular quadrature. The default assembly is *scatter*: for every triple
//! `(v, v*, sigma)` the gain amount `w b Phi g(v*) f(v)` is deposited on the
//! lattice neighbourhood of `v'` and the same amount removed at `v`, so the
//! discrete loss and gain reuse identical triples. Mass is then conserved to
//! roundoff, momentum by the reflection/swap symmetry of the node set, and
//! the residual energy defect of the deposit stencil can be removed by the
//! five-moment projection.
//!
//! `q_spectral_maxwell` evaluates the same operator for Maxwellian molecules
//! (`gamma = 0`) on the Fourier side and serves as an independent oracle.

mod direct;
mod project;
mod spectral;
mod table;
mod transformed;

pub use direct::{loss_convolution, q_direct, q_gain, trilinear_weak_form};
pub use project::project_conservative;
pub use spectral::q_spectral_maxwell;
pub use table::{cached_u_table, UTable};
pub use transformed::{gain_gamma, gamma_t, loss_L_eps, transform_pair, MU_FLOOR};

use crate::error::{Error, Result};
use crate::kernel::{
    build_angular_quadrature_with_ratio, effective_kernel_b, AngularQuadrature, CrossSection,
    DEFAULT_GRADING_RATIO,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorMode {
    #[default]
    Direct,
    SpectralMaxwell,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InterpKind {
    /// Eight-point multilinear stencil: fast, positivity-friendly.
    #[default]
    Trilinear,
    /// Band-limited (Fourier phase) shift: exact for resolved fields.
    SpectralShift,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AssemblyKind {
    /// Deposit gain at `v'`, remove loss at `v` (conservative structure).
    #[default]
    Scatter,
    /// Interpolate `g(v*') f(v')` at the output point.
    Gather,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ConserveKind {
    #[default]
    None,
    /// L2-minimal correction enforcing mass, momentum and energy exactly.
    Project,
}

/// Evaluation scheme for the collision integrals, built for one
/// cross-section (the angular weights embed the kernel).
#[derive(Clone, Debug)]
pub struct CollisionScheme {
    pub mode: OperatorMode,
    pub quad: AngularQuadrature,
    pub interp: InterpKind,
    pub assembly: AssemblyKind,
    pub conserve: ConserveKind,
    pub vstar_stride: usize,
    /// `theta_weight[i] * b(theta_i)` per theta node.
    pub(crate) tw_b: Vec<f64>,
    /// Discrete angular kernel mass `int b dsigma` under this quadrature.
    pub(crate) nu_b: f64,
}

impl CollisionScheme {
    pub fn new(cs: &CrossSection, n_theta: usize, n_phi: usize) -> Result<Self> {
        Self::with_options(
            cs,
            n_theta,
            n_phi,
            DEFAULT_GRADING_RATIO,
            InterpKind::Trilinear,
            AssemblyKind::Scatter,
            ConserveKind::None,
            1,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_options(
        cs: &CrossSection,
        n_theta: usize,
        n_phi: usize,
        grading_ratio: f64,
        interp: InterpKind,
        assembly: AssemblyKind,
        conserve: ConserveKind,
        vstar_stride: usize,
    ) -> Result<Self> {
        let quad = build_angular_quadrature_with_ratio(cs, n_theta, n_phi, grading_ratio)?;
        if cs.eps_cutoff.is_none() && !quad.paired {
            return Err(Error::config(
                "non-cutoff kernel requires a reflection-paired quadrature",
            ));
        }
        if vstar_stride == 0 {
            return Err(Error::config("vstar_stride must be >= 1"));
        }
        let tw_b: Vec<f64> = quad
            .theta
            .iter()
            .zip(quad.theta_weight.iter())
            .map(|(&t, &w)| Ok(w * effective_kernel_b(t, cs)?))
            .collect::<Result<_>>()?;
        let nu_b = tw_b.iter().sum::<f64>() * quad.phi.len() as f64;
        Ok(CollisionScheme {
            mode: OperatorMode::Direct,
            quad,
            interp,
            assembly,
            conserve,
            vstar_stride,
            tw_b,
            nu_b,
        })
    }

    pub fn interp(mut self, interp: InterpKind) -> Self {
        self.interp = interp;
        self
    }

    pub fn assembly(mut self, assembly: AssemblyKind) -> Self {
        self.assembly = assembly;
        self
    }

    pub fn conserve(mut self, conserve: ConserveKind) -> Self {
        self.conserve = conserve;
        self
    }

    /// Discrete angular kernel mass (the loss-term factor).
    pub fn angular_mass(&self) -> f64 {
        self.nu_b
    }

    pub fn signature(&self, cs: &CrossSection) -> String {
        format!(
            "{};{};interp={:?};assembly={:?};stride={}",
            cs.signature(),
            self.quad.signature(),
            self.interp,
            self.assembly,
            self.vstar_stride
        )
    }
}

/// One collision parametrised by the unit vector `sigma`.
#[derive(Clone, Copy, Debug)]
pub struct SigmaPair {
    pub v: [f64; 3],
    pub v_star: [f64; 3],
    pub sigma: [f64; 3],
    pub v_prime: [f64; 3],
    pub v_star_prime: [f64; 3],
}

/// Post-collisional velocities in the sigma representation:
/// `v' = (v+v*)/2 + |v-v*| sigma / 2`, `v*' = (v+v*)/2 - |v-v*| sigma / 2`.
pub fn sigma_map(v: [f64; 3], v_star: [f64; 3], sigma: [f64; 3]) -> SigmaPair {
    debug_assert!((dot(&sigma, &sigma) - 1.0).abs() < 1e-9, "sigma must be unit");
    let rel = sub(&v, &v_star);
    let r = dot(&rel, &rel).sqrt();
    let mid = [
        0.5 * (v[0] + v_star[0]),
        0.5 * (v[1] + v_star[1]),
        0.5 * (v[2] + v_star[2]),
    ];
    let half = 0.5 * r;
    SigmaPair {
        v,
        v_star,
        sigma,
        v_prime: [
            mid[0] + half * sigma[0],
            mid[1] + half * sigma[1],
            mid[2] + half * sigma[2],
        ],
        v_star_prime: [
            mid[0] - half * sigma[0],
            mid[1] - half * sigma[1],
            mid[2] - half * sigma[2],
        ],
    }
}

#[inline]
pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Orthonormal frame `(e1, e2)` spanning the plane perpendicular to `k`
/// (unit), chosen so that `frame(-k) = (-e1, -e2)`. The antipodal symmetry
/// makes the sigma node set of the swapped pair `(v*, v)` exactly the
/// negated node set of `(v, v*)`, which is what cancels odd moments in the
/// discrete sum.
pub(crate) fn perpendicular_frame(k: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    // Canonical representative of {k, -k}: first nonzero component positive.
    let mut sign = 1.0;
    for d in 0..3 {
        if k[d] != 0.0 {
            if k[d] < 0.0 {
                sign = -1.0;
            }
            break;
        }
    }
    let kc = [sign * k[0], sign * k[1], sign * k[2]];
    // Axis least aligned with kc.
    let a = if kc[0].abs() <= kc[1].abs() && kc[0].abs() <= kc[2].abs() {
        [1.0, 0.0, 0.0]
    } else if kc[1].abs() <= kc[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let mut e1 = cross(&a, &kc);
    let n1 = dot(&e1, &e1).sqrt();
    for x in &mut e1 {
        *x /= n1;
    }
    let e2 = cross(&kc, &e1);
    // Undo the canonicalisation: frame(-kc) = (-e1, -e2).
    (
        [sign * e1[0], sign * e1[1], sign * e1[2]],
        [sign * e2[0], sign * e2[1], sign * e2[2]],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn sigma_map_fixed_point_and_exchange() {
        let v = [1.0, -2.0, 0.5];
        let vs = [0.0, 1.0, -1.0];
        let rel = sub(&v, &vs);
        let r = dot(&rel, &rel).sqrt();
        let k = [rel[0] / r, rel[1] / r, rel[2] / r];
        let p = sigma_map(v, vs, k);
        for d in 0..3 {
            assert!((p.v_prime[d] - v[d]).abs() < 1e-14);
            assert!((p.v_star_prime[d] - vs[d]).abs() < 1e-14);
        }
        let q = sigma_map(v, vs, [-k[0], -k[1], -k[2]]);
        for d in 0..3 {
            assert!((q.v_prime[d] - vs[d]).abs() < 1e-14);
            assert!((q.v_star_prime[d] - v[d]).abs() < 1e-14);
        }
    }

    #[test]
    fn sigma_map_collision_invariants_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1_000_000 {
            let v: [f64; 3] = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let vs: [f64; 3] = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let sigma = crate::rng::uniform_on_sphere(&mut rng);
            let p = sigma_map(v, vs, sigma);
            // Momentum exact.
            for d in 0..3 {
                let m = p.v_prime[d] + p.v_star_prime[d] - v[d] - vs[d];
                assert!(m.abs() < 1e-12);
            }
            // Energy within 1e-12 relative.
            let e0 = dot(&v, &v) + dot(&vs, &vs);
            let e1 = dot(&p.v_prime, &p.v_prime) + dot(&p.v_star_prime, &p.v_star_prime);
            assert!((e1 - e0).abs() <= 1e-12 * e0.max(1.0));
            // Relative speed preserved.
            let r0 = sub(&v, &vs);
            let r1 = sub(&p.v_prime, &p.v_star_prime);
            let d0 = dot(&r0, &r0).sqrt();
            let d1 = dot(&r1, &r1).sqrt();
            assert!((d1 - d0).abs() <= 1e-12 * d0.max(1.0));
        }
    }

    #[test]
    fn frame_is_orthonormal_and_antipodal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let k = crate::rng::uniform_on_sphere(&mut rng);
            let (e1, e2) = perpendicular_frame(&k);
            assert!(dot(&e1, &k).abs() < 1e-12);
            assert!(dot(&e2, &k).abs() < 1e-12);
            assert!(dot(&e1, &e2).abs() < 1e-12);
            assert!((dot(&e1, &e1) - 1.0).abs() < 1e-12);
            let neg = [-k[0], -k[1], -k[2]];
            let (f1, f2) = perpendicular_frame(&neg);
            for d in 0..3 {
                assert!((f1[d] + e1[d]).abs() < 1e-14);
                assert!((f2[d] + e2[d]).abs() < 1e-14);
            }
        }
    }
}
