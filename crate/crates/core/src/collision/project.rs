//! Five-moment conservative projection.
//!
//! The trilinear deposit conserves mass exactly and momentum by the
//! antipodal pairing of the node set, but reproduces `|v|^2` only to the
//! accuracy of the stencil, so a slow energy drift would remain. The
//! projection removes the L2-minimal component of a collision output along
//! `span{1, v, |v|^2}`, enforcing all five invariants to roundoff. This is
//! standard practice in conservative spectral and discrete-velocity solvers.

use crate::dist::Distribution;
use crate::parallel::det_sum;

/// Project `q` onto the subspace with vanishing mass, momentum and energy
/// moments (L2-minimal correction).
pub fn project_conservative(q: &mut Distribution) {
    let grid = q.grid.clone();
    let total = grid.len();
    assert!(q.spatial.is_none(), "project per spatial slice");

    // psi_a(v), a = 0..4: 1, v_x, v_y, v_z, |v|^2.
    let psi = |a: usize, i: usize| -> f64 {
        let v = grid.velocity(i);
        match a {
            0 => 1.0,
            1 => v[0],
            2 => v[1],
            3 => v[2],
            _ => v[0] * v[0] + v[1] * v[1] + v[2] * v[2],
        }
    };

    // Gram matrix and moment vector (lattice inner products; the common
    // cell-volume factor cancels in the solve).
    let mut gram = [[0.0f64; 5]; 5];
    let mut rhs = [0.0f64; 5];
    for a in 0..5 {
        for b in a..5 {
            let s = det_sum(total, |i| psi(a, i) * psi(b, i));
            gram[a][b] = s;
            gram[b][a] = s;
        }
        rhs[a] = det_sum(total, |i| psi(a, i) * q.values[i]);
    }

    // Solve gram * lambda = rhs (5x5 Gaussian elimination with partial
    // pivoting; the Gram matrix of independent functions is SPD).
    let mut m = gram;
    let mut x = rhs;
    for col in 0..5 {
        let mut piv = col;
        for r in col + 1..5 {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        m.swap(col, piv);
        x.swap(col, piv);
        let d = m[col][col];
        for r in col + 1..5 {
            let factor = m[r][col] / d;
            for c in col..5 {
                m[r][c] -= factor * m[col][c];
            }
            x[r] -= factor * x[col];
        }
    }
    let mut lambda = [0.0f64; 5];
    for col in (0..5).rev() {
        let mut acc = x[col];
        for c in col + 1..5 {
            acc -= m[col][c] * lambda[c];
        }
        lambda[col] = acc / m[col][col];
    }

    for (i, v) in q.values.iter_mut().enumerate() {
        let mut corr = 0.0;
        for (a, l) in lambda.iter().enumerate() {
            corr += l * psi(a, i);
        }
        *v -= corr;
    }
}
