use boltzkin::collision::*;
use boltzkin::dist::{maxwellian, moments, Distribution};
use boltzkin::grid::make_grid;
use boltzkin::kernel::CrossSection;

fn main() {
    // Conservation probe with compactly supported data: R = 8, T <= 1,
    // centres <= 0.5, so wrap products sit at ~1e-14.
    let grid = make_grid(8, 8.0, 3).unwrap();
    let cs = CrossSection::new(0.0, 0.25, 0.5, Some(0.25)).unwrap();
    let scheme = CollisionScheme::new(&cs, 8, 4).unwrap().assembly(AssemblyKind::Scatter);
    let mut f = maxwellian(1.0, [0.5, -0.3, 0.2], 1.0, &grid);
    f.axpy(0.5, &maxwellian(0.4, [0.0, 0.4, -0.4], 0.8, &grid));
    let q = q_direct(&f, &f, &cs, &scheme).unwrap();
    let m = moments(&q);
    let w = q.site_weight();
    let scale: f64 = q.values.iter().enumerate().map(|(i, v)| {
        let vel = q.grid.velocity(i);
        v.abs() * (1.0 + vel[0]*vel[0]+vel[1]*vel[1]+vel[2]*vel[2]) * w
    }).sum();
    println!("scatter, contained data: scale {scale:.3e}");
    println!("  mass rel {:.3e}  mom rel ({:.3e},{:.3e},{:.3e})  energy rel {:.3e}",
        m.mass/scale, m.momentum[0]/scale, m.momentum[1]/scale, m.momentum[2]/scale, m.energy/scale);

    // Equilibrium defect by assembly/interp at n=8, R=8, T=2.5 and T tuned.
    let g8 = make_grid(8, 8.0, 3).unwrap();
    let cs2 = CrossSection::new(0.0, 0.25, 0.5, Some(0.3)).unwrap();
    for t_mw in [2.5, 5.0] {
        let m8 = maxwellian(1.0, [0.0;3], t_mw, &g8);
        for (asm, interp) in [(AssemblyKind::Scatter, InterpKind::Trilinear),
                              (AssemblyKind::Scatter, InterpKind::SpectralShift),
                              (AssemblyKind::Gather, InterpKind::Trilinear),
                              (AssemblyKind::Gather, InterpKind::SpectralShift)] {
            let sch = CollisionScheme::new(&cs2, 8, 4).unwrap().interp(interp).assembly(asm);
            let q = q_direct(&m8, &m8, &cs2, &sch).unwrap();
            println!("T={t_mw} {asm:?}/{interp:?}: eq defect {:.3e}", q.l2_norm()/m8.l2_norm());
        }
    }

    // Direct(gather,spectral) vs spectral oracle, increasing sigma count.
    let a = maxwellian(1.0, [0.6, -0.4, 0.2], 2.0, &g8);
    let mut b = maxwellian(0.8, [-0.5, 0.3, 0.0], 1.8, &g8);
    b.axpy(0.5, &maxwellian(0.4, [0.0, 0.8, -0.6], 2.3, &g8));
    for (nt, np) in [(8usize, 4usize), (16, 8), (32, 16), (64, 16)] {
        let sch = CollisionScheme::with_options(&cs2, nt, np, 0.75,
            InterpKind::SpectralShift, AssemblyKind::Gather, ConserveKind::None, 1).unwrap();
        let qd = q_direct(&a, &b, &cs2, &sch).unwrap();
        let qs = q_spectral_maxwell(&a, &b, &cs2, &sch).unwrap();
        let diff = Distribution::linear_comb(1.0, &qd, -1.0, &qs);
        println!("gather nodes {}x{}: |qd-qs|/|qd| = {:.4e}  (|qd| {:.4e})",
            nt, np, diff.l2_norm()/qd.l2_norm(), qd.l2_norm());
    }
}
