use nlbs_core::cubic::{cubic_residual, root_count, solve_p, Branch};
use nlbs_core::exact::symmetry::{apply_symmetry, SymmetryAction};
use nlbs_core::exact::{eval_u, z_star, ExactSolution, FamilyKind, SolutionFamily, SolutionField};
use nlbs_core::model::{pde_residual, ModelKind, ModelParams};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = (FamilyKind, f64)> {
    prop_oneof![
        (0.05f64..3.0).prop_map(|c| (FamilyKind::R, c)),
        (0.05f64..3.0).prop_map(|c| (FamilyKind::U1, -c)),
        (0.05f64..3.0).prop_map(|c| (FamilyKind::U2, -c)),
        (0.05f64..3.0).prop_map(|c| (FamilyKind::U3, -c)),
    ]
}

/// A price inside the family's domain at time `t`, away from the boundary.
fn price(kind: FamilyKind, c: f64, sigma: f64, t: f64, offset: f64) -> f64 {
    let zs = z_star(c);
    let z = match kind {
        FamilyKind::R => offset - 2.0,
        FamilyKind::U3 if offset < 2.0 => zs - 0.05 - offset,
        _ => zs + 0.05 + offset,
    };
    (z + sigma * sigma * t / 8.0).exp()
}

proptest! {
    #[test]
    fn b_times_u_is_independent_of_b(
        (kind, c) in family(),
        b1 in 0.2f64..3.0,
        b2 in 0.2f64..3.0,
        t in 0.0f64..1.0,
        off in 0.0f64..4.0,
    ) {
        let f = SolutionFamily::new(kind, c, 0.0, 0.0).unwrap();
        let s = price(kind, c, 0.4, t, off);
        let u1 = eval_u(&f, s, t, &ModelParams::new(0.4, b1, 1.0).unwrap()).unwrap();
        let u2 = eval_u(&f, s, t, &ModelParams::new(0.4, b2, 1.0).unwrap()).unwrap();
        prop_assert!((b1 * u1 - b2 * u2).abs() <= 1e-12 * (b1 * u1).abs().max(1.0));
    }

    #[test]
    fn u_over_s_depends_only_on_the_invariant(
        (kind, c) in family(),
        t in 0.0f64..1.0,
        dt in -0.5f64..0.5,
        off in 0.0f64..4.0,
    ) {
        let p = ModelParams::new(0.4, 1.0, 1.0).unwrap();
        let f = SolutionFamily::new(kind, c, 0.0, 0.0).unwrap();
        let s = price(kind, c, 0.4, t, off);
        let s2 = s * (0.02 * dt).exp();
        let a = eval_u(&f, s, t, &p).unwrap() / s;
        let b = eval_u(&f, s2, t + dt, &p).unwrap() / s2;
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn cubic_roots_back_substitute(z in -8.0f64..8.0, c in -5.0f64..5.0) {
        prop_assume!(c.abs() > 1e-3);
        for branch in [Branch::Plus, Branch::Minus] {
            let roots = solve_p(z, c, branch).unwrap();
            for r in &roots {
                let scale = 1.0 + r.value.abs().powi(3);
                prop_assert!(cubic_residual(r.value, z, c, branch).abs() <= 1e-12 * scale);
            }
        }
        let plus = solve_p(z, c, Branch::Plus).unwrap();
        if c > 0.0 {
            prop_assert_eq!(root_count(&plus), 1);
        } else if (z - z_star(c)).abs() > 1e-9 {
            prop_assert_eq!(root_count(&plus), if z > z_star(c) { 3 } else { 1 });
        }
    }

    #[test]
    fn symmetry_images_stay_solutions(
        a in prop::array::uniform4(-1.0f64..1.0),
        eps in -0.5f64..0.5,
        s in 0.3f64..5.0,
    ) {
        let p = ModelParams::new(0.4, 1.0, 1.0).unwrap();
        let f = SolutionFamily::new(FamilyKind::R, 0.5, 0.0, 0.0).unwrap();
        let u = ExactSolution::new(f, p).unwrap();
        let a1 = if a[0].abs() < 0.05 { 0.5 } else { a[0] };
        let tr = apply_symmetry(u, SymmetryAction::power_law(a1, a[1], a[2], a[3], eps, 0)).unwrap();
        let j = tr.jet(s, 0.3).unwrap();
        prop_assert!(pde_residual(&ModelKind::FreySde, &p, &j).unwrap().abs() < 1e-9);
    }
}
