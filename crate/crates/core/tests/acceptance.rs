//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::io::Write;
use std::time::Instant;

use nlbs_core::cubic::{cubic_residual, cubic_rhs, root_count, solve_p, Branch};
use nlbs_core::exact::asymptotic::{eval_asymptotic, linear_coefficient};
use nlbs_core::exact::symmetry::{apply_symmetry, SymmetryAction};
use nlbs_core::exact::{
    boundary_price, domain_of, eval_delta, eval_u, eval_v, eval_v_jet, reduced_ode_residual,
    z_star, ExactSolution, FamilyKind, SolutionFamily, SolutionField,
};
use nlbs_core::model::{pde_residual, Jet2, ModelKind, ModelParams};
use nlbs_core::reduction::{integrate_y, IntegrationControls, ReductionParams};
use nlbs_core::solver::{
    convergence_study, BoundaryPolicy, ConvergenceAxis, LadderLevel, SolverConfig,
};
use nlbs_core::Error;

// Written to the stderr handle directly so the line survives test capture.
fn report(n: u32, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n}: {verdict} {detail}");
    assert!(pass, "criterion {n} failed: {detail}");
}

const SIGMA: f64 = 0.4;

fn unit_params() -> ModelParams {
    ModelParams::new(SIGMA, 1.0, 1.0).unwrap()
}

/// The four benchmark families at |c| = 0.5.
fn benchmark_families() -> [SolutionFamily; 4] {
    [
        SolutionFamily::new(FamilyKind::R, 0.5, 0.0, 0.0).unwrap(),
        SolutionFamily::new(FamilyKind::U1, -0.5, 0.0, 0.0).unwrap(),
        SolutionFamily::new(FamilyKind::U2, -0.5, 0.0, 0.0).unwrap(),
        SolutionFamily::new(FamilyKind::U3, -0.5, 0.0, 0.0).unwrap(),
    ]
}

/// `ns × nt` points of `(0, 5] × [0, 0.5]` inside the family's domain, kept
/// 1e-3 away from its boundary.
fn gate_grid(f: &SolutionFamily, p: &ModelParams, ns: usize, nt: usize) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(ns * nt);
    for j in 0..nt {
        let t = 0.5 * j as f64 / (nt - 1) as f64;
        let lo = domain_of(f, p, t).lower + 1e-3;
        for i in 0..ns {
            pts.push((lo + (5.0 - lo) * i as f64 / (ns - 1) as f64, t));
        }
    }
    pts
}

fn max_pde_residual(field: &dyn SolutionField, pts: &[(f64, f64)], p: &ModelParams) -> f64 {
    pts.iter()
        .map(|&(s, t)| {
            let j = field.jet(s, t).unwrap();
            pde_residual(&ModelKind::FreySde, p, &j).unwrap().abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn criterion_01_exact_pde_gate() {
    let start = Instant::now();
    let p = unit_params();
    let mut worst: f64 = 0.0;
    let mut parts = vec![];
    for f in benchmark_families() {
        let u = ExactSolution::new(f, p).unwrap();
        let r = max_pde_residual(&u, &gate_grid(&f, &p, 200, 50), &p);
        parts.push(format!("{}={r:.1e}", f.kind()));
        worst = worst.max(r);
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        worst <= 1e-7 && secs <= 10.0,
        format!(
            "max residual {worst:.2e} ({}) in {secs:.2}s",
            parts.join(", ")
        ),
    );
}

#[test]
fn criterion_02_reduced_ode_gate() {
    let p = unit_params();
    let mut worst: f64 = 0.0;
    for f in benchmark_families() {
        let zs = z_star(f.c());
        let (lo, hi) = match f.kind() {
            FamilyKind::R | FamilyKind::U3 => (zs - 5.0, zs + 5.0),
            _ => (zs + 1e-3, zs + 8.0),
        };
        for i in 0..1000 {
            let z = lo + (hi - lo) * i as f64 / 999.0;
            let j = eval_v_jet(&f, z, &p).unwrap();
            worst = worst.max(reduced_ode_residual(&j, p.b()).abs());
        }
    }
    report(
        2,
        worst <= 1e-8,
        format!("max residual {worst:.2e} over 4 x 1000 samples"),
    );
}

#[test]
fn criterion_03_cubic_inversion() {
    // deterministic xorshift stream so the sample set is reproducible
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut uniform = move |a: f64, b: f64| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        a + (b - a) * (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut worst: f64 = 0.0;
    let mut pattern_errors = 0;
    for branch in [Branch::Plus, Branch::Minus] {
        for _ in 0..10_000 {
            let z = uniform(-6.0, 6.0);
            let c = uniform(-3.0, 3.0);
            if c.abs() < 1e-6 {
                continue;
            }
            let roots = solve_p(z, c, branch).unwrap();
            // backward error: residual relative to the size of the right-hand side
            let scale = 1.0 + cubic_rhs(z, c).abs();
            for r in &roots {
                worst = worst.max(cubic_residual(r.value, z, c, branch).abs() / scale);
            }
            // the minus cubic is the plus cubic under c → -c
            let signed = if branch == Branch::Plus { c } else { -c };
            let expect = if signed > 0.0 || z < z_star(c) { 1 } else { 3 };
            if (z - z_star(c)).abs() > 1e-9 && root_count(&roots) != expect {
                pattern_errors += 1;
            }
        }
    }
    report(
        3,
        worst <= 1e-12 && pattern_errors == 0,
        format!("max relative residual {worst:.2e}, root-count mismatches {pattern_errors}"),
    );
}

#[test]
fn criterion_04_branch_behaviour() {
    let p = unit_params();
    let c = -0.35;
    let zs = z_star(c);
    let target = -(2.0 / 3.0) * (2.0f64 / 0.35).ln();
    let u1 = SolutionFamily::new(FamilyKind::U1, c, 0.0, 0.0).unwrap();
    let u2 = SolutionFamily::new(FamilyKind::U2, c, 0.0, 0.0).unwrap();
    let meet = (eval_v(&u1, zs, &p).unwrap() - eval_v(&u2, zs, &p).unwrap()).abs();
    let rejects = [u1, u2]
        .iter()
        .all(|f| matches!(eval_v(f, zs - 1e-6, &p), Err(Error::OutOfDomain { .. })));
    let c1 = SolutionFamily::new(FamilyKind::U3Chart1, c, 0.0, 0.0).unwrap();
    let c2 = SolutionFamily::new(FamilyKind::U3Chart2, c, 0.0, 0.0).unwrap();
    let mut join: f64 = 0.0;
    for t in [0.0, 0.25, 0.5] {
        let s = boundary_price(c, &p, t);
        let want_s = (0.35f64 / 2.0).powf(2.0 / 3.0) * (SIGMA * SIGMA * t / 8.0).exp();
        join = join.max((s - want_s).abs());
        join = join.max((eval_u(&c1, s, t, &p).unwrap() - eval_u(&c2, s, t, &p).unwrap()).abs());
    }
    report(
        4,
        (zs - target).abs() < 1e-14 && meet <= 1e-8 && rejects && join <= 1e-8,
        format!(
            "|v1 - v2| at z* = {meet:.1e}, OutOfDomain below z*: {rejects}, chart jump {join:.1e}"
        ),
    );
}

#[test]
fn criterion_05_rho_scaling() {
    let mut worst: f64 = 0.0;
    for f in benchmark_families() {
        let base = ModelParams::new(SIGMA, 1.0, 1.0).unwrap();
        let pts = gate_grid(&f, &base, 50, 11);
        for (b1, b2) in [(0.5, 1.0), (0.5, 2.0), (1.0, 2.0)] {
            let p1 = ModelParams::new(SIGMA, b1, 1.0).unwrap();
            let p2 = ModelParams::new(SIGMA, b2, 1.0).unwrap();
            for &(s, t) in &pts {
                let d = b1 * eval_u(&f, s, t, &p1).unwrap() - b2 * eval_u(&f, s, t, &p2).unwrap();
                worst = worst.max(d.abs());
            }
        }
    }
    report(
        5,
        worst <= 1e-12,
        format!("max |b u(b) - b' u(b')| = {worst:.2e}"),
    );
}

#[test]
fn criterion_06_symmetry_closure() {
    let p = unit_params();
    let f = SolutionFamily::new(FamilyKind::R, 0.5, 0.0, 0.0).unwrap();
    let u = ExactSolution::new(f, p).unwrap();
    let eps = 0.3;
    let actions = [
        (
            "scaling",
            SymmetryAction::power_law(1.0, 0.0, 0.0, 0.0, eps, 0),
        ),
        ("time", SymmetryAction::general(1.0, 0.0, 0.0, eps)),
        ("linear", SymmetryAction::general(0.0, 1.0, 0.0, eps)),
        ("constant", SymmetryAction::general(0.0, 0.0, 1.0, eps)),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = vec![];
    for (name, a) in actions {
        let tr = apply_symmetry(u, a).unwrap();
        // the image of R lives on the same (0, 5] x [0, 0.5] window
        let r = max_pde_residual(&tr, &gate_grid(&f, &p, 200, 50), &p);
        parts.push(format!("{name}={r:.1e}"));
        worst = worst.max(r);
    }
    report(
        6,
        worst <= 1e-7,
        format!("max residual {worst:.2e} ({})", parts.join(", ")),
    );
}

#[test]
fn criterion_07_asymptotics() {
    let p = unit_params();
    let t = 0.3;
    let u1 = SolutionFamily::new(FamilyKind::U1, -0.5, 0.0, 0.0).unwrap();
    let rem = |s: f64| {
        (eval_u(&u1, s, t, &p).unwrap() - eval_asymptotic(&u1, s, t, &p, 3).unwrap()).abs()
    };
    // least-squares slope of log remainder over log S on [1e2, 1e4]
    let pts: Vec<(f64, f64)> = (0..=20)
        .map(|i| {
            let s = 10f64.powf(2.0 + 0.1 * i as f64);
            (s.ln(), rem(s).ln())
        })
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let slope_ok = (slope + 1.25).abs() <= 0.3;

    // u/S = A + B S^{-3/4} + O(S^{-3/2}); one Richardson step with ratio 16
    let mut coef_err: f64 = 0.0;
    for kind in [FamilyKind::U2, FamilyKind::U3] {
        let f = SolutionFamily::new(kind, -0.5, 0.0, 0.0).unwrap();
        let a = |s: f64| eval_u(&f, s, t, &p).unwrap() / s;
        let s = 1e6;
        let est = (8.0 * a(16.0 * s) - a(s)) / 7.0;
        coef_err = coef_err.max((est - linear_coefficient(0.5, p.b())).abs());
    }
    let coef_ok = coef_err <= 1e-6;
    report(
        7,
        slope_ok && coef_ok,
        format!(
            "U1 remainder slope {slope:.3} (target -1.25 +/- 0.3: {}), U2/U3 leading coefficient error {coef_err:.1e} ({})",
            if slope_ok { "ok" } else { "out of band" },
            if coef_ok { "ok" } else { "out of band" }
        ),
    );
}

#[test]
fn criterion_08_solver_benchmark() {
    let start = Instant::now();
    let p = unit_params();
    let f = SolutionFamily::new(FamilyKind::R, 0.5, 0.0, 0.0).unwrap();
    let exact = ExactSolution::new(f, p).unwrap();
    let cfg = SolverConfig {
        boundary: BoundaryPolicy::DirichletFromReference,
        ..SolverConfig::default()
    };
    let ladder: Vec<_> = [201, 401, 801]
        .iter()
        .map(|&nx| LadderLevel {
            nx,
            nt: (nx - 1) / 4,
        })
        .collect();
    let res = convergence_study(
        &ModelKind::FreySde,
        &p,
        &exact,
        (0.2, 5.0),
        0.5,
        &ladder,
        ConvergenceAxis::Space,
        &cfg,
    );
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok(tab) => {
            let orders: Vec<f64> = tab
                .orders()
                .into_iter()
                .map(|o| o.unwrap_or(f64::NAN))
                .collect();
            let rel = tab.finest().unwrap().relative_error;
            let pass =
                orders.iter().all(|o| (1.7..=2.3).contains(o)) && rel <= 5e-4 && secs <= 60.0;
            report(
                8,
                pass,
                format!("orders {orders:?}, finest relative error {rel:.2e}, {secs:.1}s"),
            );
        }
        Err(e) => report(8, false, format!("solver error on the R family: {e}")),
    }
}

#[test]
fn criterion_09_linearization() {
    let base = ModelParams::new(SIGMA, 1.0, 1.0).unwrap();
    // jets of u = 0.05 S² + S, independent of ρ; ρ S u_SS stays below 0.02
    let jets: Vec<Jet2> = (0..20)
        .map(|i| {
            let s = 0.5 + 0.075 * i as f64;
            Jet2 {
                s,
                t: 0.2,
                u: 0.05 * s * s + s,
                u_t: -0.1,
                u_s: 0.1 * s + 1.0,
                u_ss: 0.1,
            }
        })
        .collect();
    let gap = |rho: f64| {
        let p = base.with_rho(rho).unwrap();
        jets.iter()
            .map(|j| {
                (pde_residual(&ModelKind::FreySde, &p, j).unwrap()
                    - pde_residual(&ModelKind::Cjp, &p, j).unwrap())
                .abs()
            })
            .fold(0.0, f64::max)
    };
    let (g1, g2, g3) = (gap(0.1), gap(0.05), gap(0.025));
    let (r1, r2) = (g1 / g2, g2 / g3);
    report(
        9,
        (r1 - 4.0).abs() <= 0.5 && (r2 - 4.0).abs() <= 0.5,
        format!("shrink factors {r1:.3}, {r2:.3}"),
    );
}

#[test]
fn criterion_10_ode_oracle() {
    let p = unit_params();
    let rp = ReductionParams::invariant_case(p.b()).unwrap();
    let ctl = IntegrationControls::default();
    let cases = [
        (FamilyKind::R, 0.5, -1.0, Branch::Plus),
        (FamilyKind::U1, -0.5, -0.5, Branch::Plus),
        (FamilyKind::U2, -0.5, 0.0, Branch::Minus),
        (FamilyKind::U3, -0.5, -0.5, Branch::Minus),
    ];
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (kind, c, z0, branch) in cases {
        let f = SolutionFamily::new(kind, c, 0.0, 0.0).unwrap();
        let y0 = eval_v_jet(&f, z0, &p).unwrap().v_z;
        match integrate_y(y0, z0, z0 + 1.0, &rp, branch, &ctl).and_then(|t| t.completed()) {
            Ok(tr) => {
                for (&z, &y) in tr.z.iter().zip(&tr.y) {
                    worst = worst.max((y - eval_v_jet(&f, z, &p).unwrap().v_z).abs());
                }
            }
            Err(_) => ok = false,
        }
    }
    report(
        10,
        ok && worst <= 1e-6,
        format!("max |y - v_z| = {worst:.2e} on 4 unit intervals"),
    );
}

#[test]
fn criterion_11_delta_consistency() {
    let p = unit_params();
    let mut worst: f64 = 0.0;
    for kind in [FamilyKind::U2, FamilyKind::U3] {
        let f = SolutionFamily::new(kind, -1.0, 0.0, 0.0).unwrap();
        for j in 0..=10 {
            let t = 0.01 + 0.49 * j as f64 / 10.0;
            let lo = domain_of(&f, &p, t).lower + 1e-3;
            for i in 0..=100 {
                let s = lo + (5.0 - lo) * i as f64 / 100.0;
                let h = 1e-5 * s;
                let fd = (eval_u(&f, s + h, t, &p).unwrap() - eval_u(&f, s - h, t, &p).unwrap())
                    / (2.0 * h);
                worst = worst.max((fd - eval_delta(&f, s, t, &p).unwrap()).abs());
            }
        }
    }
    let mut flat: f64 = 0.0;
    let mut limits = vec![];
    for kind in [FamilyKind::U2, FamilyKind::U3] {
        for ac in [0.5, 1.0, 2.0] {
            let f = SolutionFamily::new(kind, -ac, 0.0, 0.0).unwrap();
            for t in [0.01, 0.5] {
                let d3 = eval_delta(&f, 1e3, t, &p).unwrap();
                let d4 = eval_delta(&f, 1e4, t, &p).unwrap();
                flat = flat.max((d3 - d4).abs());
            }
            if kind == FamilyKind::U2 {
                limits.push(format!("|c|={ac}: {:.4}", linear_coefficient(ac, p.b())));
            }
        }
    }
    report(
        11,
        worst <= 1e-6 && flat <= 1e-2,
        format!(
            "max |delta - FD| {worst:.1e}, max |D(1e3) - D(1e4)| {flat:.1e}, large-S limit depends on c ({})",
            limits.join(", ")
        ),
    );
}
