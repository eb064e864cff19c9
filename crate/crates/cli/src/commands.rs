use std::time::Instant;

use nlbs_core::exact::closed_form::conformance_report;
use nlbs_core::exact::{
    eval_v_jet, reduced_ode_residual, to_invariant, ExactSolution, FamilyKind, SolutionFamily,
    SolutionField,
};
use nlbs_core::model::{pde_residual, ModelParams};
use nlbs_core::solver::{
    convergence_study, solve_terminal_value, BoundaryPolicy, ConvergenceAxis, Grid, LadderLevel,
    SolverConfig,
};
use nlbs_core::Error;
use rayon::prelude::*;
use serde_json::json;

use crate::error::CliError;
use crate::output::{Cell, Table};
use crate::spec::{Payoff, RunSpec, SweepParam};

pub const SURFACE_COLUMNS: [&str; 6] = ["S", "t", "z", "u", "delta", "in_domain"];

const PDE_GATE: f64 = 1e-7;
const ODE_GATE: f64 = 1e-8;

/// Domain misses become empty cells; every other error is fatal.
fn in_domain<T>(r: nlbs_core::Result<T>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::OutOfDomain { .. } | Error::NonPositivePrice(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn surface_rows(
    spec: &RunSpec,
    exact: &ExactSolution,
    with_fd: bool,
) -> Result<Vec<Vec<Cell>>, CliError> {
    let params = spec.params()?;
    let mut rows = Vec::with_capacity(spec.s_range.n * spec.t_range.n);
    for t in spec.t_range.values() {
        for s in spec.s_range.values() {
            let z = in_domain(to_invariant(s, t, &params))?;
            let jet = in_domain(exact.jet(s, t))?;
            let mut row = vec![
                Cell::Num(s),
                Cell::Num(t),
                Cell::num(z),
                Cell::num(jet.map(|j| j.u)),
                Cell::num(jet.map(|j| j.u_s)),
                Cell::Bool(jet.is_some()),
            ];
            if with_fd {
                let fd = match jet {
                    Some(_) => {
                        let h = 1e-5 * s;
                        match (
                            in_domain(exact.value(s + h, t))?,
                            in_domain(exact.value(s - h, t))?,
                        ) {
                            (Some(a), Some(b)) => Some((a - b) / (2.0 * h)),
                            _ => None,
                        }
                    }
                    None => None,
                };
                row.push(Cell::num(fd));
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn eval(spec: &RunSpec) -> Result<Table, CliError> {
    let mut table = Table::new(&SURFACE_COLUMNS);
    table.rows = surface_rows(spec, &spec.exact()?, false)?;
    Ok(table)
}

pub fn greeks(spec: &RunSpec) -> Result<Table, CliError> {
    let mut cols = SURFACE_COLUMNS.to_vec();
    cols.push("delta_fd");
    let mut table = Table::new(&cols);
    table.rows = surface_rows(spec, &spec.exact()?, true)?;
    table
        .notes
        .push("delta is analytic; delta_fd is a central difference with h = 1e-5 S".into());
    Ok(table)
}

struct GateRow {
    family: SolutionFamily,
    samples: usize,
    skipped: usize,
    pde: f64,
    ode: f64,
}

fn gate(spec: &RunSpec, family: SolutionFamily, params: &ModelParams) -> Result<GateRow, CliError> {
    let kind = spec.model_kind()?;
    let exact = ExactSolution::new(family, *params)?;
    let mut row = GateRow {
        family,
        samples: 0,
        skipped: 0,
        pde: 0.0,
        ode: 0.0,
    };
    for t in spec.t_range.values() {
        for s in spec.s_range.values() {
            let Some(jet) = in_domain(exact.jet(s, t))? else {
                row.skipped += 1;
                continue;
            };
            row.samples += 1;
            row.pde = row.pde.max(pde_residual(&kind, params, &jet)?.abs());
            let z = to_invariant(s, t, params)?;
            let vj = eval_v_jet(&family, z, params)?;
            row.ode = row.ode.max(reduced_ode_residual(&vj, params.b()).abs());
        }
    }
    Ok(row)
}

pub fn residual(spec: &RunSpec) -> Result<(Table, Option<CliError>), CliError> {
    let params = spec.params()?;
    let families: Vec<SolutionFamily> = match &spec.family {
        Some(_) => vec![spec.family()?],
        None => {
            let ac = spec.c.map(f64::abs).unwrap_or(0.5);
            [
                FamilyKind::R,
                FamilyKind::U1,
                FamilyKind::U2,
                FamilyKind::U3,
            ]
            .into_iter()
            .map(|k| SolutionFamily::with_abs_c(k, ac, spec.d, spec.d2).map_err(CliError::from))
            .collect::<Result<_, _>>()?
        }
    };
    let rows: Vec<GateRow> = families
        .par_iter()
        .map(|f| gate(spec, *f, &params))
        .collect::<Result<_, _>>()?;

    let mut table = Table::new(&[
        "family",
        "c",
        "samples",
        "skipped",
        "max_pde_residual",
        "max_ode_residual",
        "pass",
    ]);
    let mut failed = vec![];
    for r in &rows {
        let pass = r.pde <= PDE_GATE && r.ode <= ODE_GATE;
        if !pass {
            failed.push(r.family.kind().to_string());
        }
        table.rows.push(vec![
            Cell::Text(r.family.kind().to_string()),
            Cell::Num(r.family.c()),
            Cell::Int(r.samples),
            Cell::Int(r.skipped),
            Cell::Num(r.pde),
            Cell::Num(r.ode),
            Cell::Bool(pass),
        ]);
    }
    table.notes.push(format!(
        "model {}; gates: pde <= {PDE_GATE:e}, reduced ode <= {ODE_GATE:e}; out-of-domain points are skipped",
        spec.model
    ));

    let ac = families
        .iter()
        .map(|f| f.c().abs())
        .find(|&c| c > 0.0)
        .unwrap_or(0.5);
    let report = conformance_report(ac, &params)?;
    for e in report.entries.iter().filter(|e| !e.conforming) {
        table.notes.push(format!(
            "closed form {} disagrees with the root evaluator at |c| = {ac}: offset {:e}, spread {:e}, non-real samples {}/{}",
            e.label, e.offset, e.spread, e.non_real, e.samples
        ));
    }
    table.meta = Some(json!({ "conformance": report }));

    let failure = (!failed.is_empty())
        .then(|| CliError::GateFailed(format!("residual gate exceeded for {}", failed.join(", "))));
    Ok((table, failure))
}

pub fn solve(spec: &RunSpec) -> Result<Table, CliError> {
    let kind = spec.model_kind()?;
    let params = spec.params()?;
    let (t0, tn) = (spec.t_range.start, spec.t_range.n);
    if t0 != 0.0 || tn < 2 {
        return Err(CliError::Validation(
            "solve needs a t-range of the form 0:T:n with n >= 2".into(),
        ));
    }
    let grid = Grid::uniform(
        spec.s_range.start,
        spec.s_range.end,
        spec.s_range.n,
        spec.t_range.end,
        tn - 1,
    )?;
    let payoff = spec.payoff()?;
    let exact = match payoff {
        Payoff::Family => Some(spec.exact()?),
        _ => None,
    };
    let terminal = grid.terminal_time();
    let h: Box<dyn Fn(f64) -> f64> = match payoff {
        Payoff::Family => {
            let e = exact.expect("family payoff");
            Box::new(move |s| e.value(s, terminal).unwrap_or(f64::NAN))
        }
        Payoff::Call(k) => Box::new(move |s| (s - k).max(0.0)),
        Payoff::Linear(d) => Box::new(move |s| d * s),
    };
    let config = SolverConfig {
        scheme: spec.scheme(),
        boundary: spec.boundary_policy(exact.is_some()),
        ..SolverConfig::default()
    };
    let start = Instant::now();
    let reference = exact.as_ref().map(|e| e as &dyn SolutionField);
    let mut surf =
        solve_terminal_value(&kind, &params, &*h, &grid, &config, reference)?.with_delta();
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    eprintln!(
        "solve: {} Newton iterations in {elapsed:.1} ms",
        surf.meta.total_iterations
    );
    surf.meta.no_convergence_claim = matches!(payoff, Payoff::Call(_));

    let mut table = Table::new(&SURFACE_COLUMNS);
    table.columns.push("newton_residual".into());
    let delta = surf.delta.as_ref().expect("computed above");
    let residual = surf
        .residual
        .as_ref()
        .expect("solver fills residual layers");
    for j in (0..surf.u.len()).rev() {
        let t = grid.t()[j];
        for (i, &s) in grid.s().iter().enumerate() {
            table.rows.push(vec![
                Cell::Num(s),
                Cell::Num(t),
                Cell::Num(to_invariant(s, t, &params)?),
                Cell::Num(surf.u[j][i]),
                Cell::Num(delta[j][i]),
                Cell::Bool(true),
                Cell::Num(residual[j][i]),
            ]);
        }
    }
    table.notes.push(format!(
        "model {}, {} nodes log-uniform in S, {} steps, {} Newton iterations",
        kind.name(),
        grid.nx(),
        grid.nt(),
        surf.meta.total_iterations
    ));
    if config.boundary == BoundaryPolicy::LinearExtrapolation {
        table
            .notes
            .push("edge values extrapolated linearly in S (u_SS = 0 at both edges)".into());
    }
    if let Some(e) = &exact {
        let mut err: f64 = 0.0;
        for (&s, &u) in grid.s().iter().zip(surf.initial()) {
            err = err.max((u - e.value(s, 0.0)?).abs());
        }
        table.notes.push(format!(
            "max error against the exact family at t = 0: {err:e}"
        ));
    }
    if surf.meta.no_convergence_claim {
        table
            .notes
            .push("no convergence claim: nonsmooth terminal data".into());
    }
    table.meta = Some(json!({
        "model": surf.meta.model,
        "config": surf.meta.config,
        "steps": surf.meta.steps,
        "total_iterations": surf.meta.total_iterations,
        "no_convergence_claim": surf.meta.no_convergence_claim,
    }));
    Ok(table)
}

pub fn converge(spec: &RunSpec) -> Result<Table, CliError> {
    let kind = spec.model_kind()?;
    let params = spec.params()?;
    let exact = spec.exact()?;
    if spec.ladder.is_empty() {
        return Err(CliError::Validation("ladder must not be empty".into()));
    }
    let axis = spec.axis();
    let ladder: Vec<LadderLevel> = spec
        .ladder
        .iter()
        .map(|&n| match axis {
            ConvergenceAxis::Space => LadderLevel {
                nx: n,
                nt: (((n.max(2) - 1) as f64 * spec.dt_ratio).round() as usize).max(1),
            },
            ConvergenceAxis::Time => LadderLevel {
                nx: spec.s_range.n,
                nt: n,
            },
        })
        .collect();
    let config = SolverConfig {
        scheme: spec.scheme(),
        boundary: spec.boundary_policy(true),
        ..SolverConfig::default()
    };
    let start = Instant::now();
    let tab = convergence_study(
        &kind,
        &params,
        &exact,
        (spec.s_range.start, spec.s_range.end),
        spec.t_range.end,
        &ladder,
        axis,
        &config,
    )?;
    eprintln!(
        "converge: {} levels in {:.1} s",
        ladder.len(),
        start.elapsed().as_secs_f64()
    );

    let mut table = Table::new(&[
        "level",
        "nx",
        "nt",
        "h",
        "error",
        "relative_error",
        "order",
        "newton_iterations",
    ]);
    for (i, l) in tab.levels.iter().enumerate() {
        table.rows.push(vec![
            Cell::Int(i),
            Cell::Int(l.nx),
            Cell::Int(l.nt),
            Cell::Num(l.h),
            Cell::Num(l.error),
            Cell::Num(l.relative_error),
            Cell::num(l.order),
            Cell::Int(l.newton_iterations),
        ]);
    }
    table.notes.push(format!(
        "max-norm error at t = 0 against family {}; orders below the noise floor {:e} are left empty",
        exact.family.kind(),
        tab.noise_floor
    ));
    Ok(table)
}

pub fn sweep(spec: &RunSpec) -> Result<Table, CliError> {
    let Some(param) = spec.sweep_param else {
        return Err(CliError::Validation("sweep needs --sweep-param".into()));
    };
    if spec.sweep_values.is_empty() {
        return Err(CliError::Validation(
            "sweep needs at least one --sweep-values entry".into(),
        ));
    }
    let kind = spec.family_kind()?;
    let name = match param {
        SweepParam::C => "abs_c",
        SweepParam::Sigma => "sigma",
        SweepParam::Rho => "rho",
        SweepParam::D => "d",
    };
    let blocks: Vec<Vec<Vec<Cell>>> = spec
        .sweep_values
        .par_iter()
        .map(|&v| {
            let mut s = spec.clone();
            match param {
                SweepParam::C => {
                    if !(v > 0.0) {
                        return Err(CliError::Validation(format!(
                            "--sweep-param c takes |c| > 0, got {v}"
                        )));
                    }
                    s.c = Some(kind.c_sign().unwrap_or(1.0) * v);
                }
                SweepParam::Sigma => s.sigma = v,
                SweepParam::Rho => s.rho = v,
                SweepParam::D => s.d = v,
            }
            s.validate()?;
            let mut rows = surface_rows(&s, &s.exact()?, false)?;
            for r in &mut rows {
                r.push(Cell::Num(v));
            }
            Ok(rows)
        })
        .collect::<Result<_, CliError>>()?;
    let mut cols = SURFACE_COLUMNS.to_vec();
    cols.push(name);
    let mut table = Table::new(&cols);
    table.rows = blocks.into_iter().flatten().collect();
    Ok(table)
}
