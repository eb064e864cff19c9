use serde::{Deserialize, Serialize};

use super::{solve_terminal_value, Grid, SolverConfig};
use crate::error::{Error, Result};
use crate::exact::SolutionField;
use crate::model::{ModelKind, ModelParams};

/// Which step size the ladder refines, and so which `h` enters the orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceAxis {
    Space,
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderLevel {
    pub nx: usize,
    pub nt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceLevel {
    pub nx: usize,
    pub nt: usize,
    pub h: f64,
    /// Max-norm error at `t = 0`.
    pub error: f64,
    /// `error` over the largest `|u|` of the surface.
    pub relative_error: f64,
    /// Observed order against the previous level; `None` on the first level
    /// and when either error is below the noise floor.
    pub order: Option<f64>,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub axis: ConvergenceAxis,
    pub noise_floor: f64,
    pub levels: Vec<ConvergenceLevel>,
}

impl ConvergenceTable {
    pub fn orders(&self) -> Vec<Option<f64>> {
        self.levels.iter().skip(1).map(|l| l.order).collect()
    }

    pub fn finest(&self) -> Option<&ConvergenceLevel> {
        self.levels.last()
    }
}

/// Solves from `reference(·, T)` on every level of `ladder` and compares with
/// `reference(·, 0)`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    kind: &ModelKind,
    params: &ModelParams,
    reference: &dyn SolutionField,
    s_range: (f64, f64),
    t_terminal: f64,
    ladder: &[LadderLevel],
    axis: ConvergenceAxis,
    config: &SolverConfig,
) -> Result<ConvergenceTable> {
    if ladder.is_empty() {
        return Err(Error::Invalid("refinement ladder is empty".into()));
    }
    let payoff = |s: f64| reference.value(s, t_terminal).unwrap_or(f64::NAN);
    // errors this close to the Newton tolerance carry no order information
    let noise_floor = 100.0 * config.newton.tol;
    let mut levels: Vec<ConvergenceLevel> = Vec::with_capacity(ladder.len());
    for lvl in ladder {
        let grid = Grid::uniform(s_range.0, s_range.1, lvl.nx, t_terminal, lvl.nt)?;
        let surf = solve_terminal_value(kind, params, &payoff, &grid, config, Some(reference))?;
        let mut error: f64 = 0.0;
        for (&s, &u) in grid.s().iter().zip(surf.initial()) {
            error = error.max((u - reference.value(s, 0.0)?).abs());
        }
        let h = match axis {
            ConvergenceAxis::Space => grid.h(),
            ConvergenceAxis::Time => grid.dt(),
        };
        let order = levels.last().and_then(|prev| {
            (prev.error > noise_floor && error > noise_floor && prev.h != h)
                .then(|| (prev.error / error).ln() / (prev.h / h).ln())
        });
        let scale = surf.max_abs();
        levels.push(ConvergenceLevel {
            nx: lvl.nx,
            nt: lvl.nt,
            h,
            error,
            relative_error: if scale > 0.0 { error / scale } else { error },
            order,
            newton_iterations: surf.meta.total_iterations,
        });
    }
    Ok(ConvergenceTable {
        axis,
        noise_floor,
        levels,
    })
}
