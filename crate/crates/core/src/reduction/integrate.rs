//! Adaptive Dormand-Prince 5(4) integration of `y_z = f(y)` on one sheet.

use serde::Serialize;

use super::{rhs_f, ReductionParams};
use crate::cubic::Branch;
use crate::error::{Error, Result, SingularLine};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationControls {
    pub rtol: f64,
    pub atol: f64,
    /// Distance in `y` at which a singular line counts as reached.
    pub margin: f64,
    /// `|y|` beyond which the trajectory is treated as escaping to infinity.
    pub y_max: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for IntegrationControls {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            margin: 1e-6,
            y_max: 1e8,
            initial_step: 1e-3,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryEvent {
    pub line: SingularLine,
    pub z: f64,
    pub y: f64,
}

impl From<TrajectoryEvent> for Error {
    fn from(e: TrajectoryEvent) -> Self {
        Error::SingularEncounter {
            line: e.line,
            z: e.z,
            y: e.y,
        }
    }
}

/// Accepted steps of one integration. `z` is monotone in the direction of
/// integration; `event` is set when the run stopped at a singular line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YTrajectory {
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub branch: Branch,
    pub event: Option<TrajectoryEvent>,
}

impl YTrajectory {
    pub fn end(&self) -> (f64, f64) {
        (*self.z.last().unwrap(), *self.y.last().unwrap())
    }

    /// The trajectory, or the singular encounter that cut it short.
    pub fn completed(self) -> Result<Self> {
        match self.event {
            Some(e) => Err(e.into()),
            None => Ok(self),
        }
    }

    /// Cubic Hermite interpolation of `y` at `z` inside the covered range.
    pub fn interpolate(&self, z: f64, params: &ReductionParams) -> Option<f64> {
        let n = self.z.len();
        let dir = if n > 1 && self.z[n - 1] < self.z[0] {
            -1.0
        } else {
            1.0
        };
        let i =
            (1..n).find(|&i| dir * (self.z[i] - z) >= 0.0 && dir * (z - self.z[i - 1]) >= 0.0)?;
        let (z0, z1, y0, y1) = (self.z[i - 1], self.z[i], self.y[i - 1], self.y[i]);
        let f0 = rhs_f(y0, params, self.branch).ok()?;
        let f1 = rhs_f(y1, params, self.branch).ok()?;
        let h = z1 - z0;
        let s = (z - z0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Some(h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1)
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn near_line(y: f64, params: &ReductionParams, c: &IntegrationControls) -> Option<SingularLine> {
    if y.abs() <= c.margin {
        Some(SingularLine::Zero)
    } else if (y - params.branch_point()).abs() <= c.margin {
        Some(SingularLine::BranchPoint)
    } else if y.abs() >= c.y_max || !y.is_finite() {
        Some(SingularLine::Infinity)
    } else {
        None
    }
}

/// Which line a failed right-hand-side evaluation points at.
fn line_of_failure(e: &Error) -> SingularLine {
    match e {
        Error::SingularY => SingularLine::Zero,
        _ => SingularLine::BranchPoint,
    }
}

/// One Dormand-Prince step; `Err` carries the line whose neighbourhood a
/// stage evaluation fell into.
fn dp_step(y: f64, h: f64, params: &ReductionParams, branch: Branch) -> Result<(f64, f64)> {
    let mut k = [0.0; 7];
    for s in 0..7 {
        let ys = y + h * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
        k[s] = rhs_f(ys, params, branch)?;
        if !k[s].is_finite() {
            return Err(Error::SingularY);
        }
    }
    let y5 = y + h * (0..7).map(|j| B5[j] * k[j]).sum::<f64>();
    let y4 = y + h * (0..7).map(|j| B4[j] * k[j]).sum::<f64>();
    Ok((y5, (y5 - y4).abs()))
}

/// Integrates `y_z = f(y)` on `branch` from `(z0, y0)` towards `z1`.
///
/// The run stops early, with `event` set, when `y` comes within
/// `controls.margin` of `0` or `q/(4b)`, or exceeds `controls.y_max`.
pub fn integrate_y(
    y0: f64,
    z0: f64,
    z1: f64,
    params: &ReductionParams,
    branch: Branch,
    controls: &IntegrationControls,
) -> Result<YTrajectory> {
    if !(y0.is_finite() && z0.is_finite() && z1.is_finite()) {
        return Err(Error::Invalid("y0, z0 and z1 must be finite".into()));
    }
    if let Some(line) = near_line(y0, params, controls) {
        return Err(Error::SingularEncounter { line, z: z0, y: y0 });
    }
    rhs_f(y0, params, branch)?;

    let dir = if z1 >= z0 { 1.0 } else { -1.0 };
    let mut traj = YTrajectory {
        z: vec![z0],
        y: vec![y0],
        branch,
        event: None,
    };
    let (mut z, mut y) = (z0, y0);
    let mut h = controls.initial_step.min((z1 - z0).abs()).max(1e-12) * dir;
    let min_step = 1e-13 * (1.0 + z0.abs().max(z1.abs()));

    for _ in 0..controls.max_steps {
        if dir * (z1 - z) <= 0.0 {
            return Ok(traj);
        }
        if dir * (z + h - z1) > 0.0 {
            h = z1 - z;
        }
        match dp_step(y, h, params, branch) {
            Ok((y_new, err)) => {
                let tol = controls.atol + controls.rtol * y.abs().max(y_new.abs());
                if err <= tol {
                    z += h;
                    y = y_new;
                    traj.z.push(z);
                    traj.y.push(y);
                    if let Some(line) = near_line(y, params, controls) {
                        traj.event = Some(TrajectoryEvent { line, z, y });
                        return Ok(traj);
                    }
                }
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
                };
                h *= factor;
            }
            Err(e) => {
                if h.abs() <= min_step {
                    traj.event = Some(TrajectoryEvent {
                        line: line_of_failure(&e),
                        z,
                        y,
                    });
                    return Ok(traj);
                }
                h *= 0.25;
            }
        }
        if h.abs() < min_step {
            h = min_step * dir;
        }
    }
    Err(Error::Invalid(format!(
        "integration did not reach z = {z1} within {} steps",
        controls.max_steps
    )))
}
