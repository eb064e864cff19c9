//! Implicit terminal-value solver on a uniform log-price grid.
//!
//! Nodes are uniform in `x = log S`. `u_S` and `u_SS` use three-point
//! weights on the resulting geometric `S` nodes, which keeps the scheme
//! second order and exact on functions linear in `S`. Time runs
//! backwards from `T` in `τ = T - t`, each step solving
//!
//! ```text
//! u_i - u_i^n - Δτ [θ G_i(u) + (1 - θ) G_i(u^n)] = 0
//! ```
//!
//! by damped Newton with the analytic tridiagonal Jacobian.

mod convergence;

pub use convergence::{
    convergence_study, ConvergenceAxis, ConvergenceLevel, ConvergenceTable, LadderLevel,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::SolutionField;
use crate::model::{diffusion, ModelKind, ModelParams, DEFAULT_GUARD};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    x: Vec<f64>,
    s: Vec<f64>,
    /// Time nodes from `T` down to `0`.
    t: Vec<f64>,
}

impl Grid {
    /// `nx` nodes uniform in `log S` over `[s_min, s_max]`, `nt` steps from
    /// `t_terminal` to `0`.
    pub fn uniform(s_min: f64, s_max: f64, nx: usize, t_terminal: f64, nt: usize) -> Result<Self> {
        if !(s_min > 0.0 && s_max > s_min && s_max.is_finite()) {
            return Err(Error::Invalid(format!(
                "price range must satisfy 0 < s_min < s_max, got [{s_min}, {s_max}]"
            )));
        }
        if nx < 5 {
            return Err(Error::Invalid(format!(
                "need at least 3 interior nodes, got nx = {nx}"
            )));
        }
        if !(t_terminal > 0.0 && t_terminal.is_finite()) || nt == 0 {
            return Err(Error::Invalid(format!(
                "need T > 0 and at least one time step, got T = {t_terminal}, nt = {nt}"
            )));
        }
        let (x0, x1) = (s_min.ln(), s_max.ln());
        let h = (x1 - x0) / (nx - 1) as f64;
        let x: Vec<f64> = (0..nx)
            .map(|i| if i == nx - 1 { x1 } else { x0 + h * i as f64 })
            .collect();
        let mut s: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        s[0] = s_min;
        s[nx - 1] = s_max;
        let dt = t_terminal / nt as f64;
        let t = (0..=nt)
            .map(|j| {
                if j == nt {
                    0.0
                } else {
                    t_terminal - dt * j as f64
                }
            })
            .collect();
        Ok(Self { x, s, t })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn nt(&self) -> usize {
        self.t.len() - 1
    }

    pub fn h(&self) -> f64 {
        (self.x[self.nx() - 1] - self.x[0]) / (self.nx() - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.t[0] / self.nt() as f64
    }

    pub fn terminal_time(&self) -> f64 {
        self.t[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    BackwardEuler,
    /// Crank-Nicolson after `startup` backward-Euler steps.
    Trapezoidal {
        startup: usize,
    },
}

impl Scheme {
    fn theta(self, step: usize) -> f64 {
        match self {
            Scheme::BackwardEuler => 1.0,
            Scheme::Trapezoidal { startup } if step < startup => 1.0,
            Scheme::Trapezoidal { .. } => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPolicy {
    /// Edge values taken from the reference solution at each time level.
    DirichletFromReference,
    /// Edge values extrapolated linearly in `S` from the two nearest nodes.
    LinearExtrapolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonControls {
    pub max_iters: usize,
    /// Absolute tolerance on the max-norm of the step residual.
    pub tol: f64,
    /// Step halvings allowed per iteration before giving up.
    pub max_halvings: usize,
}

impl Default for NewtonControls {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-11,
            max_halvings: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub newton: NewtonControls,
    pub guard: f64,
    pub boundary: BoundaryPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Trapezoidal { startup: 2 },
            newton: NewtonControls::default(),
            guard: DEFAULT_GUARD,
            boundary: BoundaryPolicy::LinearExtrapolation,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let n = &self.newton;
        if !(n.tol > 0.0) || n.max_iters == 0 {
            return Err(Error::Invalid(
                "Newton tolerance and iteration cap must be positive".into(),
            ));
        }
        if !(self.guard >= 1e-12) {
            return Err(Error::Invalid(format!(
                "guard must be at least 1e-12, got {}",
                self.guard
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepStats {
    pub t: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceMeta {
    pub model: String,
    pub params: ModelParams,
    pub config: SolverConfig,
    pub steps: Vec<StepStats>,
    pub total_iterations: usize,
    /// Wall-clock time of the march, filled in by callers that measure it.
    pub elapsed_ms: Option<f64>,
    /// Set when the terminal data is not smooth enough for the scheme's
    /// nominal order to apply.
    pub no_convergence_claim: bool,
}

/// `u` on every time level of a grid, row `j` at `grid.t()[j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSurface {
    pub grid: Grid,
    pub u: Vec<Vec<f64>>,
    pub delta: Option<Vec<Vec<f64>>>,
    /// Final Newton residual per node and level (zero on the terminal level
    /// and at Dirichlet edges).
    pub residual: Option<Vec<Vec<f64>>>,
    pub meta: SurfaceMeta,
}

impl SolutionSurface {
    /// The `t = 0` level.
    pub fn initial(&self) -> &[f64] {
        self.u.last().unwrap()
    }

    pub fn with_delta(mut self) -> Self {
        self.delta = Some(discrete_delta(&self));
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.u
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `∂u/∂S` on every level: three-point differences on the nonuniform `S`
/// nodes, one-sided at the edges. Exact for quadratics in `S`.
pub fn discrete_delta(surface: &SolutionSurface) -> Vec<Vec<f64>> {
    let s = surface.grid.s();
    surface.u.iter().map(|row| delta_row(s, row)).collect()
}

fn delta_row(s: &[f64], u: &[f64]) -> Vec<f64> {
    let n = s.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (hl, hr) = (s[i] - s[i - 1], s[i + 1] - s[i]);
        d[i] = -hr / (hl * (hl + hr)) * u[i - 1]
            + (hr - hl) / (hl * hr) * u[i]
            + hl / (hr * (hl + hr)) * u[i + 1];
    }
    let (h1, h2) = (s[1] - s[0], s[2] - s[1]);
    d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * u[0] + (h1 + h2) / (h1 * h2) * u[1]
        - h1 / (h2 * (h1 + h2)) * u[2];
    let (h1, h2) = (s[n - 1] - s[n - 2], s[n - 2] - s[n - 3]);
    d[n - 1] = (2.0 * h1 + h2) / (h1 * (h1 + h2)) * u[n - 1] - (h1 + h2) / (h1 * h2) * u[n - 2]
        + h1 / (h2 * (h1 + h2)) * u[n - 3];
    d
}

/// Per-node diffusion with its stencil derivatives.
struct NodeTerm {
    g: f64,
    dl: f64,
    dc: f64,
    du: f64,
    denominator: Option<f64>,
}

/// Three-point weights `(w_{i-1}, w_i, w_{i+1})` for `u_S` and `u_SS` on the
/// nonuniform `S` nodes.
struct Stencil {
    first: [f64; 3],
    second: [f64; 3],
}

impl Stencil {
    fn at(s: &[f64], i: usize) -> Self {
        let (hl, hr) = (s[i] - s[i - 1], s[i + 1] - s[i]);
        let w = hl + hr;
        Self {
            first: [-hr / (hl * w), (hr - hl) / (hl * hr), hl / (hr * w)],
            second: [2.0 / (hl * w), -2.0 / (hl * hr), 2.0 / (hr * w)],
        }
    }
}

struct Operator<'a> {
    kind: &'a ModelKind,
    params: &'a ModelParams,
    s: &'a [f64],
    stencils: Vec<Stencil>,
    guard: f64,
}

impl Operator<'_> {
    fn node(&self, i: usize, u: &[f64]) -> Result<NodeTerm> {
        let st = &self.stencils[i - 1];
        let dot = |w: &[f64; 3]| w[0] * u[i - 1] + w[1] * u[i] + w[2] * u[i + 1];
        let (u_s, u_ss) = (dot(&st.first), dot(&st.second));
        // a breach is only reported with step/node context by the caller
        let d = diffusion(self.kind, self.params, self.s[i], u_s, u_ss, 0.0)?;
        let part = |j: usize| d.d_u_s * st.first[j] + d.d_u_ss * st.second[j];
        Ok(NodeTerm {
            g: d.value,
            dl: part(0),
            dc: part(1),
            du: part(2),
            denominator: d.denominator,
        })
    }
}

/// Boundary values as affine functions of the interior: `u_0 = α0 u_1 + β0 u_2`
/// (and mirrored on the right), or fixed values.
#[derive(Clone, Copy)]
enum Edges {
    Fixed(f64, f64),
    Extrapolated { a0: f64, b0: f64, a1: f64, b1: f64 },
}

impl Edges {
    fn extrapolated(s: &[f64]) -> Self {
        let n = s.len();
        let w0 = (s[0] - s[1]) / (s[2] - s[1]);
        let w1 = (s[n - 1] - s[n - 2]) / (s[n - 3] - s[n - 2]);
        Edges::Extrapolated {
            a0: 1.0 - w0,
            b0: w0,
            a1: 1.0 - w1,
            b1: w1,
        }
    }

    fn apply(&self, u: &mut [f64]) {
        let n = u.len();
        match *self {
            Edges::Fixed(l, r) => {
                u[0] = l;
                u[n - 1] = r;
            }
            Edges::Extrapolated { a0, b0, a1, b1 } => {
                u[0] = a0 * u[1] + b0 * u[2];
                u[n - 1] = a1 * u[n - 2] + b1 * u[n - 3];
            }
        }
    }
}

/// Thomas algorithm for `lo[i] x[i-1] + di[i] x[i] + up[i] x[i+1] = rhs[i]`.
fn thomas(lo: &[f64], di: &[f64], up: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = di.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut m = di[0];
    if m == 0.0 {
        return None;
    }
    c[0] = up[0] / m;
    d[0] = rhs[0] / m;
    for i in 1..n {
        m = di[i] - lo[i] * c[i - 1];
        if m == 0.0 || !m.is_finite() {
            return None;
        }
        c[i] = up[i] / m;
        d[i] = (rhs[i] - lo[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Backward march from `u(T, S) = payoff(S)` to `t = 0`.
///
/// `reference` supplies edge values for
/// [`BoundaryPolicy::DirichletFromReference`]; it is ignored otherwise.
pub fn solve_terminal_value(
    kind: &ModelKind,
    params: &ModelParams,
    payoff: &dyn Fn(f64) -> f64,
    grid: &Grid,
    config: &SolverConfig,
    reference: Option<&dyn SolutionField>,
) -> Result<SolutionSurface> {
    config.validate()?;
    if config.boundary == BoundaryPolicy::DirichletFromReference && reference.is_none() {
        return Err(Error::Invalid(
            "dirichlet-from-reference boundaries need a reference solution".into(),
        ));
    }
    let s = grid.s();
    let n = grid.nx();
    let m = n - 2;
    let op = Operator {
        kind,
        params,
        s,
        stencils: (1..n - 1).map(|i| Stencil::at(s, i)).collect(),
        guard: config.guard,
    };
    let dt = grid.dt();

    let terminal: Vec<f64> = s.iter().map(|&x| payoff(x)).collect();
    if let Some(i) = terminal.iter().position(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!(
            "payoff is not finite at S = {}",
            s[i]
        )));
    }

    let edges_at = |t: f64| -> Result<Edges> {
        match config.boundary {
            BoundaryPolicy::DirichletFromReference => {
                let r = reference.expect("checked above");
                Ok(Edges::Fixed(r.value(s[0], t)?, r.value(s[n - 1], t)?))
            }
            BoundaryPolicy::LinearExtrapolation => Ok(Edges::extrapolated(s)),
        }
    };

    let breach = |step: usize, i: usize, value: f64| Error::DenominatorBreach {
        step,
        node: i,
        s: s[i],
        value,
    };
    // evaluates all interior terms, mapping validity failures to breaches
    let terms = |u: &[f64], step: usize| -> Result<Vec<NodeTerm>> {
        (1..n - 1)
            .map(|i| {
                let t = op.node(i, u).map_err(|e| match e {
                    Error::DegenerateDenominator { value, .. } => breach(step, i, value),
                    e => e,
                })?;
                if let Some(d) = t.denominator {
                    if d.abs() < op.guard {
                        return Err(breach(step, i, d));
                    }
                }
                Ok(t)
            })
            .collect()
    };

    let mut levels = vec![terminal];
    let mut residual_layers = vec![vec![0.0; n]];
    let mut stats = Vec::with_capacity(grid.nt());
    let mut total_iterations = 0;

    for step in 0..grid.nt() {
        let t_new = grid.t()[step + 1];
        let theta = config.scheme.theta(step);
        let un = levels.last().unwrap().clone();
        let old = terms(&un, step)?;
        let signs: Vec<f64> = old
            .iter()
            .map(|t| t.denominator.map_or(1.0, f64::signum))
            .collect();
        let explicit: Vec<f64> = (0..m)
            .map(|k| un[k + 1] + dt * (1.0 - theta) * old[k].g)
            .collect();

        let edges = edges_at(t_new)?;
        // spread the edge increments linearly so the first iterate does not
        // carry a spurious curvature next to the boundary
        let mut u = un.clone();
        if let Edges::Fixed(l, r) = edges {
            let (dl, dr) = (l - un[0], r - un[n - 1]);
            for (i, v) in u.iter_mut().enumerate() {
                let w = i as f64 / (n - 1) as f64;
                *v += dl * (1.0 - w) + dr * w;
            }
        }
        edges.apply(&mut u);

        let residual_of = |u: &[f64], cur: &[NodeTerm]| -> Vec<f64> {
            (0..m)
                .map(|k| u[k + 1] - explicit[k] - dt * theta * cur[k].g)
                .collect()
        };
        let sign_ok = |cur: &[NodeTerm]| -> Option<(usize, f64)> {
            cur.iter()
                .enumerate()
                .find_map(|(k, t)| match t.denominator {
                    Some(d) if d.signum() != signs[k] || d.abs() < op.guard => Some((k + 1, d)),
                    _ => None,
                })
        };

        let mut cur = terms(&u, step)?;
        if let Some((i, d)) = sign_ok(&cur) {
            return Err(breach(step, i, d));
        }
        let mut r = residual_of(&u, &cur);
        let mut norm = max_abs(&r);
        let mut iterations = 0;

        while norm > config.newton.tol {
            if iterations == config.newton.max_iters {
                return Err(Error::NewtonDivergence {
                    step,
                    iterations,
                    residual: norm,
                    iterate: u,
                });
            }
            iterations += 1;
            let mut lo = vec![0.0; m];
            let mut di = vec![0.0; m];
            let mut up = vec![0.0; m];
            for k in 0..m {
                let c = dt * theta;
                lo[k] = -c * cur[k].dl;
                di[k] = 1.0 - c * cur[k].dc;
                up[k] = -c * cur[k].du;
            }
            if let Edges::Extrapolated { a0, b0, a1, b1 } = edges {
                // u_0 and u_{n-1} depend on the first two interior unknowns
                di[0] += lo[0] * a0;
                up[0] += lo[0] * b0;
                di[m - 1] += up[m - 1] * a1;
                lo[m - 1] += up[m - 1] * b1;
            }
            let neg: Vec<f64> = r.iter().map(|v| -v).collect();
            let delta = thomas(&lo, &di, &up, &neg).ok_or_else(|| Error::NewtonDivergence {
                step,
                iterations,
                residual: norm,
                iterate: u.clone(),
            })?;

            let mut lambda = 1.0;
            let mut last_breach = None;
            let mut accepted = false;
            for _ in 0..=config.newton.max_halvings {
                let mut trial = u.clone();
                for k in 0..m {
                    trial[k + 1] += lambda * delta[k];
                }
                edges.apply(&mut trial);
                match terms(&trial, step) {
                    Ok(t) => {
                        if let Some((i, d)) = sign_ok(&t) {
                            last_breach = Some((i, d));
                        } else {
                            let tr = residual_of(&trial, &t);
                            let tn = max_abs(&tr);
                            if tn < norm || tn <= config.newton.tol {
                                u = trial;
                                cur = t;
                                r = tr;
                                norm = tn;
                                accepted = true;
                                break;
                            }
                        }
                    }
                    Err(Error::DenominatorBreach { node, value, .. }) => {
                        last_breach = Some((node, value));
                    }
                    Err(e) => return Err(e),
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(match last_breach {
                    Some((i, d)) => breach(step, i, d),
                    None => Error::NewtonDivergence {
                        step,
                        iterations,
                        residual: norm,
                        iterate: u,
                    },
                });
            }
        }

        total_iterations += iterations;
        stats.push(StepStats {
            t: t_new,
            iterations,
            residual: norm,
        });
        let mut layer = vec![0.0; n];
        layer[1..n - 1].copy_from_slice(&r);
        residual_layers.push(layer);
        levels.push(u);
    }

    Ok(SolutionSurface {
        grid: grid.clone(),
        u: levels,
        delta: None,
        residual: Some(residual_layers),
        meta: SurfaceMeta {
            model: kind.name().to_string(),
            params: *params,
            config: *config,
            steps: stats,
            total_iterations,
            elapsed_ms: None,
            no_convergence_claim: false,
        },
    })
}
