//! Invariant solutions of the reduced-form SDE equation with `k = 0`.
//!
//! Every family has the form `u(S, t) = S v(z) + d2` with
//! `z = log S - σ² t / 8`. The nonlinear families are evaluated through the
//! uniformizing root `p` of `(p + 1)² (p - 2) = 2c e^{-3z/2}`:
//!
//! ```text
//! v_z = (p² - 1) / b
//! v   = K - (p² + 2 log|p - 2|) / b + d
//! ```
//!
//! The root of each family is parametrized with trigonometric or hyperbolic
//! functions of the distance `z - z*` to the boundary `z* = -(2/3) log(2/|c|)`,
//! so that `p ± 1` and `p - 2` never suffer cancellation.

pub mod asymptotic;
pub mod closed_form;
pub mod symmetry;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cubic::{cubic_residual, Branch};
use crate::error::{Error, Result};
use crate::model::{Jet2, ModelParams};

/// Slack allowed when a point sits on a family boundary up to rounding.
const BOUNDARY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    R,
    U1,
    U2,
    /// Both charts of the third family; the chart is chosen from `z`.
    U3,
    U3Chart1,
    U3Chart2,
    TrivialLinear,
    LogPlus,
    LogMinus,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 9] = [
        FamilyKind::R,
        FamilyKind::U1,
        FamilyKind::U2,
        FamilyKind::U3,
        FamilyKind::U3Chart1,
        FamilyKind::U3Chart2,
        FamilyKind::TrivialLinear,
        FamilyKind::LogPlus,
        FamilyKind::LogMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::R => "r",
            FamilyKind::U1 => "u1",
            FamilyKind::U2 => "u2",
            FamilyKind::U3 => "u3",
            FamilyKind::U3Chart1 => "u3-chart1",
            FamilyKind::U3Chart2 => "u3-chart2",
            FamilyKind::TrivialLinear => "trivial-linear",
            FamilyKind::LogPlus => "log-plus",
            FamilyKind::LogMinus => "log-minus",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        let n = name.to_ascii_lowercase().replace('_', "-");
        let kind = match n.as_str() {
            "r" => FamilyKind::R,
            "u1" | "1" => FamilyKind::U1,
            "u2" | "2" => FamilyKind::U2,
            "u3" | "3" => FamilyKind::U3,
            "u3-chart1" | "u3-1" | "u31" => FamilyKind::U3Chart1,
            "u3-chart2" | "u3-2" | "u32" => FamilyKind::U3Chart2,
            "trivial-linear" | "linear" | "trivial" => FamilyKind::TrivialLinear,
            "log-plus" => FamilyKind::LogPlus,
            "log-minus" => FamilyKind::LogMinus,
            _ => {
                return Err(Error::Invalid(format!(
                    "unknown family '{name}' (expected one of r, u1, u2, u3, u3-chart1, u3-chart2, trivial-linear, log-plus, log-minus)"
                )))
            }
        };
        Ok(kind)
    }

    /// Families built on the uniformizing cubic (they need `c ≠ 0`).
    pub fn uses_cubic(self) -> bool {
        !matches!(
            self,
            FamilyKind::TrivialLinear | FamilyKind::LogPlus | FamilyKind::LogMinus
        )
    }

    /// Families whose closed form divides by `b`.
    pub fn needs_b(self) -> bool {
        self != FamilyKind::TrivialLinear
    }

    /// Required sign of `c`, if any.
    pub fn c_sign(self) -> Option<f64> {
        match self {
            FamilyKind::R => Some(1.0),
            FamilyKind::U1
            | FamilyKind::U2
            | FamilyKind::U3
            | FamilyKind::U3Chart1
            | FamilyKind::U3Chart2 => Some(-1.0),
            _ => None,
        }
    }
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One invariant solution: family tag plus constants `c`, `d`, `d2`.
///
/// `c` is signed: `R` needs `c > 0`, the `U` families need `c < 0`. The
/// trivial and logarithmic families ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionFamily {
    kind: FamilyKind,
    c: f64,
    d: f64,
    d2: f64,
}

impl SolutionFamily {
    pub fn new(kind: FamilyKind, c: f64, d: f64, d2: f64) -> Result<Self> {
        if !(c.is_finite() && d.is_finite() && d2.is_finite()) {
            return Err(Error::Invalid("c, d and d2 must be finite".into()));
        }
        if let Some(sign) = kind.c_sign() {
            if c == 0.0 {
                return Err(Error::ZeroC);
            }
            if c.signum() != sign {
                return Err(Error::Invalid(format!(
                    "family {kind} requires c {} 0, got c = {c}",
                    if sign > 0.0 { ">" } else { "<" }
                )));
            }
        }
        Ok(Self { kind, c, d, d2 })
    }

    /// Builds a family from `|c|`, applying the sign the family requires.
    pub fn with_abs_c(kind: FamilyKind, abs_c: f64, d: f64, d2: f64) -> Result<Self> {
        let c = kind.c_sign().unwrap_or(1.0) * abs_c.abs();
        Self::new(kind, c, d, d2)
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }

    /// Same family with `d = d2 = 0`.
    pub fn bare(&self) -> Self {
        Self {
            d: 0.0,
            d2: 0.0,
            ..*self
        }
    }

    /// Domain boundary `z* = -(2/3) log(2/|c|)` of the `c < 0` families.
    pub fn z_star(&self) -> Option<f64> {
        (self.c < 0.0 && self.kind.uses_cubic()).then(|| z_star(self.c))
    }

    /// Concrete chart of `U3` at `z`; other kinds are returned unchanged.
    pub fn chart_at(&self, z: f64) -> FamilyKind {
        match self.kind {
            FamilyKind::U3 if z < z_star(self.c) => FamilyKind::U3Chart1,
            FamilyKind::U3 => FamilyKind::U3Chart2,
            k => k,
        }
    }
}

/// `z* = -(2/3) log(2/|c|)`.
pub fn z_star(c: f64) -> f64 {
    -(2.0 / 3.0) * (2.0 / c.abs()).ln()
}

/// `S` on the boundary curve `(|c|/2)^{2/3} e^{σ² t / 8}`.
pub fn boundary_price(c: f64, params: &ModelParams, t: f64) -> f64 {
    (c.abs() / 2.0).powf(2.0 / 3.0) * (params.sigma().powi(2) * t / 8.0).exp()
}

/// `(S, t)` together with the invariant coordinate and, for the cubic
/// families, the uniformizing root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantPoint {
    pub s: f64,
    pub t: f64,
    pub z: f64,
    pub p: Option<f64>,
}

/// `z = log S - σ² t / 8`.
pub fn to_invariant(s: f64, t: f64, params: &ModelParams) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::NonPositivePrice(s));
    }
    Ok(s.ln() - params.sigma().powi(2) * t / 8.0)
}

pub fn invariant_point(
    family: &SolutionFamily,
    s: f64,
    t: f64,
    params: &ModelParams,
) -> Result<InvariantPoint> {
    let z = to_invariant(s, t, params)?;
    let p = if family.kind.uses_cubic() {
        Some(family_root(family, z)?.p)
    } else {
        None
    };
    Ok(InvariantPoint { s, t, z, p })
}

/// Uniformizing root of a family at `z` with the differences that enter the
/// potential and its derivatives, each computed without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyRoot {
    pub p: f64,
    pub p_plus_1: f64,
    pub p_minus_1: f64,
    pub p_minus_2: f64,
    /// `log|p - 2|`.
    pub log_gap: f64,
}

impl FamilyRoot {
    /// Residual of the plus cubic, scaled like [`cubic_residual`].
    pub fn residual(&self, z: f64, c: f64) -> f64 {
        cubic_residual(self.p, z, c, Branch::Plus)
    }
}

fn check_domain(kind: FamilyKind, z: f64, c: f64) -> Result<f64> {
    let zs = z_star(c);
    let delta = z - zs;
    let outside = match kind {
        FamilyKind::U1 | FamilyKind::U2 | FamilyKind::U3Chart2 => delta < -BOUNDARY_SLACK,
        FamilyKind::U3Chart1 => delta > BOUNDARY_SLACK,
        _ => false,
    };
    if outside || !z.is_finite() {
        return Err(Error::OutOfDomain { z, boundary: zs });
    }
    Ok(delta)
}

/// Uniformizing root for the family at `z`.
pub fn family_root(family: &SolutionFamily, z: f64) -> Result<FamilyRoot> {
    let c = family.c;
    let kind = family.chart_at(z);
    if !kind.uses_cubic() {
        return Err(Error::Unsupported(format!(
            "family {kind} has no uniformizing root"
        )));
    }
    if !z.is_finite() {
        return Err(Error::Invalid(format!("non-finite z = {z}")));
    }

    if kind == FamilyKind::R {
        // p = 2 cosh(L/3), cosh L = 1 + w
        let w = c * (-1.5 * z).exp();
        let l = if w.is_finite() {
            2.0 * (0.5 * w).sqrt().asinh()
        } else {
            (2.0 * c).ln() - 1.5 * z
        };
        let p = 2.0 * (l / 3.0).cosh();
        let sh = (l / 6.0).sinh();
        return Ok(FamilyRoot {
            p,
            p_plus_1: p + 1.0,
            p_minus_1: p - 1.0,
            p_minus_2: 4.0 * sh * sh,
            log_gap: 2.0 * (2.0 * sh).ln(),
        });
    }

    let delta = check_domain(kind, z, c)?;
    if kind == FamilyKind::U3Chart1 {
        // |c| e^{-3z/2} = 2 e^{-3δ/2} > 2; p = -2 cosh(θ/3), θ = arccosh(X - 1)
        let ex = (-1.5 * delta.min(0.0)).exp_m1();
        let theta = if ex.is_finite() {
            2.0 * ex.sqrt().asinh()
        } else {
            4f64.ln() - 1.5 * delta
        };
        let ch = (theta / 3.0).cosh();
        let p = -2.0 * ch;
        return Ok(FamilyRoot {
            p,
            p_plus_1: 1.0 - 2.0 * ch,
            p_minus_1: -1.0 - 2.0 * ch,
            p_minus_2: -2.0 - 2.0 * ch,
            log_gap: (2.0 + 2.0 * ch).ln(),
        });
    }

    // three-root region: X = 2 e^{-3δ/2} ≤ 2, φ = arccos(1 - X), ψ = π - φ
    let delta = delta.max(0.0);
    let phi = 2.0 * (-0.75 * delta).exp().asin();
    let psi = 2.0 * (-(-1.5 * delta).exp_m1()).sqrt().asin();
    let s6 = (phi / 6.0).sin();
    let root = match kind {
        FamilyKind::U1 => {
            let p = 2.0 * (phi / 3.0).cos();
            FamilyRoot {
                p,
                p_plus_1: p + 1.0,
                p_minus_1: 4.0 * ((phi + PI) / 6.0).sin() * (psi / 6.0).sin(),
                p_minus_2: -4.0 * s6 * s6,
                log_gap: 2.0 * (2.0 * s6).ln(),
            }
        }
        FamilyKind::U2 => {
            let p = 2.0 * ((phi + 4.0 * PI) / 3.0).cos();
            FamilyRoot {
                p,
                p_plus_1: -4.0 * (4.0 * PI / 3.0 + phi / 6.0).sin() * s6,
                p_minus_1: 4.0 * ((phi + 9.0 * PI) / 6.0).sin() * (psi / 6.0).sin(),
                p_minus_2: p - 2.0,
                log_gap: (2.0 - p).ln(),
            }
        }
        FamilyKind::U3Chart2 => {
            let p = 2.0 * ((phi + 2.0 * PI) / 3.0).cos();
            FamilyRoot {
                p,
                p_plus_1: -4.0 * (2.0 * PI / 3.0 + phi / 6.0).sin() * s6,
                p_minus_1: p - 1.0,
                p_minus_2: p - 2.0,
                log_gap: (2.0 - p).ln(),
            }
        }
        _ => unreachable!("chart resolved above"),
    };
    Ok(root)
}

/// `b·K` for the potential `v = K - (p² + 2 log|p - 2|)/b`.
fn scaled_potential_constant(c: f64) -> f64 {
    if c > 0.0 {
        2.0
    } else {
        2.0 - (2.0 / 3.0) * (2.0 * c.abs()).ln() + (16.0 / 3.0) * 2f64.ln()
    }
}

/// `v`, `v_z`, `v_zz` of a family at one `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VJet {
    pub z: f64,
    pub v: f64,
    pub v_z: f64,
    pub v_zz: f64,
    pub p: Option<f64>,
}

fn check_params(family: &SolutionFamily, params: &ModelParams) -> Result<f64> {
    if params.k() != 0 {
        return Err(Error::Unsupported(
            "closed-form solutions are available for k = 0 only".into(),
        ));
    }
    let b = params.b();
    if family.kind.needs_b() && b == 0.0 {
        return Err(Error::ZeroB);
    }
    Ok(b)
}

/// `v(z)` and its first two derivatives (including `d`).
pub fn eval_v_jet(family: &SolutionFamily, z: f64, params: &ModelParams) -> Result<VJet> {
    let b = check_params(family, params)?;
    let d = family.d;
    let jet = |v: f64, v_z: f64, v_zz: f64, p| VJet { z, v, v_z, v_zz, p };
    let out = match family.kind {
        FamilyKind::TrivialLinear => jet(d, 0.0, 0.0, None),
        FamilyKind::LogPlus => jet(3.0 * z / b + d, 3.0 / b, 0.0, None),
        FamilyKind::LogMinus => jet(-z / b + d, -1.0 / b, 0.0, None),
        _ => {
            let r = family_root(family, z)?;
            let p = r.p;
            let v = (scaled_potential_constant(family.c) - (p * p + 2.0 * r.log_gap)) / b + d;
            let v_z = r.p_minus_1 * r.p_plus_1 / b;
            let v_zz = -p * r.p_plus_1 * r.p_minus_2 / (b * r.p_minus_1);
            jet(v, v_z, v_zz, Some(p))
        }
    };
    if !out.v.is_finite() {
        return Err(Error::Invalid(format!(
            "{} evaluates to a non-finite value at z = {z}",
            family.kind
        )));
    }
    Ok(out)
}

/// `v(z)` including the constant `d`.
pub fn eval_v(family: &SolutionFamily, z: f64, params: &ModelParams) -> Result<f64> {
    Ok(eval_v_jet(family, z, params)?.v)
}

/// Residual `v_z - 4 (v_zz + v_z) / (1 - b (v_zz + v_z))²` of the reduced ODE.
pub fn reduced_ode_residual(jet: &VJet, b: f64) -> f64 {
    let s = jet.v_z + jet.v_zz;
    if s.is_infinite() {
        return jet.v_z;
    }
    let den = 1.0 - b * s;
    jet.v_z - 4.0 * s / (den * den)
}

/// `u(S, t) = S v(z) + d2`.
pub fn eval_u(family: &SolutionFamily, s: f64, t: f64, params: &ModelParams) -> Result<f64> {
    let z = to_invariant(s, t, params)?;
    Ok(s * eval_v(family, z, params)? + family.d2)
}

/// `Δ = ∂u/∂S = v + v_z`.
pub fn eval_delta(family: &SolutionFamily, s: f64, t: f64, params: &ModelParams) -> Result<f64> {
    let z = to_invariant(s, t, params)?;
    let j = eval_v_jet(family, z, params)?;
    Ok(j.v + j.v_z)
}

/// Analytic 2-jet of `u` at `(S, t)`.
pub fn jet(family: &SolutionFamily, s: f64, t: f64, params: &ModelParams) -> Result<Jet2> {
    let z = to_invariant(s, t, params)?;
    let j = eval_v_jet(family, z, params)?;
    Ok(Jet2 {
        s,
        t,
        u: s * j.v + family.d2,
        u_t: -s * j.v_z * params.sigma().powi(2) / 8.0,
        u_s: j.v + j.v_z,
        u_ss: (j.v_z + j.v_zz) / s,
    })
}

/// Interval of admissible prices at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceDomain {
    pub lower: f64,
    pub upper: f64,
    pub lower_closed: bool,
}

impl PriceDomain {
    pub fn contains(&self, s: f64) -> bool {
        let above = if self.lower_closed {
            s >= self.lower
        } else {
            s > self.lower
        };
        above && s < self.upper
    }
}

pub fn domain_of(family: &SolutionFamily, params: &ModelParams, t: f64) -> PriceDomain {
    let full = PriceDomain {
        lower: 0.0,
        upper: f64::INFINITY,
        lower_closed: false,
    };
    match family.kind {
        FamilyKind::U1 | FamilyKind::U2 | FamilyKind::U3Chart2 => PriceDomain {
            lower: boundary_price(family.c, params, t),
            lower_closed: true,
            ..full
        },
        FamilyKind::U3Chart1 => PriceDomain {
            upper: boundary_price(family.c, params, t),
            ..full
        },
        _ => full,
    }
}

/// Anything that can produce a 2-jet of a candidate solution.
pub trait SolutionField: Send + Sync {
    fn jet(&self, s: f64, t: f64) -> Result<Jet2>;

    fn value(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.jet(s, t)?.u)
    }
}

/// A family bound to model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactSolution {
    pub family: SolutionFamily,
    pub params: ModelParams,
}

impl ExactSolution {
    pub fn new(family: SolutionFamily, params: ModelParams) -> Result<Self> {
        check_params(&family, &params)?;
        Ok(Self { family, params })
    }

    pub fn delta(&self, s: f64, t: f64) -> Result<f64> {
        eval_delta(&self.family, s, t, &self.params)
    }

    pub fn domain(&self, t: f64) -> PriceDomain {
        domain_of(&self.family, &self.params, t)
    }
}

impl SolutionField for ExactSolution {
    fn jet(&self, s: f64, t: f64) -> Result<Jet2> {
        jet(&self.family, s, t, &self.params)
    }

    fn value(&self, s: f64, t: f64) -> Result<f64> {
        eval_u(&self.family, s, t, &self.params)
    }
}
