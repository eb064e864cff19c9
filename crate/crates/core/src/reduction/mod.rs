//! Reduction of the `k`-family PDE to the ODE
//!
//! ```text
//! v_z + q (v_zz + ξ v_z) / (1 - b (v_zz + ξ v_z))² = 0
//! ```
//!
//! in `z = log S + a t`, `v = u S^{k-1}`, with `q = σ²/(2a)`, `ξ = (-1)^k`.
//! With `y = v_z` it becomes the quadratic-in-`y_z` relation `F(y, y_z) = 0`,
//! whose two root branches ([`Branch::Minus`], [`Branch::Plus`]) meet at the
//! branch point `y = q/(4b)`.

mod integrate;

pub use integrate::{integrate_y, IntegrationControls, TrajectoryEvent, YTrajectory};

use serde::Serialize;

use crate::cubic::Branch;
use crate::error::{Error, Result, SingularLine};
use crate::model::DEFAULT_GUARD;
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionParams {
    q: f64,
    a: Option<f64>,
    b: f64,
    xi: f64,
}

impl ReductionParams {
    pub fn new(q: f64, b: f64, xi: f64) -> Result<Self> {
        if !(q.is_finite() && b.is_finite()) {
            return Err(Error::Invalid("q and b must be finite".into()));
        }
        if b == 0.0 {
            return Err(Error::ZeroB);
        }
        if xi != 1.0 && xi != -1.0 {
            return Err(Error::Invalid(format!("xi must be +1 or -1, got {xi}")));
        }
        Ok(Self { q, a: None, b, xi })
    }

    /// From the similarity speed `a` of `z = log S + a t` and the exponent `k`.
    pub fn from_speed(sigma: f64, a: f64, b: f64, k: u8) -> Result<Self> {
        if a == 0.0 || !a.is_finite() {
            return Err(Error::Invalid(format!(
                "similarity speed a must be nonzero, got {a}"
            )));
        }
        if k > 1 {
            return Err(Error::Invalid(format!("k must be 0 or 1, got {k}")));
        }
        let xi = if k == 0 { 1.0 } else { -1.0 };
        let mut p = Self::new(sigma * sigma / (2.0 * a), b, xi)?;
        p.a = Some(a);
        Ok(p)
    }

    /// The `q = -4`, `ξ = 1` case of the exact families.
    pub fn invariant_case(b: f64) -> Result<Self> {
        Self::new(-4.0, b, 1.0)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn a(&self) -> Option<f64> {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// The branch point `q/(4b)`.
    pub fn branch_point(&self) -> f64 {
        self.q / (4.0 * self.b)
    }
}

/// Residual of the reduced ODE.
pub fn reduced_residual(v_z: f64, v_zz: f64, params: &ReductionParams) -> Result<f64> {
    let s = v_zz + params.xi * v_z;
    let den = 1.0 - params.b * s;
    if den.abs() < DEFAULT_GUARD || !den.is_finite() {
        return Err(Error::DegenerateDenominator {
            value: den,
            guard: DEFAULT_GUARD,
        });
    }
    Ok(v_z + params.q * s / (den * den))
}

/// `F(y, y_z)`: the reduced ODE multiplied through by its denominator and
/// divided by `b²`.
pub fn polynomial_form_residual(y: f64, y_z: f64, params: &ReductionParams) -> f64 {
    let (q, b, xi) = (params.q, params.b, params.xi);
    y * y_z * y_z
        + 2.0 * xi * (y * y - xi * y / b + xi * q / (2.0 * b * b)) * y_z
        + (y * y - 2.0 * xi * y / b + (1.0 + xi * q) / (b * b)) * y
}

/// `∂F/∂y_z`.
pub fn polynomial_form_dyz(y: f64, y_z: f64, params: &ReductionParams) -> f64 {
    let (q, b, xi) = (params.q, params.b, params.xi);
    2.0 * y * y_z + 2.0 * xi * (y * y - xi * y / b + xi * q / (2.0 * b * b))
}

/// `(q/b³)(q/(4b) - y)`, the radicand of the right-hand sides.
pub fn radicand(y: f64, params: &ReductionParams) -> f64 {
    let b = params.b;
    params.q / (b * b * b) * (params.branch_point() - y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularPoint {
    pub line: SingularLine,
    /// Location in `y`; infinite for [`SingularLine::Infinity`].
    pub y: f64,
    pub description: &'static str,
}

pub fn singular_lines(params: &ReductionParams) -> [SingularPoint; 3] {
    [
        SingularPoint {
            line: SingularLine::Zero,
            y: 0.0,
            description: "simple pole of y_z on the principal sheet",
        },
        SingularPoint {
            line: SingularLine::BranchPoint,
            y: params.branch_point(),
            description: "square-root branch point where the two sheets meet",
        },
        SingularPoint {
            line: SingularLine::Infinity,
            y: f64::INFINITY,
            description: "second-order pole",
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantSolutions {
    /// Real constants `y` with `F(y, 0) = 0`, ascending.
    pub values: Vec<f64>,
    /// The solution lying on the discriminant curve, present iff `q = -4ξ`.
    pub exceptional: Option<f64>,
}

/// Real constant solutions `y ∈ {0, (ξ ± sqrt(-ξq))/b}`.
pub fn constant_solutions(params: &ReductionParams) -> ConstantSolutions {
    let (q, b, xi) = (params.q, params.b, params.xi);
    let mut values = vec![0.0];
    let disc = -xi * q;
    if disc >= 0.0 {
        let r = disc.sqrt();
        values.push((xi + r) / b);
        if r > 0.0 {
            values.push((xi - r) / b);
        }
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    let exceptional = (q == -4.0 * xi).then(|| -xi / b);
    ConstantSolutions {
        values,
        exceptional,
    }
}

/// Right-hand side `y_z = f(y)` of the selected sheet.
pub fn rhs_f(y: f64, params: &ReductionParams, branch: Branch) -> Result<f64> {
    if y == 0.0 {
        return Err(Error::SingularY);
    }
    let b = params.b;
    let rad = radicand(y, params);
    if rad < 0.0 {
        return Err(Error::NegativeRadicand(rad));
    }
    let sign = match branch {
        Branch::Minus => -1.0,
        Branch::Plus => 1.0,
    };
    Ok((-params.xi * y * y + y / b - params.q / (2.0 * b * b) + sign * rad.sqrt()) / y)
}

/// `y_z` at the branch point, where both sheets meet: `-(1/b)(1 + ξq/4)`.
pub fn branch_point_slope(params: &ReductionParams) -> f64 {
    -(1.0 + params.xi * params.q / 4.0) / params.b
}

/// Limit of `y·y_z` at `y → 0` on the sheet with the pole: `-q/b²`.
pub fn pole_residue(params: &ReductionParams) -> f64 {
    -params.q / (params.b * params.b)
}

/// Sheet of the right-hand side that has the pole at `y = 0`.
pub fn principal_sheet(params: &ReductionParams) -> Branch {
    if params.q * params.b * params.b > 0.0 {
        Branch::Minus
    } else {
        Branch::Plus
    }
}

/// Local exponent `e` in `|y_z - w(q/(4b))| ~ C |y - q/(4b)|^e`, fitted from
/// two offsets on the admissible side. A square-root branch gives `1/2`.
pub fn branch_exponent(params: &ReductionParams, branch: Branch) -> Result<f64> {
    let y0 = params.branch_point();
    let w0 = branch_point_slope(params);
    // admissible side: radicand ≥ 0 ⇔ (q/b³)(y0 - y) ≥ 0
    let side = if params.q / params.b.powi(3) > 0.0 {
        -1.0
    } else {
        1.0
    };
    let scale = y0.abs().max(1.0);
    let (d1, d2) = (1e-7 * scale, 1e-9 * scale);
    let g1 = (rhs_f(y0 + side * d1, params, branch)? - w0).abs();
    let g2 = (rhs_f(y0 + side * d2, params, branch)? - w0).abs();
    Ok((g1 / g2).ln() / (d1 / d2).ln())
}

/// `p = sqrt(1 - (4b/q) v_z)`.
pub fn p_from_vz(v_z: f64, params: &ReductionParams) -> Result<f64> {
    let r = 1.0 - 4.0 * params.b / params.q * v_z;
    if r < 0.0 {
        return Err(Error::NegativeRadicand(r));
    }
    Ok(r.sqrt())
}

/// `ζ = q (1 - p²) / (4b)`.
pub fn zeta_of_p(p: f64, params: &ReductionParams) -> f64 {
    params.q * (1.0 - p * p) / (4.0 * params.b)
}

/// `w(p) = ξ (p - 1)(q (1 + p)² + 4ξ) / (4b (p + 1))`, the slope `y_z` along
/// the uniformized curve.
pub fn w_of_p(p: f64, params: &ReductionParams) -> f64 {
    let (q, b, xi) = (params.q, params.b, params.xi);
    xi * (p - 1.0) * (q * (1.0 + p).powi(2) + 4.0 * xi) / (4.0 * b * (p + 1.0))
}

/// Poles of the quadrature integrand for `branch`.
fn quadrature_poles(params: &ReductionParams, branch: Branch) -> Vec<f64> {
    let (q, xi) = (params.q, params.xi);
    // minus: (p - 1)(q (p + 1)² + 4ξ); plus: (p + 1)(q (p - 1)² + 4ξ).
    // A root at p = 0 is cancelled by the factor p in the numerator.
    let (pole, center) = match branch {
        Branch::Minus => (1.0, -1.0),
        Branch::Plus => (-1.0, 1.0),
    };
    let mut poles = vec![pole];
    let r = -4.0 * xi / q;
    if q != 0.0 && r >= 0.0 {
        for root in [center + r.sqrt(), center - r.sqrt()] {
            if root.abs() > 1e-12 {
                poles.push(root);
            }
        }
    }
    poles
}

fn quadrature_integrand(p: f64, params: &ReductionParams, branch: Branch) -> f64 {
    let (q, xi) = (params.q, params.xi);
    let removable = q == -4.0 * xi;
    match branch {
        // -2qξ p(p+1) / ((p-1)(q(p+1)² + 4ξ))
        Branch::Minus => {
            if removable {
                -2.0 * xi * (p + 1.0) / ((p - 1.0) * (p + 2.0))
            } else {
                -2.0 * q * xi * p * (p + 1.0) / ((p - 1.0) * (q * (p + 1.0).powi(2) + 4.0 * xi))
            }
        }
        // -2qξ p(p-1) / ((p+1)(q(p-1)² + 4ξ))
        Branch::Plus => {
            if removable {
                -2.0 * xi * (p - 1.0) / ((p + 1.0) * (p - 2.0))
            } else {
                -2.0 * q * xi * p * (p - 1.0) / ((p + 1.0) * (q * (p - 1.0).powi(2) + 4.0 * xi))
            }
        }
    }
}

/// Increment of `z` along the uniformized curve from `p0` to `p1`.
///
/// The integrand is `dz/dp = (dζ/dp) / w`, which carries the factor `-2qξ`.
pub fn uniformized_quadrature(
    p0: f64,
    p1: f64,
    params: &ReductionParams,
    branch: Branch,
) -> Result<f64> {
    if !(p0.is_finite() && p1.is_finite()) {
        return Err(Error::Invalid("quadrature endpoints must be finite".into()));
    }
    if p0 == p1 {
        return Ok(0.0);
    }
    let (lo, hi) = (p0.min(p1), p0.max(p1));
    if let Some(&pole) = quadrature_poles(params, branch)
        .iter()
        .find(|&&x| x >= lo && x <= hi)
    {
        return Err(Error::PoleOnPath(pole));
    }
    let (v, _) = quad::integrate(|p| quadrature_integrand(p, params, branch), p0, p1, 1e-13);
    Ok(v)
}
