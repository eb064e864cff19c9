//! Real roots of the uniformizing cubics
//!
//! ```text
//! plus:  (p + 1)² (p - 2) = 2c e^{-3z/2}
//! minus: (p - 1)² (p + 2) = 2c e^{-3z/2}
//! ```
//!
//! The two equations are exchanged by `(p, c) → (-p, -c)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Selects one of the two uniformizing cubics (and the matching sheet of the
/// reduced first-order system).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Minus,
    Plus,
}

impl Branch {
    pub fn mirror(self) -> Self {
        match self {
            Branch::Minus => Branch::Plus,
            Branch::Plus => Branch::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicRoot {
    pub value: f64,
    pub multiplicity: u8,
}

/// Relative discriminant below which two roots are reported as one double root.
const DOUBLE_ROOT_TOL: f64 = 1e-12;

/// Real roots of `p³ + a p + b = 0`, ascending, with multiplicities.
pub fn depressed_real_roots(a: f64, b: f64) -> Vec<CubicRoot> {
    let f = |p: f64| (p * p + a) * p + b;
    let df = |p: f64| 3.0 * p * p + a;
    let simple = |value| CubicRoot {
        value,
        multiplicity: 1,
    };

    if a == 0.0 {
        let r = (-b).cbrt();
        return vec![CubicRoot {
            value: r,
            multiplicity: if b == 0.0 { 3 } else { 1 },
        }];
    }

    let scale = 4.0 * a.abs().powi(3) + 27.0 * b * b;
    let disc = -(4.0 * a * a * a + 27.0 * b * b);

    let mut roots = if disc.abs() <= DOUBLE_ROOT_TOL * scale {
        let double = -1.5 * b / a;
        let single = 3.0 * b / a;
        vec![
            CubicRoot {
                value: double,
                multiplicity: 2,
            },
            simple(single),
        ]
    } else if disc > 0.0 {
        // three distinct real roots; a < 0 here
        let m = 2.0 * (-a / 3.0).sqrt();
        let arg = (1.5 * b / a * (-3.0 / a).sqrt()).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| simple(m * (theta - 2.0 * PI * k as f64 / 3.0).cos()))
            .collect()
    } else if a < 0.0 {
        let m = 2.0 * (-a / 3.0).sqrt();
        let arg = -1.5 * b.abs() / a * (-3.0 / a).sqrt();
        vec![simple(
            -b.signum() * m * (arg.max(1.0).acosh() / 3.0).cosh(),
        )]
    } else {
        let m = 2.0 * (a / 3.0).sqrt();
        let arg = 1.5 * b / a * (3.0 / a).sqrt();
        vec![simple(-m * (arg.asinh() / 3.0).sinh())]
    };

    for r in roots.iter_mut().filter(|r| r.multiplicity == 1) {
        for _ in 0..3 {
            let d = df(r.value);
            if d == 0.0 {
                break;
            }
            let next = r.value - f(r.value) / d;
            if f(next).abs() < f(r.value).abs() {
                r.value = next;
            } else {
                break;
            }
        }
    }
    roots.sort_by(|x, y| x.value.total_cmp(&y.value));
    roots
}

/// Right-hand side `2c e^{-3z/2}` shared by both cubics.
pub fn cubic_rhs(z: f64, c: f64) -> f64 {
    2.0 * c * (-1.5 * z).exp()
}

/// Left-hand side of the selected cubic.
pub fn cubic_lhs(p: f64, branch: Branch) -> f64 {
    match branch {
        Branch::Plus => (p + 1.0) * (p + 1.0) * (p - 2.0),
        Branch::Minus => (p - 1.0) * (p - 1.0) * (p + 2.0),
    }
}

/// Back-substitution residual scaled by `max(1, |rhs|)`.
pub fn cubic_residual(p: f64, z: f64, c: f64, branch: Branch) -> f64 {
    let rhs = cubic_rhs(z, c);
    (cubic_lhs(p, branch) - rhs).abs() / rhs.abs().max(1.0)
}

/// All real roots `p` of the selected uniformizing cubic at `(z, c)`.
pub fn solve_p(z: f64, c: f64, branch: Branch) -> Result<Vec<CubicRoot>> {
    if c == 0.0 {
        return Err(Error::ZeroC);
    }
    if !(z.is_finite() && c.is_finite()) {
        return Err(Error::Invalid(format!("non-finite z = {z} or c = {c}")));
    }
    let rhs = cubic_rhs(z, c);
    // plus: p³ - 3p - 2 - rhs = 0; minus: p³ - 3p + 2 - rhs = 0
    let b = match branch {
        Branch::Plus => -2.0 - rhs,
        Branch::Minus => 2.0 - rhs,
    };
    Ok(depressed_real_roots(-3.0, b))
}

/// Number of real roots counted with multiplicity.
pub fn root_count(roots: &[CubicRoot]) -> usize {
    roots.iter().map(|r| r.multiplicity as usize).sum()
}
