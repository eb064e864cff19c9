//! Asymptotic expansions of the nonlinear families.
//!
//! [`eval_asymptotic`] uses coefficients derived from the potential
//! `v = K - (p² + 2 log|p - 2|)/b` and checked against the evaluators.
//! [`eval_reference_asymptotic`] evaluates the reference expansion coefficients as stated,
//! two of which disagree with the evaluators:
//!
//! * `u_1`: the reference `S` coefficient carries `-(8/3) log(2/|c|)`; the
//!   evaluator needs `+(8/3) log(2/|c|)`. The true remainder after the
//!   `S^{-1/2}` term is `O(S^{-2})`, not `O(S^{-5/4})`.
//! * `u_3,1` as `S → 0`: stated as `-(14/b) S log S`; the evaluator gives
//!   `-(2|c|)^{2/3} e^{σ²t/8}/b + (1/b) S log S + O(S)`.

use super::{FamilyKind, SolutionFamily};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Which limit an expansion describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    LargeS,
    SmallS,
}

pub fn limit_of(kind: FamilyKind) -> Result<Limit> {
    match kind {
        FamilyKind::R | FamilyKind::U1 | FamilyKind::U2 | FamilyKind::U3 | FamilyKind::U3Chart2 => {
            Ok(Limit::LargeS)
        }
        FamilyKind::U3Chart1 => Ok(Limit::SmallS),
        k => Err(Error::Unsupported(format!(
            "no asymptotic expansion for family {k} (it is elementary)"
        ))),
    }
}

fn setup(family: &SolutionFamily, s: f64, params: &ModelParams) -> Result<(f64, f64, f64)> {
    if !(s > 0.0) {
        return Err(Error::NonPositivePrice(s));
    }
    let b = params.b();
    if b == 0.0 {
        return Err(Error::ZeroB);
    }
    Ok((b, family.c().abs(), params.sigma().powi(2)))
}

/// Individual terms of the derived expansion, leading first, without `d`, `d2`.
pub fn asymptotic_terms(
    family: &SolutionFamily,
    s: f64,
    t: f64,
    params: &ModelParams,
) -> Result<Vec<f64>> {
    let kind = family.kind();
    limit_of(kind)?;
    let (b, ac, sig2) = setup(family, s, params)?;
    let ln3 = 3f64.ln();
    let terms = match kind {
        FamilyKind::R | FamilyKind::U1 => {
            let (konst, sign) = if kind == FamilyKind::R {
                (-2.0 * (2.0 * ac).ln(), -1.0)
            } else {
                ((8.0 / 3.0) * (2.0 / ac).ln(), 1.0)
            };
            vec![
                3.0 / b * s * s.ln(),
                s / b * (4.0 * ln3 - 2.0 + konst - 0.375 * sig2 * t),
                sign * 16.0 / (27.0 * b) * ac * (3.0 * sig2 * t / 16.0).exp() / s.sqrt(),
            ]
        }
        FamilyKind::U2 | FamilyKind::U3 | FamilyKind::U3Chart2 => {
            let sign = if kind == FamilyKind::U2 { 1.0 } else { -1.0 };
            vec![
                linear_coefficient(ac, b) * s,
                sign * 8.0 / (3.0 * b)
                    * (2.0 * ac / 3.0).sqrt()
                    * (3.0 * sig2 * t / 32.0).exp()
                    * s.powf(0.25),
                -8.0 / (27.0 * b) * ac * (3.0 * sig2 * t / 16.0).exp() / s.sqrt(),
            ]
        }
        FamilyKind::U3Chart1 => vec![
            -(2.0 * ac).powf(2.0 / 3.0) * (sig2 * t / 8.0).exp() / b,
            s * s.ln() / b,
            s / b * ((4.0 / 3.0) * (8.0 / ac).ln() - sig2 * t / 8.0),
        ],
        _ => unreachable!("rejected by limit_of"),
    };
    Ok(terms)
}

/// `(1/b)(1 + (2/3) log(2⁷/(3³|c|)))`, the large-S slope of `u_2` and `u_3,2`.
pub fn linear_coefficient(abs_c: f64, b: f64) -> f64 {
    (1.0 + (2.0 / 3.0) * (128.0 / (27.0 * abs_c)).ln()) / b
}

/// Partial sum of the first `order` terms plus `d S + d2`.
pub fn eval_asymptotic(
    family: &SolutionFamily,
    s: f64,
    t: f64,
    params: &ModelParams,
    order: usize,
) -> Result<f64> {
    if order == 0 {
        return Err(Error::Invalid("order must be at least 1".into()));
    }
    let terms = asymptotic_terms(family, s, t, params)?;
    Ok(terms.iter().take(order).sum::<f64>() + family.d() * s + family.d2())
}

/// Partial sum of the reference expansion. `R` has no reference
/// coefficients beyond `(3/b) S log S`; `u_3,1` only its leading term.
pub fn eval_reference_asymptotic(
    family: &SolutionFamily,
    s: f64,
    t: f64,
    params: &ModelParams,
    order: usize,
) -> Result<f64> {
    if order == 0 {
        return Err(Error::Invalid("order must be at least 1".into()));
    }
    let kind = family.kind();
    limit_of(kind)?;
    let (b, ac, sig2) = setup(family, s, params)?;
    let terms = match kind {
        FamilyKind::R => vec![3.0 / b * s * s.ln()],
        FamilyKind::U1 => vec![
            3.0 / b * s * s.ln(),
            s / b * (4.0 * 3f64.ln() - 2.0 - (8.0 / 3.0) * (2.0 / ac).ln() - 0.375 * sig2 * t),
            16.0 / (27.0 * b) * ac * (3.0 * sig2 * t / 16.0).exp() / s.sqrt(),
        ],
        FamilyKind::U3Chart1 => vec![-14.0 / b * s * s.ln()],
        _ => asymptotic_terms(family, s, t, params)?,
    };
    if order > terms.len() {
        return Err(Error::Unsupported(format!(
            "the reference expansion of {kind} has {} term(s)",
            terms.len()
        )));
    }
    Ok(terms.iter().take(order).sum::<f64>() + family.d() * s + family.d2())
}
