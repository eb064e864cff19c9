//! Point symmetries of the reduced-form SDE equation acting on solutions.
//!
//! With `λ = e^{a1 ε}`:
//!
//! ```text
//! power law, k = 0:  ũ(S, t) = λ u(S/λ, t - a2 ε) + a3 ε S + (a4/a1)(λ - 1)
//! power law, k = 1:  ũ(S, t) = u(S/λ, t - a2 ε) + (a3/a1)(S/λ)(λ - 1) + a4 ε
//! any impact λ(S):   ũ(S, t) = u(S, t - a2 ε) + a3 ε S + a4 ε
//! ```
//!
//! Terms of the form `(x/a1)(λ - 1)` are replaced by their limit `x ε` when
//! both `a1 = 0` and `x = 0`; otherwise `a1 = 0` is a [`Error::SingularAction`].

use serde::{Deserialize, Serialize};

use super::SolutionField;
use crate::error::{Error, Result};
use crate::model::Jet2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionForm {
    /// Group of the power-law impact `λ(S) = ω S^k`, including scalings.
    PowerLaw,
    /// Subgroup shared by every impact function: translations in `t` and
    /// addition of linear functions.
    GeneralImpact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryAction {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub epsilon: f64,
    pub k: u8,
    pub form: ActionForm,
}

impl SymmetryAction {
    pub fn power_law(a1: f64, a2: f64, a3: f64, a4: f64, epsilon: f64, k: u8) -> Self {
        Self {
            a1,
            a2,
            a3,
            a4,
            epsilon,
            k,
            form: ActionForm::PowerLaw,
        }
    }

    pub fn general(a2: f64, a3: f64, a4: f64, epsilon: f64) -> Self {
        Self {
            a1: 0.0,
            a2,
            a3,
            a4,
            epsilon,
            k: 0,
            form: ActionForm::GeneralImpact,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.a1, self.a2, self.a3, self.a4, self.epsilon];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(
                "symmetry coefficients must be finite".into(),
            ));
        }
        if self.k > 1 {
            return Err(Error::Invalid(format!("k must be 0 or 1, got {}", self.k)));
        }
        if self.form == ActionForm::PowerLaw && self.a1 == 0.0 {
            let divided = if self.k == 0 { self.a4 } else { self.a3 };
            if divided != 0.0 {
                return Err(Error::SingularAction);
            }
        }
        if self.form == ActionForm::GeneralImpact && self.a1 != 0.0 {
            return Err(Error::Invalid(
                "the general-impact form has no scaling generator (a1 must be 0)".into(),
            ));
        }
        Ok(())
    }

    fn lambda(&self) -> f64 {
        (self.a1 * self.epsilon).exp()
    }

    /// `(x/a1)(λ - 1)`, with the `a1 → 0` limit `x ε`.
    fn ratio_term(&self, x: f64) -> f64 {
        if self.a1 == 0.0 {
            x * self.epsilon
        } else {
            x / self.a1 * (self.a1 * self.epsilon).exp_m1()
        }
    }
}

/// A solution pushed forward by a symmetry action.
#[derive(Debug, Clone)]
pub struct Transformed<F> {
    inner: F,
    action: SymmetryAction,
}

impl<F: SolutionField> Transformed<F> {
    pub fn action(&self) -> &SymmetryAction {
        &self.action
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

pub fn apply_symmetry<F: SolutionField>(u: F, action: SymmetryAction) -> Result<Transformed<F>> {
    action.validate()?;
    Ok(Transformed { inner: u, action })
}

impl<F: SolutionField> SolutionField for Transformed<F> {
    fn jet(&self, s: f64, t: f64) -> Result<Jet2> {
        let a = &self.action;
        let t0 = t - a.a2 * a.epsilon;
        match (a.form, a.k) {
            (ActionForm::GeneralImpact, _) => {
                let j = self.inner.jet(s, t0)?;
                Ok(Jet2 {
                    s,
                    t,
                    u: j.u + a.a3 * a.epsilon * s + a.a4 * a.epsilon,
                    u_s: j.u_s + a.a3 * a.epsilon,
                    ..j
                })
            }
            (ActionForm::PowerLaw, 0) => {
                let lam = a.lambda();
                let j = self.inner.jet(s / lam, t0)?;
                Ok(Jet2 {
                    s,
                    t,
                    u: lam * j.u + a.a3 * a.epsilon * s + a.ratio_term(a.a4),
                    u_t: lam * j.u_t,
                    u_s: j.u_s + a.a3 * a.epsilon,
                    u_ss: j.u_ss / lam,
                })
            }
            (ActionForm::PowerLaw, _) => {
                let lam = a.lambda();
                let j = self.inner.jet(s / lam, t0)?;
                let slope = a.ratio_term(a.a3) / lam;
                Ok(Jet2 {
                    s,
                    t,
                    u: j.u + slope * s + a.a4 * a.epsilon,
                    u_t: j.u_t,
                    u_s: j.u_s / lam + slope,
                    u_ss: j.u_ss / (lam * lam),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{ExactSolution, FamilyKind, SolutionFamily};
    use crate::model::ModelParams;

    fn r_solution() -> ExactSolution {
        let params = ModelParams::new(0.4, 1.0, 1.0).unwrap();
        let f = SolutionFamily::new(FamilyKind::R, 0.5, 0.0, 0.0).unwrap();
        ExactSolution::new(f, params).unwrap()
    }

    #[test]
    fn identity_at_zero_epsilon() {
        let u = r_solution();
        for action in [
            SymmetryAction::power_law(1.0, 2.0, 3.0, 4.0, 0.0, 0),
            SymmetryAction::power_law(1.0, 2.0, 3.0, 4.0, 0.0, 1),
            SymmetryAction::general(2.0, 3.0, 4.0, 0.0),
        ] {
            let tr = apply_symmetry(u, action).unwrap();
            let (a, b) = (tr.jet(1.3, 0.2).unwrap(), u.jet(1.3, 0.2).unwrap());
            assert!((a.u - b.u).abs() < 1e-15 && (a.u_ss - b.u_ss).abs() < 1e-15);
        }
    }

    #[test]
    fn time_translation() {
        let u = r_solution();
        let tr = apply_symmetry(u, SymmetryAction::general(1.0, 0.0, 0.0, 0.3)).unwrap();
        assert_eq!(tr.value(2.0, 0.5).unwrap(), u.value(2.0, 0.2).unwrap());
    }

    #[test]
    fn add_linear() {
        let u = r_solution();
        let tr = apply_symmetry(u, SymmetryAction::general(0.0, 2.0, 5.0, 0.3)).unwrap();
        let want = u.value(2.0, 0.1).unwrap() + 2.0 * 2.0 * 0.3 + 5.0 * 0.3;
        assert!((tr.value(2.0, 0.1).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn singular_action() {
        let u = r_solution();
        let e = apply_symmetry(u, SymmetryAction::power_law(0.0, 0.0, 0.0, 1.0, 0.3, 0));
        assert!(matches!(e, Err(Error::SingularAction)));
        let e = apply_symmetry(u, SymmetryAction::power_law(0.0, 0.0, 1.0, 0.0, 0.3, 1));
        assert!(matches!(e, Err(Error::SingularAction)));
        assert!(apply_symmetry(u, SymmetryAction::power_law(0.0, 1.0, 1.0, 0.0, 0.3, 0)).is_ok());
    }
}
