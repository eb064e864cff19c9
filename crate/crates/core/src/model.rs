//! Pointwise evaluation of the nonlinear Black-Scholes catalogue.
//!
//! Every model in the catalogue has the form
//!
//! ```text
//! u_t + ½ σ² v(S, ρ u_S, ρ u_SS) S² u_SS = 0,      v(S, 0, 0) = 1,
//! ```
//!
//! and differs only in the adjusted-volatility factor `v`. This module
//! evaluates `v`, its partial derivatives with respect to `u_S` and `u_SS`,
//! and the PDE residual on a caller-supplied [`Jet2`]. Nothing here
//! differentiates a solution; jets come from the caller.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Denominators closer to zero than this are treated as a breach of the
/// model's validity region.
pub const DEFAULT_GUARD: f64 = 1e-10;

/// Volatility, liquidity and price-impact shape `λ(S) = ω S^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    sigma: f64,
    rho: f64,
    omega: f64,
    k: u8,
}

impl ModelParams {
    /// Parameters for the main equation (`k = 0`, `λ ≡ ω`).
    pub fn new(sigma: f64, rho: f64, omega: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Invalid(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::Invalid(format!(
                "rho must be non-negative, got {rho}"
            )));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::Invalid(format!(
                "omega must be positive, got {omega}"
            )));
        }
        Ok(Self {
            sigma,
            rho,
            omega,
            k: 0,
        })
    }

    /// Selects the exponent of `λ(S) = ω S^k`; only 0 and 1 are supported.
    pub fn with_k(mut self, k: u8) -> Result<Self> {
        if k > 1 {
            return Err(Error::Invalid(format!("k must be 0 or 1, got {k}")));
        }
        self.k = k;
        Ok(self)
    }

    pub fn with_rho(self, rho: f64) -> Result<Self> {
        Self::new(self.sigma, rho, self.omega)?.with_k(self.k)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    /// `b = ω ρ`.
    pub fn b(&self) -> f64 {
        self.omega * self.rho
    }

    /// Price impact `ρ λ(S) = b S^k`.
    pub fn impact(&self, s: f64) -> f64 {
        match self.k {
            0 => self.b(),
            _ => self.b() * s,
        }
    }
}

/// A reaction function `ψ(f, α) = f g(α)` given through `g` and `g_α`.
#[derive(Clone)]
pub struct ReactionFunction {
    name: String,
    g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    g_alpha: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl ReactionFunction {
    pub fn new(
        name: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_alpha: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            g: Arc::new(g),
            g_alpha: Arc::new(g_alpha),
        }
    }

    /// `g(α) = e^α`; reproduces the reduced-form SDE model.
    pub fn exponential() -> Self {
        Self::new("exp", f64::exp, f64::exp)
    }

    /// `g(α) = 1/(1 - α)`; reproduces the Sircar/Papanicolaou equation.
    pub fn hyperbolic() -> Self {
        Self::new(
            "1/(1-alpha)",
            |a: f64| 1.0 / (1.0 - a),
            |a: f64| 1.0 / ((1.0 - a) * (1.0 - a)),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn g(&self, alpha: f64) -> f64 {
        (self.g)(alpha)
    }

    pub fn g_alpha(&self, alpha: f64) -> f64 {
        (self.g_alpha)(alpha)
    }

    /// `|(g(α+h) - g(α-h))/(2h) - g_α(α)|`. Diagnostic only.
    pub fn consistency_gap(&self, alpha: f64, h: f64) -> f64 {
        ((self.g(alpha + h) - self.g(alpha - h)) / (2.0 * h) - self.g_alpha(alpha)).abs()
    }

    fn ratio(&self, alpha: f64) -> Result<f64> {
        let g = self.g(alpha);
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::Invalid(format!(
                "reaction function g({alpha}) = {g} must be positive"
            )));
        }
        Ok(self.g_alpha(alpha) / g)
    }
}

impl fmt::Debug for ReactionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReactionFunction")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// Which equation of the catalogue is meant.
#[derive(Debug, Clone)]
pub enum ModelKind {
    /// Quadratic transaction costs: `v = 1 + 2 ρλ S u_SS`.
    Cjp,
    /// Reduced-form SDE model: `v = (1 - ρλ S u_SS)^-2`.
    FreySde,
    /// Reaction-function model: `v = (1 - ρ (g_α/g)(ρ u_S) S u_SS)^-2`.
    ReactionGeneral(ReactionFunction),
    /// `v = (1 - ρ u_S)² / (1 - ρ u_S - ρ S u_SS)²`.
    Sircar,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Cjp => "cjp",
            ModelKind::FreySde => "frey",
            ModelKind::ReactionGeneral(_) => "reaction",
            ModelKind::Sircar => "sircar",
        }
    }

    /// Parses the CLI/JSON tag of the kinds that need no extra data.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "cjp" => Ok(ModelKind::Cjp),
            "frey" | "freysde" | "frey-sde" => Ok(ModelKind::FreySde),
            "sircar" => Ok(ModelKind::Sircar),
            "reaction-exp" => Ok(ModelKind::ReactionGeneral(ReactionFunction::exponential())),
            "reaction-hyperbolic" => Ok(ModelKind::ReactionGeneral(ReactionFunction::hyperbolic())),
            other => Err(Error::Invalid(format!("unknown model kind `{other}`"))),
        }
    }

    /// Whether the factor has a denominator that can vanish.
    pub fn has_denominator(&self) -> bool {
        !matches!(self, ModelKind::Cjp)
    }
}

/// Value and first partial derivatives of a candidate solution at `(S, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jet2 {
    pub s: f64,
    pub t: f64,
    pub u: f64,
    pub u_t: f64,
    pub u_s: f64,
    pub u_ss: f64,
}

impl Jet2 {
    pub fn is_finite(&self) -> bool {
        [self.s, self.t, self.u, self.u_t, self.u_s, self.u_ss]
            .iter()
            .all(|x| x.is_finite())
    }
}

/// Adjusted-volatility factor together with its partials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factor {
    pub v: f64,
    pub dv_du_s: f64,
    pub dv_du_ss: f64,
    /// The vanishing-prone denominator, `None` for kinds without one.
    pub denominator: Option<f64>,
}

/// Evaluates `v` and its partials at `(S, u_S, u_SS)`.
pub fn factor(
    kind: &ModelKind,
    params: &ModelParams,
    s: f64,
    u_s: f64,
    u_ss: f64,
    guard: f64,
) -> Result<Factor> {
    let rho = params.rho();
    let checked = |d: f64| {
        if d.abs() < guard || !d.is_finite() {
            Err(Error::DegenerateDenominator { value: d, guard })
        } else {
            Ok(d)
        }
    };
    match kind {
        ModelKind::Cjp => {
            let beta_s = params.impact(s) * s;
            Ok(Factor {
                v: 1.0 + 2.0 * beta_s * u_ss,
                dv_du_s: 0.0,
                dv_du_ss: 2.0 * beta_s,
                denominator: None,
            })
        }
        ModelKind::FreySde => {
            let beta_s = params.impact(s) * s;
            let d = checked(1.0 - beta_s * u_ss)?;
            Ok(Factor {
                v: 1.0 / (d * d),
                dv_du_s: 0.0,
                dv_du_ss: 2.0 * beta_s / (d * d * d),
                denominator: Some(d),
            })
        }
        ModelKind::Sircar => {
            let a = 1.0 - rho * u_s;
            let d = checked(a - rho * s * u_ss)?;
            let d3 = d * d * d;
            Ok(Factor {
                v: a * a / (d * d),
                dv_du_s: 2.0 * rho * rho * a * s * u_ss / d3,
                dv_du_ss: 2.0 * a * a * rho * s / d3,
                denominator: Some(d),
            })
        }
        ModelKind::ReactionGeneral(g) => {
            let alpha = rho * u_s;
            let r = g.ratio(alpha)?;
            let d = checked(1.0 - rho * r * s * u_ss)?;
            let d3 = d * d * d;
            // g_αα is not supplied, so d(g_α/g)/dα is taken numerically.
            let h = 1e-6 * alpha.abs().max(1.0);
            let dr = (g.ratio(alpha + h)? - g.ratio(alpha - h)?) / (2.0 * h);
            Ok(Factor {
                v: 1.0 / (d * d),
                dv_du_s: 2.0 * rho * rho * s * u_ss * dr / d3,
                dv_du_ss: 2.0 * rho * r * s / d3,
                denominator: Some(d),
            })
        }
    }
}

/// Diffusion term `½ σ² v S² u_SS` and its partials in `u_S`, `u_SS`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diffusion {
    pub value: f64,
    pub d_u_s: f64,
    pub d_u_ss: f64,
    pub denominator: Option<f64>,
}

pub fn diffusion(
    kind: &ModelKind,
    params: &ModelParams,
    s: f64,
    u_s: f64,
    u_ss: f64,
    guard: f64,
) -> Result<Diffusion> {
    let f = factor(kind, params, s, u_s, u_ss, guard)?;
    let scale = 0.5 * params.sigma() * params.sigma() * s * s;
    Ok(Diffusion {
        value: scale * f.v * u_ss,
        d_u_s: scale * u_ss * f.dv_du_s,
        d_u_ss: scale * (f.v + u_ss * f.dv_du_ss),
        denominator: f.denominator,
    })
}

/// The factor `v` such that the PDE reads `u_t + ½σ² v S² u_SS = 0`.
pub fn adjusted_volatility_factor(
    kind: &ModelKind,
    params: &ModelParams,
    jet: &Jet2,
) -> Result<f64> {
    check_jet(jet)?;
    factor(kind, params, jet.s, jet.u_s, jet.u_ss, DEFAULT_GUARD).map(|f| f.v)
}

/// `u_t + ½σ² v S² u_SS`; zero on exact solutions.
pub fn pde_residual(kind: &ModelKind, params: &ModelParams, jet: &Jet2) -> Result<f64> {
    check_jet(jet)?;
    let d = diffusion(kind, params, jet.s, jet.u_s, jet.u_ss, DEFAULT_GUARD)?;
    Ok(jet.u_t + d.value)
}

/// First-order Taylor approximation of `v` around `ρ = 0`.
///
/// Both the SDE and the Sircar factors linearize to `1 + 2ρ S u_SS`, the
/// quadratic transaction-cost model.
pub fn linearize(kind: &ModelKind) -> Result<ModelKind> {
    match kind {
        ModelKind::FreySde | ModelKind::Sircar => Ok(ModelKind::Cjp),
        other => Err(Error::Unsupported(format!(
            "no first-order linearization is defined for `{}`",
            other.name()
        ))),
    }
}

fn check_jet(jet: &Jet2) -> Result<()> {
    if !jet.is_finite() {
        return Err(Error::Invalid(format!("non-finite jet {jet:?}")));
    }
    if jet.s <= 0.0 {
        return Err(Error::NonPositivePrice(jet.s));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn jet(s: f64, u_s: f64, u_ss: f64) -> Jet2 {
        Jet2 {
            s,
            t: 0.0,
            u: 0.0,
            u_t: 0.0,
            u_s,
            u_ss,
        }
    }

    fn all_kinds() -> Vec<ModelKind> {
        vec![
            ModelKind::Cjp,
            ModelKind::FreySde,
            ModelKind::Sircar,
            ModelKind::ReactionGeneral(ReactionFunction::exponential()),
            ModelKind::ReactionGeneral(ReactionFunction::hyperbolic()),
        ]
    }

    #[test]
    fn factor_examples() {
        let p0 = ModelParams::new(0.3, 0.0, 1.0).unwrap();
        let v = adjusted_volatility_factor(&ModelKind::FreySde, &p0, &jet(2.0, 0.4, 0.7)).unwrap();
        assert_eq!(v, 1.0);

        let p1 = ModelParams::new(0.3, 1.0, 1.0).unwrap();
        let v = adjusted_volatility_factor(&ModelKind::Cjp, &p1, &jet(1.0, 0.0, 1.0)).unwrap();
        assert_eq!(v, 3.0);

        // 1/(1 - 0.2)^2
        let v = adjusted_volatility_factor(&ModelKind::FreySde, &p1, &jet(2.0, 0.0, 0.1)).unwrap();
        assert!((v - 1.5625).abs() < 1e-14);
    }

    #[test]
    fn degenerate_denominator_is_an_error() {
        let p = ModelParams::new(0.3, 1.0, 1.0).unwrap();
        let err =
            adjusted_volatility_factor(&ModelKind::FreySde, &p, &jet(2.0, 0.0, 0.5)).unwrap_err();
        assert!(matches!(err, Error::DegenerateDenominator { .. }));
        let err = pde_residual(&ModelKind::Sircar, &p, &jet(1.0, 0.5, 0.5)).unwrap_err();
        assert!(matches!(err, Error::DegenerateDenominator { .. }));
    }

    #[test]
    fn linear_and_constant_jets_have_zero_residual() {
        let p = ModelParams::new(0.4, 0.7, 1.3).unwrap();
        for kind in all_kinds() {
            let lin = Jet2 {
                s: 2.5,
                t: 0.1,
                u: 5.0,
                u_t: 0.0,
                u_s: 0.5,
                u_ss: 0.0,
            };
            assert_eq!(pde_residual(&kind, &p, &lin).unwrap(), 0.0);
            let cst = Jet2 { u_s: 0.0, ..lin };
            assert_eq!(pde_residual(&kind, &p, &cst).unwrap(), 0.0);
        }
    }

    #[test]
    fn linearize_maps_to_cjp() {
        assert!(matches!(linearize(&ModelKind::FreySde), Ok(ModelKind::Cjp)));
        assert!(matches!(linearize(&ModelKind::Sircar), Ok(ModelKind::Cjp)));
        assert!(matches!(
            linearize(&ModelKind::Cjp),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn linearization_remainder_is_quadratic() {
        let j = Jet2 {
            s: 1.3,
            t: 0.0,
            u: 0.2,
            u_t: -0.05,
            u_s: 0.4,
            u_ss: 0.8,
        };
        for kind in [ModelKind::FreySde, ModelKind::Sircar] {
            let gap = |rho: f64| {
                let p = ModelParams::new(0.4, rho, 1.0).unwrap();
                (pde_residual(&kind, &p, &j).unwrap()
                    - pde_residual(&ModelKind::Cjp, &p, &j).unwrap())
                .abs()
            };
            let ratio = gap(0.01) / gap(0.005);
            assert!(
                (3.5..=4.5).contains(&ratio),
                "{} ratio {ratio}",
                kind.name()
            );
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let p = ModelParams::new(0.4, 0.3, 1.0).unwrap();
        let (s, us, uss) = (1.7, 0.6, 0.35);
        for kind in all_kinds() {
            let f = |a: f64, b: f64| diffusion(&kind, &p, s, a, b, DEFAULT_GUARD).unwrap().value;
            let d = diffusion(&kind, &p, s, us, uss, DEFAULT_GUARD).unwrap();
            let h = 1e-6;
            let fd_s = (f(us + h, uss) - f(us - h, uss)) / (2.0 * h);
            let fd_ss = (f(us, uss + h) - f(us, uss - h)) / (2.0 * h);
            assert!((d.d_u_s - fd_s).abs() < 1e-7, "{} d/du_s", kind.name());
            assert!((d.d_u_ss - fd_ss).abs() < 1e-7, "{} d/du_ss", kind.name());
        }
    }

    #[test]
    fn reaction_consistency_gap_is_small_for_builtin_functions() {
        for g in [
            ReactionFunction::exponential(),
            ReactionFunction::hyperbolic(),
        ] {
            assert!(g.consistency_gap(0.2, 1e-5) < 1e-8, "{}", g.name());
        }
    }

    #[test]
    fn non_positive_price_rejected() {
        let p = ModelParams::new(0.4, 0.3, 1.0).unwrap();
        assert!(matches!(
            pde_residual(&ModelKind::Cjp, &p, &jet(0.0, 0.0, 0.0)),
            Err(Error::NonPositivePrice(_))
        ));
    }

    fn arb_jet() -> impl Strategy<Value = Jet2> {
        (
            0.05f64..10.0,
            -1.0f64..1.0,
            -2.0f64..2.0,
            -2.0f64..2.0,
            -0.3f64..0.3,
        )
            .prop_map(|(s, u, u_t, u_s, u_ss)| Jet2 {
                s,
                t: 0.0,
                u,
                u_t,
                u_s,
                u_ss,
            })
    }

    proptest! {
        #[test]
        fn rho_zero_is_linear_black_scholes(j in arb_jet(), sigma in 0.05f64..1.0) {
            let p = ModelParams::new(sigma, 0.0, 1.0).unwrap();
            let linear = j.u_t + 0.5 * sigma * sigma * j.s * j.s * j.u_ss;
            for kind in all_kinds() {
                let r = pde_residual(&kind, &p, &j).unwrap();
                prop_assert!((r - linear).abs() <= 1e-14 * linear.abs().max(1.0));
            }
        }

        #[test]
        fn reaction_reduces_to_named_models(j in arb_jet(), rho in 0.0f64..0.3) {
            let p = ModelParams::new(0.4, rho, 1.0).unwrap();
            let exp = ModelKind::ReactionGeneral(ReactionFunction::exponential());
            let hyp = ModelKind::ReactionGeneral(ReactionFunction::hyperbolic());
            if let (Ok(a), Ok(b)) = (pde_residual(&exp, &p, &j), pde_residual(&ModelKind::FreySde, &p, &j)) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
            if let (Ok(a), Ok(b)) = (pde_residual(&hyp, &p, &j), pde_residual(&ModelKind::Sircar, &p, &j)) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }
}
