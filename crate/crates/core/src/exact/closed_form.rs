//! Literal arccos/arccosh closed forms of the invariant solutions, and a
//! conformance report comparing them with the root-based evaluators.
//!
//! The closed forms are transcribed term by term, including their choice of
//! `arccos(1 - X)` versus `arccos(-1 + X)` with `X = |c| e^{-3z/2}`. Two of
//! them (the `v`-space second and chart-2 third solutions) do not solve the
//! reduced ODE; [`conformance_report`] makes that visible instead of patching
//! the formulas.

use std::f64::consts::PI;

use serde::Serialize;

use super::{eval_u, eval_v, z_star, FamilyKind, SolutionFamily};
use crate::error::{Error, Result};
use crate::model::{pde_residual, Jet2, ModelKind, ModelParams};

/// Arguments this far outside the valid range are clamped back onto it.
const CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedForm {
    VR,
    V1,
    V2,
    V32,
    V31,
    UR,
    U1,
    U2,
    U32,
    U31,
}

impl ClosedForm {
    pub const ALL: [ClosedForm; 10] = [
        ClosedForm::VR,
        ClosedForm::V1,
        ClosedForm::V2,
        ClosedForm::V32,
        ClosedForm::V31,
        ClosedForm::UR,
        ClosedForm::U1,
        ClosedForm::U2,
        ClosedForm::U32,
        ClosedForm::U31,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ClosedForm::VR => "v_r(z)",
            ClosedForm::V1 => "v_1(z)",
            ClosedForm::V2 => "v_2(z)",
            ClosedForm::V32 => "v_3,2(z)",
            ClosedForm::V31 => "v_3,1(z)",
            ClosedForm::UR => "u_r(S,t)",
            ClosedForm::U1 => "u_1(S,t)",
            ClosedForm::U2 => "u_2(S,t)",
            ClosedForm::U32 => "u_3,2(S,t)",
            ClosedForm::U31 => "u_3,1(S,t)",
        }
    }

    /// Family the form is meant to represent.
    pub fn family(self) -> FamilyKind {
        match self {
            ClosedForm::VR | ClosedForm::UR => FamilyKind::R,
            ClosedForm::V1 | ClosedForm::U1 => FamilyKind::U1,
            ClosedForm::V2 | ClosedForm::U2 => FamilyKind::U2,
            ClosedForm::V32 | ClosedForm::U32 => FamilyKind::U3Chart2,
            ClosedForm::V31 | ClosedForm::U31 => FamilyKind::U3Chart1,
        }
    }

    pub fn is_u_space(self) -> bool {
        matches!(
            self,
            ClosedForm::UR | ClosedForm::U1 | ClosedForm::U2 | ClosedForm::U32 | ClosedForm::U31
        )
    }
}

fn acos_clamped(x: f64, z: f64, c: f64) -> Result<f64> {
    if x.abs() > 1.0 + CLAMP_TOL || x.is_nan() {
        return Err(Error::OutOfDomain {
            z,
            boundary: z_star(c),
        });
    }
    Ok(x.clamp(-1.0, 1.0).acos())
}

fn acosh_clamped(x: f64, z: f64, c: f64) -> Result<f64> {
    if x < 1.0 - CLAMP_TOL || x.is_nan() {
        return Err(Error::OutOfDomain {
            z,
            boundary: z_star(c),
        });
    }
    Ok(x.max(1.0).acosh())
}

/// `v_r` for `c > 0`, with `log(A^{-1/3} + A^{1/3} - 2)` evaluated as
/// `2 log|A^{1/6} - A^{-1/6}|`.
fn v_r(z: f64, c: f64, b: f64) -> Result<f64> {
    let e = (-1.5 * z).exp();
    let radicand = 2.0 * c * e + c * c * e * e;
    if radicand < 0.0 {
        return Err(Error::NegativeRadicand(radicand));
    }
    let a = 1.0 + c * e + radicand.sqrt();
    let gap = a.powf(1.0 / 6.0) - a.powf(-1.0 / 6.0);
    Ok(-a.powf(-2.0 / 3.0) / b - a.powf(2.0 / 3.0) / b - 2.0 / b * (2.0 * gap.abs().ln()))
}

/// Core (`d = 0`) of a `v`-space form. `c` is signed.
fn v_core(form: ClosedForm, z: f64, c: f64, b: f64) -> Result<f64> {
    let x = c.abs() * (-1.5 * z).exp();
    let lin = -z / b;
    let v = match form {
        ClosedForm::VR => v_r(z, c, b)?,
        ClosedForm::V1 => {
            let a = acos_clamped(1.0 - x, z, c)?;
            lin - 2.0 / b * (2.0 * a / 3.0).cos()
                - 4.0 / (3.0 * b) * (1.0 + 2.0 * (a / 3.0).cos()).ln()
                - 16.0 / (3.0 * b) * (a / 6.0).sin().ln()
        }
        ClosedForm::V2 => {
            let a = acos_clamped(1.0 - x, z, c)?;
            lin - 2.0 / b * (2.0 * PI / 3.0 - 2.0 * a / 3.0).cos()
                - 4.0 / (3.0 * b) * (-1.0 + 2.0 * (PI / 3.0 - a / 3.0).cos()).ln()
                - 16.0 / (3.0 * b) * (PI / 6.0 - a / 6.0).sin().ln()
        }
        ClosedForm::V32 => {
            let a = acos_clamped(1.0 - x, z, c)?;
            let a2 = acos_clamped(-1.0 + x, z, c)?;
            lin - 2.0 / b * (2.0 * PI / 3.0 + 2.0 * a / 3.0).cos()
                - 4.0 / (3.0 * b) * (-1.0 + 2.0 * (PI / 3.0 + a2 / 3.0).cos()).ln()
                - 16.0 / (3.0 * b) * (PI / 6.0 + a2 / 6.0).cos().ln()
        }
        ClosedForm::V31 => {
            let h = acosh_clamped(-1.0 + x, z, c)?;
            lin - 2.0 / b * (2.0 * h / 3.0).cosh()
                - 16.0 / (3.0 * b) * (h / 6.0).cosh().ln()
                - 4.0 / (3.0 * b) * (-1.0 + 2.0 * (h / 3.0).cosh()).ln()
        }
        _ => unreachable!("u-space form"),
    };
    Ok(v)
}

/// Core (`d = d2 = 0`) of a `u`-space form divided by `S`, at `z`.
fn u_core_over_s(form: ClosedForm, z: f64, c: f64, b: f64) -> Result<f64> {
    let x = c.abs() * (-1.5 * z).exp();
    let lin = -z / b;
    let v = match form {
        ClosedForm::UR => v_r(z, c, b)?,
        ClosedForm::U1 => v_core(ClosedForm::V1, z, c, b)?,
        ClosedForm::U2 => {
            let a = acos_clamped(-1.0 + x, z, c)?;
            lin - 2.0 / b * (2.0 * PI / 3.0 + 2.0 * a / 3.0).cos()
                - 4.0 / (3.0 * b) * (1.0 + 2.0 * (PI / 3.0 + a / 3.0).cos()).ln()
                - 16.0 / (3.0 * b) * (PI / 6.0 + a / 6.0).sin().ln()
        }
        ClosedForm::U32 => {
            let a = acos_clamped(-1.0 + x, z, c)?;
            lin - 2.0 / b * (2.0 * a / 3.0).cos()
                - 4.0 / (3.0 * b) * (-1.0 + 2.0 * (a / 3.0).cos()).ln()
                - 16.0 / (3.0 * b) * (a / 6.0).cos().ln()
        }
        ClosedForm::U31 => v_core(ClosedForm::V31, z, c, b)?,
        _ => unreachable!("v-space form"),
    };
    Ok(v)
}

fn check_family(form: ClosedForm, family: &SolutionFamily) -> Result<()> {
    let fk = family.kind();
    let want = form.family();
    let ok = fk == want
        || (fk == FamilyKind::U3 && matches!(want, FamilyKind::U3Chart1 | FamilyKind::U3Chart2));
    if ok {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "closed form {} belongs to family {want}, not {fk}",
            form.label()
        )))
    }
}

/// Evaluates a `v`-space closed form literally. May return NaN where the
/// formula leaves the reals.
pub fn eval_closed_v(
    form: ClosedForm,
    family: &SolutionFamily,
    z: f64,
    params: &ModelParams,
) -> Result<f64> {
    if form.is_u_space() {
        return Err(Error::Invalid(format!(
            "{} is a u-space form",
            form.label()
        )));
    }
    check_family(form, family)?;
    let b = params.b();
    if b == 0.0 {
        return Err(Error::ZeroB);
    }
    Ok(v_core(form, z, family.c(), b)? + family.d())
}

/// Evaluates a `u`-space closed form literally (`ωρ = b`).
pub fn eval_closed_u(
    form: ClosedForm,
    family: &SolutionFamily,
    s: f64,
    t: f64,
    params: &ModelParams,
) -> Result<f64> {
    if !form.is_u_space() {
        return Err(Error::Invalid(format!(
            "{} is a v-space form",
            form.label()
        )));
    }
    check_family(form, family)?;
    let b = params.b();
    if b == 0.0 {
        return Err(Error::ZeroB);
    }
    let z = super::to_invariant(s, t, params)?;
    Ok(s * u_core_over_s(form, z, family.c(), b)? + family.d() * s + family.d2())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformanceEntry {
    pub form: ClosedForm,
    pub label: &'static str,
    pub family: FamilyKind,
    pub samples: usize,
    /// Samples where the form left the reals or its domain.
    pub non_real: usize,
    /// Mean of `form - oracle` (of `(form - oracle)/S` for u-space forms),
    /// i.e. the shift of the constant `d` between the two.
    pub offset: f64,
    /// Max minus min of the same difference; zero when the form and the
    /// oracle differ by a choice of `d` only.
    pub spread: f64,
    /// Largest residual of the form under finite differencing: the reduced
    /// ODE for v-space forms, the PDE for u-space forms.
    pub max_residual: f64,
    pub conforming: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformanceReport {
    pub abs_c: f64,
    pub b: f64,
    pub sigma: f64,
    pub tolerance: f64,
    pub entries: Vec<ConformanceEntry>,
}

impl ConformanceReport {
    pub fn entry(&self, form: ClosedForm) -> Option<&ConformanceEntry> {
        self.entries.iter().find(|e| e.form == form)
    }
}

fn fd2(f: &impl Fn(f64) -> Result<f64>, x: f64, h: f64) -> Result<(f64, f64)> {
    let (m2, m1, p1, p2) = (f(x - 2.0 * h)?, f(x - h)?, f(x + h)?, f(x + 2.0 * h)?);
    let f0 = f(x)?;
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * f0 + 16.0 * p1 - p2) / (12.0 * h * h);
    Ok((d1, d2))
}

fn z_samples(kind: FamilyKind, c: f64) -> Vec<f64> {
    let n = 40;
    let (lo, hi) = match kind {
        FamilyKind::R => (-3.0, 5.0),
        FamilyKind::U3Chart1 => (z_star(c) - 5.0, z_star(c) - 0.05),
        _ => (z_star(c) + 0.05, z_star(c) + 5.0),
    };
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn assess(
    form: ClosedForm,
    abs_c: f64,
    params: &ModelParams,
    tolerance: f64,
) -> Result<ConformanceEntry> {
    let kind = form.family();
    let family = SolutionFamily::with_abs_c(kind, abs_c, 0.0, 0.0)?;
    let c = family.c();
    let b = params.b();
    let sigma2 = params.sigma().powi(2);
    let mut diffs = Vec::new();
    let mut non_real = 0;
    let mut max_residual: f64 = 0.0;
    let mut samples = 0;

    for z in z_samples(kind, c) {
        if form.is_u_space() {
            for t in [0.0, 0.25, 0.5] {
                samples += 1;
                let s = (z + sigma2 * t / 8.0).exp();
                let f = eval_closed_u(form, &family, s, t, params);
                let oracle = eval_u(&family, s, t, params)?;
                match f {
                    Ok(v) if v.is_finite() => diffs.push((v - oracle) / s),
                    _ => {
                        non_real += 1;
                        continue;
                    }
                }
                let hs = 1e-3 * s;
                let ht = 1e-3;
                let along_s = |x: f64| eval_closed_u(form, &family, x, t, params);
                let along_t = |x: f64| eval_closed_u(form, &family, s, x, params);
                if let (Ok((u_s, u_ss)), Ok((u_t, _))) =
                    (fd2(&along_s, s, hs), fd2(&along_t, t, ht))
                {
                    let jet = Jet2 {
                        s,
                        t,
                        u: 0.0,
                        u_t,
                        u_s,
                        u_ss,
                    };
                    match pde_residual(&ModelKind::FreySde, params, &jet) {
                        Ok(r) if r.is_finite() => max_residual = max_residual.max(r.abs()),
                        _ => max_residual = f64::INFINITY,
                    }
                }
            }
        } else {
            samples += 1;
            let f = eval_closed_v(form, &family, z, params);
            let oracle = eval_v(&family, z, params)?;
            match f {
                Ok(v) if v.is_finite() => diffs.push(v - oracle),
                _ => {
                    non_real += 1;
                    continue;
                }
            }
            let g = |x: f64| eval_closed_v(form, &family, x, params);
            if let Ok((v_z, v_zz)) = fd2(&g, z, 1e-3) {
                let s = v_z + v_zz;
                let r = v_z - 4.0 * s / (1.0 - b * s).powi(2);
                max_residual = max_residual.max(if r.is_finite() {
                    r.abs()
                } else {
                    f64::INFINITY
                });
            }
        }
    }

    let (offset, spread) = if diffs.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let lo = diffs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (mean, hi - lo)
    };
    Ok(ConformanceEntry {
        form,
        label: form.label(),
        family: kind,
        samples,
        non_real,
        offset,
        spread,
        max_residual,
        conforming: non_real == 0 && spread <= tolerance,
    })
}

/// Compares every closed form with the root-based evaluator for one `|c|`.
pub fn conformance_report(abs_c: f64, params: &ModelParams) -> Result<ConformanceReport> {
    let tolerance = 1e-8;
    let entries = ClosedForm::ALL
        .iter()
        .map(|&f| assess(f, abs_c, params, tolerance))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConformanceReport {
        abs_c,
        b: params.b(),
        sigma: params.sigma(),
        tolerance,
        entries,
    })
}
