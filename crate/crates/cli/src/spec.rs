use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use nlbs_core::exact::{ExactSolution, FamilyKind, SolutionFamily};
use nlbs_core::model::{ModelKind, ModelParams};
use nlbs_core::solver::{BoundaryPolicy, ConvergenceAxis, Scheme};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// `a:b:n`, `n` evenly spaced values from `a` to `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Range {
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.start];
        }
        let step = (self.end - self.start) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                if i == self.n - 1 {
                    self.end
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(format!("range `{s}` is not of the form a:b:n"));
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| format!("range `{s}`: {e}"))
        };
        let r = Range {
            start: num(a)?,
            end: num(b)?,
            n: n.trim()
                .parse()
                .map_err(|e| format!("range `{s}`: count: {e}"))?,
        };
        if !(r.start.is_finite() && r.end.is_finite()) {
            return Err(format!("range `{s}` has non-finite ends"));
        }
        if r.n == 0 {
            return Err(format!("range `{s}` is empty"));
        }
        if r.n > 1 && r.end <= r.start {
            return Err(format!("range `{s}` must be increasing"));
        }
        Ok(r)
    }
}

impl TryFrom<String> for Range {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Range> for String {
    fn from(r: Range) -> Self {
        r.to_string()
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    BackwardEuler,
    #[default]
    Trapezoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryName {
    Dirichlet,
    Extrapolate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AxisName {
    #[default]
    Space,
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    C,
    Sigma,
    Rho,
    D,
}

/// Everything one command needs. Loaded from `--config` and overridden by
/// flags; embedded verbatim in every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub command: String,
    pub family: Option<String>,
    pub model: String,
    pub sigma: f64,
    pub rho: f64,
    pub omega: f64,
    /// Signed integration constant; defaults to `±0.5` by family.
    pub c: Option<f64>,
    pub d: f64,
    pub d2: f64,
    pub s_range: Range,
    pub t_range: Range,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub scheme: SchemeName,
    pub boundary: Option<BoundaryName>,
    /// `family`, `call:K` or `linear:D`.
    pub payoff: Option<String>,
    pub ladder: Vec<usize>,
    pub axis: AxisName,
    /// Time steps per space interval on space ladders.
    pub dt_ratio: f64,
    pub sweep_param: Option<SweepParam>,
    pub sweep_values: Vec<f64>,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            command: String::new(),
            family: None,
            model: "frey".into(),
            sigma: 0.4,
            rho: 1.0,
            omega: 1.0,
            c: None,
            d: 0.0,
            d2: 0.0,
            s_range: Range {
                start: 0.2,
                end: 5.0,
                n: 101,
            },
            t_range: Range {
                start: 0.0,
                end: 0.5,
                n: 26,
            },
            format: Format::Csv,
            out: None,
            scheme: SchemeName::Trapezoidal,
            boundary: None,
            payoff: None,
            ladder: vec![201, 401, 801],
            axis: AxisName::Space,
            dt_ratio: 0.25,
            sweep_param: None,
            sweep_values: vec![],
        }
    }
}

/// Payoff choices for `solve`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payoff {
    Family,
    Call(f64),
    Linear(f64),
}

impl RunSpec {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let nums = [
            ("sigma", self.sigma),
            ("rho", self.rho),
            ("omega", self.omega),
            ("d", self.d),
            ("d2", self.d2),
            ("dt-ratio", self.dt_ratio),
        ];
        for (name, v) in nums {
            if !v.is_finite() {
                return Err(CliError::Validation(format!("{name} must be finite")));
            }
        }
        if let Some(c) = self.c {
            if !c.is_finite() {
                return Err(CliError::Validation("c must be finite".into()));
            }
        }
        if self.sweep_values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Validation("sweep values must be finite".into()));
        }
        for r in [&self.s_range, &self.t_range] {
            r.to_string()
                .parse::<Range>()
                .map_err(CliError::Validation)?;
        }
        if self.t_range.start < 0.0 {
            return Err(CliError::Validation(
                "t-range must not start before 0".into(),
            ));
        }
        if !(self.dt_ratio > 0.0) {
            return Err(CliError::Validation("dt-ratio must be positive".into()));
        }
        self.params()?;
        self.model_kind()?;
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        Ok(ModelParams::new(self.sigma, self.rho, self.omega)?)
    }

    pub fn model_kind(&self) -> Result<ModelKind, CliError> {
        Ok(ModelKind::from_name(&self.model)?)
    }

    pub fn family_kind(&self) -> Result<FamilyKind, CliError> {
        FamilyKind::from_name(self.family.as_deref().unwrap_or("r")).map_err(CliError::from)
    }

    /// The selected family with the default `c` of its sign class.
    pub fn family(&self) -> Result<SolutionFamily, CliError> {
        let kind = self.family_kind()?;
        self.family_with(kind, self.c)
    }

    pub fn family_with(
        &self,
        kind: FamilyKind,
        c: Option<f64>,
    ) -> Result<SolutionFamily, CliError> {
        let c = match (c, kind.c_sign()) {
            (Some(c), _) => c,
            (None, Some(sign)) => 0.5 * sign,
            (None, None) => 0.0,
        };
        Ok(SolutionFamily::new(kind, c, self.d, self.d2)?)
    }

    pub fn exact(&self) -> Result<ExactSolution, CliError> {
        Ok(ExactSolution::new(self.family()?, self.params()?)?)
    }

    pub fn payoff(&self) -> Result<Payoff, CliError> {
        let Some(p) = self.payoff.as_deref() else {
            return Ok(Payoff::Family);
        };
        let bad =
            || CliError::Validation(format!("payoff `{p}` is not family, call:K or linear:D"));
        match p.split_once(':') {
            None if p == "family" => Ok(Payoff::Family),
            Some(("call", k)) => {
                let k: f64 = k.parse().map_err(|_| bad())?;
                if !(k.is_finite() && k > 0.0) {
                    return Err(CliError::Validation(format!(
                        "strike must be positive, got {k}"
                    )));
                }
                Ok(Payoff::Call(k))
            }
            Some(("linear", d)) => d
                .parse::<f64>()
                .ok()
                .filter(|d| d.is_finite())
                .map(Payoff::Linear)
                .ok_or_else(bad),
            _ => Err(bad()),
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self.scheme {
            SchemeName::BackwardEuler => Scheme::BackwardEuler,
            SchemeName::Trapezoidal => Scheme::Trapezoidal { startup: 2 },
        }
    }

    pub fn boundary_policy(&self, has_reference: bool) -> BoundaryPolicy {
        match self.boundary {
            Some(BoundaryName::Dirichlet) => BoundaryPolicy::DirichletFromReference,
            Some(BoundaryName::Extrapolate) => BoundaryPolicy::LinearExtrapolation,
            None if has_reference => BoundaryPolicy::DirichletFromReference,
            None => BoundaryPolicy::LinearExtrapolation,
        }
    }

    pub fn axis(&self) -> ConvergenceAxis {
        match self.axis {
            AxisName::Space => ConvergenceAxis::Space,
            AxisName::Time => ConvergenceAxis::Time,
        }
    }
}
