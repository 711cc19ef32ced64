//! Maximum-likelihood fitting of grouped, censored or raw samples.
//!
//! Every family is fitted the same way: the negative log-likelihood is
//! minimized by a Nelder–Mead simplex on unconstrained coordinates, with
//! restarts from the incumbent until the objective stops improving. The
//! covariance is the inverse of the finite-difference observed information in
//! natural coordinates.

mod data;
mod hessian;
mod objective;
mod optim;

use nalgebra::DMatrix;

use crate::dist::{Family, Model};
use crate::error::{Error, Result};
use crate::special::normal_critical_value;
use objective::{Coord, Objective};

pub use data::{Censor, GroupedCounts, Observations};
pub use hessian::{fd_step, numerical_hessian, Hessian};

/// Smallest admissible scale. Fits that press against it are flagged.
pub const SIGMA_FLOOR: f64 = 1e-8;
/// Offset in the `ln(ξ + shift)` coordinate that lets ξ reach zero.
pub const XI_SHIFT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Starting values in natural coordinates. `None` uses (σ, ξ) = (1, 1)
    /// for the tail families and moment estimates for the others. With a
    /// covariate a two-value start is read as (σ0, ξ) with σt = 0.
    pub start: Option<Vec<f64>>,
    /// Iteration cap for each simplex run.
    pub max_iterations: usize,
    /// Relative spread of simplex values at which a run stops.
    pub tolerance: f64,
    /// One value per raw observation. The scale becomes
    /// `σ0 + σt·c` with `c` the covariate rescaled to [0, 1].
    pub covariate: Option<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            start: None,
            max_iterations: 2000,
            tolerance: 1e-10,
            covariate: None,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Domain(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub family: Family,
    pub names: Vec<&'static str>,
    pub estimates: Vec<f64>,
    /// Inverse observed information; `None` when it could not be inverted.
    pub covariance: Option<DMatrix<f64>>,
    /// Why the covariance is missing, if it is.
    pub covariance_error: Option<String>,
    pub nll: f64,
    pub aic: f64,
    pub bic: f64,
    /// Number of observations, censored ones included.
    pub n: u64,
    pub converged: bool,
    pub iterations: usize,
    /// An estimate sits on the edge of the parameter space (σ at its floor,
    /// ξ = 0, or a probability at 0 or 1).
    pub boundary: bool,
    /// Fewer than two distinct values for a multi-parameter family.
    pub degenerate: bool,
    /// Some coordinate of the information was differenced one-sidedly.
    pub one_sided_hessian: bool,
    /// Original (min, max) of the covariate, which was rescaled to [0, 1].
    pub covariate_range: Option<(f64, f64)>,
}

impl FitResult {
    /// Number of free parameters.
    pub fn k(&self) -> usize {
        self.estimates.len()
    }

    pub fn std_errors(&self) -> Option<Vec<f64>> {
        self.covariance
            .as_ref()
            .map(|c| (0..c.nrows()).map(|i| c[(i, i)].max(0.0).sqrt()).collect())
    }

    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|&n| n == name)
            .map(|i| self.estimates[i])
    }

    /// The fitted law. Unavailable for covariate models, whose scale varies
    /// by observation; see [`FitResult::model_at`].
    pub fn model(&self) -> Result<Model> {
        if self.covariate_range.is_some() {
            return Err(Error::Unsupported(
                "covariate fit has no single model; use model_at".into(),
            ));
        }
        Model::from_family(self.family, &self.estimates)
    }

    /// Fitted law at rescaled covariate value `c` in [0, 1].
    pub fn model_at(&self, c: f64) -> Result<Model> {
        if self.covariate_range.is_none() {
            return self.model();
        }
        let sigma = self.estimates[0] + self.estimates[1] * c;
        Model::from_family(self.family, &[sigma, self.estimates[2]])
    }
}

/// Negative log-likelihood of `params` (natural coordinates, in the order of
/// [`Family::param_names`], or (σ0, σt, ξ) with a covariate).
///
/// Infeasible parameters give `Ok(+∞)` so that optimizers can back off.
pub fn nll<'a>(
    family: Family,
    params: &[f64],
    data: impl Into<Observations<'a>>,
    options: &FitOptions,
) -> Result<f64> {
    let obj = Objective::new(family, data.into(), options)?;
    check_arity(&obj, params)?;
    Ok(obj.value(params))
}

fn check_arity(obj: &Objective, params: &[f64]) -> Result<()> {
    let k = obj.names().len();
    if params.len() != k {
        return Err(Error::Domain(format!(
            "{} expects {k} parameters, got {}",
            obj.family().name(),
            params.len()
        )));
    }
    Ok(())
}

/// Observed information (Hessian of the NLL) at `params`, by central
/// differences, or forward differences on coordinates at a boundary.
pub fn observed_information<'a>(
    family: Family,
    params: &[f64],
    data: impl Into<Observations<'a>>,
    options: &FitOptions,
) -> Result<Hessian> {
    let obj = Objective::new(family, data.into(), options)?;
    check_arity(&obj, params)?;
    if !obj.value(params).is_finite() {
        return Err(Error::Domain(format!(
            "parameters {params:?} are infeasible for {}",
            family.name()
        )));
    }
    Ok(numerical_hessian(|t| obj.value(t), params))
}

/// Maximum-likelihood fit.
///
/// Failure to converge, a degenerate sample or a singular information matrix
/// are reported through the result's flags rather than as errors.
pub fn fit<'a>(
    family: Family,
    data: impl Into<Observations<'a>>,
    options: &FitOptions,
) -> Result<FitResult> {
    options.validate()?;
    let obj = Objective::new(family, data.into(), options)?;
    let coords = obj.coords();
    let start = obj.start(options)?;
    if !obj.value(&start).is_finite() {
        return Err(Error::Domain(format!(
            "starting values {start:?} are infeasible for {}",
            family.name()
        )));
    }
    let natural = |z: &[f64]| -> Vec<f64> {
        coords
            .iter()
            .zip(z)
            .map(|(c, &v)| c.to_natural(v))
            .collect()
    };
    let z0: Vec<f64> = coords
        .iter()
        .zip(&start)
        .map(|(c, &v)| c.to_free(v))
        .collect();
    let min = optim::minimize_with_restarts(
        |z| obj.value(&natural(z)),
        &z0,
        options.max_iterations,
        options.tolerance,
    );
    let estimates = natural(&min.x);
    let nll = obj.value(&estimates);

    let hs = numerical_hessian(|t| obj.value(t), &estimates);
    let (covariance, covariance_error) = match hs.inverse() {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let boundary = coords
        .iter()
        .zip(&estimates)
        .enumerate()
        .any(|(i, (c, &v))| {
            let scale = i == 0;
            match c {
                Coord::Log if scale && family.is_tail() => v < SIGMA_FLOOR * 1.01,
                Coord::LogShift => v < 1e-8,
                Coord::Logit => !(v > 1e-10 && v < 1.0 - 1e-10),
                _ => false,
            }
        });
    let data = obj.data();
    let k = estimates.len();
    let degenerate = k >= 2 && data.n_distinct() < 2;
    let n = data.total();
    Ok(FitResult {
        family,
        names: obj.names(),
        estimates,
        covariance,
        covariance_error,
        nll,
        aic: 2.0 * k as f64 + 2.0 * nll,
        bic: k as f64 * (n as f64).ln() + 2.0 * nll,
        n,
        converged: min.converged && nll.is_finite() && !degenerate,
        iterations: min.iterations,
        boundary,
        degenerate,
        one_sided_hessian: hs.any_one_sided(),
        covariate_range: obj.covariate_range(),
    })
}

/// Normal-theory interval `est ± z·se` with `z` the two-sided critical
/// value for `level`.
pub fn normal_interval(est: f64, se: f64, level: f64) -> Result<(f64, f64)> {
    if !(se >= 0.0) {
        return Err(Error::Domain(format!(
            "standard error must be >= 0, got {se}"
        )));
    }
    let z = normal_critical_value(level)?;
    Ok((est - z * se, est + z * se))
}

/// Wald interval for parameter `component` of a fit.
pub fn confint(result: &FitResult, level: f64, component: usize) -> Result<(f64, f64)> {
    let se = result.std_errors().ok_or_else(|| {
        Error::CovarianceUnavailable(
            result
                .covariance_error
                .clone()
                .unwrap_or_else(|| "no covariance".into()),
        )
    })?;
    let Some(&s) = se.get(component) else {
        return Err(Error::Domain(format!(
            "component {component} out of range for {} parameters",
            se.len()
        )));
    };
    normal_interval(result.estimates[component], s, level)
}
