//! Negative log-likelihood in natural coordinates, and the coordinate maps
//! used by the optimizer.

use super::data::Observations;
use super::{FitOptions, SIGMA_FLOOR, XI_SHIFT};
use crate::dist::{Family, Model, TailParams};
use crate::error::{domain, Error, Result};

/// Map between a natural parameter and the optimizer's unconstrained axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Coord {
    Log,
    /// `ln(ξ + XI_SHIFT)`, clamped back to ξ >= 0.
    LogShift,
    Identity,
    Logit,
}

impl Coord {
    pub fn to_free(self, v: f64) -> f64 {
        match self {
            Coord::Log => v.ln(),
            Coord::LogShift => (v + XI_SHIFT).ln(),
            Coord::Identity => v,
            Coord::Logit => (v / (1.0 - v)).ln(),
        }
    }

    pub fn to_natural(self, z: f64) -> f64 {
        match self {
            Coord::Log => z.exp(),
            Coord::LogShift => (z.exp() - XI_SHIFT).max(0.0),
            Coord::Identity => z,
            Coord::Logit => 1.0 / (1.0 + (-z).exp()),
        }
    }
}

pub(crate) struct Objective<'a> {
    family: Family,
    data: Observations<'a>,
    /// Covariate rescaled to [0, 1], aligned with raw observations.
    covariate: Option<Vec<f64>>,
    range: Option<(f64, f64)>,
}

impl<'a> Objective<'a> {
    pub fn new(family: Family, data: Observations<'a>, options: &FitOptions) -> Result<Self> {
        family.validate()?;
        if matches!(family, Family::InverseGamma { .. }) {
            return Err(Error::Unsupported(
                "the inverse gamma family has no free parameters to fit".into(),
            ));
        }
        if data.total() == 0 {
            return Err(Error::EmptyData);
        }
        if let Observations::Raw(v) = data {
            let integral = !matches!(family, Family::Gpd { .. });
            for (i, &x) in v.iter().enumerate() {
                if !(x >= 0.0) || !x.is_finite() || (integral && x.fract() != 0.0) {
                    return domain(format!(
                        "observation {i} = {x} is not a valid {} value",
                        family.name()
                    ));
                }
            }
        }
        let (covariate, range) = match &options.covariate {
            None => (None, None),
            Some(c) => {
                let Observations::Raw(v) = data else {
                    return Err(Error::Unsupported(
                        "covariate models need raw observations".into(),
                    ));
                };
                if !family.is_tail() {
                    return Err(Error::Unsupported(format!(
                        "covariate scale is only available for tail families, not {}",
                        family.name()
                    )));
                }
                if c.len() != v.len() {
                    return domain(format!(
                        "covariate has {} values for {} observations",
                        c.len(),
                        v.len()
                    ));
                }
                let (lo, hi) = c
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                        (a.min(x), b.max(x))
                    });
                if !lo.is_finite() || !hi.is_finite() || !(hi > lo) {
                    return domain("covariate must be finite and not constant");
                }
                let scaled = c.iter().map(|&x| (x - lo) / (hi - lo)).collect();
                (Some(scaled), Some((lo, hi)))
            }
        };
        Ok(Self {
            family,
            data,
            covariate,
            range,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn data(&self) -> Observations<'a> {
        self.data
    }

    pub fn covariate_range(&self) -> Option<(f64, f64)> {
        self.range
    }

    pub fn names(&self) -> Vec<&'static str> {
        if self.covariate.is_some() {
            vec!["sigma0", "sigma_t", "xi"]
        } else {
            self.family.param_names().to_vec()
        }
    }

    pub fn coords(&self) -> Vec<Coord> {
        let shape = if matches!(self.family, Family::Gpd { .. }) {
            Coord::Identity
        } else {
            Coord::LogShift
        };
        match self.family {
            _ if self.covariate.is_some() => vec![Coord::Log, Coord::Identity, shape],
            Family::Gpd { .. } | Family::Dgpd | Family::Gzd => vec![Coord::Log, shape],
            Family::Geometric | Family::Poisson => vec![Coord::Log],
            Family::NegBinomial => vec![Coord::Log, Coord::Logit],
            Family::InverseGamma { .. } => vec![],
        }
    }

    /// Starting point in natural coordinates.
    pub fn start(&self, options: &FitOptions) -> Result<Vec<f64>> {
        let k = self.names().len();
        if let Some(s) = &options.start {
            return match (s.len(), self.covariate.is_some()) {
                (n, _) if n == k => Ok(s.clone()),
                (2, true) => Ok(vec![s[0], 0.0, s[1]]),
                (n, _) => domain(format!(
                    "start has {n} values, {} expects {k}",
                    self.family.name()
                )),
            };
        }
        let (mean, var) = self.data.moments();
        let mean = mean.max(0.05);
        Ok(match self.family {
            _ if self.covariate.is_some() => vec![1.0, 0.0, 1.0],
            Family::Gpd { .. } | Family::Dgpd | Family::Gzd => vec![1.0, 1.0],
            Family::Geometric => vec![1.0 / (1.0 + 1.0 / mean).ln()],
            Family::Poisson => vec![mean],
            Family::NegBinomial => {
                let p = if var > mean { mean / var } else { 0.5 };
                vec![mean * p / (1.0 - p), p]
            }
            Family::InverseGamma { .. } => vec![],
        })
    }

    fn model(&self, theta: &[f64]) -> Option<Model> {
        if self.family.is_tail() && !(theta[0] >= SIGMA_FLOOR) {
            return None;
        }
        Model::from_family(self.family, theta).ok()
    }

    fn shift(&self) -> f64 {
        match self.family {
            Family::Gpd { delta } => delta,
            _ => 0.0,
        }
    }

    /// Negative log-likelihood; +∞ for infeasible parameters.
    pub fn value(&self, theta: &[f64]) -> f64 {
        let v = match &self.covariate {
            None => self.value_constant(theta),
            Some(c) => self.value_covariate(theta, c),
        };
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn value_constant(&self, theta: &[f64]) -> f64 {
        let Some(model) = self.model(theta) else {
            return f64::INFINITY;
        };
        let mut ll = 0.0;
        match self.data {
            Observations::Grouped(g) => {
                for (&v, &c) in g.cells() {
                    ll += c as f64 * model.ln_likelihood_term(v as f64);
                }
                if let Some(cen) = g.censor().filter(|c| c.count > 0) {
                    ll += cen.count as f64 * model.ln_survival(cen.threshold as f64 + self.shift());
                }
            }
            Observations::Raw(v) => {
                for &x in v {
                    ll += model.ln_likelihood_term(x);
                }
            }
        }
        -ll
    }

    fn value_covariate(&self, theta: &[f64], c: &[f64]) -> f64 {
        let (s0, st, xi) = (theta[0], theta[1], theta[2]);
        let Observations::Raw(v) = self.data else {
            unreachable!("checked in Objective::new")
        };
        let mut ll = 0.0;
        for (&x, &ci) in v.iter().zip(c) {
            let sigma = s0 + st * ci;
            if !(sigma >= SIGMA_FLOOR) {
                return f64::INFINITY;
            }
            let model = match self.family {
                Family::Gpd { delta } => match Model::gpd(sigma, xi, delta) {
                    Ok(m) => m,
                    Err(_) => return f64::INFINITY,
                },
                Family::Dgpd | Family::Gzd => {
                    let Ok(p) = TailParams::new(sigma, xi) else {
                        return f64::INFINITY;
                    };
                    if self.family == Family::Dgpd {
                        Model::dgpd(p)
                    } else {
                        Model::gzd(p)
                    }
                }
                _ => unreachable!("checked in Objective::new"),
            };
            ll += model.ln_likelihood_term(x);
        }
        -ll
    }
}
