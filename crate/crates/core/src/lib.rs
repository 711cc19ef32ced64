//! Tail modelling for discrete data by peaks over threshold.
//!
//! Three approximations to the law of exceedances `X - u | X >= u` of an
//! integer-valued variable are provided: the discrete generalized Pareto
//! distribution (D-GPD), the generalized Zipf distribution (GZD) and the
//! continuous GPD with an optional continuity shift. Each can be fitted by
//! maximum likelihood to grouped, possibly right-censored counts, used to
//! extrapolate rare-event probabilities, and checked by a discrete
//! Kolmogorov–Smirnov test with Monte Carlo p-values.

// `!(x > 0.0)` is used on purpose so that NaN fails parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod error;
pub mod gof;
pub mod mle;
pub mod pot;
pub mod replication;
pub mod rng;
pub mod special;

pub use dist::{Baseline, Family, Model, TailParams};
pub use error::{Error, Result};
pub use gof::{KsResult, QqData};
pub use mle::{fit, nll, Censor, FitOptions, FitResult, GroupedCounts, Observations};
pub use pot::{ExceedanceSample, TailEstimate, TailOptions};
pub use rng::RngStream;
pub use special::hurwitz_zeta;
