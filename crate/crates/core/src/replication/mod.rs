//! Scripted studies: the multiple-birth tail, Poisson exceedances, the
//! inverse-gamma tail-probability simulation and the Zipf–Mandelbrot ratio
//! check.

mod births;
mod poisson_intro;
mod table1;
mod theorem1;

pub use births::{births_analysis, BirthsAnalysis, BirthsFixture, BirthsRow, BIRTHS_FAMILIES};
pub use poisson_intro::{poisson_intro_experiment, FamilyMeans, PoissonIntroSummary};
pub use table1::{
    ig21_survival, table1_experiment, table1_replicate, target_quantile, ExperimentSummary, Method,
    MethodSummary, RepRecord,
};
pub use theorem1::theorem1_ratio_check;
