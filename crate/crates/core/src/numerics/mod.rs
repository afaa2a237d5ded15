//! Numerical substrate: small dense linear algebra, special functions,
//! step functions, bracketing root search and seedable random streams.

pub mod linalg;
pub mod rng;
pub mod root;
pub mod special;
pub mod step;

pub use linalg::{inverse_2x2, solve_spd, sym_sqrt_2x2, Matrix};
pub use rng::RandomSource;
pub use root::bisect_decreasing;
pub use special::{chisq_sf, expit, logit, norm_cdf, norm_pdf, norm_quantile, norm_sf, orthant_prob_neg};
pub use step::StepFunction;
