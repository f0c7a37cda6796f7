//! Variable screening for binary-response regression.
//!
//! Provides least-squares screening (LeSS) and marginal maximum-likelihood
//! screening with logit or probit working links, the population limits of
//! both statistics under a misspecified link, a GLM fitter for post-screening
//! models, and seeded simulation drivers.

pub mod asymptotics;
pub mod datagen;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod glm;
pub mod io;
pub mod links;
pub mod quadrature;
pub mod rng;
pub mod screening;

pub use dataset::Dataset;
pub use datagen::{CovarianceSpec, TrueModel};
pub use error::{Error, Result};
pub use links::{LinkFamily, LinkKind};
pub use screening::{screen, Method, ScreenOptions, ScreeningReport};
