//! Brownian excursions time-changed by Krein strings: string models and
//! their classes, excursion samplers, occupation local times, the
//! additive-functional time change and the Monte Carlo experiments built
//! on top of them.
//!
//! Everything numeric is generic over [`scalar::Scalar`]; the aliases below
//! fix it to `f64`, which is what the experiments use.

pub mod error;
pub mod experiments;
pub mod localtime;
pub mod path;
pub mod quadrature;
pub mod rng;
pub mod samplers;
pub mod scalar;
pub mod strings;
pub mod timechange;

pub use error::{Error, Result};
pub use rng::SeedSpec;
pub use scalar::Scalar;

pub type StringModel = strings::StringModel<f64>;
pub type SlowlyVarying = strings::SlowlyVarying<f64>;
pub type SampledPath = path::SampledPath<f64>;
pub type GridPolicy = samplers::GridPolicy<f64>;
pub type LocalTimeField = localtime::LocalTimeField<f64>;
pub type MonotoneFunctional = timechange::MonotoneFunctional<f64>;
pub type TimeChanger = timechange::TimeChanger<f64>;
pub type PipelineConfig = timechange::PipelineConfig<f64>;
