//! Choquet regularizers for exploratory control.
//!
//! Distortion functions and their Choquet integrals over quantile
//! functions, the mean–variance constrained maximizer, the closed-form
//! exploratory linear–quadratic solution and its Monte Carlo check.
//!
//! Every numeric type is generic over [`Scalar`] (`f32` or `f64`). The
//! root aliases fix `f64`; the [`f32`](mod@f32) module fixes `f32`.

pub mod choquet;
pub mod dist;
pub mod distortion;
pub mod error;
pub mod lqcontrol;
pub mod mcsim;
pub mod params;
pub mod quad;
pub mod scalar;
pub mod staticopt;
pub mod table;

pub use choquet::{differential_entropy, phi, phi_quantile, phi_survival, Route};
pub use dist::{quantile_l2_distance, ConvexOrder, Kind};
pub use distortion::{DistortionKind, ValidityReport};
pub use error::{Error, Result};
pub use lqcontrol::{Residuals, WellPosedness};
pub use mcsim::{estimate_value, simulate_state, transversality_check, RegularizerMode, SimConfig, SimResult};
pub use scalar::Scalar;
pub use staticopt::{maximize, oracle_falsify, MvConstraint};

pub type Distribution = dist::Distribution<f64>;
pub type Distortion = distortion::Distortion<f64>;
pub type LqModel = lqcontrol::LqModel<f64>;
pub type LqSolution = lqcontrol::LqSolution<f64>;
pub type RegularizerValue = choquet::RegularizerValue<f64>;
pub type Optimum = staticopt::Optimum<f64>;

pub mod f32 {
    pub type Distribution = crate::dist::Distribution<f32>;
    pub type Distortion = crate::distortion::Distortion<f32>;
    pub type LqModel = crate::lqcontrol::LqModel<f32>;
    pub type LqSolution = crate::lqcontrol::LqSolution<f32>;
    pub type RegularizerValue = crate::choquet::RegularizerValue<f32>;
    pub type Optimum = crate::staticopt::Optimum<f32>;
}
