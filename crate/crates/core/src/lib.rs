//! Symmetric equilibrium of information acquisition on social networks.
//!
//! Voters with heterogeneous values of information choose effort to learn
//! a binary state; anyone who succeeds informs their whole component of the
//! network. The crate solves the mean-field equilibrium, runs comparative
//! statics, and cross-checks the analytics on explicit graphs.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod distributions;
pub mod equilibrium;
pub mod error;
pub mod netsim;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod statics;
pub mod technology;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type PreferenceDistribution64 = distributions::PreferenceDistribution<f64>;
pub type ValueDistribution64 = distributions::ValueDistribution<f64>;
pub type ConnectionDistribution64 = distributions::ConnectionDistribution<f64>;
pub type SuccessTechnology64 = technology::SuccessTechnology<f64>;
pub type CostFunction64 = technology::CostFunction<f64>;
pub type Settings64 = equilibrium::Settings<f64>;
pub type Scenario64 = equilibrium::Scenario<f64>;
pub type EquilibriumSolution64 = equilibrium::EquilibriumSolution<f64>;
pub type Policy64 = equilibrium::Policy<f64>;
pub type SweepReport64 = statics::SweepReport<f64>;
pub type VolunteerReport64 = statics::VolunteerReport<f64>;
pub type SimReport64 = netsim::SimReport<f64>;
