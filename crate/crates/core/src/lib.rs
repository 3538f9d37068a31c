//! Characteristic roots of retarded delay differential equations by
//! continuation, and two-parameter stability charts built on top of them.
//!
//! The numerical kernels are generic over the working scalar ([`Real`],
//! implemented for `f32` and `f64`); the `*64` aliases below fix `f64`.

pub mod chart;
pub mod cli;
pub mod continuation;
pub mod error;
pub mod ode;
pub mod quasipoly;
pub mod scalar;
pub mod seeding;

pub use chart::{BenchmarkConfig, BenchmarkRecord, StabilityChart, SweepConfig};
pub use continuation::{ContinuationConfig, Trajectory};
pub use error::{Error, Result};
pub use quasipoly::{ParameterPoint, QuasiPolynomial, ScalarExpr, Term};
pub use scalar::Real;
pub use seeding::{RootSet, SeedConfig};

pub type QuasiPolynomial64 = QuasiPolynomial<f64>;
pub type ParameterPoint64 = ParameterPoint<f64>;
pub type RootSet64 = RootSet<f64>;
pub type SeedConfig64 = SeedConfig<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type ContinuationConfig64 = ContinuationConfig<f64>;
pub type SweepConfig64 = SweepConfig<f64>;
pub type StabilityChart64 = StabilityChart<f64>;
pub type BenchmarkConfig64 = BenchmarkConfig<f64>;
