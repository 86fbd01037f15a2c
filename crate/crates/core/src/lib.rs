//! Reaction-diffusion laboratory for gene-drive and Wolbachia invasion fronts.
//!
//! The deterministic core ([`models`], [`solver`], [`wave`]) is generic over
//! [`Scalar`] (`f32` or `f64`); the aliases below fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod io;
pub mod models;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod stochastic;
pub mod sweep;
pub mod theory;
pub mod tridiag;
pub mod wave;

pub use error::{Error, Result};
pub use models::{DemographyKind, ScalarKind, Selection, SystemKind};
pub use scalar::Scalar;

pub type Demography = models::DemographySpec<f64>;
pub type Genotype = models::GenotypeParams<f64>;
pub type Wolbachia = models::WolbachiaParams<f64>;
pub type Model = models::ModelSpec<f64>;
pub type Grid = solver::Grid1D<f64>;
pub type State = solver::FieldState<f64>;
pub type Initial = solver::InitialCondition<f64>;
pub type Config = solver::SimConfig<f64>;
