//! Ensembles of regression phalanxes.
//!
//! Features are partitioned into phalanxes: subsets that predict well when
//! modelled together. One base regressor (Lasso or random forest) is fit per
//! phalanx and their predictions are averaged.
//!
//! Numeric code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix the scalar type.

pub mod cli;
pub mod data;
pub mod error;
pub mod formation;
pub mod ingest;
pub mod metrics;
pub mod regress;
pub mod scalar;
pub mod seed;
pub mod simulate;

pub use error::{ErpxError, Result};
pub use formation::{form_erpx, predict_erpx};
pub use seed::RngSeed;

pub type Matrix64 = data::Matrix<f64>;
pub type Matrix32 = data::Matrix<f32>;
pub type Dataset64 = data::Dataset<f64>;
pub type Dataset32 = data::Dataset<f32>;
pub type ErpxModel64 = formation::ErpxModel<f64>;
pub type ErpxModel32 = formation::ErpxModel<f32>;
pub type FormationConfig64 = formation::FormationConfig<f64>;
pub type FormationConfig32 = formation::FormationConfig<f32>;
pub type FittedModel64 = regress::FittedModel<f64>;
pub type FittedModel32 = regress::FittedModel<f32>;
