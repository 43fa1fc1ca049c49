//! Laws of the model, their validation against the modelling assumptions,
//! and exact moment, tail and marginal computations.

mod config;
mod law;
mod moments;

pub use config::{
    AuthorCountLaw, BonusScheme, Mode, ModelConfig, Truncation, ValidationErrors, Violation,
};
pub use law::{CdfTable, LawSampler, ScaledLaw, WeightLaw};
pub use moments::{Moments, NotDiscrete};
