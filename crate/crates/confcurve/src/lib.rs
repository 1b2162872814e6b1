//! Likelihood-based confidence curves and confidence distributions for
//! scalar-parameter models, with median bias correction of the
//! log-likelihood ratio, the modified directed likelihood, an asymptotic
//! expansion toolkit, and a deterministic Monte Carlo calibration engine.

pub mod asymptotics;
pub mod calib;
pub mod confidence;
pub mod dist;
pub mod error;
pub mod expfam;
pub mod export;
pub mod gpd;
pub mod grid;
pub mod mbc;
pub mod mc;
pub mod models;
pub mod roots;
pub mod rstar;
pub mod series;
pub mod studies;

pub use error::{Error, Result};
