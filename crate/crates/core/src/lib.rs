pub mod clt;
pub mod dense;
pub mod distributions;
pub mod ensembles;
pub mod error;
pub mod exact_moments;
pub mod limit_measure;
pub mod orthopoly;
pub mod poly;
pub mod process;
pub mod rng;
pub mod stats;
pub mod tridiag;

pub use clt::{ExperimentSpec, MCReport, StatRow};
pub use distributions::BetaParams;
pub use ensembles::{LowTempParams, ModelParams};
pub use error::{Error, Result};
pub use exact_moments::{ExactParams, RationalPoly};
pub use limit_measure::{LimitCoefficients, LimitParams, MomentSequence};
pub use poly::Poly;
pub use process::{ProcessConfig, ProcessPath, Scheme};
pub use rng::RandomStream;
pub use tridiag::{DiscreteMeasure, JacobiMatrix};
