//! Performance bounds and estimators for channel estimation with a 1-bit
//! receiver whose quantization threshold is unknown.
//!
//! The crate covers the Gaussian tail primitives ([`qfunc`]), the ISI pilot
//! model ([`signal`]), deterministic Fisher information and CRLBs
//! ([`fisher`]), prior-averaged bounds ([`hybrid`]), the likelihood-based
//! estimators ([`estimators`]) and a reproducible Monte-Carlo harness
//! ([`harness`]).

pub mod error;
pub mod estimators;
pub mod fisher;
pub mod harness;
pub mod hybrid;
pub mod linalg;
pub mod qfunc;
pub mod signal;

pub use error::{Error, Result};
pub use estimators::EstimateResult;
pub use fisher::{BoundMatrix, FimBlocks, Losses};
pub use harness::{Mode, PilotPolicy, ScenarioConfig};
pub use hybrid::{BoundEstimate, ExpectationMethod, PriorExpectationConfig};
pub use qfunc::Probability;
pub use signal::{ChannelParams, GaussianPrior, PilotDesign};
