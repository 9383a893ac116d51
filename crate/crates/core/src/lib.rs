//! Link-level simulation and optimization toolkit for space shift keying (SSK)
//! assisted by a reconfigurable intelligent surface (RIS).
//!
//! Two schemes are covered:
//!
//! * **RIS-SSK-PB**: the surface applies a fixed passive beamformer chosen to
//!   maximize the minimum squared distance between the received points of any
//!   two transmit antennas ([`beamform`], [`pb_link`]).
//! * **RIS-SSK-ASTBC**: the surface is split into two halves that realize a
//!   virtual Alamouti code carrying the surface's own PSK data while the
//!   source's SSK signal is reflected ([`astbc_link`]).
//!
//! [`analysis`] holds the closed-form error-probability approximations and
//! [`harness`] drives Monte Carlo sweeps, validation checks and result files.

pub mod analysis;
pub mod astbc_link;
pub mod beamform;
pub mod channel;
pub mod error;
pub mod harness;
pub mod pb_link;

pub use num_complex::Complex64;

pub use analysis::{Abep, AbepQuery, GaussianApproxParams};
pub use astbc_link::{AstbcDecision, AstbcFrame, EquivalentChannel};
pub use beamform::{ReflectionVector, SdrDiagnostics, SdrOptions, SdrSolution};
pub use channel::{ChannelRealization, NoiseModel, Purpose, StreamKey};
pub use error::{Error, Result};
pub use harness::{BerRecord, Scheme, SimConfig};
pub use pb_link::SskSymbol;
