//! Monostatic MIMO-OFDM sensing: echo synthesis for moving point targets and
//! recovery of their distance, angles, radial velocity and angular
//! velocities.
//!
//! The pipeline runs
//! [`airlink::synthesize_echoes`] → [`airlink::erase_symbols`] →
//! [`airlink::suppress_clutter`] → [`motion::estimate_6d`].
//! [`harness`] wraps it in seeded Monte Carlo sweeps.

pub mod airlink;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod kinematics;
pub mod motion;
pub mod subspace;

pub use airlink::{EchoTensor, Stage, SymbolFrame};
pub use channel::{ChannelMode, ClutterModel};
pub use error::{Error, Result, Step};
pub use geometry::{ArrayGeometry, SddPair, SphericalPoint, SPEED_OF_LIGHT};
pub use kinematics::{OfdmGrid, PlaneCoeffs, TargetState};
pub use motion::{estimate_6d, Estimate6D, EstimatorConfig};
