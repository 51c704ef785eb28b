//! Discrete-time quantum walks on the line with space-time dependent coins.
//!
//! The walks studied here do not admit a continuum limit step by step, but
//! their two-step (stroboscopic) view does: it converges to a massless Dirac
//! fermion propagating in the curved 2-D metric `diag(1, -1/cos²θ)`. The crate
//! provides the exact lattice evolution ([`walk`]), an independent upwind
//! solver for the limiting transport equations ([`continuum`]), the
//! Schwarzschild coin field in Lemaître coordinates together with its null
//! geodesics ([`schwarzschild`]), post-processing ([`analysis`]) and the
//! file-producing pipelines used by the `qwalk` binary ([`pipeline`]).

pub mod analysis;
pub mod coin;
pub mod config;
pub mod continuum;
mod error;
pub mod output;
pub mod pipeline;
pub mod schwarzschild;
pub mod walk;

pub use num_complex::Complex64;

pub use coin::{build_coin, eval_angle, AngleField, CoinAngleField, CoinMatrix, TabulatedAngles};
pub use config::{Panel, RunConfig};
pub use continuum::{ContinuumState, Diad, Metric2D, SpinBasisRotation};
pub use error::{Error, Result};
pub use schwarzschild::{GeodesicTrack, SchwarzschildParams, Termination};
pub use walk::{LatticeGrid, WalkState};
