//! Quasi-static analysis of a short cable in a Kirchhoff-law–Johnson-noise
//! (KLJN) key exchanger.
//!
//! * [`cable`]: per-unit-length parameters and the derived constants
//!   (wave velocity, wave impedance, lowest wave-mode frequency).
//! * [`ac`]: phasor solver for the lumped cable models, directional phase
//!   shifts and delays, equivalent phase velocities, frequency sweeps.
//! * [`wave`]: exact lossless telegrapher two-port used as ground truth.
//! * [`thermal`]: Johnson–Nyquist energy budgets of the cable.
//! * [`kljn`]: time-domain bit-exchange simulation with an eavesdropper.

pub mod ac;
pub mod cable;
pub mod constants;
pub mod error;
pub mod kljn;
pub mod signal;
pub mod thermal;
pub mod wave;

pub use ac::{Direction, End, NetworkModel, PhasorSolution, Termination, Topology};
pub use cable::{CableDerived, CableSpec};
pub use error::{Error, Result};
