//! Work statistics of a cyclically driven Ohmic thermal bath, optionally
//! coupled to a spin, fermionic or topological qubit.
//!
//! The crate evaluates the second-order work characteristic function
//! χ⁽²⁾(v), the work distribution P⁽²⁾(W), the mean extracted work and the
//! Jarzynski deficit χ⁽²⁾(iβ) − 1 from frequency-domain real-time Green
//! functions. For the pure bath it also builds the all-order characteristic
//! function exp(χ⁽²⁾(v) − 1) and inverts it by FFT. On top of that sit the
//! engine/refrigerator analysis ([`thermo`]) and 2-D parameter sweeps with
//! zero-level contour extraction ([`sweep`], [`contour`]).
//!
//! Units: the Ohmic cutoff `l_c` sets the unit of time (and of inverse
//! energy); every parameter is expressed in those units.

pub mod contour;
mod error;
pub mod green;
pub mod model;
pub mod par;
pub mod quad;
pub mod spectral;
pub mod sweep;
pub mod thermo;
pub mod verify;
pub mod workstats;

pub use error::{Error, Result};
pub use green::GreenPair;
pub use model::{
    beta_q, validate, Coupling, DrivenSource, FrequencyGrid, OhmicSpectrum, QuadRule, QubitSpec, SystemSpec,
    ValidationReport,
};
pub use par::Execution;
pub use workstats::WorkDistribution;
