//! Multicorrelation sequences of commuting actions, polynomial-bracket
//! iterates, suspension flows, fractional-part densities and nilsequence
//! approximants.
//!
//! The numerical core is generic over the scalar `T: Real` (and `Scalar`
//! where group laws need exact arithmetic); the aliases below fix `f64` or
//! exact rationals for everyday use.

pub mod averaging;
pub mod correlate;
pub mod equidist;
pub mod error;
pub mod fixed;
pub mod nilseq;
pub mod observables;
pub mod poly;
pub mod reduce;
pub mod scalar;
pub mod suspension;
pub mod systems;

use num_complex::Complex;
use num_rational::Ratio;

pub use error::{Error, Result};
pub use fixed::Fixed;

pub type C64 = Complex<f64>;
pub type TorusPoint64 = systems::TorusPoint<f64>;
pub type NilPoint64 = systems::NilPoint<f64>;
pub type Heisenberg64 = systems::HeisenbergElement<f64>;
/// Exact Heisenberg elements, for group-law oracles.
pub type HeisenbergQ = systems::HeisenbergElement<Ratio<i64>>;
pub type HeisenbergAction64 = systems::HeisenbergAction<f64>;
pub type TorusObs64 = observables::Obs<TorusPoint64, f64>;
pub type NilObs64 = observables::Obs<NilPoint64, f64>;
pub type TorusSpec64 = correlate::CorrelationSpec<systems::TorusAction, f64>;
pub type HeisenbergSpec64 = correlate::CorrelationSpec<HeisenbergAction64, f64>;
pub type Nilsequence64 = nilseq::Nilsequence<f64>;
