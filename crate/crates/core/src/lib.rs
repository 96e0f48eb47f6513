//! Two qubits coupled to a discretized 1D bosonic field.
//!
//! The crate builds the truncated joint Hilbert space for a pair of two-level
//! atoms interacting with a symmetric momentum grid of field modes, evolves
//! states with a Krylov propagator, and compares the dynamics against
//! closed-form retarded-field predictions and a symbolic operator-algebra
//! check of the light-cone causality argument.
//!
//! Numeric modules are generic over the real scalar through [`Real`];
//! concrete `f64` aliases live at the crate root.

pub mod algebra;
pub mod causality;
pub mod error;
pub mod evolve;
pub mod model;
pub mod observables;
pub mod scalar;
pub mod theory;

pub use error::Error;
pub use scalar::Real;

/// Complex amplitude over a generic real scalar.
pub type C<T> = num_complex::Complex<T>;
/// Double-precision complex amplitude.
pub type C64 = num_complex::Complex<f64>;

pub type FieldGrid64 = model::FieldGrid<f64>;
pub type QubitParams64 = model::QubitParams<f64>;
pub type SparseHamiltonian64 = model::SparseHamiltonian<f64>;
pub type StateVector64 = model::StateVector<f64>;
pub type SetupParams64 = model::SetupParams<f64>;
pub type PropagatorConfig64 = evolve::PropagatorConfig<f64>;
pub type ProbabilityTrace64 = observables::ProbabilityTrace<f64>;
pub type CausalityReport64 = causality::CausalityReport<f64>;
