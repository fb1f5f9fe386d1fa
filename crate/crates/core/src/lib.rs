//! Exact diagonalization of a two-component Bose-Hubbard chain with a laser
//! drive on its last site.
//!
//! The numerical kernels are generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix them to `f64`, which is what the sweeps and
//! the command-line tool use.

pub mod analytic;
pub mod basis;
pub mod dynamics;
pub mod eigensolver;
pub mod experiment;
pub mod hamiltonian;
pub mod observables;
pub mod scalar;
pub mod tridiag;

pub use basis::{BasisError, BasisTable, OccupationState};
pub use eigensolver::{dense_oracle, lowest_eigenpairs, SolverError};
pub use hamiltonian::{build_hamiltonian, drive_operator, Boundary, OperatorError};
pub use scalar::{Complex, Real};

pub type Params = hamiltonian::ModelParams<f64>;
pub type Operator = hamiltonian::SparseOperator<f64>;
pub type Solution = eigensolver::EigenSolution<f64>;
pub type State = observables::StateVector<f64>;
pub type Spectrum = observables::SchmidtSpectrum<f64>;
pub type Thresholds = analytic::ThresholdSet<f64>;
pub type Ramp = dynamics::RampSchedule<f64>;
