//! Steady states, Liouvillian eigenmode spectra, and single-particle Green's
//! functions of a driven-dissipative Kerr (quantum van der Pol) oscillator.
//!
//! The pipeline: build the Lindblad model and its vectorized generator
//! ([`lindblad`]), split it into U(1) charge sectors, compute the biorthogonal
//! eigenmode set and the steady state ([`spectrum`]), then evaluate
//! Lehmann-type pole sums for retarded and Keldysh Green's functions,
//! spectral functions, and effective temperatures ([`greens`]). Perturbative
//! lifetime and beyond-lifetime approximations live in [`perturbation`];
//! steady-state structure scans, negative density-of-states detection, and
//! phase-diagram sweeps in [`analysis`]. Everything spectral can be
//! cross-checked against direct time propagation ([`ode`]).
//!
//! All numerics are generic over the scalar precision through the
//! [`Float`] trait; the `*64` aliases below are the concrete types used by
//! the command line front end and the test suite.

pub mod analysis;
pub mod error;
pub mod fock;
pub mod greens;
pub mod lindblad;
pub mod ode;
pub mod perturbation;
pub mod scalar;
pub mod spectrum;

pub use error::{Error, Result};
pub use scalar::{EigPairs, Float};

/// Complex double, the element type of the f64 specializations.
pub type C64 = num_complex::Complex<f64>;

pub type FockOperator64 = fock::FockOperator<f64>;
pub type VdpParams64 = lindblad::VdpParams<f64>;
pub type LindbladModel64 = lindblad::LindbladModel<f64>;
pub type Superoperator64 = lindblad::Superoperator<f64>;
pub type BlockDecomposition64 = lindblad::BlockDecomposition<f64>;
pub type LiouvilleSpectrum64 = spectrum::LiouvilleSpectrum<f64>;
pub type EigenMode64 = spectrum::EigenMode<f64>;
pub type OmegaGrid64 = greens::OmegaGrid<f64>;
pub type PoleData64 = greens::PoleData<f64>;
pub type SpectralResult64 = greens::SpectralResult<f64>;
pub type PerturbativeMode64 = perturbation::PerturbativeMode<f64>;
pub type PopulationOracle64 = analysis::PopulationOracle<f64>;
pub type PhaseDiagram64 = analysis::PhaseDiagram<f64>;
