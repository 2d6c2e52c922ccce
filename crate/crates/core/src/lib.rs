//! Constructive toolkit for time quasi-periodic solutions of the nonlinear
//! wave equation
//!
//! ```text
//! v_tt - Δv + v + v^{p+1} + H(x, v) = 0   on the d-torus
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] indexes space-time Fourier modes and implements sparse
//!   convolution arithmetic on them.
//! * [`radical`] is exact arithmetic in fields generated by square roots of
//!   integers; every resonance decision goes through it.
//! * [`genericity`] builds the difference sets of the seed and certifies
//!   the algebraic genericity conditions.
//! * [`characteristics`] enumerates the bi-characteristic hyperboloids,
//!   their connected pieces and the small-divisor profile.
//! * [`operator`] assembles the linearized operator on truncated boxes and
//!   measures its spectral gaps (block inverses, Schur reduction).
//! * [`solver`] runs the Lyapunov-Schmidt / Newton iteration with frequency
//!   modulation.
//! * [`cauchy`] integrates the Cauchy problem pseudospectrally.
//! * [`config`], [`artifact`] and [`pipeline`] drive everything from a
//!   configuration file and produce deterministic JSON/CSV artifacts.
//!
//! Floating-point code is generic over [`Real`] (implemented for `f32` and
//! `f64`); the aliases at the crate root fix the scalar to `f64`, which is
//! what the pipeline uses.

pub mod artifact;
pub mod cauchy;
pub mod characteristics;
pub mod config;
pub mod field;
pub mod genericity;
pub mod lattice;
pub mod linalg;
pub mod operator;
pub mod pipeline;
pub mod radical;
pub mod seed;
pub mod solver;

mod error;

pub use error::{Error, Result};

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar used by all numerical (non-exact) code.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + num_traits::NumAssign
    + rustfft::FftNum
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Complex<T> = num_complex::Complex<T>;

pub type Spectral = lattice::SpectralCoeffs<f64>;
pub type Norm = lattice::AnalyticNorm<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type CMatrix = linalg::CMatrix<f64>;
pub type OperatorBox = operator::OperatorBox<f64>;
pub type GapReport = operator::GapReport<f64>;
pub type Nonlinearity = seed::Nonlinearity<f64>;
pub type NewtonState = solver::NewtonState<f64>;
pub type SolutionArtifact = solver::SolutionArtifact<f64>;
pub type CauchyState = cauchy::CauchyState<f64>;

pub use lattice::LatticePoint;
pub use radical::RadicalNumber;
pub use seed::LinearSeed;
