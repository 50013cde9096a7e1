//! Numerical laboratory for the Calabi flow on the flat torus `C^n / (Z^n + iZ^n)`.
//!
//! Torus-invariant Kähler metrics are represented through their symplectic
//! potentials `u(x) = c|x|^2/2 + psi(x)` with `psi` periodic. In these
//! coordinates the scalar curvature is given by Abreu's formula
//! `S = -sum_ij (u^ij)_ij` and the Calabi flow becomes the fourth-order
//! parabolic equation `du/dt = sum_ij (u^ij)_ij`.
//!
//! Module map:
//! - [`field`]: periodic grids, finite differences, quadrature, Fourier modes.
//! - [`interp`]: periodic cubic Hermite interpolation.
//! - [`potential`]: symplectic potentials, Hessian bundles, M-condition, rescaling.
//! - [`geometry`]: curvature and energy functionals.
//! - [`jet`]: truncated Taylor arithmetic for pointwise evaluation on analytic potentials.
//! - [`legendre`]: duality with the Kähler-side potential.
//! - [`flow`]: time integration, diagnostics and post-processing.

// Index loops read closer to the tensor notation in the numerical kernels.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod field;
pub mod flow;
pub mod geometry;
pub mod interp;
pub mod jet;
pub mod legendre;
pub mod linalg;
pub mod potential;

pub use error::{Error, Result};
pub use field::{Backend, GridSpec, PeriodicField};
pub use flow::{DiagnosticsRecord, FlowConfig, FlowState, FlowTrace, Termination};
pub use legendre::KahlerPotential;
pub use potential::{HessianData, MConditionReport, SymplecticPotential};
