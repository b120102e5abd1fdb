//! Radiative transport in the half space with anisotropic scattering.
//!
//! The solver expands the discrete-ordinates intensity in plane-wave eigenmodes
//! evaluated in rotated reference frames, so a single eigenproblem per azimuthal
//! order serves every transverse wave vector. Energy densities follow from a
//! zeroth-order Hankel transform evaluated with a double-exponential rule.
//!
//! Two independent references are included: a closed-form singular-eigenfunction
//! solution for linearly anisotropic scattering ([`analytic`]) and a photon
//! Monte Carlo simulator ([`mc`]).
//!
//! Lengths inside the library are nondimensional (units of `1/mu_t`) unless a
//! function says otherwise.

pub mod analytic;
pub mod eigen;
mod error;
pub mod halfspace;
pub mod hankel;
pub mod mc;
pub mod modes;
pub mod quadrature;
pub mod specfun;

pub use error::{Error, Result};
pub use quadrature::{MediumParams, QuadratureSet};
