//! Deciding small-amplitude asymmetric bifurcation for a class of nonlocal
//! dispersive wave equations.
//!
//! The crate answers, for Whitham- and Babenko-type traveling wave equations,
//! whether small asymmetric periodic waves can branch off the zero solution:
//! it solves for kernel parameters with a four-dimensional linearization
//! kernel, builds the Taylor-Fourier expansion of the reduced problem, reads
//! off the resonance coefficient whose vanishing is necessary for asymmetric
//! bifurcation, checks the transversality data needed for sufficiency, and
//! cross-validates everything against an independent pseudo-spectral solver
//! of the complement equation.

pub mod bifurcation;
pub mod error;
pub mod expansion;
pub mod models;
pub mod multi_index;
pub mod oracle;
pub mod params;
pub mod series;
pub mod spectral;

pub use error::{Error, Result};
pub use models::{gcd, verify_kernel_dimension, KernelCertificate, KernelSpec, Model, ModelId};
pub use multi_index::{resonance_index, MultiIndexPair};
pub use params::{FixedParams, Params};
