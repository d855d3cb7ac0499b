//! Orthogonal bases of cusp-form spaces `S_k(Γ0(M), χ)` built from newform
//! eigenvalue data, with numerical Petersson integration and trace-operator
//! identities as independent checks, and explicit Fourier-coefficient bounds.

pub mod arith;
pub mod bounds;
pub mod error;
pub mod gram;
pub mod halfint;
pub mod modgroup;
pub mod newforms;
pub mod orthobasis;
pub mod petersson;
pub mod qseries;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
