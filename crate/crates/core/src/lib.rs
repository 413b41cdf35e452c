//! Block matrix groups acting on tori by automorphisms, and mechanical checks
//! of their ergodic-theoretic properties.
//!
//! The groups are the `(k + n + 1)`-square integer matrices
//!
//! ```text
//!     [ Λ   M_{k,n}(Z)  Z^k ]
//!     [ 0   SL(n, Z)    Z^n ]
//!     [ 0   0           1   ]
//! ```
//!
//! with `Λ ⊂ SL(k, Z)`. The linear part Γ acts on the translation lattice
//! `H ≅ Z^{k+n}` by conjugation and hence on the dual torus `T^{k+n}`.

pub mod dual_dynamics;
pub mod error;
pub mod exact_linalg;
pub mod group_model;
pub mod relt_certificate;
pub mod replay;
pub mod report;
pub mod small_n_classify;
pub mod spectral_witness;

pub use error::{Error, Result};
pub use exact_linalg::{IntMatrix, IntPolynomial, LatticeVector};
