//! Linear quantum networks of optical cavities under measurement feedback.
//!
//! The crate models networks of cavities connected by travelling fields in
//! the Gaussian regime, where the joint state is fully described by the
//! covariance matrix of the quadrature operators. It provides:
//!
//! * [`gaussian`] — covariance matrices, physicality checks, and the
//!   symplectic form;
//! * [`slh`] — input-output triples `(S, L, H)` for linear systems and their
//!   cascade algebra (padding, series products, feedback closure);
//! * [`dynamics`] — Lyapunov covariance propagation, steady states, and the
//!   Riccati equation of optimal direct-feedback design;
//! * [`entanglement`] — logarithmic negativity, purity, and the detection of
//!   sudden death and revival;
//! * [`networks`] — ready-made models: damped and dispersive cavities, the
//!   two-cavity feedback network in ideal and realistic (lossy, filtered
//!   detector) variants, and adiabatic elimination of a fast auxiliary mode.
//!
//! Every network is constructed along two independent routes — closed-form
//! drift/diffusion matrices and the cascade algebra — which are required to
//! agree to machine precision.

pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod gaussian;
pub mod networks;
pub mod slh;

pub use error::{Error, Result};
