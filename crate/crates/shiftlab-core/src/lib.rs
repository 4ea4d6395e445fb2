//! Numerical laboratory for operator-theory experiments on truncated Hardy
//! space: finite Blaschke products, model spaces, Riesz-family diagnostics,
//! a block-lifted shift construction, and a triadic weighted-shift operator
//! with feedback taps.
//!
//! Everything is finite-dimensional and deterministic: analytic objects are
//! carried either as truncated Taylor coefficient vectors ("ambient
//! coordinates") or in exact structured coordinates (kernel/section bases)
//! where closed forms are available. Modules report both routes where they
//! coexist, together with the truncation tail bounds that separate them.

pub mod blaschke;
pub mod experiments;
pub mod family;
pub mod golden;
pub mod hardy;
pub mod lift;
pub mod linalg;
pub mod model;
mod outer_fit;
pub mod par;
pub mod triadic;

pub use hardy::{DiskPoint, HardyVec, Symbol};
