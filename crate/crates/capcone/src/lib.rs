//! Capillary minimal cones invariant under `O(n-k) x O(k)`.
//!
//! The crate builds the cone profiles by ODE shooting and certifies the
//! barrier inequalities that make them minimizing:
//!
//! * [`specfun`] — Gauss hypergeometric function and the profile families;
//! * [`profile_ode`] — the profile equation, its integration and blow-up;
//! * [`shooting`] — the height/angle bijection and family sweeps;
//! * [`barriers`] — sub- and supersolution certificates and tables;
//! * [`freeboundary`] — indicial roots, cap potentials, near-right-angle cones;
//! * [`cli`] — the `cone` command-line front end.

pub mod barriers;
pub mod cli;
pub mod error;
pub mod extrema;
pub mod freeboundary;
pub mod ode;
pub mod profile_ode;
pub mod reference;
pub mod shooting;
pub mod specfun;
pub mod tolerances;

pub use error::{Error, Result};
