//! Exact stationary analysis of a Markovian single-server retrial queue with
//! two orbits under join-the-shortest-orbit routing.
//!
//! Three independent routes to the same stationary distribution:
//!
//! * [`compensation`] — the exact solver: an alternating series of kernel
//!   product forms with closed-form normalization, evaluable at any state
//!   `(min orbit, orbit difference, server)`;
//! * [`oracle`] — brute-force ground truth: the truncated chain in original
//!   coordinates solved by subtraction-free banded elimination, plus tail
//!   decay-rate estimation and spectral identities;
//! * [`sim`] — a discrete-event simulator of the physical system with
//!   replication confidence intervals.
//!
//! [`model`] owns parameters, stability logic and the balance-equation
//! residual check that any candidate field must pass; [`kernel`] solves the
//! interior kernel equation feeding the compensation ladder.
//!
//! ```
//! use jsoq::{compensation::CompensationSeries, model::ModelParams, model::Server};
//!
//! let params = ModelParams::new(2.0, 10.0, 3.0).unwrap();
//! assert!(params.is_stable());
//! let series = CompensationSeries::build(&params, 1e-10, 400).unwrap();
//! let p_empty = series.probability(0, 0, Server::Idle).unwrap();
//! assert!((p_empty - 0.6859676).abs() < 1e-6);
//! ```

pub mod compensation;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod sim;

pub use error::{Error, Result};
pub use model::{ModelParams, Provenance, Server, StabilityReport, StationaryField};
