//! Dissipative quantum binary classifier built on a collision model.
//!
//! A target qubit repeatedly interacts with fresh units from several
//! information reservoirs. Its steady state, read out through a Pauli
//! observable, is the classifier output; couplings and reservoir Bloch angles
//! are trained by gradient descent on a quadratic cost of that readout.
//!
//! - [`linalg`]: dense complex matrices, Kronecker products, partial traces, `exp(−iHt)`.
//! - [`model`]: reservoirs, Bloch angles and the classifier configuration.
//! - [`collision`]: exact repeated-interaction simulation.
//! - [`analytic`]: closed-form steady state and the decision rule.
//! - [`trainer`]: cost, gradients and the training loop.
//! - [`cli`]: configuration files and the `qdc` subcommands.

pub mod analytic;
pub mod basis;
pub mod cli;
pub mod collision;
pub mod error;
pub mod linalg;
pub mod model;
pub mod trainer;

pub use error::{QdcError, Result};
