//! Convergence certificates for distributed optimization algorithms.
//!
//! An algorithm is modelled as a network of LTI agents, each closed by a
//! static oracle (e.g. a gradient) that satisfies incremental sector bounds,
//! and coupled through a linear map `u = M y`. Local incremental
//! dissipativity LMIs plus one interconnection LMI certify that the network
//! is exponentially contractive (rate `γ < 1`) or nonexpansive with
//! vanishing increments (`γ = 1`, strict coupling inequality).
//!
//! Modules, bottom up:
//!
//! * [`matlib`]: dense matrices, Jacobi eigen-decomposition, Kronecker products.
//! * [`model`]: agents, sector bounds, graphs and the DGD embedding.
//! * [`lmi`]: affine LMIs in scalar decision variables and their assembly.
//! * [`sdp`]: a self-contained feasibility engine and rate bisection.
//! * [`certify`]: the certification pipeline, classical bounds, grid search.
//! * [`sim`]: closed-loop simulation and empirical error curves.
//! * [`report`]: CSV and SVG output.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod matlib;
pub mod model;
pub mod lmi;
pub mod sdp;
pub mod certify;
pub mod sim;
pub mod report;

pub use error::{Error, Result};
