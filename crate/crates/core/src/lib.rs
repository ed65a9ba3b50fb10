//! Exact solvers for the competitive facility location (maximum capture)
//! problem under the cross-nested logit customer choice model.
//!
//! The crate provides:
//! - evaluation of CNL choice probabilities and the captured-demand objective
//!   ([`instance`], [`choice`]),
//! - the convex change of variables with its constraint functions, gradients
//!   and the submodular set function ([`reform`]),
//! - outer-approximation and submodular cut generation ([`cuts`]),
//! - an exact combinatorial master-problem solver ([`master`]),
//! - end-to-end cutting-plane / branch-and-cut drivers plus heuristic
//!   baselines ([`drivers`]),
//! - polynomial special cases for one customer type ([`special`]),
//! - synthetic instance generation and model simplification ([`gen`]),
//! - file formats and reporting ([`io`], [`report`]).

pub mod choice;
pub mod cuts;
pub mod drivers;
pub mod error;
pub mod gen;
pub mod instance;
pub mod io;
pub mod master;
pub mod par;
pub mod reform;
pub mod report;
pub mod special;

pub use error::{Error, Result};
pub use instance::{CnlInstance, NestConfig, SolutionVector};
