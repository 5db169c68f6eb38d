//! Inhomogeneous random graphs `G(n, K)` at intermediate density.
//!
//! Vertices carry i.i.d. positions `X_i ~ mu` on a ground space and each
//! pair is joined independently with probability
//! `min(1, K(X_i, X_j) ln(n)/n)`. The graph is connected w.h.p. when the
//! isolation parameter `lambda* = essinf_x int K(x, y) dmu(y)` exceeds 1
//! (given irreducibility and bounded `lambda2`) and disconnected when it is
//! below 1. This crate samples the model, evaluates the kernel functionals
//! and the related tail bounds, and runs reproducible Monte Carlo checks.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod kernel;
pub mod partition;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod space;
pub mod svg;

pub use error::{IrgError, Result};
pub use graph::{connected_components, ComponentSummary};
pub use kernel::{KernelFunctionals, KernelSpec};
pub use sampler::{edge_probability, sample_graph, SampleMode, SampledGraph};
pub use space::{Cell, Point, SpaceSpec};
