//! Weak and strong critical values of branching random walks (BRWs) on
//! weighted multigraphs.
//!
//! A λ-BRW places particles on the vertices of a multigraph; every particle
//! dies at rate 1 and, along each edge leaving its site, places a child at
//! rate λ. Two thresholds govern the long-run behaviour:
//!
//! * `λ_w`: above it the total population survives with positive
//!   probability (weak or global survival);
//! * `λ_s`: above it a fixed site is revisited at arbitrarily large times
//!   (strong or local survival).
//!
//! The crate computes both where they are computable exactly and estimates
//! them everywhere else:
//!
//! * [`graph`] holds the multigraph data model, lazily generated infinite
//!   families and exact (big-integer) path counting;
//! * [`genfun`] truncates the first-return generating function and extracts
//!   `λ_s = 1/M_s` by bisection, plus growth-rate diagnostics;
//! * [`quotient`] builds and verifies local isomorphisms onto finite
//!   multigraphs via equitable-partition refinement;
//! * [`spectral`] computes Perron roots (`M_w` on finite quotients), ball
//!   operator norms (lower bounds on `M_s`) and the amenability classifier;
//! * [`branching`] has the Galton–Watson fixed-point machinery;
//! * [`sim`] is an event-driven simulator of edge- and site-breeding BRWs
//!   with survival estimators and the quotient projection;
//! * [`cli`] is the `brw` command-line front end.
//!
//! Runnable programs for each capability live in the crate's `examples/`
//! directory.

pub mod branching;
pub mod cli;
pub mod error;
pub mod genfun;
pub mod graph;
pub mod quotient;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{Ball, Counts, GraphFamily, Rooted, Vertex, WeightedMultigraph};
pub use quotient::{Partition, QuotientMap};
