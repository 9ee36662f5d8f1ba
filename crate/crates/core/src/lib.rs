//! Simulation and exact computation for minimal directed spanning forests
//! on random planar points, and for the on-line linear trees that govern
//! their boundary behaviour.
//!
//! - [`geometry`]: cone partial orders, points, regions.
//! - [`pointproc`]: reproducible binomial/Poisson samples and uniform
//!   sequences, seeded by [`pointproc::SeedSpec`].
//! - [`mdsf`]: the forest builders (grid-accelerated and naive oracle) and
//!   weight functionals.
//! - [`dlt`]: the on-line directed linear forest/tree on a real sequence.
//! - [`analytic`]: closed-form moments, limit constants, quadrature, and the
//!   central-moment recursion of the centred linear-tree limit.
//! - [`fixedpoint`]: samplers for the limit fixed points and the smoothing
//!   maps that characterise them.
//! - [`lab`]: the experiment harness behind the CLI.

// Numeric-code idioms the style lints dislike: published constants kept at
// full printed precision, and `!(x > 0.0)`-style guards that reject NaN
// together with the out-of-range values.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod dlt;
pub mod fixedpoint;
pub mod format;
pub mod geometry;
pub mod lab;
pub mod mdsf;
pub mod pointproc;

pub use geometry::{ConeOrder, Point, Rect};
pub use pointproc::SeedSpec;
