// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Constant-factor approximation of continuous dynamic time warping (CDTW)
//! between planar polygonal curves.
//!
//! The distance between two curves is the cheapest monotone path through
//! their parameter space, where a path pays the distance between matched
//! points per unit of combined arc length. [`propagate::cdtw_approx`] returns
//! a value within factor 5 of that optimum under any polygonal norm, by
//! pushing piecewise-quadratic cost functions through the grid of cells.
//! Other norms are first replaced by a polygonal one
//! ([`norms::approximate_norm`]).
//!
//! The [`oracle`] module holds independent references (a grid dynamic
//! program and a quadrature path integrator) used to validate the results.

pub mod cell;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod io;
pub mod norms;
pub mod oracle;
pub mod plot;
pub mod propagate;
pub mod pwq;
pub mod random;

pub use error::{CdtwError, Result};
pub use geometry::{ArcTable, Point2, PolygonalCurve};
pub use norms::{ApproxConfig, GaugePolygon, NormHandle};

pub use propagate::{cdtw_approx, Approximation};
pub use pwq::PiecewiseQuadratic;
