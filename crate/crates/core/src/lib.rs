//! Exact-arithmetic kernels for p-adic descent data and disc geometry.
//!
//! The crate is organized around a fixed-precision p-adic layer
//! ([`padic`]), a truncated divided-power series engine ([`series`]), and
//! the descent/geometry modules built on top of them:
//!
//! - [`log_point`]: descent data over log points, monodromy extraction,
//!   cocycle and (φ, N)-compatibility checks;
//! - [`line_node`]: descent over the affine line and the node, branch and
//!   center restrictions, divisibility-based descent tests;
//! - [`points`]: classification and valuations of points on the adic disc,
//!   Gauss/spectral norms, Newton polygons;
//! - [`model`]: semistable annulus models, specialization, covering
//!   combinatorics;
//! - [`dodging`]: explicit coordinate modifications and their valuation
//!   bookkeeping;
//! - [`connection`]: log connections on the thick annulus, residues, and
//!   horizontal-section solving.
//!
//! All verdicts are exact "mod p^M, to order D": the precision `M` and
//! series order `D` travel with every value and no operation silently
//! degrades them.

pub mod connection;
pub mod dodging;
pub mod error;
pub mod line_node;
pub mod log_point;
pub mod model;
pub mod padic;
pub mod points;
pub mod series;

pub use error::{Error, Result};
pub use padic::{
    nilpotency_profile, teichmuller_lift, unit_rank, PadicMatrix, PadicScalar, PrecisionContext,
    Rational, ValueExponent,
};
pub use series::{binomial_power, log1p_series, PDSeries, RingSpec, Substitution, Truncation, VarKind};
