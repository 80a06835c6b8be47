//! Pick-and-place task and motion planning as classical planning.
//!
//! Geometry is precompiled into lookup tables ([`precompile`]), the problem is
//! emitted as Functional STRIPS with state constraints ([`ctmp`], [`fstrips`]),
//! and solved with width-based search ([`search`]).

pub mod ctmp;
pub mod fstrips;
pub mod geometry;
pub mod precompile;
pub mod search;
