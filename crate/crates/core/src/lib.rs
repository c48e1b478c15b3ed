//! Rigorous shadowing for discretized dynamical systems on the unit cube and
//! the flat torus: dyadic transition graphs, covering relations and
//! certified shadowing orbits.

pub mod covering;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod hp;
pub mod interval;
pub mod linalg;
pub mod oracle;
pub mod shadowing;
pub mod transition;
pub mod tube;

pub use error::{Error, FailureClass, Result};
