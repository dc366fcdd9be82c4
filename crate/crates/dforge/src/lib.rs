//! Constructions and checks for the groups G(p,q): presentations, small
//! cancellation certificates, distortion witnesses and growth curves.

pub mod cli;
pub mod curve;
pub mod derivation;
pub mod error;
pub mod hnn;
pub mod presentation;
pub mod qgroup;
pub mod sc;
pub mod witness;
pub mod words;

pub use error::{Error, Result};
