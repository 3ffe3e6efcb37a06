//! Information hiding by chaotic iterations.
//!
//! A host image is split into coefficient bits of high, low and no
//! significance. The low-significance bits are iterated by a Boolean map
//! under a key-driven chaotic strategy, and the final configuration replaces
//! them. Detection needs the original host, key and message.

pub mod attack;
pub mod bds;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod io;
pub mod media;
pub mod scheme;
pub mod strategy;
pub mod verify;

pub use error::{Error, Result};
