//! Simulator and analysis toolkit for printed nanomodular electronics.
//!
//! The pipeline mirrors the physical process: components are deposited
//! stochastically from inks ([`deposition`]), recognized by a noisy vision
//! system ([`vision`]), matched to a logical netlist ([`assign`]), wired by a
//! grid router with insulated bridge crossings ([`route`]), and finally
//! metered for print time, timing, short yield and layout uniqueness
//! ([`analyze`]). [`bench`] generates the standard test architectures and
//! [`cli`] drives the whole flow from files.

pub mod analyze;
pub mod assign;
pub mod bench;
pub mod cli;
pub mod deposition;
pub mod error;
pub mod geometry;
pub mod model;
pub mod rng;
pub mod route;
pub mod vision;

pub use error::{Error, Result};
