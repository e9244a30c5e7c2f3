//! Phasor-domain simulation and small-signal analysis of power systems
//! supplied entirely by full-scale wind generators under capacitor voltage
//! synchronizing control.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod config;
pub mod cvsc;
pub mod dynamics;
pub mod linalg;
pub mod network;
pub mod smallsignal;
pub mod sysmodel;
pub mod wpg;

pub use num_complex::Complex64;
