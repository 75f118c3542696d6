//! Truncated dual n₁-Appell-like systems over symmetric tensor algebras,
//! with exact rational and floating-point backends.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod appell;
pub mod cli;
pub mod config;
pub mod dchi;
pub mod dualsys;
pub mod error;
pub mod hspace;
pub mod kingman;
pub mod sample;
pub mod scalar;
pub mod series;
pub mod symtensor;
pub mod verify;
