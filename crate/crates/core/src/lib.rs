#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod examples;
pub mod fnspec;
pub mod integrator;
pub mod io;
pub mod lambda;
pub mod oscillation;
pub mod testgen;
pub mod verify;
