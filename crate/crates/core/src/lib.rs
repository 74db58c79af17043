#![no_std]
extern crate alloc;

pub mod cad;
pub mod geometry;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod perturb;
