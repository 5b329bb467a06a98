#![allow(dead_code)]

pub mod manufactured;
pub mod ode;
