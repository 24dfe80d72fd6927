//! Brute-force oracles and gradient checks shared by the test targets.
#![allow(dead_code)]

pub mod grad;
pub mod oracle;
