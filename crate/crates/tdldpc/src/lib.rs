//! Absorbing-set analysis for LDPC codes built from transversal designs of
//! cyclic mutually orthogonal Latin squares.

pub mod classifier;
pub mod code;
pub mod design;
pub mod existence;
pub mod gf;
pub mod mols;
pub mod setsystem;
pub mod sim;
pub mod symbolic;
