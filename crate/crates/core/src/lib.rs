//! Colorings of variable words: insensitivity constructions, monochromatic
//! witnesses, finite-unions search, bound arithmetic and exact small values.

pub mod bounds;
pub mod certificate;
pub mod cli;
pub mod coloring;
pub mod exact;
pub mod insensitivity;
pub mod solver;
pub mod unions;
pub mod word;
