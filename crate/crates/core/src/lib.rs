//! Exact-arithmetic construction and cross-verification of the four faces
//! of a rational polynomial of simple type: the plumbing graph of its
//! divisor at infinity, the splice diagram of its regular link at
//! infinity, an explicit polynomial, and its fibre/monodromy data.

pub mod arith;
pub mod fibres;
pub mod monodromy;
pub mod plumbing;
pub mod poly;
pub mod splice;
