//! Stability criteria and reduced K-energy for polarized compactifications
//! of reductive groups, computed from root-system and polytope data.

pub mod cli;
pub mod criteria;
pub mod integrate;
pub mod kenergy;
pub mod linalg;
pub mod pl;
pub mod poly;
pub mod polytope;
pub mod problem;
pub mod quad;
pub mod rootdata;
pub mod report;
pub mod soliton;
