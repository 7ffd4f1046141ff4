//! Rigid colloids in a co-rotational Beris–Edwards nematic: pointwise
//! Q-tensor algebra, grid fields, rigid-body kinematics, a penalized
//! time stepper with an energy ledger, and a spectral Galerkin oracle.

pub mod cli;
pub mod fields;
pub mod galerkin;
pub mod rigid;
pub mod solver;
pub mod tensor;
