pub mod behavior;
pub mod cli;
pub mod device;
pub mod empirical;
pub mod polytope;
pub mod rational;
pub mod realization;
pub mod scenario;
pub mod simplex;
