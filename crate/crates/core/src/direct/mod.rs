//! Direct radial solves of the perturbed system on a ball.

pub mod continuation;
pub mod newton;
pub mod nonlinearity;

pub use continuation::{branch_scaling, continuation, ContinuationOptions, scaling_check, synthetic_branch, Branch, BranchPoint, LineFit, ScalingFit};
pub use newton::{GridMap, bubble_ansatz, radial_newton, radial_newton_forced, NewtonOptions, RadialGrid, RadialSolution};
pub use nonlinearity::{growth_checks, growth_suite, power_log, GrowthViolations, Nonlinearity};
