//! Reduced energy: the ε–μ law, the functionals G₀ and G_h, and their
//! critical configurations.

pub mod functional;
pub mod minimize;
pub mod report;
pub mod scaling;

pub use functional::{AxisTable, Coefficients, Configuration, G0Terms, ReducedModel, TableOptions, TauModel};
pub use minimize::{
    distinct_minima, enumerate_lobe_subsets, lobe_seeds, minimize, LambdaBox, LocatedMinimum, MinimizeOptions, Seed,
};
pub use report::{report, ReducedReport};
pub use scaling::{eps_bar, eps_from_mu, mu_from_eps};
