//! Green, Robin and p-power regular parts on axisymmetric domains.

pub mod ball;
pub mod domain;
pub mod fields;
pub mod grid;
pub mod radial;

pub use ball::{ball_green, ball_regular, ball_robin};
pub use domain::{Ball, DomainKind, DomainSpec, Lobe};
pub use fields::{
    build_dumbbell, hhat, htilde_config, read_field, write_field, FieldSidecar, regular_part_h, robin, solve_harmonic, solve_meridian_poisson, tau_tilde, GreenOptions,
    HtildeResult, MeridianField,
};
pub use grid::{GridSpec, MeridianGrid, SolveStats, SolverOptions};
pub use radial::tau_tilde_ball_center;
