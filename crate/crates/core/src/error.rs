use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExponentError {
    #[error("inadmissible exponents (N = {n}, p = {p}): {reason}")]
    Inadmissible { n: usize, p: f64, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BubbleError {
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error("no bracket: {0}")]
    NoBracket(String),
    #[error("unresolved: {0}")]
    Unresolved(String),
    #[error("bad tail fit: {0}")]
    BadFit(String),
    #[error("integrator failure: {0}")]
    Ode(#[from] OdeError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstantsError {
    #[error("integrand decays like r^-{exponent}, not integrable in dimension {n}")]
    Divergent { exponent: f64, n: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreensError {
    #[error("Green function evaluated at coincident points")]
    Coincident,
    #[error("linear solver stopped after {iterations} iterations at relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("source at {xi} needs a cutoff of {cutoff:e} but the grid spacing is {h:e}")]
    SingularOverlap { xi: f64, cutoff: f64, h: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("neck radius {eta} spans fewer than 4 cells of size {h}")]
    ResolutionTooCoarse { eta: f64, h: f64 },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("point ({x}, {rho}) is outside the domain or too close to its boundary")]
    OutsideDomain { x: f64, rho: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReducedError {
    #[error("epsilon {eps:e} is above the small-mu threshold {eps_bar:e}")]
    OutOfRange { eps: f64, eps_bar: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("k = {k} exceeds the number of lobes l = {l}")]
    TooManyPeaks { k: usize, l: usize },
    #[error("minimizer pinned to the boundary of the admissible box at {0:?}")]
    Boundary(Vec<f64>),
    #[error(transparent)]
    Greens(#[from] GreensError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DirectError {
    #[error("Newton diverged: {0}")]
    Diverged(String),
    #[error("peak of width {mu:e} spans only {cells} cells (need {required})")]
    Unresolved { mu: f64, cells: usize, required: usize },
    #[error("branch too short for a scaling fit: {0}")]
    InsufficientRange(String),
    #[error(transparent)]
    Reduced(#[from] ReducedError),
}
