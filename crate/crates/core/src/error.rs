use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample value {value} at grid point {point:?}")]
    NonFiniteSample { point: Vec<f64>, value: f64 },

    #[error("unsupported derivative order {0}; at most 4 is available")]
    UnsupportedOrder(usize),

    #[error("Fourier mode {mode:?} aliases on a grid with {points} points per axis")]
    AliasedMode { mode: Vec<i64>, points: usize },

    /// The Hessian of a potential stopped being positive definite.
    #[error("convexity lost at {point:?}: smallest Hessian eigenvalue {eig_min:e}")]
    ConvexityLoss { point: Vec<f64>, eig_min: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The literal curvature-norm sum came out structurally negative.
    #[error("|Rm|^2 = {value:e} is negative at {point:?}")]
    FormulaAnomaly { point: Vec<f64>, value: f64 },

    #[error("Newton iteration failed at node {node:?}: residual {residual:e} after {iterations} iterations")]
    NewtonNonconvergence {
        node: Vec<f64>,
        residual: f64,
        iterations: usize,
    },

    #[error("step size {dt:e} fell below dt_min = {dt_min:e} at t = {t}")]
    StiffnessFailure { t: f64, dt: f64, dt_min: f64 },

    #[error("Calabi energy {ca:e} exceeded 1e3 x its initial value {ca0:e} at t = {t}")]
    BlowupSuspected { t: f64, ca: f64, ca0: f64 },

    #[error("nothing to blow up: curvature vanishes identically")]
    NothingToBlowUp,

    #[error("need at least 3 snapshots, found {0}")]
    InsufficientSnapshots(usize),
}
