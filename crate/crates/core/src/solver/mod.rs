mod config;
mod convergence;
mod moments;
mod path;
mod pipeline;
mod step;

pub use config::{InitialState, InnerInit, InnerMethod, SolverConfig};
pub use convergence::{convergence_study, RateRow, RateTable, REFERENCE_REFINEMENT};
pub use moments::{estimate_moments, MomentReport};
pub use path::{DiagnosticsSummary, SolutionPath};
pub use pipeline::{aggregate_increments, restrict_path, solve_spde, wiener_increments, Problem, Simulation};
pub use step::{solve_transformed, StepDiagnostics};
