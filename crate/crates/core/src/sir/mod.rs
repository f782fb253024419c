//! Multi-group SIR contagion by firm size, with CIR-driven coefficients.

mod diagnostics;
mod dynamics;
mod environment;
mod kernel;
mod state;

pub use diagnostics::{peak, prevalence, r_max, trajectory_rows, Peak, TrajectoryMean, TrajectoryRow};
pub use dynamics::{euler_step, force_of_infection, simulate_sir, simulate_sir_substeps, SirTrajectory};
pub use environment::{
    allocate_initial_infected, initial_state, EnvironmentSpec, ParameterPaths,
};
pub use kernel::{splitting_matrix, SplittingMatrix};
pub use state::{harmonic, scale_rates, SirParamsAt, SirState};
