//! Rate functionals, minimum-action paths, quasipotentials and exit-time
//! asymptotics in the small-noise limit.

mod action;
mod exit_laws;
mod hamilton;
mod legendre;

pub use action::{
    boundary_quasipotential, fw_rate, fw_rate_gradient, minimize_action, minimize_from, quasipotential, schilder_rate,
    ActionMinimum, ActionPath, BoundaryQuasipotential, MinimizeOptions, PathInit, QuasipotentialOptions,
    QuasipotentialResult, BOUNDARY_SAMPLES,
};
pub use exit_laws::{
    arrhenius_check, eyring_kramers_time, ou_exit_rate, ou_exit_rate_limit, ou_optimal_path, ArrheniusFit,
};
pub use hamilton::{hamilton_flow, hamiltonian, HamiltonTrajectory, HamiltonianState, FLOW_FD_STEP};
pub use legendre::{legendre_transform, LegendrePair};
