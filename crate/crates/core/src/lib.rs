//! Double-obstacle Isaacs equations on rectangular grids and Monte Carlo
//! verification of the associated stochastic game with stopping times.
//!
//! * [`problem`]: instances, assumption checks, stop-symbol extension;
//! * [`hamiltonian`]: upper/lower Hamiltonians, clamping, residual forms;
//! * [`grid`]: lattices, grid functions, monotone stencils;
//! * [`solver`]: explicit pseudo-time solver, VI audit, manufactured profiles;
//! * [`game`]: Monte Carlo estimation of the stopping game and saddle checks;
//! * [`config`], [`registry`]: instance files and built-in instances;
//! * [`cli`]: the command-line driver and run manifests.

pub mod cli;
pub mod config;
pub mod game;
pub mod grid;
pub mod hamiltonian;
pub mod linalg;
pub mod problem;
pub mod registry;
pub mod solver;
