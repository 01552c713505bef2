//! Distributed average-consensus control for agents with partly unknown
//! scalar dynamics. Each agent compensates the unknown part with its own
//! Gaussian process model and decides locally, through an event trigger,
//! when to collect a new training point.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`, which is what the simulator
//! front-end, CLI and CSV outputs use.

pub mod analysis;
pub mod control;
pub mod gp;
pub mod integrator;
pub mod linalg;
pub mod plant;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod topology;
pub mod trigger;

pub use scalar::Real;
pub use sim::config::{CaseId, Controller, Learning, SimConfig};
pub use sim::engine::{run_episode, run_episode_as, SimError, Simulation};
pub use sim::montecarlo::{run_monte_carlo, McSummary};
pub use topology::Topology;

pub type KernelParams64 = gp::KernelParams<f64>;
pub type GpModel64 = gp::GpModel<f64>;
pub type BoundContext64 = gp::BoundContext<f64>;
pub type PlantSpec64 = plant::PlantSpec<f64>;
pub type ControlGains64 = control::ControlGains<f64>;
pub type Scenario64 = sim::config::Scenario<f64>;
pub type Trajectory64 = sim::engine::Trajectory<f64>;
pub type EpisodeSummary64 = analysis::EpisodeSummary<f64>;

pub type GpModel32 = gp::GpModel<f32>;
pub type Trajectory32 = sim::engine::Trajectory<f32>;
