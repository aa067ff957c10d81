//! Simulation and optimization of waveguide-fed pinching-antenna arrays.
//!
//! An array of N movable radiating elements taps power off a dielectric
//! waveguide; each element's split coefficient decides how much amplitude
//! continues down the guide. The library models the resulting multi-user
//! channels and maximizes energy efficiency over three variable blocks:
//! per-user transmit powers (ratio iteration + water-filling), element
//! locations (per-element grid search), and split coefficients (projected
//! gradient ascent), wrapped in dynamic/static coordinate-ascent designs.

pub mod config;
pub mod coupling;
pub mod em;
pub mod error;
pub mod orchestrator;
pub mod placement;
pub mod power;
pub mod scenario;

pub use config::{dbm_to_watts, watts_to_dbm, LogBase, SystemConfig};
pub use coupling::{tune_coupling, CouplingObjective, CouplingSample};
pub use em::{ChannelEvaluation, Layout, SplitVector, UserFrame};
pub use error::{PassError, Result};
pub use orchestrator::{
    solve, solve_baseline_fixed_antenna, solve_dynamic, solve_static, AllocationObjective,
    CouplingPolicy, DesignMode, DesignOutcome, PlacementPolicy,
};
pub use placement::{GridSpec, PlacementMode, PlacementObjective};
pub use power::{dinkelbach_allocate, se_allocate, water_fill, AllocationProblem, AllocationResult};
pub use scenario::{generate_scenario, Scenario};
