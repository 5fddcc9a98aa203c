//! Coherence of double-integrator consensus networks.
//!
//! Agents with dynamics `ẋ = v`, `v̇ = u + w` are coupled over an undirected
//! weighted graph and driven by white noise `w`. This crate evaluates the
//! per-node variance `V_N` of the deviation from the network average under
//! three controllers:
//!
//! * proportional consensus feedback ([`PGains`]),
//! * distributed averaging PI control ([`DapiGains`]),
//! * filtered distributed PD control ([`FdpdGains`]).
//!
//! Closed-form modal sums are provided alongside two independent Lyapunov
//! oracles (per mode, and on the full deflated state space), tuning routines
//! for the DAPI averaging gain and the F-DPD filter constant, an
//! Euler–Maruyama simulator, and network-size sweeps.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, CSV output and
//! the command-line front end live in the `coherence-cli` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;
mod math;

pub mod closed_loop;
pub mod graph;
pub mod h2;
pub mod lyapunov;
pub mod scaling;
pub mod simulate;
pub mod tuning;

pub use closed_loop::{
    assemble, assemble_dapi, assemble_fdpd, assemble_p, droop_preset, is_stable_mode,
    modal_subsystem, power_preset, ClosedLoopSystem, ControllerKind, DapiGains, FdpdGains, Gains,
    ModalSubsystem, PGains,
};
pub use error::{Error, Result};
pub use graph::{LaplacianSpectrum, WeightedGraph};
pub use h2::{
    vn_closed_form, vn_dapi, vn_fdpd, vn_full_oracle, vn_modal_oracle, vn_p, Method,
    ModeContribution, VarianceReport,
};
pub use lyapunov::solve_lyapunov;
pub use scaling::{fit_exponent, run_scaling, Family, ScalingPoint, ScalingResult};
pub use simulate::{
    empirical_vn, reproduce_fig1, simulate_em, Fig1Scenario, InitialState, SimConfig, Trajectory,
};
pub use tuning::{
    c_star_complete, c_star_complete_exact, c_star_numeric, classify_c_star, fdpd_dv_dtau, CStarClassification,
    CStarSearch, CStarVerdict, ScalarSearchConfig,
};
