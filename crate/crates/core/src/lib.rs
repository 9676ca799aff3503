//! Fidelity model for photonic linear cluster states emitted by a periodically
//! excited, precessing quantum-emitter spin.
//!
//! The crate has three layers:
//!
//! * [`densmat`] and [`protocol`] simulate one emission run exactly, for a
//!   concrete realization of the device errors;
//! * [`closedform`] evaluates the closed-form single-shot fidelities and
//!   [`ensemble`] integrates them over the error distributions of
//!   [`stochastics`];
//! * [`studies`] and [`cli`] build parameter sweeps and optimizations on top.
//!
//! Internally every time is a multiple of the ground-state Larmor period
//! `t_lg`; see [`model`].

pub mod cli;
pub mod closedform;
pub mod densmat;
pub mod ensemble;
pub mod error;
pub mod model;
pub mod protocol;
pub mod quadrature;
pub mod stochastics;
pub mod studies;

pub use closedform::{gate_fidelity_closed, state_fidelity_closed, RotationErrors, Variant};
pub use ensemble::{
    ensemble_gate_fidelity, ensemble_state_fidelity, mc_estimate, FidelityResult, IntegrationOptions, Method,
    TimingMode,
};
pub use error::{Error, Result};
pub use model::{DeviceParams, NaturalUnits, TimeSource};
pub use protocol::{run_single, single_shot_fidelity, ErrorSample, PulseSchedule};
