//! Time-domain simulation of a single emission run for one concrete error
//! realization. This is the exact reference every closed-form result is
//! checked against.
//!
//! Times are in units of the Larmor period and frequencies in rad per period
//! (see [`crate::model`]).

use crate::densmat::{self, PureState};
use crate::error::{Error, Result};
use crate::model::{DeviceParams, OMEGA};

/// Zero-error herald probability of the final disentangling projection.
pub const IDEAL_HERALD_PROBABILITY: f64 = 0.5;

/// Timing deviations `e_0 … e_{n+1}` of the excitation pulses. Pulse `i`
/// nominally fires at `i/4`; `e_0` is the time reference and is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    offsets: Vec<f64>,
}

impl PulseSchedule {
    pub fn new(offsets: Vec<f64>) -> Result<Self> {
        if offsets.len() < 3 {
            return Err(Error::invalid("offsets", "need e_0..e_{n+1} with n >= 1"));
        }
        if offsets[0] != 0.0 {
            return Err(Error::invalid("offsets", "e_0 is the time reference and must be 0"));
        }
        if offsets.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("offsets", "offsets must be finite"));
        }
        Ok(Self { offsets })
    }

    /// All pulses on the nominal quarter-period grid.
    pub fn nominal(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n + 2])
    }

    /// Every cycle stretched by `shift`: pulse `i` fires at `i (1/4 + shift)`.
    pub fn uniform_shift(n: usize, shift: f64) -> Result<Self> {
        Self::new((0..n + 2).map(|i| i as f64 * shift).collect())
    }

    /// Photon count of the target cluster.
    pub fn photons(&self) -> usize {
        self.offsets.len() - 2
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Absolute firing time of pulse `i`.
    pub fn fire_time(&self, i: usize) -> f64 {
        i as f64 * 0.25 + self.offsets[i]
    }
}

/// One realized draw: the precession frequency `ω′` of this run and the
/// excited-state dwell time after every pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSample {
    pub omega_prime: f64,
    pub decay_times: Vec<f64>,
}

impl ErrorSample {
    pub fn new(omega_prime: f64, decay_times: Vec<f64>) -> Result<Self> {
        if !omega_prime.is_finite() {
            return Err(Error::invalid("omega_prime", "must be finite"));
        }
        if decay_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::invalid("decay_times", "dwell times must be finite and >= 0"));
        }
        Ok(Self {
            omega_prime,
            decay_times,
        })
    }

    /// Nominal frequency, instantaneous decays.
    pub fn ideal(n: usize) -> Self {
        Self {
            omega_prime: OMEGA,
            decay_times: vec![0.0; n + 2],
        }
    }
}

/// Result of one run after both projections.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Normalized `n`-photon state, photons in emission order.
    pub photons: PureState,
    /// Spin ⊗ cluster photons after both projections, spin still attached.
    pub register: PureState,
    /// Probability of the initialization photon projecting onto `|↑⟩`.
    pub init_probability: f64,
    /// Probability of the disentangling photon projecting onto `|↑⟩`, given
    /// the initialization outcome.
    pub herald_probability: f64,
}

impl RunOutcome {
    pub fn joint_probability(&self) -> f64 {
        self.init_probability * self.herald_probability
    }
}

/// Runs the emission protocol for one error realization.
///
/// For each pulse `i`: free ground-state precession since the previous decay,
/// excitation, excited-state precession at `g_ratio · ω′` for the dwell
/// `t_i`, then at the decay instant the spin state is copied onto a new photon
/// which passes the half-wave plate. Finally the first photon is projected
/// onto `|↑⟩` (initialization) and so is the last one (disentangling).
pub fn run_single(params: &DeviceParams, schedule: &PulseSchedule, sample: &ErrorSample) -> Result<RunOutcome> {
    let n = schedule.photons();
    if sample.decay_times.len() != n + 2 {
        return Err(Error::invalid(
            "sample",
            format!("expected {} decay times, got {}", n + 2, sample.decay_times.len()),
        ));
    }
    if n > densmat::MAX_PHOTONS {
        return Err(Error::invalid("n", format!("oracle supports at most {} photons", densmat::MAX_PHOTONS)));
    }
    let wp = sample.omega_prime;
    let excited_rate = params.g_ratio() * wp;

    let mut state = PureState::zero(1)?;
    let mut last_decay = 0.0;
    for (i, &dwell) in sample.decay_times.iter().enumerate() {
        let fire = schedule.fire_time(i);
        if i > 0 && fire < last_decay {
            return Err(Error::PulseOverlap {
                pulse: i,
                previous: i - 1,
                fire,
                decay: last_decay,
            });
        }
        let ground = fire - last_decay;
        let rotation = densmat::mat_mul(&densmat::ry(excited_rate * dwell), &densmat::ry(wp * ground));
        state = densmat::apply_single(&state, 0, &rotation)?;
        state = densmat::emit_photon(&state, 0)?;
        let photon = state.qubits() - 1;
        state = densmat::waveplate_z(&state, photon)?;
        last_decay = fire + dwell;
    }

    // register: spin, init photon, n cluster photons, disentangling photon
    let (state, init_probability) = densmat::project(&state, 1, 0)?;
    let last = state.qubits() - 1;
    let (state, herald_probability) = densmat::project(&state, last, 0)?;
    // the spin now sits in |↑⟩, a product with the photons
    let (photons, spin_up) = densmat::project(&state, 0, 0)?;
    debug_assert!((spin_up - 1.0).abs() < 1e-9);
    Ok(RunOutcome {
        photons,
        register: state,
        init_probability,
        herald_probability,
    })
}

/// Single-shot fidelity with the ideal cluster.
///
/// The initialization outcome is conditioned on; the disentangling outcome is
/// weighted by its probability relative to the error-free value 1/2. This is
/// the normalization under which the closed-form state fidelity is exact.
pub fn single_shot_fidelity(params: &DeviceParams, schedule: &PulseSchedule, sample: &ErrorSample) -> Result<f64> {
    let outcome = run_single(params, schedule, sample)?;
    let ideal = densmat::ideal_lcs(schedule.photons())?;
    let overlap = ideal.overlap(&outcome.photons)?;
    densmat::clamp_unit(overlap * outcome.herald_probability / IDEAL_HERALD_PROBABILITY, 1e-10)
}
