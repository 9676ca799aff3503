//! Rotation-error sets and closed-form single-shot fidelities.
//!
//! Each emission cycle ideally rotates the spin by exactly π/2. Timing
//! offsets, frequency jitter and the excited-state dwell make the realized
//! angle deviate by a rotation error `e_i`, and the fidelity of the resulting
//! cluster depends on the timing only through these errors.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::densmat::clamp_unit;
use crate::error::{Error, Result};
use crate::protocol::{ErrorSample, PulseSchedule};

/// Which error sources a [`RotationErrors`] set accounts for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Timing offsets only, nominal frequency.
    Basic,
    /// Timing offsets and a realized precession frequency `ω′`.
    Dephasing,
    /// Additionally the excited-state dwell, with the excited spin precessing
    /// backwards at `ω′` (`g_ratio = −1`).
    Lifetime,
    /// Dwell with an arbitrary excited-to-ground g-factor ratio.
    Full,
}

/// Rotation errors `e_1 … e_{n+1}` in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationErrors {
    errors: Vec<f64>,
    variant: Variant,
}

impl RotationErrors {
    pub fn new(errors: Vec<f64>, variant: Variant) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::invalid("errors", "need at least one rotation error"));
        }
        if errors.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("errors", "rotation errors must be finite"));
        }
        Ok(Self { errors, variant })
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Photon count `n` of the cluster these errors belong to.
    pub fn photons(&self) -> usize {
        self.errors.len() - 1
    }

    pub fn state_fidelity(&self) -> Result<f64> {
        state_fidelity_closed(&self.errors)
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("omega", "nominal frequency must be finite and > 0"))
    }
}

/// `(e_i − e_{i−1}) ω`.
pub fn rotation_errors_basic(schedule: &PulseSchedule, omega: f64) -> Result<RotationErrors> {
    check_omega(omega)?;
    let e = schedule.offsets();
    RotationErrors::new(e.windows(2).map(|w| (w[1] - w[0]) * omega).collect(), Variant::Basic)
}

/// `(π/(2ω) + e_i − e_{i−1}) ω′ − π/2`.
pub fn rotation_errors_dephasing(schedule: &PulseSchedule, omega: f64, omega_prime: f64) -> Result<RotationErrors> {
    check_omega(omega)?;
    let quarter = PI / (2.0 * omega);
    let e = schedule.offsets();
    RotationErrors::new(
        e.windows(2)
            .map(|w| (quarter + w[1] - w[0]) * omega_prime - FRAC_PI_2)
            .collect(),
        Variant::Dephasing,
    )
}

/// Full set with the excited spin precessing backwards (`g_ratio = −1`).
pub fn rotation_errors_lifetime(schedule: &PulseSchedule, sample: &ErrorSample, omega: f64) -> Result<RotationErrors> {
    let mut r = rotation_errors_full(schedule, sample, omega, -1.0)?;
    r.variant = Variant::Lifetime;
    Ok(r)
}

/// `(π/(2ω) + e_i − e_{i−1} − t_{i−1}) ω′ + g_ratio · t_i ω′ − π/2`.
pub fn rotation_errors_full(
    schedule: &PulseSchedule,
    sample: &ErrorSample,
    omega: f64,
    g_ratio: f64,
) -> Result<RotationErrors> {
    check_omega(omega)?;
    let e = schedule.offsets();
    let t = &sample.decay_times;
    if t.len() != e.len() {
        return Err(Error::invalid(
            "sample",
            format!("{} decay times for {} pulses", t.len(), e.len()),
        ));
    }
    let quarter = PI / (2.0 * omega);
    let wp = sample.omega_prime;
    let errors = (1..e.len())
        .map(|i| (quarter + e[i] - e[i - 1] - t[i - 1]) * wp + g_ratio * t[i] * wp - FRAC_PI_2)
        .collect();
    RotationErrors::new(errors, Variant::Full)
}

/// Single-shot state fidelity of an `n`-photon cluster from its `n + 1`
/// rotation errors.
///
/// The sum over even-size subsets of cosine products is evaluated through
/// `[∏(1 + cos) + ∏(1 − cos)] / 2`, so the cost is linear in `n`.
pub fn state_fidelity_closed(errors: &[f64]) -> Result<f64> {
    if errors.len() < 2 {
        return Err(Error::invalid("errors", "need n + 1 >= 2 rotation errors"));
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("errors", "rotation errors must be finite"));
    }
    let n = errors.len() - 1;
    let (mut plus, mut minus, mut sines) = (1.0, 1.0, 1.0);
    for &e in errors {
        let (s, c) = e.sin_cos();
        plus *= 1.0 + c;
        minus *= 1.0 - c;
        sines *= s;
    }
    let sign = if n.is_multiple_of(2) { -1.0 } else { 1.0 };
    let value = (0.5 * (plus + minus) + sign * sines) / 2f64.powi(n as i32);
    clamp_unit(value, 1e-12)
}

/// Fidelity of a π/2 rotation that is off by `e`: `cos²(e/2)`.
pub fn gate_fidelity_closed(e: f64) -> Result<f64> {
    if !e.is_finite() {
        return Err(Error::invalid("e", "rotation error must be finite"));
    }
    Ok((e / 2.0).cos().powi(2))
}
