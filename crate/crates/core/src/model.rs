//! Device parameters, physical constants and unit conversions.
//!
//! All internal computation happens in natural units: times are multiples of
//! the ground-state Larmor period `t_lg` and the nominal angular precession
//! frequency is therefore `2π` per unit. SI values only appear at the I/O
//! boundary.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Reduced Planck constant, J s (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Bohr magneton, J/T (CODATA 2018).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;

/// Nominal angular precession frequency in natural units (rad per `t_lg`).
pub const OMEGA: f64 = TAU;

/// Ground-state Larmor period `2πħ / (|g| μ_B B)` in seconds.
pub fn larmor_period(g_ground: f64, field_b: f64) -> Result<f64> {
    if !g_ground.is_finite() || g_ground == 0.0 {
        return Err(Error::invalid("g_ground", "must be finite and nonzero"));
    }
    if !(field_b.is_finite() && field_b > 0.0) {
        return Err(Error::invalid("field_b", "must be a positive field in tesla"));
    }
    Ok(TAU * HBAR / (g_ground.abs() * BOHR_MAGNETON * field_b))
}

/// Cycle rate `4 / t_lg` in hertz: one excitation per quarter precession.
pub fn clock_rate(t_lg: f64) -> Result<f64> {
    check_positive("t_lg", t_lg)?;
    Ok(4.0 / t_lg)
}

/// Generation rate of `n`-photon cluster states, `4 / ((n + 2) t_lg)`.
pub fn lcs_rate(n: usize, t_lg: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "photon count must be at least 1"));
    }
    check_positive("t_lg", t_lg)?;
    Ok(4.0 / ((n as f64 + 2.0) * t_lg))
}

/// Larmor period implied by a cycle rate in hertz.
pub fn period_from_clock(rate_hz: f64) -> Result<f64> {
    check_positive("clock_rate", rate_hz)?;
    Ok(4.0 / rate_hz)
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

/// Where the Larmor period comes from. Exactly one source is user-given; the
/// others are derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeSource {
    /// Magnetic field in tesla together with the ground-state g-factor.
    Field { g_ground: f64, field_b: f64 },
    /// Larmor period in seconds.
    Period(f64),
    /// Cycle rate `4 / t_lg` in hertz.
    ClockRate(f64),
}

impl TimeSource {
    pub fn period(&self) -> Result<f64> {
        match *self {
            TimeSource::Field { g_ground, field_b } => larmor_period(g_ground, field_b),
            TimeSource::Period(t) => {
                check_positive("t_lg", t)?;
                Ok(t)
            }
            TimeSource::ClockRate(r) => period_from_clock(r),
        }
    }
}

/// Conversion between seconds and multiples of the Larmor period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaturalUnits {
    scale: f64,
}

impl NaturalUnits {
    pub fn new(t_lg: f64) -> Result<Self> {
        check_positive("t_lg", t_lg)?;
        Ok(Self { scale: t_lg })
    }

    /// Seconds per natural time unit.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn to_natural(&self, seconds: f64) -> f64 {
        seconds / self.scale
    }

    pub fn to_seconds(&self, natural: f64) -> f64 {
        natural * self.scale
    }

    /// rad/s to rad per `t_lg`.
    pub fn rate_to_natural(&self, rad_per_s: f64) -> f64 {
        rad_per_s * self.scale
    }

    pub fn rate_to_si(&self, rad_per_unit: f64) -> f64 {
        rad_per_unit / self.scale
    }
}

/// Physical description of the emitter.
///
/// Times are stored in seconds. `t2_star = ∞` disables dephasing and
/// `tau_d = 0` models instantaneous decay; both limits are used by the
/// parameter studies.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    tau_d: f64,
    tau_r: f64,
    t2_star: f64,
    g_ratio: f64,
    g_ground: Option<f64>,
    field_b: Option<f64>,
    t_lg: f64,
}

impl DeviceParams {
    pub fn new(tau_d: f64, t2_star: f64, g_ratio: f64, source: TimeSource) -> Result<Self> {
        if !(tau_d.is_finite() && tau_d >= 0.0) {
            return Err(Error::invalid("tau_d", format!("must be finite and >= 0, got {tau_d}")));
        }
        if t2_star.is_nan() || t2_star <= 0.0 {
            return Err(Error::invalid("t2_star", format!("must be > 0, got {t2_star}")));
        }
        if !g_ratio.is_finite() {
            return Err(Error::invalid("g_ratio", "must be finite"));
        }
        let t_lg = source.period()?;
        let (g_ground, field_b) = match source {
            TimeSource::Field { g_ground, field_b } => (Some(g_ground), Some(field_b)),
            _ => (None, None),
        };
        Ok(Self {
            tau_d,
            tau_r: 0.0,
            t2_star,
            g_ratio,
            g_ground,
            field_b,
            t_lg,
        })
    }

    /// Builds the ratio from the two Landé factors.
    pub fn from_g_factors(
        tau_d: f64,
        t2_star: f64,
        g_ground: f64,
        g_excited: f64,
        source: TimeSource,
    ) -> Result<Self> {
        if g_ground == 0.0 || !g_ground.is_finite() {
            return Err(Error::invalid("g_ground", "must be finite and nonzero"));
        }
        let mut p = Self::new(tau_d, t2_star, g_excited / g_ground, source)?;
        p.g_ground = Some(g_ground);
        Ok(p)
    }

    /// Parameters given directly in natural units (`t_lg = 1 s` scale is
    /// irrelevant to every fidelity).
    pub fn natural(tau_d: f64, t2_star: f64, g_ratio: f64) -> Result<Self> {
        Self::new(tau_d, t2_star, g_ratio, TimeSource::Period(1.0))
    }

    pub fn with_rise(mut self, tau_r: f64) -> Result<Self> {
        if !(tau_r.is_finite() && tau_r >= 0.0) {
            return Err(Error::invalid("tau_r", format!("must be finite and >= 0, got {tau_r}")));
        }
        self.tau_r = tau_r;
        Ok(self)
    }

    /// Same device at a different Larmor period (e.g. a different field).
    pub fn with_period(&self, t_lg: f64) -> Result<Self> {
        check_positive("t_lg", t_lg)?;
        let mut p = self.clone();
        p.t_lg = t_lg;
        p.field_b = None;
        Ok(p)
    }

    pub fn with_g_ratio(&self, g_ratio: f64) -> Result<Self> {
        if !g_ratio.is_finite() {
            return Err(Error::invalid("g_ratio", "must be finite"));
        }
        let mut p = self.clone();
        p.g_ratio = g_ratio;
        Ok(p)
    }

    pub fn with_lifetime(&self, tau_d: f64) -> Result<Self> {
        Self::new(tau_d, self.t2_star, self.g_ratio, TimeSource::Period(self.t_lg))
    }

    pub fn with_t2_star(&self, t2_star: f64) -> Result<Self> {
        Self::new(self.tau_d, t2_star, self.g_ratio, TimeSource::Period(self.t_lg))
    }

    pub fn tau_d(&self) -> f64 {
        self.tau_d
    }

    pub fn tau_r(&self) -> f64 {
        self.tau_r
    }

    pub fn t2_star(&self) -> f64 {
        self.t2_star
    }

    pub fn g_ratio(&self) -> f64 {
        self.g_ratio
    }

    pub fn g_ground(&self) -> Option<f64> {
        self.g_ground
    }

    pub fn g_excited(&self) -> Option<f64> {
        self.g_ground.map(|g| g * self.g_ratio)
    }

    pub fn field_b(&self) -> Option<f64> {
        self.field_b
    }

    pub fn t_lg(&self) -> f64 {
        self.t_lg
    }

    /// Excited-state precession period, `t_lg / |g_ratio|` (infinite for a
    /// frozen excited spin).
    pub fn t_le(&self) -> f64 {
        self.t_lg / self.g_ratio.abs()
    }

    /// Angular precession frequency in rad/s.
    pub fn omega(&self) -> f64 {
        TAU / self.t_lg
    }

    pub fn clock_rate(&self) -> f64 {
        4.0 / self.t_lg
    }

    pub fn units(&self) -> NaturalUnits {
        NaturalUnits { scale: self.t_lg }
    }

    /// Lifetime in units of `t_lg`.
    pub fn tau_natural(&self) -> f64 {
        self.tau_d / self.t_lg
    }

    pub fn t2_natural(&self) -> f64 {
        self.t2_star / self.t_lg
    }

    /// Width of the Gaussian precession-frequency distribution in rad per
    /// `t_lg`: `√2 / T₂*`.
    pub fn sigma_natural(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.t2_natural()
    }

    /// Quarter period in natural units, `π / (2ω) = 1/4`.
    pub fn quarter() -> f64 {
        PI / (2.0 * OMEGA)
    }
}
