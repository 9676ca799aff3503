//! Distributions of the per-run errors and a reproducible sampler.
//!
//! The precession frequency `ω′` of a run is Gaussian around the nominal
//! value with width `σ_c = √2 / T₂*` (nuclear-field jitter). The dwell time in
//! the excited state after each pulse is exponential with the radiative
//! lifetime, optionally restricted to a detection window `[0, t_bin]` and
//! renormalized there. All quantities are in natural units.
//!
//! Sampling uses ChaCha8 seeded from a 64-bit seed; independent streams of the
//! same seed serve parallel chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::model::{DeviceParams, OMEGA};
use crate::protocol::ErrorSample;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDistribution {
    omega_mean: f64,
    sigma_c: f64,
    tau_d: f64,
    tau_r: f64,
    n: usize,
    t_bin: Option<f64>,
}

impl ErrorDistribution {
    /// `sigma_c = 0` and `tau_d = 0` are accepted as the noiseless limits;
    /// the sampler then returns the nominal value, while the densities, which
    /// are point masses there, report an error. `n = 0` describes a single
    /// gate (two pulses).
    pub fn new(omega_mean: f64, sigma_c: f64, tau_d: f64, n: usize, t_bin: Option<f64>) -> Result<Self> {
        if !(omega_mean.is_finite() && omega_mean > 0.0) {
            return Err(Error::invalid("omega_mean", "must be finite and > 0"));
        }
        if !(sigma_c.is_finite() && sigma_c >= 0.0) {
            return Err(Error::invalid("sigma_c", "must be finite and >= 0"));
        }
        if !(tau_d.is_finite() && tau_d >= 0.0) {
            return Err(Error::invalid("tau_d", "must be finite and >= 0"));
        }
        if let Some(b) = t_bin {
            if b.is_nan() || b <= 0.0 {
                return Err(Error::invalid("t_bin", "window must be > 0"));
            }
        }
        Ok(Self {
            omega_mean,
            sigma_c,
            tau_d,
            tau_r: 0.0,
            n,
            t_bin: t_bin.filter(|b| b.is_finite()),
        })
    }

    /// Distribution implied by a device, in units of its Larmor period.
    pub fn from_params(params: &DeviceParams, n: usize, t_bin: Option<f64>) -> Result<Self> {
        let mut d = Self::new(OMEGA, params.sigma_natural(), params.tau_natural(), n, t_bin)?;
        d.tau_r = params.tau_r() / params.t_lg();
        Ok(d)
    }

    pub fn omega_mean(&self) -> f64 {
        self.omega_mean
    }

    pub fn sigma_c(&self) -> f64 {
        self.sigma_c
    }

    pub fn tau_d(&self) -> f64 {
        self.tau_d
    }

    pub fn tau_r(&self) -> f64 {
        self.tau_r
    }

    pub fn photons(&self) -> usize {
        self.n
    }

    /// Number of pulses, hence of dwell times, in one run.
    pub fn pulses(&self) -> usize {
        self.n + 2
    }

    pub fn t_bin(&self) -> Option<f64> {
        self.t_bin
    }

    /// Probability that one untruncated decay lands inside the window.
    pub fn window_mass(&self) -> f64 {
        match self.t_bin {
            Some(b) if self.tau_d > 0.0 => -(-b / self.tau_d).exp_m1(),
            _ => 1.0,
        }
    }

    /// CDF of a single (possibly truncated) dwell time.
    pub fn decay_cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        if self.tau_d == 0.0 {
            return 1.0;
        }
        let t = self.t_bin.map_or(t, |b| t.min(b));
        (-(-t / self.tau_d).exp_m1() / self.window_mass()).min(1.0)
    }

    /// Draws one run's errors from `rng`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ErrorSample {
        let z: f64 = rng.sample(StandardNormal);
        let omega_prime = self.omega_mean + self.sigma_c * z;
        let mass = self.window_mass();
        let decay_times = (0..self.pulses())
            .map(|_| {
                if self.tau_d == 0.0 {
                    return 0.0;
                }
                let u: f64 = rng.random();
                // inverse CDF of the exponential restricted to the window
                -self.tau_d * (-u * mass).ln_1p()
            })
            .collect();
        ErrorSample {
            omega_prime,
            decay_times,
        }
    }
}

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One reproducible draw for a given seed.
pub fn sample(dist: &ErrorDistribution, seed: u64) -> ErrorSample {
    dist.draw(&mut stream_rng(seed, 0))
}

/// Gaussian density of `ω′`.
pub fn pdf_frequency(omega_prime: f64, dist: &ErrorDistribution) -> Result<f64> {
    if dist.sigma_c == 0.0 {
        return Err(Error::invalid("sigma_c", "frequency distribution is a point mass"));
    }
    let z = (omega_prime - dist.omega_mean) / dist.sigma_c;
    Ok((-0.5 * z * z).exp() / (dist.sigma_c * std::f64::consts::TAU.sqrt()))
}

/// Excited-state population after a pulse centred at `t = 0`: an error
/// function rise of width `tau_r` times the exponential decay. `tau_r = 0`
/// turns the rise into a unit step.
pub fn population(t: f64, tau_r: f64, tau_d: f64) -> Result<f64> {
    if !(tau_d.is_finite() && tau_d > 0.0) {
        return Err(Error::invalid("tau_d", "must be finite and > 0"));
    }
    if !(tau_r.is_finite() && tau_r >= 0.0) {
        return Err(Error::invalid("tau_r", "must be finite and >= 0"));
    }
    let rise = if tau_r == 0.0 {
        if t >= 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        0.5 * (1.0 + erf(t / (std::f64::consts::SQRT_2 * tau_r)))
    };
    if rise == 0.0 {
        return Ok(0.0);
    }
    Ok(rise * (-t / tau_d).exp())
}

/// Joint density of the dwell times of one run.
pub fn pdf_decay_times(sample: &ErrorSample, dist: &ErrorDistribution) -> Result<f64> {
    if sample.decay_times.len() != dist.pulses() {
        return Err(Error::invalid(
            "sample",
            format!("expected {} decay times, got {}", dist.pulses(), sample.decay_times.len()),
        ));
    }
    if dist.tau_d == 0.0 {
        return Err(Error::invalid("tau_d", "dwell-time distribution is a point mass"));
    }
    let mass = dist.window_mass();
    let mut p = 1.0;
    for &t in &sample.decay_times {
        if t < 0.0 || dist.t_bin.is_some_and(|b| t > b) {
            return Ok(0.0);
        }
        p *= (-t / dist.tau_d).exp() / (dist.tau_d * mass);
    }
    Ok(p)
}

/// Frequency and dwell times are independent.
pub fn pdf_joint(sample: &ErrorSample, dist: &ErrorDistribution) -> Result<f64> {
    Ok(pdf_frequency(sample.omega_prime, dist)? * pdf_decay_times(sample, dist)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;
    use approx::assert_relative_eq;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn dist(sigma: f64, tau: f64, n: usize, t_bin: Option<f64>) -> ErrorDistribution {
        ErrorDistribution::new(OMEGA, sigma, tau, n, t_bin).unwrap()
    }

    fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn frequency_density() {
        let d = dist(0.7, 0.1, 2, None);
        assert_relative_eq!(
            pdf_frequency(OMEGA, &d).unwrap(),
            1.0 / (std::f64::consts::TAU * 0.49).sqrt(),
            max_relative = 1e-14
        );
        let mut f = |w: f64| pdf_frequency(w, &d);
        let total = adaptive_simpson(OMEGA - 14.0, OMEGA + 14.0, 1e-11, 40, &mut f).unwrap();
        assert!((total - 1.0).abs() < 1e-8);
        assert!(pdf_frequency(OMEGA, &dist(0.0, 0.1, 2, None)).is_err());
    }

    #[test]
    fn frequency_collapses_without_dephasing() {
        let d = dist(0.0, 0.1, 1, None);
        let mut rng = stream_rng(3, 0);
        for _ in 0..100 {
            assert_eq!(d.draw(&mut rng).omega_prime, OMEGA);
        }
    }

    #[test]
    fn population_examples() {
        assert_eq!(population(0.0, 0.0, 2.0).unwrap(), 1.0);
        assert_relative_eq!(population(2.0, 0.0, 2.0).unwrap(), (-1.0f64).exp(), max_relative = 1e-15);
        assert!(population(-50.0, 0.3, 2.0).unwrap() < 1e-100);
        assert_eq!(population(-1e-9, 0.0, 2.0).unwrap(), 0.0);
        // halfway up the rise at t = 0
        assert_relative_eq!(population(0.0, 0.5, 2.0).unwrap(), 0.5, max_relative = 1e-15);
        assert!(population(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn decay_density() {
        let tau = 0.4;
        let d = dist(1.0, tau, 1, None);
        let s = ErrorSample::new(OMEGA, vec![0.0; 3]).unwrap();
        assert_relative_eq!(pdf_decay_times(&s, &d).unwrap(), tau.powi(-3), max_relative = 1e-14);
        let one = dist(1.0, tau, 0, None);
        let mut single = |t: f64| Ok((-t / tau).exp() / tau * if t >= 0.0 { 1.0 } else { 0.0 });
        let total = adaptive_simpson(0.0, 40.0 * tau, 1e-12, 40, &mut single).unwrap();
        assert!((total - 1.0).abs() < 1e-10);
        assert_relative_eq!(one.decay_cdf(40.0 * tau), 1.0, max_relative = 1e-12);
        let neg = ErrorSample::new(OMEGA, vec![0.0; 3]).map(|mut s| {
            s.decay_times[1] = -0.1;
            s
        });
        assert_eq!(pdf_decay_times(&neg.unwrap(), &d).unwrap(), 0.0);
    }

    #[test]
    fn truncated_window_mass() {
        let tau = 0.3;
        let d = dist(1.0, tau, 1, Some(tau * std::f64::consts::LN_2));
        assert_relative_eq!(d.window_mass(), 0.5, max_relative = 1e-14);
        // the truncated density integrates to 1 over the window
        let b = d.t_bin().unwrap();
        let mut f = |t: f64| {
            let s = ErrorSample::new(OMEGA, vec![t, 0.0, 0.0]).unwrap();
            Ok(pdf_decay_times(&s, &d)? * tau * tau * d.window_mass() * d.window_mass())
        };
        let total = adaptive_simpson(0.0, b, 1e-12, 40, &mut f).unwrap();
        assert!((total - 1.0).abs() < 1e-10);
        assert!(dist(1.0, tau, 1, Some(f64::INFINITY)).t_bin().is_none());
    }

    #[test]
    fn joint_density() {
        let d = dist(0.5, 0.2, 1, None);
        let a = ErrorSample::new(OMEGA + 0.3, vec![0.1, 0.0, 0.05]).unwrap();
        let b = ErrorSample::new(OMEGA - 0.3, vec![0.1, 0.0, 0.05]).unwrap();
        assert_relative_eq!(pdf_joint(&a, &d).unwrap(), pdf_joint(&b, &d).unwrap(), max_relative = 1e-14);
        assert_relative_eq!(
            pdf_joint(&a, &d).unwrap(),
            pdf_frequency(a.omega_prime, &d).unwrap() * pdf_decay_times(&a, &d).unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = dist(0.5, 0.2, 4, Some(0.3));
        assert_eq!(sample(&d, 42), sample(&d, 42));
        assert_ne!(sample(&d, 42), sample(&d, 43));
        assert_ne!(stream_rng(1, 0).random::<u64>(), stream_rng(1, 1).random::<u64>());
    }

    #[test]
    fn sample_means_follow_clt() {
        let (sigma, tau) = (0.8, 0.15);
        let d = dist(sigma, tau, 0, None);
        let mut rng = stream_rng(2024, 0);
        let m = 1_000_000;
        let (mut w, mut t) = (0.0, 0.0);
        for _ in 0..m {
            let s = d.draw(&mut rng);
            w += s.omega_prime;
            t += s.decay_times[0];
        }
        assert!((w / m as f64 - OMEGA).abs() < 4.0 * sigma / 1e3);
        assert!((t / m as f64 - tau).abs() < 4.0 * tau / 1e3);
    }

    #[test]
    fn kolmogorov_smirnov() {
        let crit = 1.949 / (1e5f64).sqrt();
        for t_bin in [None, Some(0.2)] {
            let d = dist(0.6, 0.25, 0, t_bin);
            let mut rng = stream_rng(77, 5);
            let draws: Vec<_> = (0..100_000).map(|_| d.draw(&mut rng)).collect();
            let normal = Normal::new(OMEGA, 0.6).unwrap();
            let dw = ks_statistic(draws.iter().map(|s| s.omega_prime).collect(), |x| normal.cdf(x));
            let dt = ks_statistic(draws.iter().map(|s| s.decay_times[1]).collect(), |x| d.decay_cdf(x));
            assert!(dw < crit, "frequency KS {dw}");
            assert!(dt < crit, "decay KS {dt}");
            if let Some(b) = t_bin {
                assert!(draws.iter().all(|s| s.decay_times.iter().all(|&t| t <= b)));
            }
        }
    }

    #[test]
    fn rejects_invalid() {
        assert!(ErrorDistribution::new(OMEGA, -1.0, 0.1, 1, None).is_err());
        assert!(ErrorDistribution::new(OMEGA, 1.0, -0.1, 1, None).is_err());
        assert!(ErrorDistribution::new(OMEGA, 1.0, 0.1, 1, Some(0.0)).is_err());
        let d = dist(1.0, 0.1, 1, None);
        assert!(pdf_decay_times(&ErrorSample::new(OMEGA, vec![0.0; 2]).unwrap(), &d).is_err());
    }
}
