//! Ensemble fidelities: the single-shot fidelity averaged over the frequency
//! jitter and the excited-state dwell times.
//!
//! For a fixed `ω′` every rotation error is affine in the dwell times, and
//! the dwell after pulse `j` enters only errors `j` and `j + 1`. Writing the
//! fidelity as products of `(1 ± cos e_i)` and `sin e_i` and those as
//! complex exponentials, the average over dwell times becomes a chain of
//! characteristic-function factors `E[exp(iκt)]` linking neighbouring
//! errors. It is evaluated exactly with a three-state transfer matrix per
//! product. What remains is a smooth one-dimensional integral over `ω′`,
//! done with Gauss–Hermite quadrature.
//!
//! All times here are in units of `t_lg`.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::closedform::{rotation_errors_full, state_fidelity_closed};
use crate::densmat::clamp_unit;
use crate::error::{Error, Result};
use crate::model::{DeviceParams, OMEGA};
use crate::protocol::{single_shot_fidelity, ErrorSample, PulseSchedule};
use crate::quadrature::{self, adaptive_simpson, gaussian_expectation, golden_max};
use crate::stochastics::{stream_rng, ErrorDistribution};

/// Largest Gauss–Hermite order tried before the adaptive fallback.
pub const HERMITE_CAP: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

/// What the Monte Carlo estimator averages per draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McIntegrand {
    ClosedForm,
    /// The time-domain simulation. Draws where a pulse arrives before the
    /// previous decay are rejected by the simulation and surface as errors.
    Oracle,
}

/// Integrator that produced a [`FidelityResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// No frequency jitter: a single evaluation at the nominal frequency.
    Exact,
    GaussHermite,
    AdaptiveSimpson,
    MonteCarlo,
}

/// Pulse timing used for a fidelity evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingMode {
    /// Pulses on the quarter-period grid.
    Nominal,
    /// Every cycle lengthened by the shift that maximizes the gate fidelity.
    Corrected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationOptions {
    pub method: Method,
    pub hermite_order: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub rel_tolerance: f64,
    /// Detection window for the dwell times, in `t_lg`.
    pub t_bin: Option<f64>,
    pub integrand: McIntegrand,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            method: Method::Quadrature,
            hermite_order: 64,
            mc_samples: 1_000_000,
            seed: 0x5eed_1c5f,
            rel_tolerance: 1e-6,
            t_bin: None,
            integrand: McIntegrand::ClosedForm,
        }
    }
}

impl IntegrationOptions {
    pub fn validate(&self) -> Result<()> {
        if self.hermite_order < 8 || self.hermite_order > HERMITE_CAP {
            return Err(Error::invalid("hermite_order", format!("must be in 8..={HERMITE_CAP}")));
        }
        if self.mc_samples < 1000 {
            return Err(Error::invalid("mc_samples", "need at least 1000 draws"));
        }
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance < 1.0) {
            return Err(Error::invalid("rel_tolerance", "must be in (0, 1)"));
        }
        if let Some(b) = self.t_bin {
            if b.is_nan() || b <= 0.0 {
                return Err(Error::invalid("t_bin", "window must be > 0"));
            }
        }
        Ok(())
    }

    pub fn quadrature() -> Self {
        Self::default()
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self {
            method: Method::MonteCarlo,
            mc_samples: samples,
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityResult {
    pub value: f64,
    /// Standard error of a Monte Carlo mean; 0 for deterministic rules.
    pub stderr: f64,
    pub method: Integrator,
    /// Quadrature nodes or Monte Carlo draws used.
    pub evaluations: usize,
}

/// `E[exp(iκt)]` for an exponential dwell with mean `tau`, optionally
/// truncated to `[0, t_bin]` and renormalized. `tau = 0` gives 1.
pub fn exp_trig_moment(kappa: f64, tau: f64, t_bin: Option<f64>) -> Result<C64> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::invalid("tau_d", "must be finite and >= 0"));
    }
    if !kappa.is_finite() {
        return Err(Error::invalid("kappa", "must be finite"));
    }
    Ok(moment(kappa, tau, t_bin))
}

fn moment(kappa: f64, tau: f64, t_bin: Option<f64>) -> C64 {
    if tau == 0.0 {
        return C64::new(1.0, 0.0);
    }
    let base = C64::new(1.0, -kappa * tau).inv();
    match t_bin {
        Some(b) if b.is_finite() => {
            let x = b / tau;
            let mass = -(-x).exp_m1();
            // ∫_0^b e^{iκt} e^{-t/τ}/τ dt = (1 − e^{−(1 − iκτ) b/τ}) / (1 − iκτ)
            let tail = C64::from_polar((-x).exp(), kappa * b);
            base * (C64::new(1.0, 0.0) - tail) / mass
        }
        _ => base,
    }
}

/// Characteristic-function factors for a fixed `ω′`, indexed by the signs of
/// the two rotation errors a dwell time feeds into.
struct DwellMoments {
    /// `[s_prev][s_next]` → `E[exp(i(s_prev g − s_next) ω′ t)]`, signs shifted by 1.
    link: [[C64; 3]; 3],
}

impl DwellMoments {
    fn new(wp: f64, tau: f64, g: f64, t_bin: Option<f64>) -> Self {
        let mut link = [[C64::new(0.0, 0.0); 3]; 3];
        for (a, row) in link.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                let (sa, sb) = (a as f64 - 1.0, b as f64 - 1.0);
                *v = moment((sa * g - sb) * wp, tau, t_bin);
            }
        }
        Self { link }
    }

    /// First dwell only enters `e_1`, with coefficient `−ω′`.
    fn first(&self, s: usize) -> C64 {
        self.link[1][s]
    }

    /// Last dwell only enters `e_{n+1}`, with coefficient `g ω′`.
    fn last(&self, s: usize) -> C64 {
        self.link[s][1]
    }
}

/// Expectation over the dwell times of the state fidelity at frequency `ω′`.
pub fn conditional_state_fidelity(
    omega_prime: f64,
    offsets: &[f64],
    tau: f64,
    g_ratio: f64,
    t_bin: Option<f64>,
) -> Result<f64> {
    if offsets.len() < 3 {
        return Err(Error::invalid("offsets", "need n + 2 >= 3 pulses"));
    }
    let n = offsets.len() - 2;
    let m = DwellMoments::new(omega_prime, tau, g_ratio, t_bin);
    // deterministic part of each rotation error
    let phases: Vec<[C64; 3]> = offsets
        .windows(2)
        .map(|w| {
            let a = (0.25 + w[1] - w[0]) * omega_prime - FRAC_PI_2;
            [C64::from_polar(1.0, -a), C64::new(1.0, 0.0), C64::from_polar(1.0, a)]
        })
        .collect();

    let half = C64::new(0.5, 0.0);
    let zero = C64::new(0.0, 0.0);
    let sin_c = C64::new(0.0, 0.5); // exp(±ia)/(±2i) → ∓i/2 · exp(±ia)
    let families: [([C64; 3], f64); 3] = [
        ([half, C64::new(1.0, 0.0), half], 0.5),
        ([-half, C64::new(1.0, 0.0), -half], 0.5),
        ([sin_c, zero, -sin_c], if n.is_multiple_of(2) { -1.0 } else { 1.0 }),
    ];

    let mut total = 0.0;
    for (coef, weight) in families {
        let mut vec = [zero; 3];
        for s in 0..3 {
            vec[s] = coef[s] * phases[0][s] * m.first(s);
        }
        for ph in &phases[1..] {
            let mut next = [zero; 3];
            for s in 0..3 {
                if coef[s] == zero {
                    continue;
                }
                let acc: C64 = (0..3).map(|r| vec[r] * m.link[r][s]).sum();
                next[s] = acc * coef[s] * ph[s];
            }
            vec = next;
        }
        let closing: C64 = (0..3).map(|s| vec[s] * m.last(s)).sum();
        total += weight * closing.re;
    }
    Ok(total / 2f64.powi(n as i32))
}

/// Expectation over the two dwell times of the gate fidelity at `ω′`.
pub fn conditional_gate_fidelity(
    omega_prime: f64,
    e0: f64,
    e1: f64,
    tau: f64,
    g_ratio: f64,
    t_bin: Option<f64>,
) -> Result<f64> {
    let a = (0.25 + e1 - e0) * omega_prime - FRAC_PI_2;
    let c = C64::from_polar(1.0, a) * moment(-omega_prime, tau, t_bin) * moment(g_ratio * omega_prime, tau, t_bin);
    Ok(0.5 + 0.5 * c.re)
}

fn check_inputs(params: &DeviceParams, opts: &IntegrationOptions) -> Result<()> {
    opts.validate()?;
    if params.tau_natural() > 0.0 && opts.t_bin.is_some_and(|b| b.is_finite() && b / params.tau_natural() < 1e-8) {
        return Err(Error::invalid("t_bin", "window too short relative to the lifetime"));
    }
    Ok(())
}

/// Integrates `f(ω′)` against the frequency distribution of `params`.
fn integrate_frequency<F>(params: &DeviceParams, opts: &IntegrationOptions, f: F) -> Result<FidelityResult>
where
    F: Fn(f64) -> Result<f64>,
{
    let sigma = params.sigma_natural();
    let finish = |value: f64, method, evaluations| -> Result<FidelityResult> {
        Ok(FidelityResult {
            value: clamp_unit(value, 1e-9)?,
            stderr: 0.0,
            method,
            evaluations,
        })
    };
    if sigma == 0.0 {
        return finish(f(OMEGA)?, Integrator::Exact, 1);
    }
    let eval = |order: usize| gaussian_expectation(OMEGA, sigma, order, &f);
    let mut order = opts.hermite_order;
    let mut prev = eval(order)?;
    while order * 2 <= HERMITE_CAP {
        let next = eval(order * 2)?;
        if (next - prev).abs() <= opts.rel_tolerance * next.abs().max(prev.abs()) + 1e-15 {
            // `prev` is the value whose doubling was checked
            return finish(prev, Integrator::GaussHermite, order);
        }
        prev = next;
        order *= 2;
    }
    let last = prev;
    let previous = eval(order / 2)?;
    // high-frequency integrands: resolve the oscillations directly
    let mut evaluations = 0usize;
    let mut g = |w: f64| {
        evaluations += 1;
        let z = (w - OMEGA) / sigma;
        Ok((-0.5 * z * z).exp() / (sigma * TAU.sqrt()) * f(w)?)
    };
    let tol = opts.rel_tolerance * last.abs().max(1e-3);
    match adaptive_simpson(OMEGA - 12.0 * sigma, OMEGA + 12.0 * sigma, tol, 40, &mut g) {
        Ok(v) => finish(v, Integrator::AdaptiveSimpson, evaluations),
        Err(_) => Err(Error::Convergence {
            order,
            previous,
            last,
        }),
    }
}

/// Ensemble fidelity of the `n`-photon state produced with `schedule`.
pub fn ensemble_state_fidelity(
    params: &DeviceParams,
    schedule: &PulseSchedule,
    opts: &IntegrationOptions,
) -> Result<FidelityResult> {
    check_inputs(params, opts)?;
    match opts.method {
        Method::Quadrature => {
            let (tau, g) = (params.tau_natural(), params.g_ratio());
            let offsets = schedule.offsets();
            integrate_frequency(params, opts, |w| {
                conditional_state_fidelity(w, offsets, tau, g, opts.t_bin)
            })
        }
        Method::MonteCarlo => mc_estimate(params, schedule, opts),
    }
}

/// Ensemble fidelity of one π/2 rotation with pulses at `e0` and `1/4 + e1`.
pub fn ensemble_gate_fidelity(
    params: &DeviceParams,
    e0: f64,
    e1: f64,
    opts: &IntegrationOptions,
) -> Result<FidelityResult> {
    check_inputs(params, opts)?;
    if !(e0.is_finite() && e1.is_finite()) {
        return Err(Error::invalid("offsets", "must be finite"));
    }
    let (tau, g) = (params.tau_natural(), params.g_ratio());
    match opts.method {
        Method::Quadrature => integrate_frequency(params, opts, |w| conditional_gate_fidelity(w, e0, e1, tau, g, opts.t_bin)),
        Method::MonteCarlo => {
            let dist = ErrorDistribution::from_params(params, 0, opts.t_bin)?;
            monte_carlo(&dist, opts, |s| {
                let t = &s.decay_times;
                let e = (0.25 + e1 - e0 - t[0]) * s.omega_prime + g * t[1] * s.omega_prime - FRAC_PI_2;
                Ok((e / 2.0).cos().powi(2))
            })
        }
    }
}

/// Monte Carlo estimate of the ensemble state fidelity.
pub fn mc_estimate(params: &DeviceParams, schedule: &PulseSchedule, opts: &IntegrationOptions) -> Result<FidelityResult> {
    check_inputs(params, opts)?;
    let n = schedule.photons();
    let dist = ErrorDistribution::from_params(params, n, opts.t_bin)?;
    match opts.integrand {
        McIntegrand::ClosedForm => {
            let g = params.g_ratio();
            monte_carlo(&dist, opts, |s| {
                state_fidelity_closed(rotation_errors_full(schedule, s, OMEGA, g)?.errors())
            })
        }
        McIntegrand::Oracle => monte_carlo(&dist, opts, |s| single_shot_fidelity(params, schedule, s)),
    }
}

const CHUNK: usize = 4096;

#[derive(Clone, Copy)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn merge(self, other: Moments) -> Moments {
        if self.count == 0.0 {
            return other;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }
}

fn monte_carlo<F>(dist: &ErrorDistribution, opts: &IntegrationOptions, f: F) -> Result<FidelityResult>
where
    F: Fn(&ErrorSample) -> Result<f64> + Sync,
{
    let total = opts.mc_samples;
    let chunks = total.div_ceil(CHUNK);
    let parts: Vec<Result<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(opts.seed, k as u64);
            let len = CHUNK.min(total - k * CHUNK);
            let mut acc = Moments {
                count: 0.0,
                mean: 0.0,
                m2: 0.0,
            };
            for _ in 0..len {
                let x = f(&dist.draw(&mut rng))?;
                acc.count += 1.0;
                let delta = x - acc.mean;
                acc.mean += delta / acc.count;
                acc.m2 += delta * (x - acc.mean);
            }
            Ok(acc)
        })
        .collect();
    // merge in chunk order so the result does not depend on scheduling
    let mut acc = Moments {
        count: 0.0,
        mean: 0.0,
        m2: 0.0,
    };
    for part in parts {
        acc = acc.merge(part?);
    }
    let variance = if acc.count > 1.0 { acc.m2 / (acc.count - 1.0) } else { 0.0 };
    Ok(FidelityResult {
        value: clamp_unit(acc.mean, 1e-9)?,
        stderr: (variance / acc.count).sqrt(),
        method: Integrator::MonteCarlo,
        evaluations: total,
    })
}

/// Half-width of the cycle-shift search interval, in `t_lg`.
pub const SHIFT_RANGE: f64 = 0.2;

/// Cycle lengthening `δ` (pulse `i` at `i (1/4 + δ)`) that maximizes the
/// quadrature gate fidelity. Grid scan followed by golden-section refinement.
pub fn optimal_cycle_shift(params: &DeviceParams, opts: &IntegrationOptions) -> Result<f64> {
    let quad = IntegrationOptions {
        method: Method::Quadrature,
        ..opts.clone()
    };
    let mut f = |d: f64| Ok(ensemble_gate_fidelity(params, 0.0, d, &quad)?.value);
    let grid = quadrature::linspace(-SHIFT_RANGE, SHIFT_RANGE, 81);
    let values = grid.iter().map(|&d| f(d)).collect::<Result<Vec<_>>>()?;
    let k = quadrature::argmax(&values).ok_or_else(|| Error::invalid("params", "gate fidelity is undefined"))?;
    if k == 0 || k + 1 == grid.len() {
        return Ok(grid[k]);
    }
    Ok(golden_max(grid[k - 1], grid[k + 1], 1e-9, &mut f)?.0)
}

/// Pulse schedule for `n` photons under the given timing mode, with the
/// cycle shift it applies.
pub fn schedule_for(
    params: &DeviceParams,
    n: usize,
    mode: TimingMode,
    opts: &IntegrationOptions,
) -> Result<(PulseSchedule, f64)> {
    let shift = match mode {
        TimingMode::Nominal => 0.0,
        TimingMode::Corrected => optimal_cycle_shift(params, opts)?,
    };
    Ok((PulseSchedule::uniform_shift(n, shift)?, shift))
}

/// Gate fidelity under a timing mode, with the cycle shift used.
pub fn gate_fidelity_timed(
    params: &DeviceParams,
    mode: TimingMode,
    opts: &IntegrationOptions,
) -> Result<(FidelityResult, f64)> {
    let (_, shift) = schedule_for(params, 1, mode, opts)?;
    Ok((ensemble_gate_fidelity(params, 0.0, shift, opts)?, shift))
}

/// State fidelity under a timing mode, with the cycle shift used.
pub fn state_fidelity_timed(
    params: &DeviceParams,
    n: usize,
    mode: TimingMode,
    opts: &IntegrationOptions,
) -> Result<(FidelityResult, f64)> {
    let (schedule, shift) = schedule_for(params, n, mode, opts)?;
    Ok((ensemble_state_fidelity(params, &schedule, opts)?, shift))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn natural(tau: f64, t2: f64, g: f64) -> DeviceParams {
        DeviceParams::natural(tau, t2, g).unwrap()
    }

    #[test]
    fn moment_examples() {
        assert_eq!(exp_trig_moment(0.0, 0.3, None).unwrap(), C64::new(1.0, 0.0));
        let v = exp_trig_moment(2.0, 0.5, None).unwrap();
        assert_abs_diff_eq!(v.re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 0.5, epsilon = 1e-15);
        for k in [-30.0, -1.0, 0.5, 7.0] {
            for b in [None, Some(0.05), Some(2.0)] {
                assert!(exp_trig_moment(k, 0.2, b).unwrap().norm() <= 1.0 + 1e-15);
            }
        }
        let far = exp_trig_moment(3.0, 0.2, Some(1e3)).unwrap();
        assert!((far - exp_trig_moment(3.0, 0.2, None).unwrap()).norm() < 1e-15);
        assert_eq!(exp_trig_moment(5.0, 0.0, None).unwrap(), C64::new(1.0, 0.0));
        assert!(exp_trig_moment(1.0, -0.1, None).is_err());
    }

    #[test]
    fn truncated_moment_matches_direct_integral() {
        let (k, tau, b) = (4.0, 0.3, 0.25);
        let mut re = |t: f64| Ok((k * t).cos() * (-t / tau).exp() / tau);
        let mut im = |t: f64| Ok((k * t).sin() * (-t / tau).exp() / tau);
        let mass = 1.0 - (-b / tau).exp();
        let r = adaptive_simpson(0.0, b, 1e-13, 40, &mut re).unwrap() / mass;
        let i = adaptive_simpson(0.0, b, 1e-13, 40, &mut im).unwrap() / mass;
        let v = exp_trig_moment(k, tau, Some(b)).unwrap();
        assert_abs_diff_eq!(v.re, r, epsilon = 1e-11);
        assert_abs_diff_eq!(v.im, i, epsilon = 1e-11);
    }

    #[test]
    fn noiseless_limits() {
        let opts = IntegrationOptions::default();
        let p = natural(0.0, f64::INFINITY, -1.0);
        for n in 1..6 {
            let r = ensemble_state_fidelity(&p, &PulseSchedule::nominal(n).unwrap(), &opts).unwrap();
            assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-9);
            assert_eq!(r.method, Integrator::Exact);
        }
        assert_abs_diff_eq!(ensemble_gate_fidelity(&p, 0.0, 0.0, &opts).unwrap().value, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn conditional_gate_without_dwell_is_closed_form() {
        for w in [5.0, OMEGA, 7.1] {
            let a = 0.25 * w - FRAC_PI_2;
            let v = conditional_gate_fidelity(w, 0.0, 0.0, 0.0, 3.0, None).unwrap();
            assert_abs_diff_eq!(v, (a / 2.0).cos().powi(2), epsilon = 1e-14);
        }
    }

    #[test]
    fn conditional_state_without_dwell_is_closed_form() {
        let offsets = [0.0, 0.02, -0.01, 0.03, 0.0];
        let w = 6.6;
        let s = PulseSchedule::new(offsets.to_vec()).unwrap();
        let sample = ErrorSample::new(w, vec![0.0; 5]).unwrap();
        let direct = state_fidelity_closed(rotation_errors_full(&s, &sample, OMEGA, 2.0).unwrap().errors()).unwrap();
        let v = conditional_state_fidelity(w, &offsets, 0.0, 2.0, None).unwrap();
        assert_abs_diff_eq!(v, direct, epsilon = 1e-14);
    }

    #[test]
    fn conditional_state_matches_monte_carlo_over_dwell() {
        // fixed ω′, dwell times only; compare with a long closed-form average
        let offsets = [0.0, 0.01, 0.0, 0.02];
        let (w, tau, g) = (6.1, 0.06, -3.0);
        let exact = conditional_state_fidelity(w, &offsets, tau, g, None).unwrap();
        let s = PulseSchedule::new(offsets.to_vec()).unwrap();
        let dist = ErrorDistribution::new(w, 0.0, tau, 2, None).unwrap();
        let opts = IntegrationOptions::monte_carlo(400_000, 9);
        let mc = monte_carlo(&dist, &opts, |x| {
            state_fidelity_closed(rotation_errors_full(&s, x, OMEGA, g)?.errors())
        })
        .unwrap();
        assert!((mc.value - exact).abs() < 4.0 * mc.stderr, "{} vs {exact} ± {}", mc.value, mc.stderr);
    }

    #[test]
    fn decoherence_floor() {
        let p = natural(0.0, 1.0 / 40.0, 0.0);
        let v = ensemble_gate_fidelity(&p, 0.0, 0.0, &IntegrationOptions::default()).unwrap();
        assert!((v.value - 0.5).abs() < 0.01, "{v:?}");
    }

    #[test]
    fn hermite_doubling_is_converged() {
        let p = natural(0.05, 3.0, -3.0);
        let opts = IntegrationOptions::default();
        let s = PulseSchedule::nominal(3).unwrap();
        let r = ensemble_state_fidelity(&p, &s, &opts).unwrap();
        assert_eq!(r.method, Integrator::GaussHermite);
        let f = |w: f64| conditional_state_fidelity(w, s.offsets(), 0.05, -3.0, None);
        let doubled = gaussian_expectation(OMEGA, p.sigma_natural(), r.evaluations * 2, f).unwrap();
        assert!((doubled - r.value).abs() <= 1e-6 * r.value);
    }

    #[test]
    fn wide_window_equals_untruncated() {
        let p = natural(0.03, 5.0, -1.0);
        let s = PulseSchedule::nominal(2).unwrap();
        let base = ensemble_state_fidelity(&p, &s, &IntegrationOptions::default()).unwrap().value;
        let opts = IntegrationOptions {
            t_bin: Some(50.0),
            ..IntegrationOptions::default()
        };
        let wide = ensemble_state_fidelity(&p, &s, &opts).unwrap().value;
        assert!((wide - base).abs() <= 1e-6 * base);
        let narrow = IntegrationOptions {
            t_bin: Some(0.02),
            ..IntegrationOptions::default()
        };
        assert!(ensemble_state_fidelity(&p, &s, &narrow).unwrap().value > base);
    }

    #[test]
    fn mc_zero_noise() {
        let p = natural(0.0, f64::INFINITY, -1.0);
        let r = mc_estimate(&p, &PulseSchedule::nominal(3).unwrap(), &IntegrationOptions::monte_carlo(5000, 1)).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn mc_is_deterministic() {
        let p = natural(0.02, 4.0, -3.0);
        let s = PulseSchedule::nominal(2).unwrap();
        let opts = IntegrationOptions::monte_carlo(20_000, 11);
        assert_eq!(mc_estimate(&p, &s, &opts).unwrap(), mc_estimate(&p, &s, &opts).unwrap());
    }

    #[test]
    fn timing_correction_helps() {
        let p = natural(0.05, f64::INFINITY, 0.0);
        let opts = IntegrationOptions::default();
        let (nominal, _) = gate_fidelity_timed(&p, TimingMode::Nominal, &opts).unwrap();
        let (corrected, shift) = gate_fidelity_timed(&p, TimingMode::Corrected, &opts).unwrap();
        assert!(shift > 0.0);
        assert!(corrected.value > nominal.value);
    }

    #[test]
    fn options_validation() {
        let bad = IntegrationOptions {
            hermite_order: 4,
            ..IntegrationOptions::default()
        };
        assert!(bad.validate().is_err());
        assert!(IntegrationOptions::monte_carlo(10, 1).validate().is_err());
    }
}
