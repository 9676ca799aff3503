//! Parameter sweeps and optimizers built on the ensemble engine.
//!
//! Sweeps evaluate their cells in parallel; cells are collected in grid order
//! so outputs are identical regardless of thread scheduling.

use std::io::Write;

use rayon::prelude::*;

use crate::ensemble::{
    ensemble_state_fidelity, gate_fidelity_timed, state_fidelity_timed, IntegrationOptions, TimingMode,
};
use crate::error::{Error, Result};
use crate::model::{DeviceParams, OMEGA};
use crate::protocol::PulseSchedule;
use crate::quadrature::{argmax, golden_max, linspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

/// One sweep axis. The name carries the unit, e.g. `t_lg_ns`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub scale: Scale,
}

impl Axis {
    pub fn new(name: &str, min: f64, max: f64, points: usize, scale: Scale) -> Result<Self> {
        if points < 2 {
            return Err(Error::invalid("points", "an axis needs at least 2 points"));
        }
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::invalid("axis", format!("{name}: need finite min < max")));
        }
        if scale == Scale::Log && min <= 0.0 {
            return Err(Error::invalid("axis", format!("{name}: log axis must be positive")));
        }
        Ok(Self {
            name: name.to_string(),
            min,
            max,
            points,
            scale,
        })
    }

    /// Axis with spacing `step`, endpoints included.
    pub fn stepped(name: &str, min: f64, max: f64, step: f64) -> Result<Self> {
        if step.is_nan() || step <= 0.0 {
            return Err(Error::invalid("step", "must be > 0"));
        }
        let points = ((max - min) / step).round() as usize + 1;
        Self::new(name, min, max, points, Scale::Linear)
    }

    pub fn values(&self) -> Vec<f64> {
        match self.scale {
            Scale::Linear => linspace(self.min, self.max, self.points),
            Scale::Log => linspace(self.min.ln(), self.max.ln(), self.points)
                .into_iter()
                .enumerate()
                .map(|(k, x)| match k {
                    0 => self.min,
                    k if k + 1 == self.points => self.max,
                    _ => x.exp(),
                })
                .collect(),
        }
    }

    /// Largest spacing between neighbouring points.
    pub fn resolution(&self) -> f64 {
        self.values().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// Tabular sweep result: one row per cell, axis values first.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axes: Vec<Axis>,
    /// Parameters held constant, with units in the names.
    pub fixed: Vec<(String, f64)>,
    pub outputs: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SweepGrid {
    pub fn headers(&self) -> Vec<String> {
        self.axes
            .iter()
            .map(|a| a.name.clone())
            .chain(self.outputs.iter().cloned())
            .collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.headers().iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Writes the grid as CSV. Floats use the shortest representation that
    /// parses back to the same value.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.headers())?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimumKind {
    Interior,
    /// The landscape rises towards the lower end of the search range.
    LowerBound,
    UpperBound,
    /// All grid values agree within the flatness tolerance.
    Flat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub location: f64,
    pub value: f64,
    /// Grid spacing of the coarse scan around the optimum.
    pub resolution: f64,
    /// Refinement tolerance (0 when no refinement took place).
    pub tolerance: f64,
    pub kind: OptimumKind,
    /// Range of locations compatible with the optimum.
    pub interval: (f64, f64),
}

impl Optimum {
    /// True when no isolated interior maximum exists.
    pub fn is_degenerate(&self) -> bool {
        self.kind != OptimumKind::Interior
    }

    pub fn warning(&self) -> Option<String> {
        match self.kind {
            OptimumKind::Interior => None,
            OptimumKind::LowerBound | OptimumKind::UpperBound => Some(format!(
                "no interior optimum: maximum at the search bound {:.6}",
                self.location
            )),
            OptimumKind::Flat => Some(format!(
                "flat landscape: optimum anywhere in [{:.6}, {:.6}]",
                self.interval.0, self.interval.1
            )),
        }
    }
}

/// Values within this distance of each other count as equal.
pub const FLAT_TOLERANCE: f64 = 1e-9;

/// Grid argmax of `values` on `grid`, refined by golden-section search when
/// `tol > 0` and the maximum is interior.
pub fn refine_optimum<F>(grid: &[f64], values: &[f64], tol: f64, mut f: F) -> Result<Optimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let k = argmax(values).ok_or_else(|| Error::invalid("grid", "no finite values to maximize"))?;
    let last = grid.len() - 1;
    let step_at = |i: usize| {
        let lo = if i > 0 { grid[i] - grid[i - 1] } else { 0.0 };
        let hi = if i < last { grid[i + 1] - grid[i] } else { 0.0 };
        lo.max(hi)
    };
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if values[k] - lo <= FLAT_TOLERANCE {
        return Ok(Optimum {
            location: grid[k],
            value: values[k],
            resolution: step_at(k),
            tolerance: 0.0,
            kind: OptimumKind::Flat,
            interval: (grid[0], grid[last]),
        });
    }
    if k == 0 || k == last {
        let kind = if k == 0 { OptimumKind::LowerBound } else { OptimumKind::UpperBound };
        let neighbour = if k == 0 { grid[1] } else { grid[last - 1] };
        return Ok(Optimum {
            location: grid[k],
            value: values[k],
            resolution: step_at(k),
            tolerance: 0.0,
            kind,
            interval: (grid[k].min(neighbour), grid[k].max(neighbour)),
        });
    }
    let (mut location, mut value) = (grid[k], values[k]);
    if tol > 0.0 {
        let (x, v) = golden_max(grid[k - 1], grid[k + 1], tol, &mut f)?;
        if v >= value {
            location = x;
            value = v;
        }
    }
    Ok(Optimum {
        location,
        value,
        resolution: step_at(k),
        tolerance: tol,
        kind: OptimumKind::Interior,
        interval: (grid[k - 1], grid[k + 1]),
    })
}

fn gate_value(params: &DeviceParams, mode: TimingMode, opts: &IntegrationOptions) -> Result<f64> {
    Ok(gate_fidelity_timed(params, mode, opts)?.0.value)
}

fn state_value(params: &DeviceParams, n: usize, mode: TimingMode, opts: &IntegrationOptions) -> Result<f64> {
    Ok(state_fidelity_timed(params, n, mode, opts)?.0.value)
}

fn par_eval<F>(xs: &[f64], f: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    xs.par_iter().map(|&x| f(x)).collect()
}

/// Coarse points used by [`optimal_precession`].
pub const PRECESSION_GRID: usize = 61;

/// Larmor period (seconds) maximizing the gate fidelity of `params` between
/// `bounds`, refined to `tol` seconds.
pub fn optimal_precession(
    params: &DeviceParams,
    bounds: (f64, f64),
    tol: f64,
    mode: TimingMode,
    opts: &IntegrationOptions,
) -> Result<Optimum> {
    let (lo, hi) = bounds;
    if !(lo > 0.0 && hi >= 2.0 * lo && hi.is_finite()) {
        return Err(Error::invalid("bounds", "need 0 < lower and upper >= 2 x lower"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tol", "must be > 0"));
    }
    let axis = Axis::new("t_lg_s", lo, hi, PRECESSION_GRID, Scale::Log)?;
    let grid = axis.values();
    let eval = |t: f64| gate_value(&params.with_period(t)?, mode, opts);
    let values = par_eval(&grid, eval)?;
    refine_optimum(&grid, &values, tol, eval)
}

/// Result of a two-pulse timing scan.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingScan {
    pub grid: SweepGrid,
    /// First and second excitation time at the maximum, in `t_lg`.
    pub first: f64,
    pub second: f64,
    pub value: f64,
    /// Mean cycle time `second / 2` in `t_lg`.
    pub cycle: f64,
    pub resolution: f64,
}

/// Two-photon state fidelity as a function of the first and second
/// excitation time (units of `t_lg`, the initialization pulse at 0). The
/// disentangling pulse keeps the cycle of the second one: `2 p2 − p1`.
pub fn scan_pulse_timing(
    params: &DeviceParams,
    first: &Axis,
    second: &Axis,
    opts: &IntegrationOptions,
) -> Result<TimingScan> {
    let cells: Vec<(f64, f64)> = first
        .values()
        .into_iter()
        .flat_map(|p1| second.values().into_iter().map(move |p2| (p1, p2)))
        .collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(p1, p2)| {
            let p3 = 2.0 * p2 - p1;
            let s = PulseSchedule::new(vec![0.0, p1 - 0.25, p2 - 0.5, p3 - 0.75])?;
            Ok(ensemble_state_fidelity(params, &s, opts)?.value)
        })
        .collect::<Result<_>>()?;
    let k = argmax(&values).ok_or_else(|| Error::invalid("grid", "empty timing grid"))?;
    let (p1, p2) = cells[k];
    let grid = SweepGrid {
        axes: vec![first.clone(), second.clone()],
        fixed: describe(params),
        outputs: vec!["state_fidelity_2".into()],
        rows: cells.iter().zip(&values).map(|(&(a, b), &v)| vec![a, b, v]).collect(),
    };
    Ok(TimingScan {
        grid,
        first: p1,
        second: p2,
        value: values[k],
        cycle: p2 / 2.0,
        resolution: first.resolution().max(second.resolution()),
    })
}

/// The default scan window of the timing study.
pub fn default_timing_axes(step: f64) -> Result<(Axis, Axis)> {
    Ok((
        Axis::stepped("first_pulse_tlg", 0.15, 0.45, step)?,
        Axis::stepped("second_pulse_tlg", 0.35, 0.80, step)?,
    ))
}

fn describe(params: &DeviceParams) -> Vec<(String, f64)> {
    vec![
        ("lifetime_ps".into(), params.tau_d() * 1e12),
        ("t2_star_ns".into(), params.t2_star() * 1e9),
        ("g_ratio".into(), params.g_ratio()),
        ("t_lg_ns".into(), params.t_lg() * 1e9),
    ]
}

/// Gate fidelity against `τ / t_lg` with no dephasing, nominal and corrected
/// timing.
pub fn sweep_lifetime(g_ratio: f64, axis: &Axis, opts: &IntegrationOptions) -> Result<SweepGrid> {
    let xs = axis.values();
    let rows = xs
        .par_iter()
        .map(|&x| {
            let p = DeviceParams::natural(x, f64::INFINITY, g_ratio)?;
            Ok(vec![
                x,
                gate_value(&p, TimingMode::Nominal, opts)?,
                gate_value(&p, TimingMode::Corrected, opts)?,
            ])
        })
        .collect::<Result<_>>()?;
    Ok(SweepGrid {
        axes: vec![axis.clone()],
        fixed: vec![("g_ratio".into(), g_ratio), ("t2_star_tlg".into(), f64::INFINITY)],
        outputs: vec!["gate_fidelity_nominal".into(), "gate_fidelity_corrected".into()],
        rows,
    })
}

/// Gate fidelity against `T₂* / t_lg` with instantaneous decay.
pub fn sweep_coherence(axis: &Axis, opts: &IntegrationOptions) -> Result<SweepGrid> {
    let xs = axis.values();
    let rows = xs
        .par_iter()
        .map(|&x| {
            let p = DeviceParams::natural(0.0, x, 0.0)?;
            Ok(vec![x, gate_value(&p, TimingMode::Nominal, opts)?])
        })
        .collect::<Result<_>>()?;
    Ok(SweepGrid {
        axes: vec![axis.clone()],
        fixed: vec![("lifetime_tlg".into(), 0.0)],
        outputs: vec!["gate_fidelity".into()],
        rows,
    })
}

/// Heatmap of the gate fidelity over Larmor period (ns) and `T₂*` (ns) at a
/// fixed lifetime, plus the best period for every `T₂*` column.
pub fn sweep_heatmap_precession_coherence(
    base: &DeviceParams,
    t_lg_axis: &Axis,
    t2_axis: &Axis,
    mode: TimingMode,
    opts: &IntegrationOptions,
) -> Result<(SweepGrid, Vec<(f64, Optimum)>)> {
    let periods = t_lg_axis.values();
    let t2s = t2_axis.values();
    let cells: Vec<(f64, f64)> = t2s
        .iter()
        .flat_map(|&c| periods.iter().map(move |&t| (t, c)))
        .collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(t, c)| gate_value(&base.with_t2_star(c * 1e-9)?.with_period(t * 1e-9)?, mode, opts))
        .collect::<Result<_>>()?;
    let mut columns = Vec::with_capacity(t2s.len());
    for (j, &c) in t2s.iter().enumerate() {
        let slice = &values[j * periods.len()..(j + 1) * periods.len()];
        columns.push((c, refine_optimum(&periods, slice, 0.0, |_| Ok(0.0))?));
    }
    let grid = SweepGrid {
        axes: vec![t_lg_axis.clone(), t2_axis.clone()],
        fixed: vec![
            ("lifetime_ps".into(), base.tau_d() * 1e12),
            ("g_ratio".into(), base.g_ratio()),
        ],
        outputs: vec!["gate_fidelity".into()],
        rows: cells.iter().zip(&values).map(|(&(t, c), &v)| vec![t, c, v]).collect(),
    };
    Ok((grid, columns))
}

/// Gate fidelity over g-factor ratio and lifetime (ps), each cell at its own
/// optimal Larmor period within `bounds` (seconds). The period used is
/// reported per cell.
pub fn sweep_gratio(
    t2_star: f64,
    g_axis: &Axis,
    tau_axis: &Axis,
    bounds: (f64, f64),
    mode: TimingMode,
    opts: &IntegrationOptions,
) -> Result<SweepGrid> {
    let cells: Vec<(f64, f64)> = tau_axis
        .values()
        .into_iter()
        .flat_map(|tau| g_axis.values().into_iter().map(move |g| (g, tau)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(g, tau)| {
            let p = DeviceParams::new(tau * 1e-12, t2_star, g, crate::model::TimeSource::Period(bounds.0))?;
            let opt = optimal_precession(&p, bounds, 1e-12, mode, opts)?;
            Ok(vec![g, tau, opt.value, opt.location * 1e9])
        })
        .collect::<Result<_>>()?;
    Ok(SweepGrid {
        axes: vec![g_axis.clone(), tau_axis.clone()],
        fixed: vec![("t2_star_ns".into(), t2_star * 1e9)],
        outputs: vec!["gate_fidelity".into(), "t_lg_opt_ns".into()],
        rows,
    })
}

/// State fidelity for `n = 1..=n_max` with the emission time of the last
/// photon, `(n + 2) t_lg / 4`, and the bare coherence envelope at that time.
pub fn fidelity_vs_length(
    params: &DeviceParams,
    n_max: usize,
    mode: TimingMode,
    opts: &IntegrationOptions,
) -> Result<SweepGrid> {
    if n_max == 0 {
        return Err(Error::invalid("n_max", "must be >= 1"));
    }
    let ns: Vec<usize> = (1..=n_max).collect();
    let t2 = params.t2_natural();
    let rows = ns
        .par_iter()
        .map(|&n| {
            let f = state_value(params, n, mode, opts)?;
            let t = (n as f64 + 2.0) / 4.0;
            Ok(vec![n as f64, t, f, f.ln(), (-(t / t2).powi(2)).exp()])
        })
        .collect::<Result<_>>()?;
    Ok(SweepGrid {
        axes: vec![Axis::new("photons", 1.0, n_max.max(2) as f64, n_max.max(2), Scale::Linear)?],
        fixed: describe(params),
        outputs: vec![
            "emission_time_tlg".into(),
            "state_fidelity".into(),
            "ln_state_fidelity".into(),
            "coherence_envelope".into(),
        ],
        rows,
    })
}

/// Gate fidelity and `n`-photon state fidelities against the Larmor period
/// (ns). Returns the curves and the argmax of each curve, gate first.
pub fn gate_vs_cluster_argmax(
    base: &DeviceParams,
    t_lg_axis: &Axis,
    photons: &[usize],
    mode: TimingMode,
    opts: &IntegrationOptions,
) -> Result<(SweepGrid, Vec<Optimum>)> {
    let periods = t_lg_axis.values();
    let rows: Vec<Vec<f64>> = periods
        .par_iter()
        .map(|&t| {
            let p = base.with_period(t * 1e-9)?;
            let mut row = vec![t, gate_value(&p, mode, opts)?];
            for &n in photons {
                row.push(state_value(&p, n, mode, opts)?);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut optima = Vec::with_capacity(photons.len() + 1);
    for c in 1..=photons.len() + 1 {
        let curve: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        optima.push(refine_optimum(&periods, &curve, 0.0, |_| Ok(0.0))?);
    }
    let mut outputs = vec!["gate_fidelity".to_string()];
    outputs.extend(photons.iter().map(|n| format!("state_fidelity_{n}")));
    Ok((
        SweepGrid {
            axes: vec![t_lg_axis.clone()],
            fixed: vec![
                ("lifetime_ps".into(), base.tau_d() * 1e12),
                ("t2_star_ns".into(), base.t2_star() * 1e9),
                ("g_ratio".into(), base.g_ratio()),
            ],
            outputs,
            rows,
        },
        optima,
    ))
}

/// Ensemble-averaged spin polarization `S_z(t) = E[cos(ω′ t)]` and its
/// coherence envelope, `t` in `t_lg` from 0 to `duration`.
pub fn spin_trace(params: &DeviceParams, duration: f64, step: f64) -> Result<SweepGrid> {
    if !(step > 0.0 && duration > 0.0 && duration.is_finite()) {
        return Err(Error::invalid("step", "need step > 0 and a finite duration > 0"));
    }
    let axis = Axis::stepped("time_tlg", 0.0, duration, step)?;
    let sigma = params.sigma_natural();
    let rows = axis
        .values()
        .into_iter()
        .map(|t| {
            let envelope = (-0.5 * (sigma * t).powi(2)).exp();
            vec![t, envelope * (OMEGA * t).cos(), envelope]
        })
        .collect();
    Ok(SweepGrid {
        axes: vec![axis],
        fixed: describe(params),
        outputs: vec!["s_z".into(), "coherence_envelope".into()],
        rows,
    })
}
