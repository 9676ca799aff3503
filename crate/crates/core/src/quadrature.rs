//! Numerical building blocks: Gauss–Hermite rules, an adaptive Simpson
//! fallback and one-dimensional maximizers.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Gauss–Hermite rule for the weight `exp(−x²)` on the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl HermiteRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

/// Largest rule [`hermite_rule`] will build.
pub const MAX_HERMITE_ORDER: usize = 4096;

/// Cached rule of the given order, nodes ascending.
pub fn hermite_rule(order: usize) -> Result<Arc<HermiteRule>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<HermiteRule>>>> = OnceLock::new();
    if order == 0 || order > MAX_HERMITE_ORDER {
        return Err(Error::invalid("hermite_order", format!("must be in 1..={MAX_HERMITE_ORDER}")));
    }
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&order) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(build_hermite(order)?);
    cache.lock().unwrap().insert(order, rule.clone());
    Ok(rule)
}

// Golub–Welsch: the nodes are the eigenvalues of the symmetric Jacobi matrix
// with zero diagonal and off-diagonal sqrt(k/2). Weights come from the
// Christoffel function, evaluated with rescaling so that the outer nodes
// neither overflow nor lose the tiny weights.
fn build_hermite(n: usize) -> Result<HermiteRule> {
    let mut d = vec![0.0; n];
    let mut e: Vec<f64> = (1..=n).map(|k| if k < n { (k as f64 / 2.0).sqrt() } else { 0.0 }).collect();
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut weights = Vec::with_capacity(n);
    for x in d.iter_mut() {
        for _ in 0..2 {
            let (p_n, p_nm1, _, _) = orthonormal_hermite(n, *x);
            let dp = (2.0 * n as f64).sqrt() * p_nm1;
            if dp != 0.0 {
                *x -= p_n / dp;
            }
        }
        let (_, _, sum_sq, log_scale) = orthonormal_hermite(n, *x);
        weights.push((-(sum_sq.ln() + 2.0 * log_scale)).exp());
    }
    Ok(HermiteRule { nodes: d, weights })
}

/// Orthonormal Hermite polynomials up to degree `n` at `x`, all scaled by a
/// common factor `exp(−log_scale)`. Returns `(p_n, p_{n−1}, Σ_{j<n} p_j², log_scale)`
/// where the sum carries the squared scale.
fn orthonormal_hermite(n: usize, x: f64) -> (f64, f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    let mut sum_sq = 0.0;
    let mut log_scale = 0.0;
    for j in 1..=n {
        sum_sq += cur * cur;
        let next = (2.0 / j as f64).sqrt() * x * cur - ((j - 1) as f64 / j as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            cur *= 1e-150;
            prev *= 1e-150;
            sum_sq *= 1e-300;
            log_scale += 150.0 * std::f64::consts::LN_10;
        }
    }
    (cur, prev, sum_sq, log_scale)
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with Wilkinson
/// shifts. `d` holds the diagonal, `e[i]` couples `d[i]` and `d[i + 1]`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Convergence {
                    order: n,
                    previous: d[l],
                    last: e[l],
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// `E[f(X)]` for `X ~ N(mean, sigma²)` with an `order`-point rule.
pub fn gaussian_expectation<F>(mean: f64, sigma: f64, order: usize, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if sigma == 0.0 {
        return f(mean);
    }
    let rule = hermite_rule(order)?;
    let scale = sigma * std::f64::consts::SQRT_2;
    let mut acc = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        if *w == 0.0 {
            continue;
        }
        acc += w * f(mean + scale * x)?;
    }
    Ok(acc / PI.sqrt())
}

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance
/// `tol`. Fails with a convergence error if the recursion depth is exhausted.
pub fn adaptive_simpson<F>(a: f64, b: f64, tol: f64, max_depth: usize, f: &mut F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) || b <= a {
        return Err(Error::invalid("interval", "need finite a < b"));
    }
    // start from a few panels so a narrow feature is not missed entirely
    let panels = 16;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let hi = lo + h;
        let mid = 0.5 * (lo + hi);
        let (fl, fm, fh) = (f(lo)?, f(mid)?, f(hi)?);
        let whole = h / 6.0 * (fl + 4.0 * fm + fh);
        total += simpson_step(lo, hi, fl, fm, fh, whole, tol / panels as f64, max_depth, f)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: usize, f: &mut F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Convergence {
            order: 0,
            previous: whole,
            last: left + right,
        });
    }
    Ok(simpson_step(a, m, fa, flm, fm, left, tol / 2.0, depth - 1, f)?
        + simpson_step(m, b, fm, frm, fb, right, tol / 2.0, depth - 1, f)?)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_max<F>(mut a: f64, mut b: f64, tol: f64, f: &mut F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tol", "must be > 0"));
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// `points` evenly spaced values covering `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|k| if k + 1 == points { hi } else { lo + step * k as f64 })
        .collect()
}

/// Index of the largest value; ties resolve to the first occurrence.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some(b) if values[b] >= *v => {}
            _ => best = Some(i),
        }
    }
    best
}
