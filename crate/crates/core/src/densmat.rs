//! Dense state-vector and density-matrix engine for the spin ⊗ photon register.
//!
//! Qubit 0 is the spin; photons are appended in emission order. Basis index
//! bits are big-endian: qubit 0 is the most significant bit, so appending a
//! qubit appends a least-significant bit. `|0⟩ ≡ |↑⟩ ≡ |H⟩`, `|1⟩ ≡ |↓⟩ ≡ |V⟩`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
/// Row-major 2×2 complex matrix.
pub type Gate2 = [[C64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Largest register the engine will build (spin + 15 photons).
pub const MAX_QUBITS: usize = 16;
/// Largest cluster handled by [`ideal_lcs`] and the oracle.
pub const MAX_PHOTONS: usize = MAX_QUBITS - 3;

pub fn identity() -> Gate2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn pauli_z() -> Gate2 {
    [[ONE, ZERO], [ZERO, -ONE]]
}

/// Rotation about y: `ry(θ)|0⟩ = cos(θ/2)|0⟩ + sin(θ/2)|1⟩`.
pub fn ry(theta: f64) -> Gate2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
}

pub fn mat_mul(a: &Gate2, b: &Gate2) -> Gate2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `‖U†U − I‖_max`.
pub fn unitarity_defect(u: &Gate2) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let v = u[0][i].conj() * u[0][j] + u[1][i].conj() * u[1][j];
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((v - target).norm());
        }
    }
    worst
}

/// Pure state of an `m`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
    qubits: usize,
}

impl PureState {
    /// `|0…0⟩` on `qubits` qubits.
    pub fn zero(qubits: usize) -> Result<Self> {
        check_size(qubits)?;
        let mut amps = vec![ZERO; 1 << qubits];
        amps[0] = ONE;
        Ok(Self { amps, qubits })
    }

    /// Normalizes the given amplitudes. The length must be a power of two.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid("amplitudes", format!("length {len} is not 2^m with m >= 1")));
        }
        let qubits = len.trailing_zeros() as usize;
        check_size(qubits)?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::invalid("amplitudes", "zero or non-finite norm"));
        }
        Ok(Self {
            amps: amps.into_iter().map(|a| a / norm).collect(),
            qubits,
        })
    }

    /// Internal constructor that skips normalization (used for scalars and
    /// already-normalized vectors).
    fn raw(amps: Vec<C64>, qubits: usize) -> Self {
        Self { amps, qubits }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.qubits != other.qubits {
            return Err(Error::invalid(
                "state",
                format!("dimension mismatch: {} vs {} qubits", self.qubits, other.qubits),
            ));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    fn bit(&self, index: usize) -> usize {
        1 << (self.qubits - 1 - index)
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index < self.qubits {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index,
                qubits: self.qubits,
            })
        }
    }
}

fn check_size(qubits: usize) -> Result<()> {
    if qubits > MAX_QUBITS {
        Err(Error::invalid("qubits", format!("{qubits} exceeds the {MAX_QUBITS}-qubit limit")))
    } else {
        Ok(())
    }
}

/// Applies `u` to qubit `index`.
pub fn apply_single(state: &PureState, index: usize, u: &Gate2) -> Result<PureState> {
    state.check_index(index)?;
    if unitarity_defect(u) > 1e-12 {
        return Err(Error::invalid("u", "gate is not unitary to 1e-12"));
    }
    let mut out = state.clone();
    apply_in_place(&mut out, index, u);
    Ok(out)
}

fn apply_in_place(state: &mut PureState, index: usize, u: &Gate2) {
    let bit = state.bit(index);
    for i in 0..state.amps.len() {
        if i & bit == 0 {
            let a0 = state.amps[i];
            let a1 = state.amps[i | bit];
            state.amps[i] = u[0][0] * a0 + u[0][1] * a1;
            state.amps[i | bit] = u[1][0] * a0 + u[1][1] * a1;
        }
    }
}

/// Polarization-preserving emission: `|s⟩_spin → |s⟩_spin |s⟩_photon`, the new
/// photon appended as the last qubit.
pub fn emit_photon(state: &PureState, spin_index: usize) -> Result<PureState> {
    if spin_index != 0 {
        return Err(Error::invalid("spin_index", "the spin must be qubit 0"));
    }
    check_size(state.qubits + 1)?;
    let spin_bit = state.bit(0);
    let mut amps = vec![ZERO; state.amps.len() * 2];
    for (i, a) in state.amps.iter().enumerate() {
        let copy = usize::from(i & spin_bit != 0);
        amps[2 * i + copy] = *a;
    }
    Ok(PureState::raw(amps, state.qubits + 1))
}

/// Half-wave plate at 0°: Pauli-Z on a photon qubit.
pub fn waveplate_z(state: &PureState, photon_index: usize) -> Result<PureState> {
    if photon_index == 0 {
        return Err(Error::invalid("photon_index", "qubit 0 is the spin"));
    }
    state.check_index(photon_index)?;
    let bit = state.bit(photon_index);
    let mut out = state.clone();
    for (i, a) in out.amps.iter_mut().enumerate() {
        if i & bit != 0 {
            *a = -*a;
        }
    }
    Ok(out)
}

/// Unnormalized projection: the branch of `state` with qubit `index` equal to
/// `outcome`, the measured qubit removed, and the branch probability.
pub(crate) fn project_branch(state: &PureState, index: usize, outcome: u8) -> Result<(Vec<C64>, f64)> {
    state.check_index(index)?;
    if outcome > 1 {
        return Err(Error::invalid("outcome", "basis outcome must be 0 or 1"));
    }
    let bit = state.bit(index);
    let want = if outcome == 1 { bit } else { 0 };
    let mut branch = Vec::with_capacity(state.amps.len() / 2);
    for (i, a) in state.amps.iter().enumerate() {
        // the surviving amplitudes keep their relative order
        if i & bit == want {
            branch.push(*a);
        }
    }
    let p = branch.iter().map(|a| a.norm_sqr()).sum();
    Ok((branch, p))
}

/// Projects qubit `index` onto `outcome`, removes it from the register and
/// renormalizes. Projecting the last qubit yields a 0-qubit scalar state.
pub fn project(state: &PureState, index: usize, outcome: u8) -> Result<(PureState, f64)> {
    let (branch, p) = project_branch(state, index, outcome)?;
    if p < 1e-14 {
        return Err(Error::ImpossibleOutcome {
            index,
            outcome,
            probability: p,
        });
    }
    let scale = p.sqrt();
    let amps = branch.into_iter().map(|a| a / scale).collect();
    Ok((PureState::raw(amps, state.qubits - 1), p))
}

/// Linear cluster state on `n` qubits: CZ between neighbours applied to
/// `|+⟩^⊗n`. This is also exactly the output of the error-free emission
/// protocol, so no extra local frame is needed.
pub fn ideal_lcs(n: usize) -> Result<PureState> {
    if n == 0 || n > MAX_PHOTONS {
        return Err(Error::invalid("n", format!("photon count must be in 1..={MAX_PHOTONS}")));
    }
    let dim = 1usize << n;
    let amp = 1.0 / (dim as f64).sqrt();
    let amps = (0..dim)
        .map(|i| {
            // adjacent 1-1 pairs in the bit string
            let pairs = (i & (i >> 1)).count_ones();
            if pairs % 2 == 0 {
                C64::new(amp, 0.0)
            } else {
                C64::new(-amp, 0.0)
            }
        })
        .collect();
    Ok(PureState::raw(amps, n))
}

/// Dense density matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    pub fn from_pure(psi: &PureState) -> Self {
        let dim = psi.amps.len();
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                entries[i * dim + j] = psi.amps[i] * psi.amps[j].conj();
            }
        }
        Self { dim, entries }
    }

    /// Convex combination `Σ w_k |ψ_k⟩⟨ψ_k|`; weights are normalized to sum 1.
    pub fn mixture(states: &[(f64, PureState)]) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::invalid("states", "mixture of zero states"))?;
        let total: f64 = states.iter().map(|(w, _)| *w).sum();
        if states.iter().any(|(w, _)| *w < 0.0) || total <= 0.0 {
            return Err(Error::invalid("weights", "must be nonnegative with positive sum"));
        }
        let dim = first.1.amps.len();
        let mut entries = vec![ZERO; dim * dim];
        for (w, psi) in states {
            if psi.amps.len() != dim {
                return Err(Error::invalid("states", "dimension mismatch in mixture"));
            }
            let w = *w / total;
            for i in 0..dim {
                let ai = psi.amps[i] * w;
                for j in 0..dim {
                    entries[i * dim + j] += ai * psi.amps[j].conj();
                }
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn maximally_mixed(qubits: usize) -> Result<Self> {
        check_size(qubits)?;
        let dim = 1 << qubits;
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.dim + j]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `‖ρ − ρ†‖_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += (self.get(i, j) * self.get(j, i)).re;
            }
        }
        s
    }

    /// Traces out the first `leading` qubits, keeping the trailing ones.
    pub fn trace_out_leading(&self, leading: usize) -> Result<Self> {
        let qubits = self.dim.trailing_zeros() as usize;
        if leading > qubits {
            return Err(Error::IndexOutOfRange {
                index: leading,
                qubits,
            });
        }
        let outer = 1 << leading;
        let inner = self.dim / outer;
        let mut entries = vec![ZERO; inner * inner];
        for k in 0..outer {
            for i in 0..inner {
                for j in 0..inner {
                    entries[i * inner + j] += self.get(k * inner + i, k * inner + j);
                }
            }
        }
        Ok(Self { dim: inner, entries })
    }
}

/// `⟨ψ|ρ|ψ⟩`, clamped to `[0, 1]` when within 1e-10 of the interval.
pub fn fidelity_to_pure(rho: &DensityMatrix, psi: &PureState) -> Result<f64> {
    if rho.dim != psi.amps.len() {
        return Err(Error::invalid(
            "rho",
            format!("dimension {} does not match state dimension {}", rho.dim, psi.amps.len()),
        ));
    }
    let mut acc = ZERO;
    for i in 0..rho.dim {
        let mut row = ZERO;
        for j in 0..rho.dim {
            row += rho.get(i, j) * psi.amps[j];
        }
        acc += psi.amps[i].conj() * row;
    }
    clamp_unit(acc.re, 1e-10)
}

pub(crate) fn clamp_unit(v: f64, tol: f64) -> Result<f64> {
    if v < -tol || v > 1.0 + tol || v.is_nan() {
        Err(Error::OutOfRange { value: v })
    } else {
        Ok(v.clamp(0.0, 1.0))
    }
}
