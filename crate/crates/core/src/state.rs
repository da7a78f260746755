//! Dense pure-state simulation: construction, gate application, projective
//! measurement and comparison.
//!
//! Qubits are indexed from 0 and qubit 0 is the most significant bit of a basis
//! index, so `|q0 q1 … q(n-1)⟩` sits at `Σ q_i · 2^(n-1-i)`.

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{bit, check_targets, global_phase, Matrix};
use crate::scalar::{is_finite, Real};

/// Dense registers beyond this width are refused.
pub const MAX_QUBITS: usize = 20;

/// Outcomes whose probability falls below this are never drawn.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-15;

/// Normalized state vector over an ordered qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState<T> {
    n_qubits: usize,
    amplitudes: Vec<Complex<T>>,
}

/// Projected, not renormalized, amplitudes over the full register.
/// `weight` is the squared norm, i.e. the probability of the branch.
#[derive(Clone, Debug, PartialEq)]
pub struct UnnormalizedBranch<T> {
    n_qubits: usize,
    amplitudes: Vec<Complex<T>>,
    weight: T,
}

/// Result of a sampled measurement.
#[derive(Clone, Debug)]
pub struct Measurement<T> {
    /// One bit per measured qubit, in the order the qubits were listed.
    pub bits: Vec<u8>,
    /// Exact Born probability of the drawn outcome.
    pub probability: T,
    /// Post-measurement state, renormalized.
    pub state: PureState<T>,
}

fn check_register(n_qubits: usize) -> Result<usize> {
    if n_qubits == 0 {
        return Err(Error::EmptyRegister(n_qubits));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::RegisterTooLarge(n_qubits));
    }
    Ok(1 << n_qubits)
}

fn norm_sqr<T: Real>(amps: &[Complex<T>]) -> T {
    amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

fn apply_in_place<T: Real>(
    amps: &mut [Complex<T>],
    n_qubits: usize,
    gate: &Matrix<T>,
    targets: &[usize],
) -> Result<()> {
    check_targets(gate.dim(), targets, n_qubits)?;
    let k = targets.len();
    let sub_dim = 1usize << k;
    // Offset of each gate basis index inside the register, first target = MSB.
    let offsets: Vec<usize> = (0..sub_dim)
        .map(|s| {
            targets.iter().enumerate().fold(0usize, |acc, (pos, &q)| {
                if (s >> (k - 1 - pos)) & 1 == 1 {
                    acc | 1 << (n_qubits - 1 - q)
                } else {
                    acc
                }
            })
        })
        .collect();
    let mask = offsets[sub_dim - 1];
    let mut gathered = vec![Complex::zero(); sub_dim];
    for base in (0..amps.len()).filter(|i| i & mask == 0) {
        for (g, &off) in gathered.iter_mut().zip(&offsets) {
            *g = amps[base | off];
        }
        for (r, &off) in offsets.iter().enumerate() {
            let mut acc = Complex::zero();
            for (cidx, g) in gathered.iter().enumerate() {
                acc = acc + gate.get(r, cidx) * *g;
            }
            amps[base | off] = acc;
        }
    }
    Ok(())
}

fn check_outcome(qubits: &[usize], bits: &[u8], n_qubits: usize) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { qubit: q, n_qubits });
        }
        if qubits[..i].contains(&q) {
            return Err(Error::DuplicateQubit(q));
        }
    }
    if bits.len() != qubits.len() {
        return Err(Error::OutcomeArity {
            bits: bits.to_vec(),
            qubits: qubits.len(),
        });
    }
    if let Some(&b) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::InvalidBit(b));
    }
    Ok(())
}

fn matches_outcome(index: usize, n_qubits: usize, qubits: &[usize], bits: &[u8]) -> bool {
    qubits
        .iter()
        .zip(bits)
        .all(|(&q, &b)| bit(index, q, n_qubits) == b as usize)
}

fn project_amps<T: Real>(
    amps: &[Complex<T>],
    n_qubits: usize,
    qubits: &[usize],
    bits: &[u8],
) -> Result<UnnormalizedBranch<T>> {
    check_outcome(qubits, bits, n_qubits)?;
    let amplitudes: Vec<Complex<T>> = amps
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            if matches_outcome(i, n_qubits, qubits, bits) {
                z
            } else {
                Complex::zero()
            }
        })
        .collect();
    let weight = norm_sqr(&amplitudes);
    Ok(UnnormalizedBranch {
        n_qubits,
        amplitudes,
        weight,
    })
}

/// Amplitudes of the qubits not listed in `fixed`, read where the fixed qubits
/// take the given values. Remaining qubits keep their register order.
fn slice_amps<T: Real>(
    amps: &[Complex<T>],
    n_qubits: usize,
    fixed: &[(usize, u8)],
) -> Result<(usize, Vec<Complex<T>>)> {
    let (qubits, bits): (Vec<usize>, Vec<u8>) = fixed.iter().copied().unzip();
    check_outcome(&qubits, &bits, n_qubits)?;
    let kept: Vec<usize> = (0..n_qubits).filter(|q| !qubits.contains(q)).collect();
    if kept.is_empty() {
        return Err(Error::EmptyRegister(0));
    }
    let base = fixed.iter().fold(0usize, |acc, &(q, b)| {
        acc | (b as usize) << (n_qubits - 1 - q)
    });
    let m = kept.len();
    let out = (0..1usize << m)
        .map(|s| {
            let idx = kept.iter().enumerate().fold(base, |acc, (pos, &q)| {
                acc | ((s >> (m - 1 - pos)) & 1) << (n_qubits - 1 - q)
            });
            amps[idx]
        })
        .collect();
    Ok((m, out))
}

fn bits_of(outcome: usize, width: usize) -> Vec<u8> {
    (0..width)
        .map(|pos| ((outcome >> (width - 1 - pos)) & 1) as u8)
        .collect()
}

impl<T: Real> PureState<T> {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    /// Computational basis state with the given index.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = check_register(n_qubits)?;
        if index >= dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                actual: index + 1,
            });
        }
        let mut amplitudes = vec![Complex::zero(); dim];
        amplitudes[index] = Complex::one();
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Normalizes `amplitudes` into a state. The length must be `2^n_qubits`.
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let dim = check_register(n_qubits)?;
        if amplitudes.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                actual: amplitudes.len(),
            });
        }
        if !amplitudes.iter().all(is_finite) {
            return Err(Error::NonFinite);
        }
        let norm = norm_sqr(&amplitudes).sqrt();
        if norm <= T::zero() {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            n_qubits,
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
        })
    }

    /// Infers the register width from the amplitude count.
    pub fn from_amplitudes(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::LengthMismatch {
                expected: len.next_power_of_two().max(2),
                actual: len,
            });
        }
        Self::new(len.trailing_zeros() as usize, amplitudes)
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        norm_sqr(&self.amplitudes)
    }

    /// `self ⊗ other`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let n = self.n_qubits + other.n_qubits;
        check_register(n)?;
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|&a| other.amplitudes.iter().map(move |&b| a * b))
            .collect();
        Ok(Self {
            n_qubits: n,
            amplitudes,
        })
    }

    /// Applies `gate` to `targets`; the first target is the gate's most
    /// significant bit.
    pub fn apply(&mut self, gate: &Matrix<T>, targets: &[usize]) -> Result<()> {
        apply_in_place(&mut self.amplitudes, self.n_qubits, gate, targets)
    }

    /// Consuming form of [`apply`](Self::apply).
    pub fn with_gate(mut self, gate: &Matrix<T>, targets: &[usize]) -> Result<Self> {
        self.apply(gate, targets)?;
        Ok(self)
    }

    /// Born probabilities of every outcome of `qubits`, indexed by the
    /// outcome bits read with the first listed qubit as the MSB.
    pub fn outcome_probabilities(&self, qubits: &[usize]) -> Result<Vec<T>> {
        let zeros = vec![0u8; qubits.len()];
        check_outcome(qubits, &zeros, self.n_qubits)?;
        let m = qubits.len();
        let mut probs = vec![T::zero(); 1 << m];
        for (i, z) in self.amplitudes.iter().enumerate() {
            let outcome = qubits
                .iter()
                .fold(0usize, |acc, &q| (acc << 1) | bit(i, q, self.n_qubits));
            probs[outcome] = probs[outcome] + z.norm_sqr();
        }
        Ok(probs)
    }

    /// Projective measurement of `qubits` in the computational basis.
    ///
    /// Draws one uniform variate and walks the cumulative distribution in
    /// outcome order. Outcomes with probability below
    /// [`MIN_OUTCOME_PROBABILITY`] are skipped.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        qubits: &[usize],
        rng: &mut R,
    ) -> Result<Measurement<T>> {
        let probs = self.outcome_probabilities(qubits)?;
        let floor = T::of(MIN_OUTCOME_PROBABILITY);
        let u = T::of(rng.gen::<f64>());
        let mut cumulative = T::zero();
        let mut chosen = None;
        for (outcome, &p) in probs.iter().enumerate() {
            if p < floor {
                continue;
            }
            cumulative = cumulative + p;
            chosen = Some(outcome);
            if u < cumulative {
                break;
            }
        }
        let outcome = chosen.ok_or(Error::ZeroNorm)?;
        let bits = bits_of(outcome, qubits.len());
        let branch = self.project(qubits, &bits)?;
        Ok(Measurement {
            probability: probs[outcome],
            state: branch.normalized()?,
            bits,
        })
    }

    /// Projects onto `qubits = bits` without renormalizing.
    pub fn project(&self, qubits: &[usize], bits: &[u8]) -> Result<UnnormalizedBranch<T>> {
        project_amps(&self.amplitudes, self.n_qubits, qubits, bits)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b))
    }

    /// `|⟨self|other⟩|`, insensitive to global phase.
    pub fn fidelity_up_to_phase(&self, other: &Self) -> Result<T> {
        Ok(self.inner(other)?.norm().min(T::one()))
    }

    /// Max amplitude deviation after removing a global phase.
    pub fn deviation_up_to_phase(&self, other: &Self) -> Result<T> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        let phase = global_phase(&self.amplitudes, &other.amplitudes);
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(T::zero(), |w, (a, b)| w.max((*a - *b * phase).norm())))
    }

    /// State of the qubits not in `fixed`, assuming the fixed qubits sit in
    /// the given basis values. Fails with [`Error::NotProduct`] if the
    /// register is not in that product form.
    pub fn restrict(&self, fixed: &[(usize, u8)]) -> Result<Self> {
        let (m, amps) = slice_amps(&self.amplitudes, self.n_qubits, fixed)?;
        if (norm_sqr(&amps) - T::one()).abs() > T::derived_tol() {
            return Err(Error::NotProduct);
        }
        Self::new(m, amps)
    }
}

impl<T: Real> UnnormalizedBranch<T> {
    /// Wraps raw amplitudes; the weight is computed from them.
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let dim = check_register(n_qubits)?;
        if amplitudes.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                actual: amplitudes.len(),
            });
        }
        if !amplitudes.iter().all(is_finite) {
            return Err(Error::NonFinite);
        }
        let weight = norm_sqr(&amplitudes);
        Ok(Self {
            n_qubits,
            amplitudes,
            weight,
        })
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    /// Squared norm: the probability of reaching this branch.
    #[inline]
    pub fn weight(&self) -> T {
        self.weight
    }

    pub fn normalized(&self) -> Result<PureState<T>> {
        PureState::new(self.n_qubits, self.amplitudes.clone())
    }

    /// Gates act linearly, so they may be applied before renormalizing.
    pub fn apply(&mut self, gate: &Matrix<T>, targets: &[usize]) -> Result<()> {
        apply_in_place(&mut self.amplitudes, self.n_qubits, gate, targets)?;
        self.weight = norm_sqr(&self.amplitudes);
        Ok(())
    }

    /// Further projection of an already projected branch.
    pub fn project(&self, qubits: &[usize], bits: &[u8]) -> Result<Self> {
        project_amps(&self.amplitudes, self.n_qubits, qubits, bits)
    }

    /// Drops the qubits in `fixed`, keeping the amplitudes where they take the
    /// given values. No renormalization.
    pub fn restrict(&self, fixed: &[(usize, u8)]) -> Result<Self> {
        let (m, amps) = slice_amps(&self.amplitudes, self.n_qubits, fixed)?;
        Self::new(m, amps)
    }

    /// Max element-wise deviation from raw amplitudes of the same length.
    pub fn max_deviation(&self, other: &[Complex<T>]) -> Result<T> {
        if other.len() != self.amplitudes.len() {
            return Err(Error::LengthMismatch {
                expected: self.amplitudes.len(),
                actual: other.len(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other)
            .fold(T::zero(), |w, (a, b)| w.max((*a - *b).norm())))
    }
}

impl<T: Real> From<PureState<T>> for UnnormalizedBranch<T> {
    fn from(s: PureState<T>) -> Self {
        let weight = s.norm_sqr();
        Self {
            n_qubits: s.n_qubits,
            amplitudes: s.amplitudes,
            weight,
        }
    }
}
