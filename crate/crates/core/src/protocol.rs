//! Probabilistic teleportation of an arbitrary two-qubit state through the
//! partially entangled channel `α|0000⟩ + β|1001⟩ + γ|0110⟩ + κ|1111⟩`.
//!
//! Register layout (0-based): the input pair occupies qubits 0 and 1, the
//! channel qubits 2..=5, and Bob's ancilla is qubit 6. Alice holds qubits
//! 0..=3 and performs Bell measurements on the pairs (1, 2) and (0, 3). Bob
//! holds qubits 4 and 5, applies the purification unitary on (4, 5, 6),
//! measures the ancilla and, on outcome 0, finishes with a Pauli correction
//! chosen by Alice's two Bell outcomes.
//!
//! The pair measured first, (1, 2), supplies the high half of the outcome
//! index `k = 4·b₁₂ + b₀₃`.

use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{
    build_u0, cnot_high_control, hadamard, pauli_x, pauli_z, ChannelParams, GateOp,
};
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::state::{PureState, UnnormalizedBranch};

pub const INPUT_HIGH: usize = 0;
pub const INPUT_LOW: usize = 1;
pub const CHANNEL_0: usize = 2;
pub const CHANNEL_1: usize = 3;
pub const BOB_HIGH: usize = 4;
pub const BOB_LOW: usize = 5;
pub const ANCILLA: usize = 6;
pub const REGISTER_WIDTH: usize = 7;

/// Alice's first Bell pair: second input qubit with the first channel qubit.
pub const PAIR_A: (usize, usize) = (INPUT_LOW, CHANNEL_0);
/// Alice's second Bell pair: first input qubit with the second channel qubit.
pub const PAIR_B: (usize, usize) = (INPUT_HIGH, CHANNEL_1);

// ----------------------------------------------------------------------------
// Input

/// `a|00⟩ + b|01⟩ + c|10⟩ + d|11⟩`, normalized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputState<T> {
    pub a: Complex<T>,
    pub b: Complex<T>,
    pub c: Complex<T>,
    pub d: Complex<T>,
}

impl<T: Real> InputState<T> {
    pub fn new(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Result<Self> {
        let s = Self { a, b, c, d };
        let n = s.norm_sqr();
        if !n.is_finite() || (n - T::one()).abs() > T::linalg_tol() {
            return Err(Error::InputNotNormalized {
                norm_sqr: n.as_f64(),
            });
        }
        Ok(s)
    }

    pub fn from_array(v: [Complex<T>; 4]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// Rescales to unit norm.
    pub fn normalized(v: [Complex<T>; 4]) -> Result<Self> {
        let n = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if !(n.is_finite() && n > T::zero()) {
            return Err(Error::ZeroNorm);
        }
        Self::from_array(v.map(|z| z / n))
    }

    /// Uniformly distributed on the unit sphere of `C⁴`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v: [f64; 8] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let n2: f64 = v.iter().map(|x| x * x).sum();
            if !(1e-6..=1.0).contains(&n2) {
                continue;
            }
            let amps = std::array::from_fn(|i| Complex::new(T::of(v[2 * i]), T::of(v[2 * i + 1])));
            if let Ok(s) = Self::normalized(amps) {
                return s;
            }
        }
    }

    pub fn as_array(&self) -> [Complex<T>; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn norm_sqr(&self) -> T {
        self.as_array()
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }
}

/// The input as a two-qubit register.
pub fn prepare_input<T: Real>(s: &InputState<T>) -> Result<PureState<T>> {
    let n = s.norm_sqr();
    if (n - T::one()).abs() > T::linalg_tol() {
        return Err(Error::InputNotNormalized {
            norm_sqr: n.as_f64(),
        });
    }
    PureState::new(2, s.as_array().to_vec())
}

// ----------------------------------------------------------------------------
// Channel

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    /// Write the four amplitudes directly.
    #[default]
    Direct,
    /// Build the channel from `|0000⟩` with rotations and CNOTs.
    Circuit,
}

/// Gate list building the channel on a four-qubit register from `|0000⟩`.
///
/// An `Ry` on qubit 0 splits the weight between `q0 = 0` (α, γ) and
/// `q0 = 1` (β, κ); a multiplexed `Ry` on qubit 1 then sets the ratio inside
/// each half; two CNOTs copy qubit 1 onto qubit 2 and qubit 0 onto qubit 3.
pub fn channel_circuit<T: Real>(p: &ChannelParams<T>) -> Result<Vec<GateOp<T>>> {
    p.validate()?;
    let two = T::of(2.0);
    let zero_half = (p.alpha * p.alpha + p.gamma * p.gamma).sqrt();
    let one_half = (p.beta * p.beta + p.kappa * p.kappa).sqrt();
    let theta = two * one_half.atan2(zero_half);
    let phi0 = two * p.gamma.atan2(p.alpha);
    let phi1 = two * p.kappa.atan2(p.beta);
    Ok(vec![
        GateOp::ry(theta, 0),
        GateOp::ry((phi0 + phi1) / two, 1),
        GateOp::cnot(0, 1),
        GateOp::ry((phi0 - phi1) / two, 1),
        GateOp::cnot(0, 1),
        GateOp::cnot(1, 2),
        GateOp::cnot(0, 3),
    ])
}

/// The shared channel on four qubits.
pub fn prepare_channel<T: Real>(p: &ChannelParams<T>, mode: ChannelMode) -> Result<PureState<T>> {
    p.validate()?;
    match mode {
        ChannelMode::Direct => {
            let mut amps = vec![Complex::zero(); 16];
            amps[0b0000] = Complex::new(p.alpha, T::zero());
            amps[0b1001] = Complex::new(p.beta, T::zero());
            amps[0b0110] = Complex::new(p.gamma, T::zero());
            amps[0b1111] = Complex::new(p.kappa, T::zero());
            PureState::new(4, amps)
        }
        ChannelMode::Circuit => {
            let mut s = PureState::zero(4)?;
            for op in channel_circuit(p)? {
                s.apply(&op.matrix, &op.targets)?;
            }
            Ok(s)
        }
    }
}

/// Input ⊗ channel ⊗ `|0⟩` ancilla on the seven-qubit register.
pub fn prepare_register<T: Real>(
    s: &InputState<T>,
    p: &ChannelParams<T>,
    mode: ChannelMode,
) -> Result<PureState<T>> {
    prepare_input(s)?
        .tensor(&prepare_channel(p, mode)?)?
        .tensor(&PureState::zero(1)?)
}

// ----------------------------------------------------------------------------
// Bell measurement

/// Bell outcome: `Φ⁺ = 0, Φ⁻ = 1, Ψ⁺ = 2, Ψ⁻ = 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BellOutcome(u8);

impl BellOutcome {
    pub const PHI_PLUS: Self = Self(0);
    pub const PHI_MINUS: Self = Self(1);
    pub const PSI_PLUS: Self = Self(2);
    pub const PSI_MINUS: Self = Self(3);

    pub fn new(index: u8) -> Result<Self> {
        if index < 4 {
            Ok(Self(index))
        } else {
            Err(Error::BellOutcomeRange(index))
        }
    }

    /// Decodes the computational bits read after `CNOT(a→b)` and `H(a)`.
    pub fn from_bits(m_a: u8, m_b: u8) -> Self {
        Self((m_a & 1) | (m_b & 1) << 1)
    }

    /// `(m_a, m_b)`.
    pub fn bits(self) -> (u8, u8) {
        (self.0 & 1, self.0 >> 1)
    }

    pub fn index(self) -> u8 {
        self.0
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(["Phi+", "Phi-", "Psi+", "Psi-"][self.0 as usize])
    }
}

/// Joint result of Alice's two Bell measurements, `k = 4·b_A + b_B` where
/// `b_A` is the outcome on [`PAIR_A`] and `b_B` on [`PAIR_B`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OutcomeIndex(u8);

impl OutcomeIndex {
    pub fn new(k: u8) -> Result<Self> {
        if k < 16 {
            Ok(Self(k))
        } else {
            Err(Error::OutcomeRange(k))
        }
    }

    pub fn from_pairs(pair_a: BellOutcome, pair_b: BellOutcome) -> Self {
        Self(4 * pair_a.0 + pair_b.0)
    }

    pub fn pair_a(self) -> BellOutcome {
        BellOutcome(self.0 / 4)
    }

    pub fn pair_b(self) -> BellOutcome {
        BellOutcome(self.0 % 4)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Self> {
        (0..16).map(Self)
    }

    /// Basis values of Alice's four qubits that encode this outcome after
    /// the Bell-basis rotation.
    pub fn alice_bits(self) -> [(usize, u8); 4] {
        let (a_hi, a_lo) = self.pair_a().bits();
        let (b_hi, b_lo) = self.pair_b().bits();
        [
            (PAIR_A.0, a_hi),
            (PAIR_A.1, a_lo),
            (PAIR_B.0, b_hi),
            (PAIR_B.1, b_lo),
        ]
    }
}

impl fmt::Display for OutcomeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Rotates the Bell basis of `pair` onto the computational basis:
/// `CNOT(first→second)` then `H(first)`.
pub fn bell_rotate<T: Real>(state: &mut PureState<T>, pair: (usize, usize)) -> Result<()> {
    if pair.0 == pair.1 {
        return Err(Error::SameQubit(pair.0, pair.1));
    }
    state.apply(&cnot_high_control(), &[pair.0, pair.1])?;
    state.apply(&hadamard(), &[pair.0])
}

/// Bell measurement on `pair`, leaving the two qubits in the computational
/// state that encodes the outcome.
pub fn bell_measure<T: Real, R: Rng + ?Sized>(
    state: &PureState<T>,
    pair: (usize, usize),
    rng: &mut R,
) -> Result<(BellOutcome, PureState<T>)> {
    let mut rotated = state.clone();
    bell_rotate(&mut rotated, pair)?;
    let m = rotated.measure(&[pair.0, pair.1], rng)?;
    Ok((BellOutcome::from_bits(m.bits[0], m.bits[1]), m.state))
}

// ----------------------------------------------------------------------------
// Analytic branch tables

/// Signed permutations of `(a, b, c, d)`: entry `k` lists, for each basis
/// state of Bob's pair, which input coefficient lands there and with which
/// sign.
const BRANCH_PATTERNS: [[(usize, i8); 4]; 16] = {
    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;
    const D: usize = 3;
    [
        [(A, 1), (B, 1), (C, 1), (D, 1)],
        [(A, 1), (B, 1), (C, -1), (D, -1)],
        [(C, 1), (D, 1), (A, 1), (B, 1)],
        [(C, -1), (D, -1), (A, 1), (B, 1)],
        [(A, 1), (B, -1), (C, 1), (D, -1)],
        [(A, 1), (B, -1), (C, -1), (D, 1)],
        [(C, 1), (D, -1), (A, 1), (B, -1)],
        [(C, -1), (D, 1), (A, 1), (B, -1)],
        [(B, 1), (A, 1), (D, 1), (C, 1)],
        [(B, 1), (A, 1), (D, -1), (C, -1)],
        [(D, 1), (C, 1), (B, 1), (A, 1)],
        [(D, -1), (C, -1), (B, 1), (A, 1)],
        [(B, -1), (A, 1), (D, -1), (C, 1)],
        [(B, -1), (A, 1), (D, 1), (C, -1)],
        [(D, -1), (C, 1), (B, -1), (A, 1)],
        [(D, 1), (C, -1), (B, -1), (A, 1)],
    ]
};

fn signed_pattern<T: Real>(k: OutcomeIndex, s: &InputState<T>) -> [Complex<T>; 4] {
    let x = s.as_array();
    BRANCH_PATTERNS[k.0 as usize].map(|(i, sign)| if sign < 0 { -x[i] } else { x[i] })
}

/// Unnormalized state of Bob's pair after Alice obtains outcome `k`, from the
/// closed-form table: the signed pattern of `k` weighted by `(α, β, γ, κ)/2`.
pub fn collapse_oracle<T: Real>(
    k: OutcomeIndex,
    s: &InputState<T>,
    p: &ChannelParams<T>,
) -> Result<UnnormalizedBranch<T>> {
    let coeffs = [p.alpha, p.beta, p.gamma, p.kappa];
    let half = T::of(0.5);
    let x = signed_pattern(k, s);
    let amps = (0..4).map(|i| x[i] * coeffs[i] * half).collect();
    UnnormalizedBranch::new(2, amps)
}

/// Bob's pair after purification succeeds for outcome `k`, before the
/// correction: the signed pattern of `k` alone.
pub fn post_purification_oracle<T: Real>(k: OutcomeIndex, s: &InputState<T>) -> [Complex<T>; 4] {
    signed_pattern(k, s)
}

/// Bob's unnormalized pair for outcome `k`, obtained by simulating Alice's
/// Bell-basis rotations and projecting (no sampling).
pub fn simulated_branch<T: Real>(
    k: OutcomeIndex,
    s: &InputState<T>,
    p: &ChannelParams<T>,
    mode: ChannelMode,
) -> Result<UnnormalizedBranch<T>> {
    let mut reg = prepare_input(s)?.tensor(&prepare_channel(p, mode)?)?;
    bell_rotate(&mut reg, PAIR_A)?;
    bell_rotate(&mut reg, PAIR_B)?;
    let (qubits, bits): (Vec<usize>, Vec<u8>) = k.alice_bits().iter().copied().unzip();
    reg.project(&qubits, &bits)?.restrict(&k.alice_bits())
}

/// Bob's normalized pair after purification succeeds for outcome `k`, before
/// any correction, obtained by simulation.
pub fn simulated_purified_pair<T: Real>(
    k: OutcomeIndex,
    s: &InputState<T>,
    p: &ChannelParams<T>,
    mode: ChannelMode,
) -> Result<PureState<T>> {
    let bob = simulated_branch(k, s, p, mode)?
        .normalized()?
        .tensor(&PureState::zero(1)?)?;
    bob.with_gate(&build_u0(p)?, &[0, 1, 2])?
        .project(&[2], &[0])?
        .restrict(&[(2, 0)])?
        .normalized()
}

// ----------------------------------------------------------------------------
// Corrections

/// Single-qubit Pauli product. `ZX` means X first, then Z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Z,
    ZX,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Z, Pauli::ZX];

    pub fn matrix<T: Real>(self) -> Matrix<T> {
        match self {
            Pauli::I => Matrix::identity(2),
            Pauli::X => pauli_x(),
            Pauli::Z => pauli_z(),
            Pauli::ZX => &pauli_z() * &pauli_x(),
        }
    }

    /// Gates to apply, in temporal order.
    pub fn steps(self) -> &'static [Pauli] {
        match self {
            Pauli::I => &[],
            Pauli::X => &[Pauli::X],
            Pauli::Z => &[Pauli::Z],
            Pauli::ZX => &[Pauli::X, Pauli::Z],
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Z => "Z",
            Pauli::ZX => "ZX",
        })
    }
}

/// Local operation Bob applies to his pair for one outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Correction {
    pub high: Pauli,
    pub low: Pauli,
}

impl Correction {
    pub const fn new(high: Pauli, low: Pauli) -> Self {
        Self { high, low }
    }

    /// Two-qubit matrix `high ⊗ low`.
    pub fn matrix<T: Real>(&self) -> Matrix<T> {
        self.high.matrix().kron(&self.low.matrix())
    }

    /// Applies the correction to qubits `(high, low)` of `state`.
    pub fn apply_to<T: Real>(
        &self,
        state: &mut PureState<T>,
        qubits: (usize, usize),
    ) -> Result<()> {
        for step in self.high.steps() {
            state.apply(&step.matrix(), &[qubits.0])?;
        }
        for step in self.low.steps() {
            state.apply(&step.matrix(), &[qubits.1])?;
        }
        Ok(())
    }
}

/// Correction for every outcome index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionTable(pub [Correction; 16]);

impl CorrectionTable {
    pub fn get(&self, k: OutcomeIndex) -> Correction {
        self.0[k.0 as usize]
    }
}

/// Frozen output of [`derive_correction_table`].
pub const CORRECTION_TABLE: CorrectionTable = {
    use Pauli::*;
    const fn e(h: Pauli, l: Pauli) -> Correction {
        Correction::new(h, l)
    }
    CorrectionTable([
        e(I, I),
        e(Z, I),
        e(X, I),
        e(ZX, I),
        e(I, Z),
        e(Z, Z),
        e(X, Z),
        e(ZX, Z),
        e(I, X),
        e(Z, X),
        e(X, X),
        e(ZX, X),
        e(I, ZX),
        e(Z, ZX),
        e(X, ZX),
        e(ZX, ZX),
    ])
};

pub fn correction_for(k: OutcomeIndex) -> Correction {
    CORRECTION_TABLE.get(k)
}

/// Exhaustive search over the 16 Pauli products on Bob's pair. A candidate is
/// accepted for outcome `k` when it maps the post-purification state of `k`
/// back to the input, up to global phase, for every probe input. Returns
/// `None` if some outcome has no candidate or more than one.
pub fn derive_correction_table<T: Real>(probes: &[InputState<T>]) -> Option<CorrectionTable> {
    let mut table = [Correction::new(Pauli::I, Pauli::I); 16];
    for k in OutcomeIndex::all() {
        let mut found = Vec::new();
        for high in Pauli::ALL {
            for low in Pauli::ALL {
                let cand = Correction::new(high, low);
                let m = cand.matrix::<T>();
                let ok = probes.iter().all(|s| {
                    let phi = PureState::new(2, post_purification_oracle(k, s).to_vec());
                    let target = prepare_input(s);
                    match (phi, target) {
                        (Ok(phi), Ok(target)) => phi
                            .with_gate(&m, &[0, 1])
                            .and_then(|out| out.fidelity_up_to_phase(&target))
                            .map(|f| f > T::one() - T::derived_tol())
                            .unwrap_or(false),
                        _ => false,
                    }
                });
                if ok {
                    found.push(cand);
                }
            }
        }
        if found.len() != 1 {
            return None;
        }
        table[k.0 as usize] = found[0];
    }
    Some(CorrectionTable(table))
}

// ----------------------------------------------------------------------------
// Bob

#[derive(Clone, Debug, PartialEq)]
pub enum BobResult<T> {
    /// Corrected state of Bob's pair.
    Success(PureState<T>),
    Failure,
}

/// Purification, ancilla measurement and correction on a three-qubit register
/// `(high, low, ancilla)` with the ancilla in `|0⟩`.
pub fn bob_recover<T: Real, R: Rng + ?Sized>(
    state: &PureState<T>,
    k: OutcomeIndex,
    p: &ChannelParams<T>,
    rng: &mut R,
) -> Result<BobResult<T>> {
    if state.n_qubits() != 3 {
        return Err(Error::DimensionMismatch {
            left: state.n_qubits(),
            right: 3,
        });
    }
    let purified = state.clone().with_gate(&build_u0(p)?, &[0, 1, 2])?;
    let m = purified.measure(&[2], rng)?;
    if m.bits[0] == 1 {
        return Ok(BobResult::Failure);
    }
    let mut pair = m.state.restrict(&[(2, 0)])?;
    correction_for(k).apply_to(&mut pair, (0, 1))?;
    Ok(BobResult::Success(pair))
}

/// Probability that the ancilla reads 0: `4α²`.
pub fn success_probability<T: Real>(p: &ChannelParams<T>) -> Result<T> {
    p.validate()?;
    Ok(T::of(4.0) * p.alpha * p.alpha)
}

// ----------------------------------------------------------------------------
// Exact branch enumeration

/// Outcome `k` followed by ancilla 0, computed by projection on the full
/// register.
#[derive(Clone, Debug)]
pub struct BranchAnalysis<T> {
    pub outcome: OutcomeIndex,
    /// `P(k)`.
    pub weight: T,
    /// `P(ancilla = 0 | k)`; zero when `P(k)` is zero.
    pub success_given_outcome: T,
    /// `P(k) · P(ancilla = 0 | k)`.
    pub joint_success: T,
    /// Fidelity of the corrected pair to the input, when the branch is
    /// reachable.
    pub fidelity: Option<T>,
}

/// Enumerates all sixteen Alice outcomes and both ancilla results by
/// projecting the simulated register.
pub fn enumerate_branches<T: Real>(
    s: &InputState<T>,
    p: &ChannelParams<T>,
    mode: ChannelMode,
) -> Result<Vec<BranchAnalysis<T>>> {
    let mut reg = prepare_register(s, p, mode)?;
    bell_rotate(&mut reg, PAIR_A)?;
    bell_rotate(&mut reg, PAIR_B)?;
    let u0 = build_u0(p)?;
    let target = prepare_input(s)?;
    OutcomeIndex::all()
        .map(|k| {
            let (qubits, bits): (Vec<usize>, Vec<u8>) = k.alice_bits().iter().copied().unzip();
            let mut branch = reg.project(&qubits, &bits)?;
            let weight = branch.weight();
            branch.apply(&u0, &[BOB_HIGH, BOB_LOW, ANCILLA])?;
            let success = branch.project(&[ANCILLA], &[0])?;
            let joint = success.weight();
            let fidelity = if joint > T::zero() {
                let mut fixed = k.alice_bits().to_vec();
                fixed.push((ANCILLA, 0));
                let mut pair = success.restrict(&fixed)?.normalized()?;
                correction_for(k).apply_to(&mut pair, (0, 1))?;
                Some(pair.fidelity_up_to_phase(&target)?)
            } else {
                None
            };
            Ok(BranchAnalysis {
                outcome: k,
                weight,
                success_given_outcome: if weight > T::zero() {
                    joint / weight
                } else {
                    T::zero()
                },
                joint_success: joint,
                fidelity,
            })
        })
        .collect()
}

/// Total success probability by summing the enumerated branches.
pub fn enumerated_success_probability<T: Real>(
    s: &InputState<T>,
    p: &ChannelParams<T>,
) -> Result<T> {
    Ok(enumerate_branches(s, p, ChannelMode::Direct)?
        .iter()
        .fold(T::zero(), |acc, b| acc + b.joint_success))
}

/// `P(k)` for every outcome, from the closed-form table.
pub fn branch_weights<T: Real>(s: &InputState<T>, p: &ChannelParams<T>) -> Result<[T; 16]> {
    let mut w = [T::zero(); 16];
    for k in OutcomeIndex::all() {
        w[k.0 as usize] = collapse_oracle(k, s, p)?.weight();
    }
    Ok(w)
}

// ----------------------------------------------------------------------------
// Trials

/// Random stream for one trial. `seed` is expanded by
/// [`SeedableRng::seed_from_u64`] (PCG32 output mixing) into a ChaCha8 key.
pub fn trial_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of trial `index` in a batch started from `base`.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord<T> {
    pub seed: u64,
    pub outcome: OutcomeIndex,
    pub ancilla: u8,
    pub success: bool,
    /// Fidelity of Bob's corrected pair to the input; `None` on failure.
    pub fidelity: Option<T>,
    /// Exact probability of the sampled Alice outcome.
    pub branch_probability: T,
}

/// One full run of the protocol with a sampled outcome.
pub fn run_trial<T: Real>(
    s: &InputState<T>,
    p: &ChannelParams<T>,
    mode: ChannelMode,
    seed: u64,
) -> Result<TrialRecord<T>> {
    let mut rng = trial_rng(seed);
    let reg = prepare_register(s, p, mode)?;

    let (first, reg) = bell_measure(&reg, PAIR_A, &mut rng)?;
    let (second, reg) = bell_measure(&reg, PAIR_B, &mut rng)?;
    let k = OutcomeIndex::from_pairs(first, second);
    let branch_probability = collapse_oracle(k, s, p)?.weight();

    let bob = reg.restrict(&k.alice_bits())?;
    let target = prepare_input(s)?;
    Ok(match bob_recover(&bob, k, p, &mut rng)? {
        BobResult::Success(pair) => TrialRecord {
            seed,
            outcome: k,
            ancilla: 0,
            success: true,
            fidelity: Some(pair.fidelity_up_to_phase(&target)?),
            branch_probability,
        },
        BobResult::Failure => TrialRecord {
            seed,
            outcome: k,
            ancilla: 1,
            success: false,
            fidelity: None,
            branch_probability,
        },
    })
}

// ----------------------------------------------------------------------------
// Deferred measurement

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeferredMode {
    /// Alice's qubits stay unmeasured and drive quantum-controlled
    /// corrections; everything is measured at the end.
    Coherent,
    /// Alice measures first and Bob applies the tabulated correction.
    Classical,
}

/// One cell of the joint distribution over (Alice outcome, ancilla).
#[derive(Clone, Debug)]
pub struct JointCell<T> {
    pub outcome: OutcomeIndex,
    pub ancilla: u8,
    pub probability: T,
    /// Bob's final pair, when the cell is reachable.
    pub state: Option<PureState<T>>,
    /// Whether that state matches the input up to global phase.
    pub perfect: bool,
}

#[derive(Clone, Debug)]
pub struct JointDistribution<T> {
    pub cells: Vec<JointCell<T>>,
}

impl<T: Real> JointDistribution<T> {
    pub fn success_probability(&self) -> T {
        self.cells
            .iter()
            .filter(|c| c.ancilla == 0)
            .fold(T::zero(), |acc, c| acc + c.probability)
    }

    /// Largest probability difference between matching cells.
    pub fn probability_deviation(&self, other: &Self) -> T {
        self.cells
            .iter()
            .zip(&other.cells)
            .fold(T::zero(), |w, (a, b)| {
                w.max((a.probability - b.probability).abs())
            })
    }

    /// Largest final-state deviation (up to global phase) between matching
    /// reachable cells; infinite if the cell layout or reachability differs.
    pub fn state_deviation(&self, other: &Self) -> T {
        if self.cells.len() != other.cells.len() {
            return T::infinity();
        }
        let mut worst = T::zero();
        for (a, b) in self.cells.iter().zip(&other.cells) {
            if a.outcome != b.outcome || a.ancilla != b.ancilla || a.perfect != b.perfect {
                return T::infinity();
            }
            match (&a.state, &b.state) {
                (Some(x), Some(y)) => match x.deviation_up_to_phase(y) {
                    Ok(d) => worst = worst.max(d),
                    Err(_) => return T::infinity(),
                },
                (None, None) => {}
                _ => return T::infinity(),
            }
        }
        worst
    }
}

fn controlled_z<T: Real>() -> Matrix<T> {
    Matrix::diagonal(&[
        Complex::one(),
        Complex::one(),
        Complex::one(),
        -Complex::<T>::one(),
    ])
}

/// Exact joint distribution of the protocol under either measurement
/// placement. No sampling is involved.
pub fn run_deferred_comparison<T: Real>(
    s: &InputState<T>,
    p: &ChannelParams<T>,
    mode: DeferredMode,
) -> Result<JointDistribution<T>> {
    let mut reg = prepare_register(s, p, ChannelMode::Direct)?;
    bell_rotate(&mut reg, PAIR_A)?;
    bell_rotate(&mut reg, PAIR_B)?;
    let u0 = build_u0(p)?;
    let target = prepare_input(s)?;
    let tol = T::derived_tol();

    if mode == DeferredMode::Coherent {
        reg.apply(&u0, &[BOB_HIGH, BOB_LOW, ANCILLA])?;
        // Pair B's bits steer Bob's high qubit, pair A's bits his low qubit:
        // X conditioned on the second qubit of the pair, then Z on the first.
        let cx = cnot_high_control();
        let cz = controlled_z();
        reg.apply(&cx, &[PAIR_B.1, BOB_HIGH])?;
        reg.apply(&cz, &[PAIR_B.0, BOB_HIGH])?;
        reg.apply(&cx, &[PAIR_A.1, BOB_LOW])?;
        reg.apply(&cz, &[PAIR_A.0, BOB_LOW])?;
    }

    let mut cells = Vec::with_capacity(32);
    for k in OutcomeIndex::all() {
        let (qubits, bits): (Vec<usize>, Vec<u8>) = k.alice_bits().iter().copied().unzip();
        let mut branch = reg.project(&qubits, &bits)?;
        if mode == DeferredMode::Classical {
            branch.apply(&u0, &[BOB_HIGH, BOB_LOW, ANCILLA])?;
        }
        for ancilla in [0u8, 1] {
            let cell = branch.project(&[ANCILLA], &[ancilla])?;
            let probability = cell.weight();
            let state = if probability > T::zero() {
                let mut fixed = k.alice_bits().to_vec();
                fixed.push((ANCILLA, ancilla));
                let mut pair = cell.restrict(&fixed)?.normalized()?;
                if mode == DeferredMode::Classical {
                    correction_for(k).apply_to(&mut pair, (0, 1))?;
                }
                Some(pair)
            } else {
                None
            };
            let perfect = match &state {
                Some(st) => st.fidelity_up_to_phase(&target)? > T::one() - tol,
                None => false,
            };
            cells.push(JointCell {
                outcome: k,
                ancilla,
                probability,
                state,
                perfect,
            });
        }
    }
    Ok(JointDistribution { cells })
}
