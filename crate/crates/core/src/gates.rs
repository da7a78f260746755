//! Gate matrices used by the protocol: Pauli and rotation gates, the two CNOT
//! placements, the three Toffoli placements, the parameterized
//! doubly-controlled blocks, the purification unitary and its factorization
//! into 148 elementary factors.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{cis, re, Real};
use crate::state::PureState;

/// Real coefficients of the shared four-qubit channel
/// `α|0000⟩ + β|1001⟩ + γ|0110⟩ + κ|1111⟩`.
///
/// Valid parameters are normalized, nonzero, and have
/// `0 < α ≤ min(|β|, |γ|, |κ|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub kappa: T,
}

impl<T: Real> ChannelParams<T> {
    pub fn new(alpha: T, beta: T, gamma: T, kappa: T) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            gamma,
            kappa,
        };
        p.validate()?;
        Ok(p)
    }

    /// Rescales the four coefficients to unit norm, then validates.
    pub fn normalized(alpha: T, beta: T, gamma: T, kappa: T) -> Result<Self> {
        let n = (alpha * alpha + beta * beta + gamma * gamma + kappa * kappa).sqrt();
        if !(n.is_finite() && n > T::zero()) {
            return Err(Error::InvalidChannel("coefficients have zero norm".into()));
        }
        Self::new(alpha / n, beta / n, gamma / n, kappa / n)
    }

    /// The maximally entangled channel, every coefficient `1/2`.
    pub fn maximal() -> Self {
        let h = T::of(0.5);
        Self {
            alpha: h,
            beta: h,
            gamma: h,
            kappa: h,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma, self.kappa];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidChannel("coefficients must be finite".into()));
        }
        if all.iter().any(|v| v.is_zero()) {
            return Err(Error::InvalidChannel("coefficients must be nonzero".into()));
        }
        if self.alpha <= T::zero() {
            return Err(Error::InvalidChannel(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        let floor = self.beta.abs().min(self.gamma.abs()).min(self.kappa.abs());
        if self.alpha > floor {
            return Err(Error::InvalidChannel(format!(
                "alpha = {} exceeds min(|beta|, |gamma|, |kappa|) = {}",
                self.alpha, floor
            )));
        }
        let norm = all.iter().fold(T::zero(), |acc, &v| acc + v * v);
        if (norm - T::one()).abs() > T::linalg_tol() {
            return Err(Error::InvalidChannel(format!(
                "alpha^2 + beta^2 + gamma^2 + kappa^2 = {norm}, expected 1"
            )));
        }
        Ok(())
    }

    /// Uniform direction on the unit 3-sphere, relabelled so the smallest
    /// magnitude becomes a positive `α`; the others keep random signs.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let n2: f64 = v.iter().map(|x| x * x).sum();
            if !(1e-4..=1.0).contains(&n2) {
                continue;
            }
            let n = n2.sqrt();
            let mut mags: Vec<f64> = v.iter().map(|x| x.abs() / n).collect();
            let min_at = (0..4)
                .min_by(|&a, &b| mags[a].total_cmp(&mags[b]))
                .unwrap_or(0);
            let alpha = mags.remove(min_at);
            if alpha < 1e-3 {
                continue;
            }
            let signed: Vec<f64> = mags
                .iter()
                .map(|&m| if rng.gen::<bool>() { m } else { -m })
                .collect();
            let p = Self {
                alpha: T::of(alpha),
                beta: T::of(signed[0]),
                gamma: T::of(signed[1]),
                kappa: T::of(signed[2]),
            };
            if p.validate().is_ok() {
                return p;
            }
        }
    }

    pub fn to_f64(&self) -> ChannelParams<f64> {
        ChannelParams {
            alpha: self.alpha.as_f64(),
            beta: self.beta.as_f64(),
            gamma: self.gamma.as_f64(),
            kappa: self.kappa.as_f64(),
        }
    }
}

/// `√(1 − r²)`, clamped at zero against rounding.
fn complement<T: Real>(r: T) -> T {
    (T::one() - r * r).max(T::zero()).sqrt()
}

// ----------------------------------------------------------------------------
// Named gates

pub fn identity2<T: Real>() -> Matrix<T> {
    Matrix::identity(2)
}

pub fn pauli_x<T: Real>() -> Matrix<T> {
    Matrix::transposition(2, 0, 1)
}

pub fn pauli_z<T: Real>() -> Matrix<T> {
    Matrix::diagonal(&[Complex::one(), re(-T::one())])
}

pub fn hadamard<T: Real>() -> Matrix<T> {
    let s = T::FRAC_1_SQRT_2();
    real2([s, s, s, -s])
}

/// `Ry(θ) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`.
pub fn ry<T: Real>(theta: T) -> Matrix<T> {
    let half = theta / T::of(2.0);
    let (s, co) = half.sin_cos();
    real2([co, -s, s, co])
}

/// `Rz(θ) = diag(e^{−iθ/2}, e^{iθ/2})`.
pub fn rz<T: Real>(theta: T) -> Matrix<T> {
    let half = theta / T::of(2.0);
    Matrix::diagonal(&[cis(-half), cis(half)])
}

/// `diag(1, e^{iδ})`.
pub fn phase<T: Real>(delta: T) -> Matrix<T> {
    Matrix::diagonal(&[Complex::one(), cis(delta)])
}

/// CNOT with the control on the first (high) qubit: swaps `|10⟩ ↔ |11⟩`.
pub fn cnot_high_control<T: Real>() -> Matrix<T> {
    Matrix::transposition(4, 2, 3)
}

/// CNOT with the control on the second (low) qubit: swaps `|01⟩ ↔ |11⟩`.
pub fn cnot_low_control<T: Real>() -> Matrix<T> {
    Matrix::transposition(4, 1, 3)
}

/// Toffoli on three qubits with controls on qubits `i`, `j` (0-based) and
/// the target on the remaining one.
pub fn toffoli<T: Real>(controls: (usize, usize)) -> Result<Matrix<T>> {
    let target = remaining_qubit(controls)?;
    build_ccu(&pauli_x(), controls, target)
}

fn remaining_qubit(controls: (usize, usize)) -> Result<usize> {
    let (i, j) = controls;
    if i > 2 || j > 2 || i == j {
        return Err(Error::InvalidControlAssignment {
            controls,
            target: usize::MAX,
        });
    }
    Ok(3 - i - j)
}

fn real2<T: Real>(values: [T; 4]) -> Matrix<T> {
    Matrix::from_real(2, &values).expect("finite 2x2 literal")
}

/// Gates addressable by name, as printed in reports and parsed from the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasicGate {
    I,
    X,
    Z,
    H,
    /// CNOT on two qubits, first qubit controls, `Λ₁(X)`.
    Lambda1X,
    /// CNOT on two qubits, second qubit controls, `Λ₂(X)`.
    Lambda2X,
    /// Toffoli, controls on the first two of three qubits.
    C12,
    /// Toffoli, controls on the last two of three qubits.
    C23,
    /// Toffoli, controls on the first and last of three qubits.
    C13,
}

impl BasicGate {
    pub const ALL: [BasicGate; 9] = [
        BasicGate::I,
        BasicGate::X,
        BasicGate::Z,
        BasicGate::H,
        BasicGate::Lambda1X,
        BasicGate::Lambda2X,
        BasicGate::C12,
        BasicGate::C23,
        BasicGate::C13,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BasicGate::I => "I",
            BasicGate::X => "X",
            BasicGate::Z => "Z",
            BasicGate::H => "H",
            BasicGate::Lambda1X => "L1X",
            BasicGate::Lambda2X => "L2X",
            BasicGate::C12 => "C12",
            BasicGate::C23 => "C23",
            BasicGate::C13 => "C13",
        }
    }

    pub fn n_qubits(self) -> usize {
        match self {
            BasicGate::I | BasicGate::X | BasicGate::Z | BasicGate::H => 1,
            BasicGate::Lambda1X | BasicGate::Lambda2X => 2,
            BasicGate::C12 | BasicGate::C23 | BasicGate::C13 => 3,
        }
    }
}

impl fmt::Display for BasicGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BasicGate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "I" => BasicGate::I,
            "X" => BasicGate::X,
            "Z" => BasicGate::Z,
            "H" => BasicGate::H,
            "L1X" | "Λ1(X)" | "Λ₁(X)" | "CNOT" => BasicGate::Lambda1X,
            "L2X" | "Λ2(X)" | "Λ₂(X)" => BasicGate::Lambda2X,
            "C12" | "C₁₂" => BasicGate::C12,
            "C23" | "C₂₃" => BasicGate::C23,
            "C13" | "C₁₃" => BasicGate::C13,
            other => return Err(Error::UnknownGate(other.to_string())),
        })
    }
}

pub fn basic_gate<T: Real>(gate: BasicGate) -> Matrix<T> {
    match gate {
        BasicGate::I => identity2(),
        BasicGate::X => pauli_x(),
        BasicGate::Z => pauli_z(),
        BasicGate::H => hadamard(),
        BasicGate::Lambda1X => cnot_high_control(),
        BasicGate::Lambda2X => cnot_low_control(),
        BasicGate::C12 => Matrix::transposition(8, 6, 7),
        BasicGate::C23 => Matrix::transposition(8, 3, 7),
        BasicGate::C13 => Matrix::transposition(8, 5, 7),
    }
}

/// Looks a gate up by its textual name.
pub fn basic_gate_by_name<T: Real>(name: &str) -> Result<Matrix<T>> {
    Ok(basic_gate(name.parse()?))
}

// ----------------------------------------------------------------------------
// Parameterized blocks

/// The three 2×2 blocks conditioned on two control qubits inside the
/// factorization of the purification unitary.
#[derive(Clone, Debug)]
pub struct UBlocks<T> {
    /// `[[−α/β, √(1−α²/β²)], [−√(1−α²/β²), −α/β]]`
    pub u1: Matrix<T>,
    /// As `u1` with `γ` in place of `β`.
    pub u2: Matrix<T>,
    /// `[[α/κ, −√(1−α²/κ²)], [√(1−α²/κ²), α/κ]]`
    pub u3: Matrix<T>,
}

pub fn build_u_blocks<T: Real>(p: &ChannelParams<T>) -> Result<UBlocks<T>> {
    p.validate()?;
    let flip_block = |x: T| {
        let r = p.alpha / x;
        let s = complement(r);
        real2([-r, s, -s, -r])
    };
    let r3 = p.alpha / p.kappa;
    let s3 = complement(r3);
    Ok(UBlocks {
        u1: flip_block(p.beta),
        u2: flip_block(p.gamma),
        u3: real2([r3, -s3, s3, r3]),
    })
}

/// Doubly-controlled `u` on a three-qubit register: identity except on the
/// pair of basis states where both controls are 1, on which `u` acts on the
/// target qubit. Qubits are 0-based.
pub fn build_ccu<T: Real>(
    u: &Matrix<T>,
    controls: (usize, usize),
    target: usize,
) -> Result<Matrix<T>> {
    let (i, j) = controls;
    let valid = i < 3 && j < 3 && target < 3 && i != j && i != target && j != target;
    if !valid {
        return Err(Error::InvalidControlAssignment { controls, target });
    }
    if u.dim() != 2 {
        return Err(Error::GateDimension {
            dim: u.dim(),
            targets: 1,
        });
    }
    let base = 1usize << (2 - i) | 1 << (2 - j);
    let idx = [base, base | 1 << (2 - target)];
    let mut m = Matrix::identity(8);
    for (r, &row) in idx.iter().enumerate() {
        for (cc, &col) in idx.iter().enumerate() {
            m.set(row, col, u.get(r, cc));
        }
    }
    Ok(m)
}

/// Reads the 2×2 block a doubly-controlled gate applies to its target.
pub fn ccu_block<T: Real>(
    m: &Matrix<T>,
    controls: (usize, usize),
    target: usize,
) -> Result<Matrix<T>> {
    if m.dim() != 8 {
        return Err(Error::GateDimension {
            dim: m.dim(),
            targets: 3,
        });
    }
    let (i, j) = controls;
    if i >= 3 || j >= 3 || target >= 3 || i == j || i == target || j == target {
        return Err(Error::InvalidControlAssignment { controls, target });
    }
    let base = 1usize << (2 - i) | 1 << (2 - j);
    let idx = [base, base | 1 << (2 - target)];
    Matrix::from_entries(
        idx.iter()
            .flat_map(|&r| idx.iter().map(move |&cc| m.get(r, cc)))
            .collect(),
    )
}

/// Bob's collective purification unitary on `(q5, q6, ancilla)`, basis
/// ordered `|000⟩ … |111⟩`.
pub fn build_u0<T: Real>(p: &ChannelParams<T>) -> Result<Matrix<T>> {
    p.validate()?;
    let mut m = Matrix::zeros(8);
    m.set(0, 0, Complex::one());
    for (row, x) in [(1, p.beta), (3, p.gamma)] {
        let r = p.alpha / x;
        let s = complement(r);
        m.set(row, row, re(-r));
        m.set(row, row + 1, re(s));
        m.set(row + 1, row, re(s));
        m.set(row + 1, row + 1, re(r));
    }
    m.set(5, 5, re(-T::one()));
    let r = p.alpha / p.kappa;
    let s = complement(r);
    m.set(6, 6, re(r));
    m.set(6, 7, re(s));
    m.set(7, 6, re(s));
    m.set(7, 7, re(-r));
    Ok(m)
}

/// Bell states `[Φ⁺, Φ⁻, Ψ⁺, Ψ⁻]` on two qubits, indexed by Bell outcome.
pub fn bell_states<T: Real>() -> [PureState<T>; 4] {
    let s = T::FRAC_1_SQRT_2();
    let z = Complex::zero();
    let p = re(s);
    let n = re(-s);
    let make =
        |a: [Complex<T>; 4]| PureState::new(2, a.to_vec()).expect("Bell state is normalized");
    [
        make([p, z, z, p]),
        make([p, z, z, n]),
        make([z, p, p, z]),
        make([z, p, n, z]),
    ]
}

// ----------------------------------------------------------------------------
// Gate sequences

/// What a [`GateOp`] is, so later passes can recognize it without inspecting
/// its matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum GateLabel<T> {
    Basic(BasicGate),
    Ry(T),
    Rz(T),
    Phase(T),
    /// Doubly-controlled 2×2 block; `which` is 1, 2 or 3 for `u₁`, `u₂`, `u₃`.
    Ccu {
        which: u8,
        controls: (usize, usize),
        target: usize,
    },
    Custom(String),
}

impl<T: Real> fmt::Display for GateLabel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateLabel::Basic(g) => write!(f, "{g}"),
            GateLabel::Ry(t) => write!(f, "Ry({t})"),
            GateLabel::Rz(t) => write!(f, "Rz({t})"),
            GateLabel::Phase(t) => write!(f, "Phase({t})"),
            GateLabel::Ccu {
                which,
                controls,
                target,
            } => write!(
                f,
                "CCU{which}[c={},{} t={}]",
                controls.0, controls.1, target
            ),
            GateLabel::Custom(s) => write!(f, "{s}"),
        }
    }
}

/// A unitary bound to an ordered list of target qubits.
#[derive(Clone, Debug)]
pub struct GateOp<T> {
    pub label: GateLabel<T>,
    pub targets: Vec<usize>,
    pub matrix: Matrix<T>,
}

impl<T: Real> GateOp<T> {
    pub fn new(label: GateLabel<T>, matrix: Matrix<T>, targets: Vec<usize>) -> Result<Self> {
        if matrix.dim() != 1usize << targets.len() {
            return Err(Error::GateDimension {
                dim: matrix.dim(),
                targets: targets.len(),
            });
        }
        Ok(Self {
            label,
            targets,
            matrix,
        })
    }

    pub fn basic(gate: BasicGate, targets: &[usize]) -> Result<Self> {
        Self::new(GateLabel::Basic(gate), basic_gate(gate), targets.to_vec())
    }

    pub fn ry(theta: T, target: usize) -> Self {
        Self {
            label: GateLabel::Ry(theta),
            targets: vec![target],
            matrix: ry(theta),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            label: GateLabel::Basic(BasicGate::Lambda1X),
            targets: vec![control, target],
            matrix: cnot_high_control(),
        }
    }
}

/// Ordered gate list in temporal order: the first element acts first.
#[derive(Clone, Debug)]
pub struct GateSequence<T> {
    pub width: usize,
    pub ops: Vec<GateOp<T>>,
}

impl<T: Real> GateSequence<T> {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            ops: Vec::new(),
        }
    }

    pub fn push(&mut self, op: GateOp<T>) -> Result<()> {
        crate::matrix::check_targets(op.matrix.dim(), &op.targets, self.width)?;
        self.ops.push(op);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// Unitary of a temporal gate list on `width` qubits: `U = G_last ⋯ G_first`.
pub fn compose<T: Real>(ops: &[GateOp<T>], width: usize) -> Result<Matrix<T>> {
    let mut acc = Matrix::identity(1 << width);
    for op in ops {
        let full = op.matrix.embed(&op.targets, width)?;
        acc = full.matmul(&acc)?;
    }
    Ok(acc)
}

pub fn compose_sequence<T: Real>(seq: &GateSequence<T>) -> Result<Matrix<T>> {
    compose(&seq.ops, seq.width)
}

/// One factor of the purification-unitary factorization. Placement
/// follows `A ⊗ B` with `A` on the high qubits of `(q5, q6, a)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    /// `I ⊗ Λ₂(X)`: CNOT on qubits (1, 2) controlled by qubit 2.
    IL2,
    /// `I ⊗ Λ₁(X)`: CNOT on qubits (1, 2) controlled by qubit 1.
    IL1,
    /// `Λ₁(X) ⊗ I`: CNOT on qubits (0, 1) controlled by qubit 0.
    L1I,
    /// `Λ₂(X) ⊗ I`: CNOT on qubits (0, 1) controlled by qubit 1.
    L2I,
    /// `I ⊗ X ⊗ I`
    IXI,
    /// `I ⊗ I ⊗ X`
    IIX,
    /// `I ⊗ I ⊗ Z`
    IIZ,
    C12,
    C13,
    C23,
    /// `Λ₂₃(u₁)`
    U1,
    /// `Λ₁₃(u₂)`
    U2,
    /// `Λ₁₂(u₃)`
    U3,
}

/// The factorization in matrix-product order, left to right, so the leftmost
/// factor acts last.
#[rustfmt::skip]
pub const U0_FACTORS: [Factor; 148] = {
    use Factor::*;
    [
        IL2, C13, IL1, C12, IL2, C13, IXI, L1I, IL2, C13,
        IL2, C13, IL1, C12, IL2, C13, IIX, IL1, C23, C13,
        IL2, C13, IL1, C12, IL2, C13, IXI, L1I,
        IL2, C13, IL2, C13, IL1, C12, IL2, C13, IIX,
        IL1, C13, C23, IL1, C12, IL2, C13, IL1, C12, IL2,
        C13, C12, L2I, C23, C12, U1, C12, L2I, C23, C12, C13, IL2, C13,
        IL1, C12, IL2, C13, IXI, L1I, IL2, C13,
        IL2, C13, IL1, C12, IL2, C13, IIX, IL1, C13, U2,
        C13, IL2, C13, IL1, C12, IL2, C13, IXI, L1I, IL2,
        C13, IL2, C13, IL1, C12, IL2, C13, IIX, IL1, C13, U3,
        IIZ, IL2, C13, IL1, C12, IL2, C13, IL1, C12, C23, C13,
        IL2, C13, IL1, C12, IL2, C13, IXI, L1I, IL2, C13,
        IL2, C13, IL1, C12, IL2, C13, IIX, IL1, C13, C23,
        IL2, C13, IL1, C12, IL2, C13, IXI, L1I, IL2,
        C13, IL2, C13, IL1, C12, IL2, C13, IIX, IL1,
    ]
};

fn factor_op<T: Real>(f: Factor, blocks: &UBlocks<T>) -> GateOp<T> {
    let basic = |g: BasicGate, t: &[usize]| GateOp::basic(g, t).expect("factor arity is fixed");
    let ccu = |which: u8, u: &Matrix<T>, controls: (usize, usize), target: usize| GateOp {
        label: GateLabel::Ccu {
            which,
            controls,
            target,
        },
        targets: vec![0, 1, 2],
        matrix: build_ccu(u, controls, target).expect("fixed control assignment"),
    };
    match f {
        Factor::IL2 => basic(BasicGate::Lambda2X, &[1, 2]),
        Factor::IL1 => basic(BasicGate::Lambda1X, &[1, 2]),
        Factor::L1I => basic(BasicGate::Lambda1X, &[0, 1]),
        Factor::L2I => basic(BasicGate::Lambda2X, &[0, 1]),
        Factor::IXI => basic(BasicGate::X, &[1]),
        Factor::IIX => basic(BasicGate::X, &[2]),
        Factor::IIZ => basic(BasicGate::Z, &[2]),
        Factor::C12 => basic(BasicGate::C12, &[0, 1, 2]),
        Factor::C13 => basic(BasicGate::C13, &[0, 1, 2]),
        Factor::C23 => basic(BasicGate::C23, &[0, 1, 2]),
        Factor::U1 => ccu(1, &blocks.u1, (1, 2), 0),
        Factor::U2 => ccu(2, &blocks.u2, (0, 2), 1),
        Factor::U3 => ccu(3, &blocks.u3, (0, 1), 2),
    }
}

/// The factorization of [`build_u0`] as a temporal gate list on three qubits:
/// the rightmost factor of [`U0_FACTORS`] comes first.
pub fn u0_factor_sequence<T: Real>(p: &ChannelParams<T>) -> Result<GateSequence<T>> {
    let blocks = build_u_blocks(p)?;
    Ok(GateSequence {
        width: 3,
        ops: U0_FACTORS
            .iter()
            .rev()
            .map(|&f| factor_op(f, &blocks))
            .collect(),
    })
}
