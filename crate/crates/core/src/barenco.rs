//! Lowering of multi-qubit factors to single-qubit gates and CNOTs.
//!
//! Doubly-controlled gates use the five-factor scheme
//! `C-V(j→k) · CNOT(i→j) · C-V†(j→k) · CNOT(i→j) · C-V(i→k)` with `V² = u`,
//! and every singly-controlled gate is built from the `A·B·C = I` identity
//! plus a phase gate on the control. Both constructions are exact, including
//! relative phases.
//!
//! # Text format
//!
//! [`to_text`] writes one gate per line:
//!
//! ```text
//! # width 3
//! CNOT 0 1
//! U 2 0.5 0 -0.5 0 0.5 0 0.5 0   # A
//! ```
//!
//! `CNOT <control> <target>` or `U <target> <re00> <im00> <re01> <im01>
//! <re10> <im10> <re11> <im11>`, qubits 0-based with qubit 0 the most
//! significant. Anything after `#` is a comment.

use std::fmt::Write as _;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::gates::{ccu_block, pauli_x, phase, ry, rz, BasicGate, GateLabel, GateOp, GateSequence};
use crate::matrix::Matrix;
use crate::scalar::{cis, Real};

/// A gate from the universal set the flattened circuits are built from.
#[derive(Clone, Debug, PartialEq)]
pub enum PrimitiveGate<T> {
    Single {
        target: usize,
        matrix: Matrix<T>,
        label: String,
    },
    Cnot {
        control: usize,
        target: usize,
    },
}

impl<T: Real> PrimitiveGate<T> {
    pub fn single(target: usize, matrix: Matrix<T>, label: impl Into<String>) -> Self {
        PrimitiveGate::Single {
            target,
            matrix,
            label: label.into(),
        }
    }

    pub fn is_cnot(&self) -> bool {
        matches!(self, PrimitiveGate::Cnot { .. })
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            PrimitiveGate::Single { target, .. } => vec![*target],
            PrimitiveGate::Cnot { control, target } => vec![*control, *target],
        }
    }

    pub fn to_op(&self) -> GateOp<T> {
        match self {
            PrimitiveGate::Single {
                target,
                matrix,
                label,
            } => GateOp {
                label: GateLabel::Custom(label.clone()),
                targets: vec![*target],
                matrix: matrix.clone(),
            },
            PrimitiveGate::Cnot { control, target } => GateOp::cnot(*control, *target),
        }
    }
}

/// `u = e^{i·phase} · Rz(z_left) · Ry(y) · Rz(z_right)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZyzAngles<T> {
    pub phase: T,
    pub z_left: T,
    pub y: T,
    pub z_right: T,
}

impl<T: Real> ZyzAngles<T> {
    pub fn to_matrix(&self) -> Matrix<T> {
        let core = &(&rz(self.z_left) * &ry(self.y)) * &rz(self.z_right);
        core.scale(cis(self.phase))
    }
}

fn require_unitary<T: Real>(u: &Matrix<T>) -> Result<()> {
    if u.dim() != 2 {
        return Err(Error::GateDimension {
            dim: u.dim(),
            targets: 1,
        });
    }
    let deviation = u.unitarity_deviation();
    if deviation.is_nan() || deviation >= T::derived_tol() {
        return Err(Error::NotUnitary {
            deviation: deviation.as_f64(),
        });
    }
    Ok(())
}

/// Euler ZYZ angles of a 2×2 unitary.
pub fn zy_decompose<T: Real>(u: &Matrix<T>) -> Result<ZyzAngles<T>> {
    require_unitary(u)?;
    let two = T::of(2.0);
    let phase = u.det2()?.arg() / two;
    let w = u.scale(cis(-phase));
    let (w00, w10, w11) = (w.get(0, 0), w.get(1, 0), w.get(1, 1));
    let y = two * w10.norm().atan2(w00.norm());
    let tiny = T::epsilon().sqrt();
    let sum = if w11.norm() > tiny {
        two * w11.arg()
    } else {
        T::zero()
    };
    let diff = if w10.norm() > tiny {
        two * w10.arg()
    } else {
        T::zero()
    };
    Ok(ZyzAngles {
        phase,
        z_left: (sum + diff) / two,
        y,
        z_right: (sum - diff) / two,
    })
}

/// Principal square root of a 2×2 unitary: eigenphases in `(−π, π]` are
/// halved into `(−π/2, π/2]`.
pub fn principal_sqrt<T: Real>(u: &Matrix<T>) -> Result<Matrix<T>> {
    require_unitary(u)?;
    let two = T::of(2.0);
    let half_trace = u.trace() / two;
    let disc = (half_trace * half_trace - u.det2()?).sqrt();
    let half_phase = |lambda: Complex<T>| {
        let mut phi = lambda.arg();
        if phi <= -T::PI() {
            phi = T::PI();
        }
        cis(phi / two)
    };
    let mu1 = half_phase(half_trace + disc);
    let mu2 = half_phase(half_trace - disc);
    // For a 2×2 matrix with eigenvalues μ₁², μ₂²: √u = (u + μ₁μ₂·I) / (μ₁ + μ₂).
    let denom = mu1 + mu2;
    if denom.norm() < T::epsilon() {
        return Err(Error::NotUnitary {
            deviation: f64::NAN,
        });
    }
    let shifted = Matrix::from_entries(vec![
        u.get(0, 0) + mu1 * mu2,
        u.get(0, 1),
        u.get(1, 0),
        u.get(1, 1) + mu1 * mu2,
    ])?;
    Ok(shifted.scale(denom.inv()))
}

/// Single-qubit pieces of a controlled-`u`: `a·b·c = I` and
/// `a·X·b·X·c = e^{−i·phase}·u`.
#[derive(Clone, Debug)]
pub struct AbcFactors<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    pub c: Matrix<T>,
    pub phase: T,
}

pub fn abc_factors<T: Real>(u: &Matrix<T>) -> Result<AbcFactors<T>> {
    let ZyzAngles {
        phase,
        z_left,
        y,
        z_right,
    } = zy_decompose(u)?;
    let two = T::of(2.0);
    Ok(AbcFactors {
        a: &rz(z_left) * &ry(y / two),
        b: &ry(-y / two) * &rz(-(z_right + z_left) / two),
        c: rz((z_right - z_left) / two),
        phase,
    })
}

/// Controlled-`u` as single-qubit gates and two CNOTs, in temporal order.
pub fn decompose_cu<T: Real>(
    u: &Matrix<T>,
    control: usize,
    target: usize,
) -> Result<Vec<PrimitiveGate<T>>> {
    if control == target {
        return Err(Error::SameQubit(control, target));
    }
    let f = abc_factors(u)?;
    Ok(vec![
        PrimitiveGate::single(target, f.c, "C"),
        PrimitiveGate::Cnot { control, target },
        PrimitiveGate::single(target, f.b, "B"),
        PrimitiveGate::Cnot { control, target },
        PrimitiveGate::single(target, f.a, "A"),
        PrimitiveGate::single(control, phase(f.phase), "P"),
    ])
}

/// Doubly-controlled `u` (controls `i`, `j`, target `k`) flattened to
/// single-qubit gates and CNOTs, in temporal order.
pub fn decompose_ccu<T: Real>(
    u: &Matrix<T>,
    controls: (usize, usize),
    target: usize,
) -> Result<Vec<PrimitiveGate<T>>> {
    let (i, j) = controls;
    if i == j || i == target || j == target {
        return Err(Error::InvalidControlAssignment { controls, target });
    }
    let v = principal_sqrt(u)?;
    let v_dag = v.adjoint();
    let mut out = decompose_cu(&v, j, target)?;
    out.push(PrimitiveGate::Cnot {
        control: i,
        target: j,
    });
    out.extend(decompose_cu(&v_dag, j, target)?);
    out.push(PrimitiveGate::Cnot {
        control: i,
        target: j,
    });
    out.extend(decompose_cu(&v, i, target)?);
    Ok(out)
}

fn flatten_op<T: Real>(op: &GateOp<T>, out: &mut Vec<PrimitiveGate<T>>) -> Result<()> {
    let t = &op.targets;
    let toffoli = |local: ((usize, usize), usize)| -> Result<Vec<PrimitiveGate<T>>> {
        let ((a, b), k) = local;
        decompose_ccu(&pauli_x(), (t[a], t[b]), t[k])
    };
    match &op.label {
        GateLabel::Basic(BasicGate::Lambda1X) if t.len() == 2 => out.push(PrimitiveGate::Cnot {
            control: t[0],
            target: t[1],
        }),
        GateLabel::Basic(BasicGate::Lambda2X) if t.len() == 2 => out.push(PrimitiveGate::Cnot {
            control: t[1],
            target: t[0],
        }),
        GateLabel::Basic(BasicGate::C12) if t.len() == 3 => out.extend(toffoli(((0, 1), 2))?),
        GateLabel::Basic(BasicGate::C23) if t.len() == 3 => out.extend(toffoli(((1, 2), 0))?),
        GateLabel::Basic(BasicGate::C13) if t.len() == 3 => out.extend(toffoli(((0, 2), 1))?),
        GateLabel::Ccu {
            controls, target, ..
        } if t.len() == 3 => {
            let block = ccu_block(&op.matrix, *controls, *target)?;
            out.extend(decompose_ccu(
                &block,
                (t[controls.0], t[controls.1]),
                t[*target],
            )?);
        }
        label if t.len() == 1 => out.push(PrimitiveGate::single(
            t[0],
            op.matrix.clone(),
            label.to_string(),
        )),
        label => return Err(Error::UnrecognizedFactor(label.to_string())),
    }
    Ok(())
}

/// Lowers every factor of a sequence to primitives, preserving temporal order.
pub fn flatten<T: Real>(seq: &GateSequence<T>) -> Result<Vec<PrimitiveGate<T>>> {
    let mut out = Vec::new();
    for op in &seq.ops {
        flatten_op(op, &mut out)?;
    }
    Ok(out)
}

/// Unitary of a primitive gate list on `width` qubits.
pub fn compose_primitives<T: Real>(gates: &[PrimitiveGate<T>], width: usize) -> Result<Matrix<T>> {
    let ops: Vec<GateOp<T>> = gates.iter().map(PrimitiveGate::to_op).collect();
    crate::gates::compose(&ops, width)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GateCounts {
    pub single: usize,
    pub cnot: usize,
    pub total: usize,
}

pub fn gate_counts<T: Real>(gates: &[PrimitiveGate<T>]) -> GateCounts {
    let cnot = gates.iter().filter(|g| g.is_cnot()).count();
    GateCounts {
        single: gates.len() - cnot,
        cnot,
        total: gates.len(),
    }
}

/// Serializes a primitive circuit in the line format described at module level.
pub fn to_text<T: Real>(gates: &[PrimitiveGate<T>], width: usize) -> String {
    let mut s = format!("# width {width}\n");
    for g in gates {
        match g {
            PrimitiveGate::Cnot { control, target } => {
                let _ = writeln!(s, "CNOT {control} {target}");
            }
            PrimitiveGate::Single {
                target,
                matrix,
                label,
            } => {
                let nums: Vec<String> = matrix
                    .entries()
                    .iter()
                    .flat_map(|z| [z.re.as_f64(), z.im.as_f64()])
                    .map(|v| format!("{v:?}"))
                    .collect();
                let _ = writeln!(s, "U {target} {}   # {label}", nums.join(" "));
            }
        }
    }
    s
}

/// Parses the line format; returns the declared width (or the smallest one
/// that fits) and the gates.
pub fn from_text<T: Real>(text: &str) -> Result<(usize, Vec<PrimitiveGate<T>>)> {
    let mut width = None;
    let mut gates = Vec::new();
    let bad = |line: &str| Error::UnrecognizedFactor(line.to_string());
    for raw in text.lines() {
        let (body, comment) = match raw.split_once('#') {
            Some((b, c)) => (b.trim(), c.trim()),
            None => (raw.trim(), ""),
        };
        if body.is_empty() {
            if let Some(w) = comment.strip_prefix("width ") {
                width = Some(w.trim().parse().map_err(|_| bad(raw))?);
            }
            continue;
        }
        let mut parts = body.split_whitespace();
        match parts.next() {
            Some("CNOT") => {
                let q: Vec<usize> = parts
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(raw))?;
                if q.len() != 2 {
                    return Err(bad(raw));
                }
                gates.push(PrimitiveGate::Cnot {
                    control: q[0],
                    target: q[1],
                });
            }
            Some("U") => {
                let target: usize = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad(raw))?;
                let nums: Vec<f64> = parts
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(raw))?;
                if nums.len() != 8 {
                    return Err(bad(raw));
                }
                let entries = nums
                    .chunks(2)
                    .map(|p| Complex::new(T::of(p[0]), T::of(p[1])))
                    .collect();
                gates.push(PrimitiveGate::single(
                    target,
                    Matrix::from_entries(entries)?,
                    comment,
                ));
            }
            _ => return Err(bad(raw)),
        }
    }
    let needed = gates
        .iter()
        .flat_map(PrimitiveGate::qubits)
        .max()
        .map_or(1, |q| q + 1);
    Ok((width.unwrap_or(needed).max(needed), gates))
}

/// True when the gate list contains nothing acting on three or more qubits.
/// Holds by construction; kept as a checkable predicate for reports.
pub fn only_primitives<T: Real>(gates: &[PrimitiveGate<T>]) -> bool {
    gates.iter().all(|g| match g {
        PrimitiveGate::Single { matrix, .. } => matrix.dim() == 2,
        PrimitiveGate::Cnot { control, target } => control != target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{
        build_ccu, build_u_blocks, cnot_high_control, identity2, pauli_z, ChannelParams,
    };
    use crate::scalar::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn controlled(u: &Matrix<f64>) -> Matrix<f64> {
        let mut m = Matrix::identity(4);
        for r in 0..2 {
            for col in 0..2 {
                m.set(2 + r, 2 + col, u.get(r, col));
            }
        }
        m
    }

    fn random_unitary(rng: &mut ChaCha8Rng) -> Matrix<f64> {
        let a = ZyzAngles {
            phase: rng.gen_range(-3.0..3.0),
            z_left: rng.gen_range(-6.0..6.0),
            y: rng.gen_range(-6.0..6.0),
            z_right: rng.gen_range(-6.0..6.0),
        };
        a.to_matrix()
    }

    #[test]
    fn zyz_reconstructs_identity_and_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cases = vec![
            identity2(),
            ry(0.7),
            pauli_x(),
            pauli_z(),
            crate::gates::hadamard(),
        ];
        cases.extend((0..50).map(|_| random_unitary(&mut rng)));
        for u in cases {
            let rebuilt = zy_decompose(&u).unwrap().to_matrix();
            assert!(rebuilt.max_deviation(&u).unwrap() < 1e-12, "{u:?}");
        }
    }

    #[test]
    fn zyz_of_u3_block() {
        let p = ChannelParams::normalized(0.3, 0.6, 0.64, 0.7).unwrap();
        let u3 = build_u_blocks(&p).unwrap().u3;
        let rebuilt = zy_decompose(&u3).unwrap().to_matrix();
        assert!(rebuilt.max_deviation(&u3).unwrap() < 1e-12);
    }

    #[test]
    fn zyz_rejects_non_unitary() {
        let m = Matrix::from_real(2, &[1.0, 0.0, 0.0, 2.0]).unwrap();
        assert!(matches!(zy_decompose(&m), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn principal_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let minus_i = Matrix::identity(2).scale(c(-1.0, 0.0));
        let mut cases = vec![pauli_x(), pauli_z(), identity2(), minus_i.clone()];
        cases.extend((0..100).map(|_| random_unitary(&mut rng)));
        for u in cases {
            let v = principal_sqrt(&u).unwrap();
            assert!((&v * &v).max_deviation(&u).unwrap() < 1e-12);
            assert!(v.is_unitary(1e-12));
        }
        // −I has eigenphase π twice, so the principal root is i·I.
        let v = principal_sqrt(&minus_i).unwrap();
        assert!(
            v.max_deviation(&Matrix::identity(2).scale(c(0.0, 1.0)))
                .unwrap()
                < 1e-15
        );
    }

    #[test]
    fn principal_sqrt_of_x() {
        // eigenvalues 1 and −1 -> roots 1 and i: √X = ((1+i) I + (1−i) X) / 2
        let v = principal_sqrt(&pauli_x::<f64>()).unwrap();
        let expect =
            Matrix::from_entries(vec![c(0.5, 0.5), c(0.5, -0.5), c(0.5, -0.5), c(0.5, 0.5)])
                .unwrap();
        assert!(v.max_deviation(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn abc_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let u = random_unitary(&mut rng);
            let f = abc_factors(&u).unwrap();
            let abc = &(&f.a * &f.b) * &f.c;
            assert!(abc.max_deviation(&Matrix::identity(2)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn controlled_x_and_z() {
        let cx = compose_primitives(&decompose_cu(&pauli_x::<f64>(), 0, 1).unwrap(), 2).unwrap();
        assert!(cx.max_deviation(&cnot_high_control()).unwrap() < 1e-12);
        let cz = compose_primitives(&decompose_cu(&pauli_z(), 0, 1).unwrap(), 2).unwrap();
        assert!(cz.max_deviation(&controlled(&pauli_z())).unwrap() < 1e-12);
    }

    #[test]
    fn controlled_u1_for_random_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let u1 = build_u_blocks(&ChannelParams::<f64>::random(&mut rng))
                .unwrap()
                .u1;
            let got = compose_primitives(&decompose_cu(&u1, 0, 1).unwrap(), 2).unwrap();
            assert!(got.max_deviation(&controlled(&u1)).unwrap() < 1e-10);
        }
    }

    #[test]
    fn reversed_control_cu() {
        let u = ry(1.1);
        let got = compose_primitives(&decompose_cu(&u, 1, 0).unwrap(), 2).unwrap();
        let expect = controlled(&u).embed(&[1, 0], 2).unwrap();
        assert!(got.max_deviation(&expect).unwrap() < 1e-12);
    }

    #[test]
    fn flattened_toffolis_and_identity() {
        for (controls, target, name) in [
            ((0, 1), 2, BasicGate::C12),
            ((1, 2), 0, BasicGate::C23),
            ((0, 2), 1, BasicGate::C13),
        ] {
            let gates = decompose_ccu(&pauli_x::<f64>(), controls, target).unwrap();
            let m = compose_primitives(&gates, 3).unwrap();
            assert!(m.max_deviation(&crate::gates::basic_gate(name)).unwrap() < 1e-10);
            assert!(only_primitives(&gates));
        }
        let id =
            compose_primitives(&decompose_ccu(&identity2::<f64>(), (0, 1), 2).unwrap(), 3).unwrap();
        assert!(id.max_deviation(&Matrix::identity(8)).unwrap() < 1e-12);
    }

    #[test]
    fn flattened_u2_matches_ccu() {
        let p = ChannelParams::new(0.3, 0.4, 0.5, 0.5f64.sqrt()).unwrap();
        let u2 = build_u_blocks(&p).unwrap().u2;
        let got = compose_primitives(&decompose_ccu(&u2, (0, 2), 1).unwrap(), 3).unwrap();
        assert!(
            got.max_deviation(&build_ccu(&u2, (0, 2), 1).unwrap())
                .unwrap()
                < 1e-10
        );
    }

    #[test]
    fn flatten_passes_cnot_through() {
        let mut seq = GateSequence::<f64>::new(2);
        seq.push(GateOp::cnot(0, 1)).unwrap();
        assert_eq!(
            flatten(&seq).unwrap(),
            vec![PrimitiveGate::Cnot {
                control: 0,
                target: 1
            }]
        );
    }

    #[test]
    fn flatten_rejects_unknown_multi_qubit_factor() {
        let mut seq = GateSequence::new(2);
        seq.push(
            GateOp::new(
                GateLabel::Custom("mystery".into()),
                Matrix::<f64>::identity(4),
                vec![0, 1],
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(
            flatten(&seq).unwrap_err(),
            Error::UnrecognizedFactor("mystery".into())
        );
    }

    #[test]
    fn text_format_round_trips() {
        let gates = decompose_ccu(&ry(0.4), (2, 0), 1).unwrap();
        let text = to_text(&gates, 3);
        let (width, parsed) = from_text::<f64>(&text).unwrap();
        assert_eq!(width, 3);
        assert_eq!(parsed.len(), gates.len());
        let a = compose_primitives(&gates, 3).unwrap();
        let b = compose_primitives(&parsed, 3).unwrap();
        assert_eq!(a.max_deviation(&b).unwrap(), 0.0);
        assert!(from_text::<f64>("SWAP 0 1").is_err());
    }
}
