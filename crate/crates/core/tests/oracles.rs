//! Cross-checks against constructions that share no code path with the
//! simulator's gate application.

use num_complex::Complex64 as C;
use probtele::gates::{bell_states, build_u0};
use probtele::protocol::{collapse_oracle, prepare_input, success_probability, trial_rng};
use probtele::{Channel, Input, OutcomeIndex};

fn amp(i: usize, n: usize) -> C {
    if i == n {
        C::new(1.0, 0.0)
    } else {
        C::new(0.0, 0.0)
    }
}

/// Six-qubit product of input and channel, written out by hand.
fn joint_state(s: &Input, p: &Channel) -> Vec<C> {
    let x = s.as_array();
    let ch = [
        (0b0000, p.alpha),
        (0b1001, p.beta),
        (0b0110, p.gamma),
        (0b1111, p.kappa),
    ];
    let mut v = vec![C::new(0.0, 0.0); 64];
    for (i, xi) in x.iter().enumerate() {
        for &(j, cj) in &ch {
            v[i << 4 | j] += xi * cj;
        }
    }
    v
}

/// Contracts qubits (1, 2) with Bell state `pa` and qubits (0, 3) with `pb`,
/// leaving the amplitudes of qubits (4, 5).
fn bell_contraction(v: &[C], pa: &[C], pb: &[C]) -> [C; 4] {
    let mut out = [C::new(0.0, 0.0); 4];
    for (q, vq) in v.iter().enumerate() {
        let bit = |k: usize| (q >> (5 - k)) & 1;
        let a = pa[bit(1) << 1 | bit(2)].conj();
        let b = pb[bit(0) << 1 | bit(3)].conj();
        out[bit(4) << 1 | bit(5)] += a * b * vq;
    }
    out
}

fn sample(seed: u64) -> (Input, Channel) {
    let mut rng = trial_rng(seed);
    (Input::random(&mut rng), Channel::random(&mut rng))
}

#[test]
fn bell_contraction_matches_collapse_table() {
    let bells = bell_states::<f64>();
    for seed in 0..20 {
        let (s, p) = sample(seed);
        let v = joint_state(&s, &p);
        for k in OutcomeIndex::all() {
            let pa = bells[k.pair_a().index() as usize].amplitudes();
            let pb = bells[k.pair_b().index() as usize].amplitudes();
            let direct = bell_contraction(&v, pa, pb);
            let table = collapse_oracle(k, &s, &p).unwrap();
            let d = table.max_deviation(&direct).unwrap();
            assert!(d < 1e-12, "seed {seed}, k {k}: {d}");
        }
    }
}

#[test]
fn success_by_dense_matrix_vector_products() {
    let bells = bell_states::<f64>();
    for seed in 0..10 {
        let (s, p) = sample(seed);
        let u0 = build_u0(&p).unwrap();
        let v = joint_state(&s, &p);
        let mut total = 0.0;
        for k in OutcomeIndex::all() {
            let pa = bells[k.pair_a().index() as usize].amplitudes();
            let pb = bells[k.pair_b().index() as usize].amplitudes();
            let bob = bell_contraction(&v, pa, pb);
            // Ancilla is the last qubit: |xy0⟩ has index 2·(2x + y).
            let mut joint = 0.0;
            for row in (0..8).step_by(2) {
                let z: C = (0..4).map(|i| u0.get(row, 2 * i) * bob[i]).sum();
                joint += z.norm_sqr();
            }
            assert!((joint - p.alpha * p.alpha / 4.0).abs() < 1e-12);
            total += joint;
        }
        assert!((total - success_probability(&p).unwrap()).abs() < 1e-11);
    }
}

#[test]
fn hand_computed_success_values() {
    let p = Channel::new(0.3, 0.4, 0.5, 0.5f64.sqrt()).unwrap();
    assert!((success_probability(&p).unwrap() - 0.36).abs() < 1e-15);
    let q = Channel::normalized(0.1, 0.5, 0.6, 0.6).unwrap();
    let a = 0.1 / (0.01f64 + 0.25 + 0.36 + 0.36).sqrt();
    assert!((success_probability(&q).unwrap() - 4.0 * a * a).abs() < 1e-15);
    let m = Channel::maximal();
    assert_eq!(success_probability(&m).unwrap(), 1.0);
}

#[test]
fn basis_inputs_prepare_basis_states() {
    for n in 0..4 {
        let v: [C; 4] = std::array::from_fn(|i| amp(i, n));
        let st = prepare_input(&Input::from_array(v).unwrap()).unwrap();
        for (i, z) in st.amplitudes().iter().enumerate() {
            assert_eq!(*z, amp(i, n));
        }
    }
}
