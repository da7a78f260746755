//! Subcommand implementations. Each returns a [`Report`]; the binary turns it
//! into output and an exit code.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex;
use probtele::barenco::{
    self, compose_primitives, decompose_ccu, flatten, gate_counts, only_primitives,
};
use probtele::gates::{
    self, build_ccu, build_u0, build_u_blocks, compose_sequence, u0_factor_sequence,
};
use probtele::protocol::{
    self, collapse_oracle, correction_for, enumerate_branches, post_purification_oracle, run_trial,
    simulated_branch, simulated_purified_pair, success_probability, trial_rng, trial_seed,
};
use probtele::{
    BasicGate, Channel, ChannelMode, GateOp, Input, OutcomeIndex, Sequence, Unitary, U0_FACTORS,
};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::report::{ChannelDeviation, Check, Histogram, Report, Status, SuccessSummary, SweepRow};
use crate::stats::{chi_square, wilson_interval};
use crate::CliError;

pub const RANDOM_CHANNELS_U0: usize = 100;
pub const RANDOM_CHANNELS_FACTORIZATION: usize = 20;
pub const RANDOM_CHANNELS_BARENCO: usize = 5;
pub const RANDOM_INPUTS: usize = 20;
pub const PERTURBATION: f64 = 1e-3;
pub const WILSON_Z: f64 = 3.0;

fn finish(mut report: Report, start: Instant) -> Report {
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    report
}

fn random_channels(seed: u64, n: usize) -> Vec<Channel> {
    let mut rng = trial_rng(seed);
    (0..n).map(|_| Channel::random(&mut rng)).collect()
}

fn random_inputs(seed: u64, n: usize) -> Vec<Input> {
    let mut rng = trial_rng(seed);
    (0..n).map(|_| Input::random(&mut rng)).collect()
}

fn deviation_row(p: &Channel, deviation: f64) -> ChannelDeviation {
    ChannelDeviation {
        alpha: p.alpha,
        beta: p.beta,
        gamma: p.gamma,
        kappa: p.kappa,
        deviation,
    }
}

// ----------------------------------------------------------------------------
// verify-u0

pub fn cmd_verify_u0(config: &RunConfig) -> Result<Report, CliError> {
    cmd_verify_u0_with(config, build_u0)
}

/// `verify-u0` with a substitute matrix builder, for exercising the checks.
pub fn cmd_verify_u0_with<F>(config: &RunConfig, builder: F) -> Result<Report, CliError>
where
    F: Fn(&Channel) -> probtele::Result<Unitary>,
{
    let start = Instant::now();
    let tol = config.tolerances.unitarity;
    let mut report = Report::new("verify-u0", config);

    let own = builder(&config.channel)?.unitarity_deviation();
    report.push(Check::below("u0_unitarity_config_channel", own, tol));

    let mut worst = 0.0f64;
    for p in random_channels(config.seed, RANDOM_CHANNELS_U0) {
        worst = worst.max(builder(&p)?.unitarity_deviation());
    }
    report.push(Check::below(
        format!("u0_unitarity_{RANDOM_CHANNELS_U0}_random_channels"),
        worst,
        tol,
    ));
    Ok(finish(report, start))
}

// ----------------------------------------------------------------------------
// verify-eq36

fn same_sequence(a: &Sequence, b: &Sequence) -> bool {
    a.width == b.width
        && a.ops.len() == b.ops.len()
        && a.ops.iter().zip(&b.ops).all(|(x, y)| {
            x.label.to_string() == y.label.to_string()
                && x.targets == y.targets
                && x.matrix == y.matrix
        })
}

/// Compares the composed factor sequence against the direct purification
/// matrix. Misses are `unverified` unless `strict`, in which case they fail.
pub fn cmd_verify_eq36(config: &RunConfig, strict: bool) -> Result<Report, CliError> {
    let start = Instant::now();
    let tol = config.tolerances.factorization;
    let mut report = Report::new("verify-eq36", config);

    let p = &config.channel;
    let first = u0_factor_sequence(p)?;
    let second = u0_factor_sequence(p)?;
    let deterministic = same_sequence(&first, &second)
        && first.len() == U0_FACTORS.len()
        && compose_sequence(&first)? == compose_sequence(&second)?;
    report.push(Check::holds("factor_sequence_deterministic", deterministic));

    let u0 = build_u0(p)?;
    report.push(Check::at_most(
        "comparator_self_distance",
        u0.deviation_up_to_phase(&u0)?,
        0.0,
    ));
    let mut tampered = u0.clone();
    tampered.set(0, 0, tampered.get(0, 0) + Complex::new(PERTURBATION, 0.0));
    report.push(Check::at_least(
        "comparator_detects_perturbation",
        tampered.deviation_up_to_phase(&u0)?,
        PERTURBATION / 2.0,
    ));

    let mut channels = vec![*p];
    channels.extend(random_channels(config.seed, RANDOM_CHANNELS_FACTORIZATION));
    let mut worst = 0.0f64;
    for q in &channels {
        let d = compose_sequence(&u0_factor_sequence(q)?)?.deviation_up_to_phase(&build_u0(q)?)?;
        worst = worst.max(d);
        report.channel_deviations.push(deviation_row(q, d));
    }
    let mut claim = Check::below("factorization_max_deviation", worst, tol);
    if claim.status == Status::Fail && !strict {
        claim.status = Status::Unverified;
    }
    report.push(claim);
    Ok(finish(report, start))
}

// ----------------------------------------------------------------------------
// verify-barenco

fn toffoli_op(gate: BasicGate) -> Result<GateOp<f64>, CliError> {
    Ok(GateOp::basic(gate, &[0, 1, 2])?)
}

/// Flattens every controlled block and the full factor sequence to single-qubit
/// gates and CNOTs, checks reconstruction, and optionally writes the flattened
/// circuit for the config channel to `circuit_out`.
pub fn cmd_verify_barenco(
    config: &RunConfig,
    circuit_out: Option<&Path>,
) -> Result<Report, CliError> {
    let start = Instant::now();
    let tol = config.tolerances.barenco;
    let mut report = Report::new("verify-barenco", config);
    let p = &config.channel;

    for gate in [BasicGate::C12, BasicGate::C23, BasicGate::C13] {
        let mut seq = Sequence::new(3);
        seq.push(toffoli_op(gate)?)?;
        let flat = flatten(&seq)?;
        let d = compose_primitives(&flat, 3)?.deviation_up_to_phase(&gates::basic_gate(gate))?;
        report.push(Check::below(
            format!("toffoli_{}_reconstruction", gate.name()),
            d,
            config.tolerances.toffoli,
        ));
        report
            .gate_counts
            .insert(format!("toffoli_{}", gate.name()), gate_counts(&flat));
    }

    let blocks = build_u_blocks(p)?;
    for (name, u, controls, target) in [
        ("lambda_u1", &blocks.u1, (1, 2), 0),
        ("lambda_u2", &blocks.u2, (0, 2), 1),
        ("lambda_u3", &blocks.u3, (0, 1), 2),
    ] {
        let flat = decompose_ccu(u, controls, target)?;
        let d = compose_primitives(&flat, 3)?
            .deviation_up_to_phase(&build_ccu(u, controls, target)?)?;
        report.push(Check::below(format!("{name}_reconstruction"), d, tol));
        report
            .gate_counts
            .insert(name.to_string(), gate_counts(&flat));
    }

    let seq = u0_factor_sequence(p)?;
    let flat = flatten(&seq)?;
    let rebuilt = compose_primitives(&flat, 3)?;
    report.push(Check::below(
        "full_sequence_reconstruction",
        rebuilt.deviation_up_to_phase(&compose_sequence(&seq)?)?,
        tol,
    ));
    report.push(Check::below(
        "full_sequence_matches_u0",
        rebuilt.deviation_up_to_phase(&build_u0(p)?)?,
        tol,
    ));
    report.push(Check::holds(
        "full_sequence_only_primitives",
        only_primitives(&flat),
    ));
    report
        .gate_counts
        .insert("full_sequence".into(), gate_counts(&flat));

    let text = barenco::to_text(&flat, 3);
    let (width, parsed) = barenco::from_text::<f64>(&text)?;
    let round_trip = compose_primitives(&parsed, width)?.max_deviation(&rebuilt)?;
    report.push(Check::below("circuit_text_round_trip", round_trip, tol));

    let mut worst = 0.0f64;
    for q in random_channels(config.seed, RANDOM_CHANNELS_BARENCO) {
        let s = u0_factor_sequence(&q)?;
        let d =
            compose_primitives(&flatten(&s)?, 3)?.deviation_up_to_phase(&compose_sequence(&s)?)?;
        worst = worst.max(d);
    }
    report.push(Check::below(
        format!("full_sequence_reconstruction_{RANDOM_CHANNELS_BARENCO}_random_channels"),
        worst,
        tol,
    ));

    if let Some(path) = circuit_out {
        std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(finish(report, start))
}

// ----------------------------------------------------------------------------
// verify-outcomes

pub fn cmd_verify_outcomes(config: &RunConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let t = &config.tolerances;
    let mut report = Report::new("verify-outcomes", config);
    let p = &config.channel;
    let mode = config.channel_mode;

    let mut inputs = vec![config.input_state()?];
    inputs.extend(random_inputs(config.seed, RANDOM_INPUTS));

    let mut branch_dev = 0.0f64;
    let mut completeness = 0.0f64;
    let mut purified_dev = 0.0f64;
    let mut min_fidelity = 1.0f64;
    for s in &inputs {
        let target = protocol::prepare_input(s)?;
        let mut total = 0.0;
        for k in OutcomeIndex::all() {
            let oracle = collapse_oracle(k, s, p)?;
            total += oracle.weight();
            let sim = simulated_branch(k, s, p, mode)?;
            branch_dev = branch_dev.max(sim.max_deviation(oracle.amplitudes())?);

            let mut pair = simulated_purified_pair(k, s, p, mode)?;
            let expect = post_purification_oracle(k, s);
            let d = pair
                .amplitudes()
                .iter()
                .zip(&expect)
                .fold(0.0f64, |w, (x, y)| w.max((x - y).norm()));
            purified_dev = purified_dev.max(d);

            correction_for(k).apply_to(&mut pair, (0, 1))?;
            min_fidelity = min_fidelity.min(pair.fidelity_up_to_phase(&target)?);
        }
        completeness = completeness.max((total - 1.0).abs());
    }
    let n = inputs.len();
    report.push(Check::below(
        format!("collapsed_branches_match_table_{n}_inputs"),
        branch_dev,
        t.branch,
    ));
    report.push(Check::below(
        "branch_weights_sum_to_one",
        completeness,
        t.total_probability,
    ));
    report.push(Check::below(
        "purified_states_match_table",
        purified_dev,
        t.post_purification,
    ));
    report.push(Check::at_least(
        "corrected_fidelity_min",
        min_fidelity,
        1.0 - t.fidelity,
    ));

    // Outcome 12 by hand: X then Z on Bob's second qubit.
    let k12 = OutcomeIndex::new(12)?;
    let s = &inputs[0];
    let mut pair = simulated_purified_pair(k12, s, p, mode)?;
    pair.apply(&gates::pauli_x(), &[1])?;
    pair.apply(&gates::pauli_z(), &[1])?;
    let f12 = pair.fidelity_up_to_phase(&protocol::prepare_input(s)?)?;
    report.push(Check::at_least(
        "outcome_12_x_then_z_on_second_qubit",
        f12,
        1.0 - t.fidelity,
    ));
    Ok(finish(report, start))
}

// ----------------------------------------------------------------------------
// run

/// Order-independent aggregate of a batch of trials.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats {
    pub trials: u64,
    pub successes: u64,
    pub counts: [u64; 16],
    /// Smallest fidelity among successful trials; `+∞` if none succeeded.
    pub min_fidelity: f64,
}

impl BatchStats {
    fn empty() -> Self {
        Self {
            trials: 0,
            successes: 0,
            counts: [0; 16],
            min_fidelity: f64::INFINITY,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.trials += other.trials;
        self.successes += other.successes;
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.min_fidelity = self.min_fidelity.min(other.min_fidelity);
        self
    }

    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

/// Runs `trials` independent trials in parallel. Trial `i` uses the stream
/// seeded by `seed + i`, so the result does not depend on scheduling.
pub fn run_batch(
    s: &Input,
    p: &Channel,
    mode: ChannelMode,
    seed: u64,
    trials: u64,
) -> Result<BatchStats, CliError> {
    let stats = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(s, p, mode, trial_seed(seed, i)))
        .try_fold(BatchStats::empty, |mut acc, rec| {
            let rec = rec?;
            acc.trials += 1;
            acc.counts[rec.outcome.index() as usize] += 1;
            if rec.success {
                acc.successes += 1;
                acc.min_fidelity = acc.min_fidelity.min(rec.fidelity.unwrap_or(f64::NAN));
            }
            Ok::<_, probtele::Error>(acc)
        })
        .try_reduce(BatchStats::empty, |a, b| Ok(a.merge(b)))?;
    Ok(stats)
}

pub fn cmd_run(config: &RunConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let mut report = Report::new("run", config);
    let s = config.input_state()?;
    let p = &config.channel;

    let analytic = success_probability(p)?;
    let stats = run_batch(&s, p, config.channel_mode, config.seed, config.trials)?;
    let (low, high) = wilson_interval(stats.successes, stats.trials, WILSON_Z);
    let rate = stats.rate();
    let sigma = (analytic * (1.0 - analytic) / stats.trials as f64).sqrt();
    let min_fidelity = stats.min_fidelity.is_finite().then_some(stats.min_fidelity);

    report.push(Check::holds(
        "analytic_inside_wilson_interval",
        low <= analytic && analytic <= high,
    ));
    report.push(Check::at_most(
        "empirical_within_3_sigma",
        (rate - analytic).abs(),
        WILSON_Z * sigma,
    ));
    report.push(Check::at_least(
        "success_fidelity_min",
        min_fidelity.unwrap_or(1.0),
        1.0 - config.tolerances.fidelity,
    ));

    let expected: Vec<f64> = protocol::branch_weights(&s, p)?.to_vec();
    let chi = chi_square(&stats.counts, &expected);
    report.push(Check::recorded(
        "outcome_histogram_chi_square_p_value",
        chi.p_value,
    ));

    report.success = Some(SuccessSummary {
        trials: stats.trials,
        successes: stats.successes,
        empirical: rate,
        analytic,
        wilson_z: WILSON_Z,
        wilson_low: low,
        wilson_high: high,
        min_fidelity,
    });
    report.histogram = Some(Histogram {
        counts: stats.counts.to_vec(),
        expected,
        chi_square: chi,
    });
    Ok(finish(report, start))
}

// ----------------------------------------------------------------------------
// sweep

pub fn cmd_sweep(config: &RunConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let mut report = Report::new("sweep", config);
    let s = config.input_state()?;
    let alphas = config.sweep.alphas();
    let channels = alphas
        .iter()
        .map(|&a| config.sweep.channel(a))
        .collect::<Result<Vec<_>, _>>()?;

    for (alpha, p) in alphas.iter().zip(&channels) {
        let stats = run_batch(&s, p, config.channel_mode, config.seed, config.trials)?;
        report.sweep.push(SweepRow {
            alpha: *alpha,
            analytic: success_probability(p)?,
            empirical: stats.rate(),
            trials: config.trials,
            seed: config.seed,
        });
    }
    let monotone = report
        .sweep
        .windows(2)
        .all(|w| w[0].analytic <= w[1].analytic);
    report.push(Check::holds("analytic_monotone_in_alpha", monotone));

    let mut worst = 0.0f64;
    for row in &report.sweep {
        let sigma = (row.analytic * (1.0 - row.analytic) / row.trials as f64).sqrt();
        worst = worst.max((row.empirical - row.analytic).abs() - WILSON_Z * sigma);
    }
    report.push(Check::recorded("empirical_3_sigma_excess_max", worst));
    Ok(finish(report, start))
}

// ----------------------------------------------------------------------------
// exact checks shared with the acceptance suite

/// Largest spread of the enumerated success probability over `inputs`.
pub fn success_spread(inputs: &[Input], p: &Channel) -> Result<f64, CliError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in inputs {
        let total: f64 = enumerate_branches(s, p, ChannelMode::Direct)?
            .iter()
            .map(|b| b.joint_success)
            .sum();
        lo = lo.min(total);
        hi = hi.max(total);
    }
    Ok(hi - lo)
}
