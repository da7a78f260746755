//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use probtele::barenco::{compose_primitives, decompose_ccu, flatten, only_primitives};
use probtele::gates::{build_ccu, build_u0, build_u_blocks, compose_sequence, u0_factor_sequence};
use probtele::protocol::{
    collapse_oracle, correction_for, enumerate_branches, prepare_input, run_deferred_comparison,
    simulated_branch, simulated_purified_pair, success_probability, trial_rng,
};
use probtele::{Channel, ChannelMode, DeferredMode, Input, OutcomeIndex, Unitary, U0_FACTORS};
use probtele_cli::commands::{cmd_run, cmd_verify_eq36, success_spread};
use probtele_cli::{RunConfig, Status};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_s {
        Ok(())
    } else {
        Err(format!(
            "took {:.2} s, limit {limit_s} s",
            elapsed.as_secs_f64()
        ))
    }
}

fn pairs(seed: u64, n: usize) -> Vec<(Input, Channel)> {
    let mut rng = trial_rng(seed);
    (0..n)
        .map(|_| (Input::random(&mut rng), Channel::random(&mut rng)))
        .collect()
}

fn u0_unitarity() -> Outcome {
    let start = Instant::now();
    let mut rng = trial_rng(101);
    let worst = (0..100)
        .map(|_| {
            build_u0(&Channel::random(&mut rng))
                .unwrap()
                .unitarity_deviation()
        })
        .fold(0.0f64, f64::max);
    within(start.elapsed(), 1.0)?;
    ensure(
        worst < 1e-12,
        format!("max |U†U - I| = {worst:.3e} over 100 channels"),
    )
}

fn sixteen_branches() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut comparisons = 0;
    for (s, p) in pairs(202, 20) {
        for k in OutcomeIndex::all() {
            let sim =
                simulated_branch(k, &s, &p, ChannelMode::Direct).map_err(|e| e.to_string())?;
            let table = collapse_oracle(k, &s, &p).map_err(|e| e.to_string())?;
            worst = worst.max(sim.max_deviation(table.amplitudes()).unwrap());
            comparisons += 1;
        }
    }
    within(start.elapsed(), 5.0)?;
    ensure(
        worst < 1e-12 && comparisons == 320,
        format!("{comparisons} comparisons, max deviation {worst:.3e}"),
    )
}

fn corrections() -> Outcome {
    let start = Instant::now();
    let p = RunConfig::default().channel;
    let mut rng = trial_rng(303);
    let mut min_fidelity = 1.0f64;
    let mut k12 = 1.0f64;
    for _ in 0..20 {
        let s = Input::random(&mut rng);
        let target = prepare_input(&s).unwrap();
        for k in OutcomeIndex::all() {
            let mut pair = simulated_purified_pair(k, &s, &p, ChannelMode::Direct).unwrap();
            if k.index() == 12 {
                let mut manual = pair.clone();
                manual.apply(&probtele::gates::pauli_x(), &[1]).unwrap();
                manual.apply(&probtele::gates::pauli_z(), &[1]).unwrap();
                k12 = k12.min(manual.fidelity_up_to_phase(&target).unwrap());
            }
            correction_for(k).apply_to(&mut pair, (0, 1)).unwrap();
            min_fidelity = min_fidelity.min(pair.fidelity_up_to_phase(&target).unwrap());
        }
    }
    within(start.elapsed(), 5.0)?;
    ensure(
        min_fidelity >= 1.0 - 1e-10 && k12 >= 1.0 - 1e-10,
        format!("min fidelity {min_fidelity:.15}, outcome 12 with X then Z {k12:.15}"),
    )
}

fn success_probability_criterion() -> Outcome {
    let start = Instant::now();
    let mut worst_branch = 0.0f64;
    let mut worst_total = 0.0f64;
    for (s, p) in pairs(404, 20) {
        let branches = enumerate_branches(&s, &p, ChannelMode::Direct).unwrap();
        let quarter = p.alpha * p.alpha / 4.0;
        let mut total = 0.0;
        for b in &branches {
            worst_branch = worst_branch.max((b.joint_success - quarter).abs());
            total += b.joint_success;
        }
        worst_total = worst_total.max((total - 4.0 * p.alpha * p.alpha).abs());
    }
    let reference = RunConfig::default();
    let p03 = success_probability(&reference.channel).unwrap();
    let p05 = success_probability(&Channel::maximal()).unwrap();

    let mut config = reference.clone();
    config.trials = 100_000;
    let report = cmd_run(&config).map_err(|e| e.to_string())?;
    let summary = report.success.as_ref().unwrap();
    let sigma = (0.36f64 * 0.64 / 100_000.0).sqrt();
    let mc_ok = (summary.empirical - 0.36).abs() <= 3.0 * sigma;

    within(start.elapsed(), 30.0)?;
    ensure(
        worst_branch < 1e-12 && worst_total < 1e-11 && (p03 - 0.36).abs() < 1e-15 && p05 == 1.0 && mc_ok,
        format!(
            "branch {worst_branch:.3e}, total {worst_total:.3e}, alpha 0.3 -> {p03}, alpha 0.5 -> {p05}, \
             monte carlo {} vs 0.36 +/- {:.5}",
            summary.empirical,
            3.0 * sigma
        ),
    )
}

fn input_independence() -> Outcome {
    let p = RunConfig::default().channel;
    let mut rng = trial_rng(505);
    let inputs: Vec<Input> = (0..50).map(|_| Input::random(&mut rng)).collect();
    let spread = success_spread(&inputs, &p).map_err(|e| e.to_string())?;
    ensure(
        spread < 1e-10,
        format!("spread {spread:.3e} over 50 inputs"),
    )
}

fn factorization_harness() -> Outcome {
    let config = RunConfig::default();
    let a = u0_factor_sequence(&config.channel).unwrap();
    let b = u0_factor_sequence(&config.channel).unwrap();
    let deterministic = a.len() == U0_FACTORS.len()
        && compose_sequence(&a).unwrap() == compose_sequence(&b).unwrap();

    let u0 = build_u0(&config.channel).unwrap();
    let mut tampered: Unitary = u0.clone();
    tampered.set(
        3,
        5,
        tampered.get(3, 5) + num_complex::Complex64::new(1e-3, 0.0),
    );
    let detected = tampered.deviation_up_to_phase(&u0).unwrap();

    let report = cmd_verify_eq36(&config, true).map_err(|e| e.to_string())?;
    let archive = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("factorization_report.json");
    std::fs::write(&archive, report.to_json()).map_err(|e| e.to_string())?;
    let claim = report
        .checks
        .iter()
        .find(|c| c.name == "factorization_max_deviation")
        .unwrap();

    ensure(
        deterministic
            && (detected - 1e-3).abs() < 1e-4
            && report.channel_deviations.len() == 21
            && claim.status == Status::Pass,
        format!(
            "{} factors, perturbation seen as {detected:.3e}, max d(p) {:.3e} over {} channels, archived to {}",
            a.len(),
            claim.metric,
            report.channel_deviations.len(),
            archive.display()
        ),
    )
}

fn barenco_flattening() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut primitives = true;
    let mut channels = vec![RunConfig::default().channel];
    let mut rng = trial_rng(707);
    channels.extend((0..5).map(|_| Channel::random(&mut rng)));
    for p in &channels {
        let blocks = build_u_blocks(p).unwrap();
        for (u, controls, target) in [
            (&blocks.u1, (1, 2), 0),
            (&blocks.u2, (0, 2), 1),
            (&blocks.u3, (0, 1), 2),
        ] {
            let flat = decompose_ccu(u, controls, target).unwrap();
            primitives &= only_primitives(&flat);
            let d = compose_primitives(&flat, 3)
                .unwrap()
                .deviation_up_to_phase(&build_ccu(u, controls, target).unwrap())
                .unwrap();
            worst = worst.max(d);
        }
        let seq = u0_factor_sequence(p).unwrap();
        let flat = flatten(&seq).unwrap();
        primitives &= only_primitives(&flat);
        let d = compose_primitives(&flat, 3)
            .unwrap()
            .deviation_up_to_phase(&compose_sequence(&seq).unwrap())
            .unwrap();
        worst = worst.max(d);
    }
    within(start.elapsed(), 10.0)?;
    ensure(
        worst < 1e-9 && primitives,
        format!(
            "max reconstruction deviation {worst:.3e} over {} channels",
            channels.len()
        ),
    )
}

fn deferred_measurement() -> Outcome {
    let mut prob = 0.0f64;
    let mut states = 0.0f64;
    for (s, p) in pairs(808, 10) {
        let a = run_deferred_comparison(&s, &p, DeferredMode::Coherent).unwrap();
        let b = run_deferred_comparison(&s, &p, DeferredMode::Classical).unwrap();
        prob = prob.max(a.probability_deviation(&b));
        states = states.max(a.state_deviation(&b));
    }
    ensure(
        prob < 1e-10 && states < 1e-10,
        format!("probability deviation {prob:.3e}, state deviation {states:.3e}"),
    )
}

fn strip_timing(bytes: &[u8]) -> Vec<u8> {
    String::from_utf8_lossy(bytes)
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"timing_ms\""))
        .collect::<Vec<_>>()
        .join("\n")
        .into_bytes()
}

fn reproducibility() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let config = dir.join("repro_config.json");
    std::fs::write(
        &config,
        serde_json::to_string(&RunConfig::default()).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        for cmd in ["run", "verify-eq36"] {
            let out = Command::new(env!("CARGO_BIN_EXE_probtele"))
                .env("RAYON_NUM_THREADS", threads)
                .args([cmd, "--config"])
                .arg(&config)
                .args(["--seed", "99", "--trials", "20000"])
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(format!("{cmd} exited with {}", out.status));
            }
            outputs.push((cmd, strip_timing(&out.stdout)));
        }
    }
    let identical = outputs[0].1 == outputs[2].1 && outputs[1].1 == outputs[3].1;
    ensure(
        identical,
        "run and verify-eq36 reports byte-identical across two invocations".into(),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 purification matrix unitarity", u0_unitarity),
        ("2 sixteen-branch collapse table", sixteen_branches),
        ("3 purified states and corrections", corrections),
        ("4 success probability", success_probability_criterion),
        ("5 input independence", input_independence),
        ("6 factorization harness", factorization_harness),
        ("7 gate-level flattening", barenco_flattening),
        ("8 deferred measurement", deferred_measurement),
        ("9 reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let ms = start.elapsed().as_secs_f64() * 1e3;
        match result {
            Ok(detail) => println!("PASS  criterion {name}: {detail} ({ms:.0} ms)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail} ({ms:.0} ms)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
