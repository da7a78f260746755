//! Machine-readable command reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use probtele::barenco::GateCounts;
use serde::Serialize;

use crate::config::RunConfig;
use crate::stats::ChiSquare;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// A claim check that missed its threshold without being promoted to a
    /// failure.
    Unverified,
    /// Informational measurement with no pass criterion.
    Recorded,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub metric: f64,
    /// `metric < threshold` unless `relation` says otherwise.
    pub threshold: f64,
    pub relation: &'static str,
}

impl Check {
    /// Passes when `metric < threshold`.
    pub fn below(name: impl Into<String>, metric: f64, threshold: f64) -> Self {
        Self::with(name, metric, threshold, "<", metric < threshold)
    }

    /// Passes when `metric >= threshold`.
    pub fn at_least(name: impl Into<String>, metric: f64, threshold: f64) -> Self {
        Self::with(name, metric, threshold, ">=", metric >= threshold)
    }

    /// Passes when `metric` is nonzero (a boolean encoded as 0/1).
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::with(name, if ok { 1.0 } else { 0.0 }, 1.0, "==", ok)
    }

    /// Passes when `metric <= threshold`.
    pub fn at_most(name: impl Into<String>, metric: f64, threshold: f64) -> Self {
        Self::with(name, metric, threshold, "<=", metric <= threshold)
    }

    pub fn recorded(name: impl Into<String>, metric: f64) -> Self {
        Self {
            name: name.into(),
            status: Status::Recorded,
            metric,
            threshold: f64::NAN,
            relation: "none",
        }
    }

    fn with(
        name: impl Into<String>,
        metric: f64,
        threshold: f64,
        relation: &'static str,
        ok: bool,
    ) -> Self {
        Self {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            metric,
            threshold,
            relation,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuccessSummary {
    pub trials: u64,
    pub successes: u64,
    pub empirical: f64,
    pub analytic: f64,
    pub wilson_z: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub min_fidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
    pub expected: Vec<f64>,
    pub chi_square: ChiSquare,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelDeviation {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub analytic: f64,
    pub empirical: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success: Option<SuccessSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Histogram>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub channel_deviations: Vec<ChannelDeviation>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub gate_counts: BTreeMap<String, GateCounts>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepRow>,
    /// Wall-clock time; the only field allowed to differ between reruns.
    pub timing_ms: f64,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            config: config.clone(),
            checks: Vec::new(),
            success: None,
            histogram: None,
            channel_deviations: Vec::new(),
            gate_counts: BTreeMap::new(),
            sweep: Vec::new(),
            timing_ms: 0.0,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    /// 0 when no check failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Sweep rows when present, else one row per check.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.command == "sweep" {
            out.push_str("alpha,analytic,empirical,trials,seed\n");
            for r in &self.sweep {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.alpha, r.analytic, r.empirical, r.trials, r.seed
                );
            }
        } else {
            out.push_str("name,status,metric,relation,threshold\n");
            for c in &self.checks {
                let status = serde_json::to_value(c.status).expect("status serializes");
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    c.name,
                    status.as_str().unwrap_or_default(),
                    c.metric,
                    c.relation,
                    c.threshold
                );
            }
        }
        out
    }
}
