//! Run configuration loaded from JSON.

use std::path::Path;

use num_complex::Complex;
use probtele::{Channel, Input};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Numerical thresholds applied by the verification commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub unitarity: f64,
    pub branch: f64,
    pub post_purification: f64,
    pub fidelity: f64,
    pub factorization: f64,
    pub barenco: f64,
    pub toffoli: f64,
    pub probability: f64,
    pub total_probability: f64,
    pub spread: f64,
    pub deferred: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitarity: 1e-12,
            branch: 1e-12,
            post_purification: 1e-10,
            fidelity: 1e-10,
            factorization: 1e-9,
            barenco: 1e-9,
            toffoli: 1e-10,
            probability: 1e-12,
            total_probability: 1e-11,
            spread: 1e-10,
            deferred: 1e-10,
        }
    }
}

/// Grid for `sweep`. Each `alpha` is completed to a valid channel by scaling
/// `completion` (the direction of `(β, γ, κ)`) to norm `√(1 − α²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub steps: usize,
    pub completion: [f64; 3],
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            alpha_min: 0.05,
            alpha_max: 0.5,
            steps: 10,
            completion: [1.0, 1.0, 1.0],
        }
    }
}

impl SweepSpec {
    pub fn alphas(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.alpha_min];
        }
        let step = (self.alpha_max - self.alpha_min) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| self.alpha_min + step * i as f64)
            .collect()
    }

    /// Channel for one grid point, or an error if it violates the channel
    /// constraints.
    pub fn channel(&self, alpha: f64) -> Result<Channel, CliError> {
        let [wb, wg, wk] = self.completion;
        let w = (wb * wb + wg * wg + wk * wk).sqrt();
        if !(w.is_finite() && w > 0.0) {
            return Err(CliError::Config(
                "sweep completion must be a nonzero finite vector".into(),
            ));
        }
        let r = (1.0 - alpha * alpha).max(0.0).sqrt() / w;
        Channel::new(alpha, wb * r, wg * r, wk * r)
            .map_err(|e| CliError::Config(format!("sweep point alpha = {alpha}: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `(a, b, c, d)` as `[re, im]` pairs.
    pub input: [[f64; 2]; 4],
    pub channel: Channel,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub channel_mode: probtele::ChannelMode,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sweep: SweepSpec,
}

fn default_trials() -> u64 {
    DEFAULT_TRIALS
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: [[0.5, 0.0], [0.0, 0.5], [-0.5, 0.0], [0.0, -0.5]],
            channel: Channel {
                alpha: 0.3,
                beta: 0.4,
                gamma: 0.5,
                kappa: 0.5f64.sqrt(),
            },
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            channel_mode: probtele::ChannelMode::Direct,
            tolerances: Tolerances::default(),
            sweep: SweepSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn amplitudes(&self) -> [Complex<f64>; 4] {
        self.input.map(|[re, im]| Complex::new(re, im))
    }

    /// Checks every constraint. With `renormalize`, an unnormalized input is
    /// rescaled in place instead of rejected.
    pub fn validate(&mut self, renormalize: bool) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(CliError::Config("trials must be positive".into()));
        }
        self.channel
            .validate()
            .map_err(|e| CliError::Config(format!("channel: {e}")))?;
        if renormalize {
            let s = Input::normalized(self.amplitudes())
                .map_err(|e| CliError::Config(format!("input: {e}")))?;
            self.input = s.as_array().map(|z| [z.re, z.im]);
        }
        self.input_state()?;
        let t = &self.tolerances;
        let all = [
            t.unitarity,
            t.branch,
            t.post_purification,
            t.fidelity,
            t.factorization,
            t.barenco,
            t.toffoli,
            t.probability,
            t.total_probability,
            t.spread,
            t.deferred,
        ];
        if all.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(CliError::Config(
                "tolerances must be positive and finite".into(),
            ));
        }
        let s = &self.sweep;
        let grid_ok = s.steps > 0
            && s.alpha_min > 0.0
            && s.alpha_max.is_finite()
            && s.alpha_min <= s.alpha_max;
        if !grid_ok {
            return Err(CliError::Config(
                "sweep grid must satisfy 0 < alpha_min <= alpha_max and steps >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn input_state(&self) -> Result<Input, CliError> {
        Input::from_array(self.amplitudes()).map_err(|e| CliError::Config(format!("input: {e}")))
    }
}
