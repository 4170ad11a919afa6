//! Score-based diffusion over whole multi-robot trajectories: the noise
//! schedule, a fully connected score network trained by denoising score
//! matching, and the projected Langevin sampler.
//!
//! The network works in normalized coordinates where the workspace maps to
//! `[-1, 1]²`. The map is a uniform scaling, so projecting in world
//! coordinates and mapping back is still the Euclidean projection.

mod bootstrap;
mod model;
mod sampler;

pub use bootstrap::{bootstrap_dataset, BootstrapConfig, BootstrapOutput, BootstrapStats};
pub use model::{
    score_matching_loss, score_matching_loss_with, train, LossAndGrad, ModelConfig, ScoreModel, TrainConfig,
    TrainReport, CHECKPOINT_VERSION,
};
pub use sampler::{sample, SampleOutput, SamplerConfig, StepDiagnostic};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Variance-preserving schedule with `α_t = 1 − β_t`, indexed `1..=T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr", into = "ScheduleRepr")]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
struct ScheduleRepr {
    num_steps: usize,
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl From<NoiseSchedule> for ScheduleRepr {
    fn from(s: NoiseSchedule) -> Self {
        Self { num_steps: s.num_steps(), betas: s.betas, alpha_bars: s.alpha_bars }
    }
}

impl TryFrom<ScheduleRepr> for NoiseSchedule {
    type Error = Error;

    fn try_from(r: ScheduleRepr) -> Result<Self> {
        let s = NoiseSchedule::from_betas(r.betas)?;
        if s.num_steps() != r.num_steps {
            return Err(Error::InvalidConfig(format!(
                "schedule lists {} betas for {} steps",
                s.num_steps(),
                r.num_steps
            )));
        }
        Ok(s)
    }
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self::linear(25, 1e-4, 0.24).expect("default schedule is valid")
    }
}

impl NoiseSchedule {
    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() || betas.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(Error::InvalidConfig("betas must lie in (0, 1)".into()));
        }
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let alpha_bars = alphas
            .iter()
            .scan(1.0, |acc, a| {
                *acc *= a;
                Some(*acc)
            })
            .collect();
        Ok(Self { betas, alphas, alpha_bars })
    }

    /// `β_t` evenly spaced from `beta_start` to `beta_end`.
    pub fn linear(num_steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if num_steps == 0 {
            return Err(Error::InvalidConfig("schedule needs at least one step".into()));
        }
        let span = (num_steps - 1).max(1) as f64;
        Self::from_betas(
            (0..num_steps)
                .map(|k| beta_start + (beta_end - beta_start) * k as f64 / span)
                .collect(),
        )
    }

    pub fn num_steps(&self) -> usize {
        self.betas.len()
    }

    fn check(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.num_steps() {
            return Err(Error::StepOutOfRange { t, max: self.num_steps() });
        }
        Ok(())
    }

    /// Panics unless `1 <= t <= T`.
    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    /// `ᾱ_t`, with `ᾱ_0 = 1`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }

    /// Marginal noise scale `√(1 − ᾱ_t)`.
    pub fn sigma(&self, t: usize) -> f64 {
        (1.0 - self.alpha_bar(t)).sqrt()
    }
}

/// Maps world coordinates of a square workspace onto `[-1, 1]²` and back.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normalizer {
    half: f64,
}

impl Normalizer {
    pub fn new(workspace_side: f64) -> Self {
        Self { half: 0.5 * workspace_side }
    }

    pub fn to_model(&self, world: &[f64], out: &mut [f64]) {
        for (o, &w) in out.iter_mut().zip(world) {
            *o = (w - self.half) / self.half;
        }
    }

    pub fn to_world(&self, model: &[f64], out: &mut [f64]) {
        for (o, &m) in out.iter_mut().zip(model) {
            *o = m * self.half + self.half;
        }
    }
}

/// `√ᾱ_t·x0 + √(1 − ᾱ_t)·ε`. `t = 0` returns `x0`.
pub fn forward_sample(x0: &Trajectory, t: usize, noise: &[f64], schedule: &NoiseSchedule) -> Result<Trajectory> {
    if t != 0 {
        schedule.check(t)?;
    }
    if noise.len() != x0.dim() {
        return Err(Error::shape(x0.dim(), noise.len()));
    }
    let mut out = x0.clone();
    forward_into(x0.as_slice(), t, noise, schedule, out.as_mut_slice());
    Ok(out)
}

fn forward_into(x0: &[f64], t: usize, noise: &[f64], schedule: &NoiseSchedule, out: &mut [f64]) {
    let a = schedule.alpha_bar(t).sqrt();
    let s = schedule.sigma(t);
    for ((o, &x), &e) in out.iter_mut().zip(x0).zip(noise) {
        *o = a * x + s * e;
    }
}

/// A score estimate `∇ log p_t(x)` in model coordinates.
pub trait ScoreFunction {
    fn dim(&self) -> usize;

    fn score_into(&self, x: &[f64], t: usize, out: &mut [f64]);
}

/// The zero score; Langevin steps reduce to pure noise injection.
#[derive(Clone, Copy, Debug)]
pub struct ZeroScore {
    pub dim: usize,
}

impl ScoreFunction for ZeroScore {
    fn dim(&self) -> usize {
        self.dim
    }

    fn score_into(&self, _x: &[f64], _t: usize, out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// One unprojected Langevin update `x + γ·s(x, t) + √(2γ)·z`, in model
/// coordinates.
pub fn sgld_step(
    x: &Trajectory,
    t: usize,
    model: &dyn ScoreFunction,
    gamma: f64,
    noise: &[f64],
) -> Result<Trajectory> {
    if model.dim() != x.dim() {
        return Err(Error::shape(model.dim(), x.dim()));
    }
    if noise.len() != x.dim() {
        return Err(Error::shape(x.dim(), noise.len()));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidConfig(format!("step size must be nonnegative, got {gamma}")));
    }
    let mut score = vec![0.0; x.dim()];
    let mut out = x.clone();
    sgld_into(x.as_slice(), t, model, gamma, noise, &mut score, out.as_mut_slice());
    Ok(out)
}

fn sgld_into(
    x: &[f64],
    t: usize,
    model: &dyn ScoreFunction,
    gamma: f64,
    noise: &[f64],
    score: &mut [f64],
    out: &mut [f64],
) {
    model.score_into(x, t, score);
    let k = (2.0 * gamma).sqrt();
    for (((o, &xi), &s), &z) in out.iter_mut().zip(x).zip(score.iter()).zip(noise) {
        *o = xi + gamma * s + k * z;
    }
}
