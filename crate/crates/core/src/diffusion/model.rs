use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{NoiseSchedule, Normalizer, ScoreFunction};
use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    /// Width of the sinusoidal step embedding; must be even.
    pub time_dim: usize,
    /// Per-coordinate scale of clean normalized data. When set, the output
    /// adds the linear noise estimate that is exact for Gaussian data of this
    /// scale, `−σ_t·x / (ᾱ_t·s² + σ_t²)`, and the layers learn the rest.
    pub data_std: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { hidden: vec![256; 4], time_dim: 32, data_std: Some(0.5) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    w: usize,
    b: usize,
}

/// Fully connected network `(x, t) ↦ n` with SiLU hidden layers. The score
/// is `n / σ_t`, so the network predicts the negated noise and stays O(1)
/// at every step.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreModel {
    num_robots: usize,
    horizon: usize,
    workspace_side: f64,
    config: ModelConfig,
    schedule: NoiseSchedule,
    params: Vec<f64>,
    layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    num_robots: usize,
    horizon: usize,
    workspace_side: f64,
    config: ModelConfig,
    schedule: NoiseSchedule,
    params: Vec<f64>,
}

fn build_layers(data_dim: usize, config: &ModelConfig) -> Vec<Layer> {
    let mut dims = vec![data_dim + config.time_dim];
    dims.extend(&config.hidden);
    dims.push(data_dim);
    let mut offset = 0;
    dims.windows(2)
        .map(|d| {
            let layer = Layer { fan_in: d[0], fan_out: d[1], w: offset, b: offset + d[0] * d[1] };
            offset = layer.b + d[1];
            layer
        })
        .collect()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

struct Cache {
    /// Layer inputs; `acts[0]` is the network input.
    acts: Vec<Array2<f64>>,
    /// Pre-activations of each layer.
    pre: Vec<Array2<f64>>,
}

impl ScoreModel {
    pub fn new(
        num_robots: usize,
        horizon: usize,
        workspace_side: f64,
        config: ModelConfig,
        schedule: NoiseSchedule,
        seed: u64,
    ) -> Result<Self> {
        if num_robots == 0 || horizon == 0 || !(workspace_side > 0.0) {
            return Err(Error::InvalidConfig("model needs robots, steps and a positive workspace".into()));
        }
        if config.time_dim % 2 != 0 || config.hidden.contains(&0) {
            return Err(Error::InvalidConfig("time_dim must be even and hidden widths positive".into()));
        }
        if config.data_std.is_some_and(|s| !(s > 0.0)) {
            return Err(Error::InvalidConfig("data_std must be positive".into()));
        }
        let layers = build_layers(num_robots * horizon * 2, &config);
        let total = layers.last().map_or(0, |l| l.b + l.fan_out);
        let mut params = vec![0.0; total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in &layers {
            let normal = Normal::new(0.0, (1.0 / l.fan_in as f64).sqrt()).expect("positive std");
            for p in &mut params[l.w..l.b] {
                *p = normal.sample(&mut rng);
            }
        }
        Ok(Self { num_robots, horizon, workspace_side, config, schedule, params, layers })
    }

    pub fn num_robots(&self) -> usize {
        self.num_robots
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn workspace_side(&self) -> f64 {
        self.workspace_side
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    pub fn normalizer(&self) -> Normalizer {
        Normalizer::new(self.workspace_side)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION,
            num_robots: self.num_robots,
            horizon: self.horizon,
            workspace_side: self.workspace_side,
            config: self.config.clone(),
            schedule: self.schedule.clone(),
            params: self.params.clone(),
        };
        fs::write(path, serde_json::to_string(&ckpt)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion { found: ckpt.version, expected: CHECKPOINT_VERSION });
        }
        let mut model =
            Self::new(ckpt.num_robots, ckpt.horizon, ckpt.workspace_side, ckpt.config, ckpt.schedule, 0)?;
        if ckpt.params.len() != model.params.len() {
            return Err(Error::shape(model.params.len(), ckpt.params.len()));
        }
        if ckpt.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig("checkpoint holds non-finite parameters".into()));
        }
        model.params = ckpt.params;
        Ok(model)
    }

    fn weights(&self, l: &Layer) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((l.fan_out, l.fan_in), &self.params[l.w..l.b]).expect("layer shape")
    }

    fn embed(&self, t: usize, out: &mut [f64]) {
        let half = self.config.time_dim / 2;
        for k in 0..half {
            let freq = (-(1000f64.ln()) * k as f64 / half as f64).exp();
            let angle = t as f64 * freq;
            out[k] = angle.sin();
            out[half + k] = angle.cos();
        }
    }

    fn forward(&self, x: ArrayView2<'_, f64>, steps: &[usize]) -> (Array2<f64>, Cache) {
        let (batch, dim) = x.dim();
        let mut input = Array2::zeros((batch, dim + self.config.time_dim));
        for (b, mut row) in input.axis_iter_mut(Axis(0)).enumerate() {
            let row = row.as_slice_mut().expect("standard layout");
            row[..dim].copy_from_slice(x.row(b).as_slice().expect("standard layout"));
            self.embed(steps[b], &mut row[dim..]);
        }
        let mut cache = Cache { acts: vec![input], pre: Vec::with_capacity(self.layers.len()) };
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            let mut z = cache.acts[k].dot(&self.weights(l).t());
            z += &ArrayView2::from_shape((1, l.fan_out), &self.params[l.b..l.b + l.fan_out]).expect("bias");
            if k == last {
                cache.pre.push(z.clone());
                if let Some(sd) = self.config.data_std {
                    for (b, mut row) in z.axis_iter_mut(Axis(0)).enumerate() {
                        let t = steps[b];
                        let (ab, sigma) = (self.schedule.alpha_bar(t), self.schedule.sigma(t));
                        let c = sigma / (ab * sd * sd + sigma * sigma);
                        row.zip_mut_with(&x.row(b), |o, &xi| *o -= c * xi);
                    }
                }
                return (z, cache);
            }
            let a = z.mapv(|v| v * sigmoid(v));
            cache.pre.push(z);
            cache.acts.push(a);
        }
        unreachable!("network has an output layer")
    }

    /// Parameter gradient for upstream gradient `d_out` on the outputs.
    fn backward(&self, cache: &Cache, d_out: Array2<f64>) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let last = self.layers.len() - 1;
        let mut d = d_out;
        for (k, l) in self.layers.iter().enumerate().rev() {
            if k != last {
                d.zip_mut_with(&cache.pre[k], |g, &z| {
                    let s = sigmoid(z);
                    *g *= s * (1.0 + z * (1.0 - s));
                });
            }
            let gw = d.t().dot(&cache.acts[k]);
            for (g, v) in grad[l.w..l.b].iter_mut().zip(gw.iter()) {
                *g = *v;
            }
            for (g, v) in grad[l.b..l.b + l.fan_out].iter_mut().zip(d.sum_axis(Axis(0)).iter()) {
                *g = *v;
            }
            if k > 0 {
                d = d.dot(&self.weights(l));
            }
        }
        grad
    }
}

impl ScoreFunction for ScoreModel {
    fn dim(&self) -> usize {
        self.num_robots * self.horizon * 2
    }

    fn score_into(&self, x: &[f64], t: usize, out: &mut [f64]) {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        let (net, _) = self.forward(view, &[t]);
        let sigma = self.schedule.sigma(t);
        for (o, n) in out.iter_mut().zip(net.iter()) {
            *o = n / sigma;
        }
    }
}

#[derive(Clone, Debug)]
pub struct LossAndGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// Weighted denoising score matching on normalized clean samples `x0` with
/// given steps and noise. Each item contributes `β_t·‖s_θ(x_t, t) + ε/σ_t‖²`;
/// the loss is the mean over items and coordinates.
pub fn score_matching_loss_with(
    model: &ScoreModel,
    x0: ArrayView2<'_, f64>,
    steps: &[usize],
    noise: ArrayView2<'_, f64>,
) -> Result<LossAndGrad> {
    let (batch, dim) = x0.dim();
    if batch == 0 {
        return Err(Error::EmptyBatch);
    }
    if dim != model.dim() || noise.dim() != (batch, dim) || steps.len() != batch {
        return Err(Error::shape(model.dim(), dim));
    }
    let schedule = &model.schedule;
    for &t in steps {
        schedule.check(t)?;
    }
    let mut xt = Array2::zeros((batch, dim));
    for b in 0..batch {
        let row = xt.row_mut(b).into_slice().expect("standard layout");
        let x = x0.row(b).to_vec();
        let e = noise.row(b).to_vec();
        super::forward_into(&x, steps[b], &e, schedule, row);
    }
    let (mut net, cache) = model.forward(xt.view(), steps);
    let scale = 1.0 / (batch * dim) as f64;
    let mut loss = 0.0;
    for (b, mut row) in net.axis_iter_mut(Axis(0)).enumerate() {
        let t = steps[b];
        let weight = schedule.beta(t) / (1.0 - schedule.alpha_bar(t));
        for (n, &e) in row.iter_mut().zip(noise.row(b).iter()) {
            let r = *n + e;
            loss += weight * r * r * scale;
            // Reuse the output buffer for the upstream gradient.
            *n = 2.0 * weight * r * scale;
        }
    }
    let grad = model.backward(&cache, net);
    Ok(LossAndGrad { loss, grad })
}

fn normalized_rows(model: &ScoreModel, batch: &[&Trajectory]) -> Result<Array2<f64>> {
    let dim = model.dim();
    let norm = model.normalizer();
    let mut x0 = Array2::zeros((batch.len(), dim));
    for (b, traj) in batch.iter().enumerate() {
        if traj.dim() != dim {
            return Err(Error::shape(dim, traj.dim()));
        }
        norm.to_model(traj.as_slice(), x0.row_mut(b).into_slice().expect("standard layout"));
    }
    Ok(x0)
}

/// Score matching on world-coordinate trajectories, drawing `t` uniformly
/// from `1..=T` and standard normal noise per item.
pub fn score_matching_loss(model: &ScoreModel, batch: &[&Trajectory], rng: &mut impl Rng) -> Result<LossAndGrad> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let x0 = normalized_rows(model, batch)?;
    let steps: Vec<usize> = (0..batch.len()).map(|_| rng.random_range(1..=model.schedule.num_steps())).collect();
    let noise = Array2::from_shape_simple_fn(x0.dim(), || StandardNormal.sample(rng));
    score_matching_loss_with(model, x0.view(), &steps, noise.view())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lr: 1e-4, batch_size: 64, epochs: 100, seed: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean batch loss per epoch.
    pub loss_curve: Vec<f64>,
}

/// Adam on the score-matching loss over shuffled minibatches.
pub fn train(model: &mut ScoreModel, dataset: &[Trajectory], config: &TrainConfig) -> Result<TrainReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if config.batch_size == 0 || !(config.lr > 0.0) {
        return Err(Error::InvalidConfig("batch size and learning rate must be positive".into()));
    }
    let refs: Vec<&Trajectory> = dataset.iter().collect();
    let data = normalized_rows(model, &refs)?;
    let dim = model.dim();
    let steps_max = model.schedule.num_steps();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut m = vec![0.0; model.params.len()];
    let mut v = vec![0.0; model.params.len()];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut report = TrainReport::default();
    let mut last_loss = None;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0;
        for (batch_index, chunk) in order.chunks(config.batch_size).enumerate() {
            let mut x0 = Array2::zeros((chunk.len(), dim));
            for (b, &k) in chunk.iter().enumerate() {
                x0.row_mut(b).assign(&data.row(k));
            }
            let steps: Vec<usize> = (0..chunk.len()).map(|_| rng.random_range(1..=steps_max)).collect();
            let noise = Array2::from_shape_simple_fn((chunk.len(), dim), || StandardNormal.sample(&mut rng));
            let LossAndGrad { loss, grad } = score_matching_loss_with(model, x0.view(), &steps, noise.view())?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch, batch: batch_index, last_loss });
            }
            last_loss = Some(loss);

            step += 1;
            let c1 = 1.0 - config.beta1.powi(step);
            let c2 = 1.0 - config.beta2.powi(step);
            for (((p, g), mi), vi) in model.params.iter_mut().zip(&grad).zip(&mut m).zip(&mut v) {
                *mi = config.beta1 * *mi + (1.0 - config.beta1) * g;
                *vi = config.beta2 * *vi + (1.0 - config.beta2) * g * g;
                *p -= config.lr * (*mi / c1) / ((*vi / c2).sqrt() + config.eps);
            }
            total += loss;
            batches += 1;
        }
        let mean = total / batches as f64;
        log::debug!("epoch {epoch}: loss {mean:.6}");
        report.loss_curve.push(mean);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(hidden: Vec<usize>, seed: u64) -> ScoreModel {
        let config = ModelConfig { hidden, time_dim: 4, ..Default::default() };
        ScoreModel::new(1, 3, 2.0, config, NoiseSchedule::linear(5, 0.05, 0.4).unwrap(), seed).unwrap()
    }

    fn random_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
        Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut model = toy(vec![7], 1);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let x0 = random_rows(&mut rng, 3, 6);
            let noise = random_rows(&mut rng, 3, 6);
            let steps: Vec<usize> = (0..3).map(|_| rng.random_range(1..=5)).collect();
            let analytic = score_matching_loss_with(&model, x0.view(), &steps, noise.view()).unwrap().grad;
            let k = rng.random_range(0..model.params.len());
            let saved = model.params[k];
            model.params[k] = saved + h;
            let up = score_matching_loss_with(&model, x0.view(), &steps, noise.view()).unwrap().loss;
            model.params[k] = saved - h;
            let down = score_matching_loss_with(&model, x0.view(), &steps, noise.view()).unwrap().loss;
            model.params[k] = saved;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - analytic[k]).abs() / fd.abs().max(analytic[k].abs()).max(1e-8);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn full_gradient_matches_differences_on_deeper_net() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut model = toy(vec![5, 4], 9);
        let x0 = random_rows(&mut rng, 2, 6);
        let noise = random_rows(&mut rng, 2, 6);
        let steps = [1, 5];
        let analytic = score_matching_loss_with(&model, x0.view(), &steps, noise.view()).unwrap().grad;
        for k in 0..model.params.len() {
            let saved = model.params[k];
            model.params[k] = saved + 1e-5;
            let up = score_matching_loss_with(&model, x0.view(), &steps, noise.view()).unwrap().loss;
            model.params[k] = saved - 1e-5;
            let down = score_matching_loss_with(&model, x0.view(), &steps, noise.view()).unwrap().loss;
            model.params[k] = saved;
            let fd = (up - down) / 2e-5;
            assert!((fd - analytic[k]).abs() <= 1e-4 * fd.abs().max(analytic[k].abs()).max(1e-6), "param {k}");
        }
    }

    #[test]
    fn exact_score_gives_zero_loss() {
        let config = ModelConfig { hidden: vec![4], time_dim: 4, data_std: None };
        let mut model = ScoreModel::new(1, 3, 2.0, config, NoiseSchedule::default(), 0).unwrap();
        model.params.fill(0.0);
        let x0 = Array2::from_elem((2, 6), 0.3);
        let noise = Array2::zeros((2, 6));
        let out = score_matching_loss_with(&model, x0.view(), &[2, 4], noise.view()).unwrap();
        assert_eq!(out.loss, 0.0);
        assert!(out.grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn vanishing_beta_step_contributes_nothing() {
        let config = ModelConfig { hidden: vec![4], time_dim: 2, data_std: None };
        let schedule = NoiseSchedule::from_betas(vec![0.5, 1e-13]).unwrap();
        let model = ScoreModel::new(1, 3, 2.0, config, schedule, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x0 = random_rows(&mut rng, 4, 6);
        let noise = random_rows(&mut rng, 4, 6);
        let late = score_matching_loss_with(&model, x0.view(), &[2; 4], noise.view()).unwrap().loss;
        let early = score_matching_loss_with(&model, x0.view(), &[1; 4], noise.view()).unwrap().loss;
        assert!(late < 1e-11 && early > 1e-3, "{late} {early}");
    }

    #[test]
    fn empty_batch_is_rejected() {
        let model = toy(vec![3], 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(score_matching_loss(&model, &[], &mut rng), Err(Error::EmptyBatch)));
    }

    #[test]
    fn memorizes_single_trajectory() {
        let mut model = toy(vec![32, 32], 5);
        let traj = Trajectory::new(1, 3, vec![0.2, 0.2, 0.9, 1.1, 1.6, 1.8]).unwrap();
        let eval = |m: &ScoreModel| {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let batch = vec![&traj; 256];
            score_matching_loss(m, &batch, &mut rng).unwrap().loss
        };
        let before = eval(&model);
        let config = TrainConfig { lr: 1e-3, batch_size: 8, epochs: 400, seed: 1, ..Default::default() };
        let report = train(&mut model, &vec![traj.clone(); 8], &config).unwrap();
        assert_eq!(report.loss_curve.len(), 400);
        let after = eval(&model);
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn training_is_deterministic() {
        let data = vec![Trajectory::new(1, 3, vec![0.2, 0.2, 0.9, 1.1, 1.6, 1.8]).unwrap(); 5];
        let config = TrainConfig { lr: 1e-3, batch_size: 2, epochs: 3, seed: 9, ..Default::default() };
        let mut a = toy(vec![6], 1);
        let mut b = toy(vec![6], 1);
        let ra = train(&mut a, &data, &config).unwrap();
        let rb = train(&mut b, &data, &config).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn checkpoint_round_trip_and_version() {
        let model = toy(vec![5], 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        model.save(&path).unwrap();
        assert_eq!(ScoreModel::load(&path).unwrap(), model);
        let text = fs::read_to_string(&path).unwrap().replacen("\"version\":1", "\"version\":99", 1);
        fs::write(&path, text).unwrap();
        assert!(matches!(ScoreModel::load(&path), Err(Error::CheckpointVersion { found: 99, .. })));
    }
}
