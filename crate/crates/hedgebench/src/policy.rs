//! Neural hedging policy: a small fully connected network mapping the hedge
//! state (moneyness, time to maturity, previous hedge) to a position, trained
//! with Adam to minimize the sample standard deviation of the discounted
//! terminal hedging cost over a batch of paths.

use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{CostModel, OptionSpec};
use crate::autodiff::{Tape, Var};
use crate::engine::{compute_zt, mean_std, HedgeState, Strategy};
use crate::error::{HedgeError, Result};
use crate::simulation::PathSet;

/// Fan-in/fan-out of one dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
}

impl LayerShape {
    pub fn n_params(&self) -> usize {
        self.fan_in * self.fan_out + self.fan_out
    }
}

/// Dense network parameters in one flat buffer.
///
/// Layout per layer: weights row-major (`fan_out` rows of `fan_in`), then
/// biases. Hidden layers use relu; the output is linear and unclamped.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub shapes: Vec<LayerShape>,
    pub values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    fan_in: usize,
    fan_out: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl MlpParams {
    /// The standard hedging architecture: 3 inputs, two hidden relu layers of
    /// 64 and 32 units, one linear output. 2369 parameters.
    pub fn hedging_arch(seed: u64) -> MlpParams {
        MlpParams::kaiming_uniform(
            &[
                LayerShape {
                    fan_in: 3,
                    fan_out: 64,
                },
                LayerShape {
                    fan_in: 64,
                    fan_out: 32,
                },
                LayerShape {
                    fan_in: 32,
                    fan_out: 1,
                },
            ],
            seed,
        )
    }

    /// Kaiming-uniform initialization: weights and biases of each layer are
    /// drawn from U(-b, b) with b = 1/sqrt(fan_in).
    pub fn kaiming_uniform(shapes: &[LayerShape], seed: u64) -> MlpParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total: usize = shapes.iter().map(LayerShape::n_params).sum();
        let mut values = Vec::with_capacity(total);
        for shape in shapes {
            let bound = 1.0 / (shape.fan_in as f64).sqrt();
            for _ in 0..shape.n_params() {
                values.push(rng.gen_range(-bound..bound));
            }
        }
        MlpParams {
            shapes: shapes.to_vec(),
            values,
        }
    }

    pub fn n_params(&self) -> usize {
        self.values.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.shapes.first().map_or(0, |s| s.fan_in)
    }

    /// Plain forward pass. Accumulation order matches the taped forward so
    /// both produce bit-identical outputs.
    pub fn forward(&self, input: &[f64]) -> f64 {
        assert_eq!(input.len(), self.n_inputs(), "input width mismatch");
        let mut activ: Vec<f64> = input.to_vec();
        let mut next: Vec<f64> = Vec::new();
        let mut offset = 0;
        let last = self.shapes.len() - 1;
        for (li, shape) in self.shapes.iter().enumerate() {
            let weights = &self.values[offset..offset + shape.fan_in * shape.fan_out];
            let biases =
                &self.values[offset + shape.fan_in * shape.fan_out..offset + shape.n_params()];
            next.clear();
            for o in 0..shape.fan_out {
                let row = &weights[o * shape.fan_in..(o + 1) * shape.fan_in];
                let mut acc = biases[o];
                for (w, x) in row.iter().zip(activ.iter()) {
                    acc += w * x;
                }
                if li < last && acc < 0.0 {
                    acc = 0.0;
                }
                next.push(acc);
            }
            std::mem::swap(&mut activ, &mut next);
            offset += shape.n_params();
        }
        debug_assert_eq!(activ.len(), 1, "network must have a scalar output");
        activ[0]
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let mut layers = Vec::new();
        let mut offset = 0;
        for shape in &self.shapes {
            let nw = shape.fan_in * shape.fan_out;
            layers.push(LayerJson {
                fan_in: shape.fan_in,
                fan_out: shape.fan_out,
                weights: self.values[offset..offset + nw].to_vec(),
                biases: self.values[offset + nw..offset + shape.n_params()].to_vec(),
            });
            offset += shape.n_params();
        }
        let text = serde_json::to_string_pretty(&layers)
            .map_err(|e| HedgeError::config(format!("serialize parameters: {e}")))?;
        std::fs::write(path, text).map_err(|e| HedgeError::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<MlpParams> {
        let text = std::fs::read_to_string(path).map_err(|e| HedgeError::io(path, e))?;
        let layers: Vec<LayerJson> = serde_json::from_str(&text)
            .map_err(|e| HedgeError::config(format!("parse {}: {e}", path.display())))?;
        if layers.is_empty() {
            return Err(HedgeError::config("parameter file has no layers"));
        }
        let mut shapes = Vec::new();
        let mut values = Vec::new();
        for (i, layer) in layers.iter().enumerate() {
            if layer.weights.len() != layer.fan_in * layer.fan_out
                || layer.biases.len() != layer.fan_out
            {
                return Err(HedgeError::config(format!(
                    "layer {i}: weight/bias lengths inconsistent with shape {}x{}",
                    layer.fan_in, layer.fan_out
                )));
            }
            if i > 0 && layer.fan_in != layers[i - 1].fan_out {
                return Err(HedgeError::config(format!(
                    "layer {i}: fan_in {} does not match previous fan_out {}",
                    layer.fan_in,
                    layers[i - 1].fan_out
                )));
            }
            shapes.push(LayerShape {
                fan_in: layer.fan_in,
                fan_out: layer.fan_out,
            });
            values.extend_from_slice(&layer.weights);
            values.extend_from_slice(&layer.biases);
        }
        Ok(MlpParams { shapes, values })
    }
}

/// [`Strategy`] adapter: feeds (moneyness, ttm, prev_hedge) to the network.
#[derive(Debug, Clone)]
pub struct NnStrategy {
    pub params: MlpParams,
}

impl Strategy for NnStrategy {
    fn hedge(&self, state: &HedgeState) -> f64 {
        self.params
            .forward(&[state.moneyness, state.ttm, state.prev_hedge])
    }
}

/// Network parameters recorded as leaves on a tape, in flat-buffer order, so
/// adjoint index `k` is the gradient of parameter `k`.
pub struct TapedMlp {
    shapes: Vec<LayerShape>,
    vars: Vec<Var>,
}

impl TapedMlp {
    pub fn record(tape: &mut Tape, params: &MlpParams) -> TapedMlp {
        let vars = params.values.iter().map(|&v| tape.leaf(v)).collect();
        TapedMlp {
            shapes: params.shapes.clone(),
            vars,
        }
    }

    /// Taped forward pass; the dot products use fused multiply-add nodes.
    pub fn forward(&self, tape: &mut Tape, input: &[Var]) -> Var {
        assert_eq!(input.len(), self.shapes[0].fan_in, "input width mismatch");
        let mut activ: Vec<Var> = input.to_vec();
        let mut offset = 0;
        let last = self.shapes.len() - 1;
        for (li, shape) in self.shapes.iter().enumerate() {
            let weights = &self.vars[offset..offset + shape.fan_in * shape.fan_out];
            let biases =
                &self.vars[offset + shape.fan_in * shape.fan_out..offset + shape.n_params()];
            let mut next = Vec::with_capacity(shape.fan_out);
            for o in 0..shape.fan_out {
                let row = &weights[o * shape.fan_in..(o + 1) * shape.fan_in];
                let mut acc = biases[o];
                for (w, x) in row.iter().zip(activ.iter()) {
                    acc = tape.fma(acc, *w, *x);
                }
                if li < last {
                    acc = tape.relu(acc);
                }
                next.push(acc);
            }
            activ = next;
            offset += shape.n_params();
        }
        activ[0]
    }
}

/// Taped version of the hedging ledger: same cash flows as
/// [`compute_zt`], with the policy's hedges recorded for backpropagation.
pub fn taped_zt(
    tape: &mut Tape,
    mlp: &TapedMlp,
    path: &[f64],
    spec: &OptionSpec,
    r: f64,
    cost: &CostModel,
) -> Result<Var> {
    if path.len() < 2 {
        return Err(HedgeError::invalid("path must have at least 2 points"));
    }
    let n = path.len() - 1;
    let dt = spec.maturity_t / n as f64;
    let tc = cost.tc_alpha;
    let gamma = (-r * dt).exp();

    let mut prev: Option<Var> = None;
    let mut delta = tape.constant(0.0);
    let mut acc = tape.constant(0.0);
    let mut discount = 1.0;
    for i in 0..n {
        let m = tape.constant(spec.strike_k / path[i]);
        let ttm = tape.constant(spec.maturity_t - i as f64 * dt);
        let ph = match prev {
            Some(v) => v,
            None => tape.constant(0.0),
        };
        delta = mlp.forward(tape, &[m, ttm, ph]);
        if i == 0 {
            acc = tape.scale(delta, path[0]);
        } else {
            let dd = tape.sub(delta, prev.expect("previous hedge recorded"));
            let a = tape.abs(dd);
            let ta = tape.scale(a, tc);
            let traded = tape.add(dd, ta);
            let px = tape.constant(discount * path[i]);
            acc = tape.fma(acc, traded, px);
        }
        prev = Some(delta);
        discount *= gamma;
    }
    let x_n = path[n];
    if x_n < spec.strike_k {
        let long = tape.relu(delta);
        let nd = tape.neg(delta);
        let short = tape.relu(nd);
        let sell = tape.scale(long, -discount * (1.0 - tc) * x_n);
        let buy = tape.scale(short, discount * (1.0 + tc) * x_n);
        acc = tape.add(acc, sell);
        acc = tape.add(acc, buy);
    } else {
        acc = tape.add_const(acc, -discount * spec.strike_k);
        let nd = tape.neg(delta);
        let under = tape.add_const(nd, 1.0);
        let top_up = tape.relu(under);
        let over = tape.add_const(delta, -1.0);
        let excess = tape.relu(over);
        let buy = tape.scale(top_up, discount * (1.0 + tc) * x_n);
        let sell = tape.scale(excess, -discount * (1.0 - tc) * x_n);
        acc = tape.add(acc, buy);
        acc = tape.add(acc, sell);
    }
    Ok(acc)
}

/// Sample standard deviation of taped values (n-1 normalization).
pub fn taped_std(tape: &mut Tape, values: &[Var]) -> Result<Var> {
    let b = values.len();
    if b < 2 {
        return Err(HedgeError::invalid(
            "standard deviation needs at least 2 samples",
        ));
    }
    let mut sum = values[0];
    for v in &values[1..] {
        sum = tape.add(sum, *v);
    }
    let mean = tape.scale(sum, 1.0 / b as f64);
    let mut ss = tape.constant(0.0);
    for v in values {
        let d = tape.sub(*v, mean);
        ss = tape.fma(ss, d, d);
    }
    let var = tape.scale(ss, 1.0 / (b - 1) as f64);
    Ok(tape.sqrt_guarded(var))
}

/// Training objective on one tape: the sum over option specs of the sample
/// standard deviation of the per-path discounted hedging cost.
pub fn batch_loss(
    tape: &mut Tape,
    mlp: &TapedMlp,
    paths: &[&[f64]],
    specs: &[OptionSpec],
    r: f64,
    cost: &CostModel,
) -> Result<Var> {
    if specs.is_empty() {
        return Err(HedgeError::invalid("at least one option spec required"));
    }
    let mut total: Option<Var> = None;
    for spec in specs {
        let mut zs = Vec::with_capacity(paths.len());
        for path in paths {
            zs.push(taped_zt(tape, mlp, path, spec, r, cost)?);
        }
        let std = taped_std(tape, &zs)?;
        total = Some(match total {
            Some(t) => tape.add(t, std),
            None => std,
        });
    }
    Ok(total.expect("at least one spec"))
}

/// Loss and gradient for one batch, computed with one small tape per path.
///
/// d std/d theta = sum_j (z_j - mean) / ((B-1) std) * d z_j/d theta, so the
/// per-path backward passes are seeded with those weights and summed. This
/// keeps peak memory at one path's tape instead of the whole batch's.
pub fn batch_grad(
    tape: &mut Tape,
    params: &MlpParams,
    paths: &[&[f64]],
    specs: &[OptionSpec],
    r: f64,
    cost: &CostModel,
) -> Result<(f64, Vec<f64>)> {
    let b = paths.len();
    if b < 2 {
        return Err(HedgeError::invalid("batch needs at least 2 paths"));
    }
    let strategy = NnStrategy {
        params: params.clone(),
    };
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.n_params()];
    for spec in specs {
        let zs: Vec<f64> = paths
            .iter()
            .map(|p| compute_zt(p, &strategy, spec, r, cost))
            .collect::<Result<_>>()?;
        let (mean, std) = mean_std(&zs);
        loss += std;
        if std == 0.0 {
            continue;
        }
        let denom = (b - 1) as f64 * std;
        for (path, z) in paths.iter().zip(zs.iter()) {
            let weight = (z - mean) / denom;
            if weight == 0.0 {
                continue;
            }
            tape.clear();
            let mlp = TapedMlp::record(tape, params);
            let out = taped_zt(tape, &mlp, path, spec, r, cost)?;
            tape.accumulate_gradient(out, weight, &mut grad);
        }
    }
    Ok((loss, grad))
}

/// Adam optimizer state with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> AdamState {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Strikes of the options to hedge; the loss sums their cost deviations.
    pub strikes: Vec<f64>,
    pub r: f64,
    pub tc_alpha: f64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            epochs: 500,
            batch_size: 64,
            lr: 1e-3,
            seed: 0,
            strikes: vec![1.0],
            r: 0.0,
            tc_alpha: 0.0,
        }
    }
}

/// One recorded optimization step.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub step: usize,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub params: MlpParams,
    pub history: Vec<LossRecord>,
}

/// Train the hedging network on a set of t0-normalized paths.
///
/// Epoch ordering is reshuffled with a dedicated deterministic stream derived
/// from the seed; batches smaller than 2 paths (possible for the final chunk)
/// are skipped because the deviation objective is undefined for them.
pub fn train(paths: &PathSet, cfg: &TrainConfig) -> Result<TrainResult> {
    if !paths.t0_normalized {
        return Err(HedgeError::invalid("training paths must be t0-normalized"));
    }
    if paths.n_paths() < 2 {
        return Err(HedgeError::invalid("training needs at least 2 paths"));
    }
    if cfg.batch_size < 2 {
        return Err(HedgeError::invalid("batch size must be at least 2"));
    }
    let maturity = paths.dt * paths.n_steps() as f64;
    let specs: Vec<OptionSpec> = cfg
        .strikes
        .iter()
        .map(|&k| OptionSpec::call(k, maturity))
        .collect::<Result<_>>()?;
    let cost = CostModel::new(cfg.tc_alpha)?;

    let mut params = MlpParams::hedging_arch(cfg.seed);
    let mut adam = AdamState::new(params.n_params(), cfg.lr);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut order: Vec<usize> = (0..paths.n_paths()).collect();
    let mut tape = Tape::new();
    let mut history = Vec::new();
    let mut step = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(cfg.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let batch: Vec<&[f64]> = chunk.iter().map(|&j| paths.prices[j].as_slice()).collect();
            let (loss, grad) = batch_grad(&mut tape, &params, &batch, &specs, cfg.r, &cost)?;
            adam.step(&mut params.values, &grad);
            history.push(LossRecord { epoch, step, loss });
            step += 1;
        }
    }
    Ok(TrainResult { params, history })
}

/// Write the loss history as `epoch,step,loss` CSV.
pub fn write_loss_csv(history: &[LossRecord], path: &Path) -> Result<()> {
    let mut out = String::from("epoch,step,loss\n");
    for rec in history {
        out.push_str(&format!("{},{},{}\n", rec.epoch, rec.step, rec.loss));
    }
    let mut file = std::fs::File::create(path).map_err(|e| HedgeError::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| HedgeError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{simulate_gbm, RngSeed};
    use crate::MarketParams;

    fn toy_paths(n_paths: usize, n_steps: usize, seed: u64) -> PathSet {
        let market = MarketParams::new(1.0, 0.05, 0.2, 0.0, 0.25).unwrap();
        simulate_gbm(&market, n_steps, n_paths, RngSeed(seed))
            .unwrap()
            .normalized()
    }

    #[test]
    fn hedging_arch_has_2369_params() {
        let p = MlpParams::hedging_arch(7);
        assert_eq!(p.n_params(), 3 * 64 + 64 + 64 * 32 + 32 + 32 + 1);
        assert_eq!(p.n_params(), 2369);
    }

    #[test]
    fn kaiming_bounds_and_determinism() {
        let a = MlpParams::hedging_arch(42);
        let b = MlpParams::hedging_arch(42);
        let c = MlpParams::hedging_arch(43);
        assert_eq!(a.values, b.values);
        assert_ne!(a.values, c.values);
        // First-layer values bounded by 1/sqrt(3).
        let bound = 1.0 / 3f64.sqrt();
        for &v in &a.values[..3 * 64 + 64] {
            assert!(v.abs() < bound);
        }
        // Last-layer values bounded by 1/sqrt(32).
        let lb = 1.0 / 32f64.sqrt();
        for &v in &a.values[a.values.len() - 33..] {
            assert!(v.abs() < lb);
        }
    }

    #[test]
    fn forward_matches_taped_forward_bitwise() {
        let params = MlpParams::hedging_arch(5);
        let input = [1.02, 0.25, -0.3];
        let plain = params.forward(&input);
        let mut tape = Tape::new();
        let mlp = TapedMlp::record(&mut tape, &params);
        let vars: Vec<Var> = input.iter().map(|&x| tape.constant(x)).collect();
        let out = mlp.forward(&mut tape, &vars);
        assert_eq!(plain.to_bits(), tape.value(out).to_bits());
    }

    #[test]
    fn taped_zt_matches_engine_ledger() {
        let params = MlpParams::hedging_arch(11);
        let strategy = NnStrategy {
            params: params.clone(),
        };
        let spec = OptionSpec::call(1.0, 0.25).unwrap();
        let cost = CostModel::new(0.02).unwrap();
        let paths = toy_paths(8, 10, 99);
        for row in &paths.prices {
            let plain = compute_zt(row, &strategy, &spec, 0.02, &cost).unwrap();
            let mut tape = Tape::new();
            let mlp = TapedMlp::record(&mut tape, &params);
            let out = taped_zt(&mut tape, &mlp, row, &spec, 0.02, &cost).unwrap();
            let taped = tape.value(out);
            assert!(
                (plain - taped).abs() <= 1e-12 * plain.abs().max(1.0),
                "plain {plain} vs taped {taped}"
            );
        }
    }

    #[test]
    fn per_path_gradient_matches_single_tape() {
        let params = MlpParams::hedging_arch(3);
        let spec = OptionSpec::call(1.0, 0.25).unwrap();
        let cost = CostModel::new(0.01).unwrap();
        let paths = toy_paths(6, 8, 123);
        let batch: Vec<&[f64]> = paths.prices.iter().map(|p| p.as_slice()).collect();

        // Route 1: whole batch on one tape, backward through the deviation.
        let mut tape = Tape::new();
        let mlp = TapedMlp::record(&mut tape, &params);
        let loss = batch_loss(&mut tape, &mlp, &batch, &[spec], 0.02, &cost).unwrap();
        let g1 = tape.gradient(loss, params.n_params());
        let l1 = tape.value(loss);

        // Route 2: per-path tapes with analytic deviation weights.
        let mut small = Tape::new();
        let (l2, g2) = batch_grad(&mut small, &params, &batch, &[spec], 0.02, &cost).unwrap();

        assert!((l1 - l2).abs() < 1e-12 * l1.abs().max(1.0));
        let scale: f64 = g1.iter().map(|g| g.abs()).fold(0.0, f64::max).max(1e-12);
        for (a, b) in g1.iter().zip(g2.iter()) {
            assert!((a - b).abs() < 1e-9 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn adam_converges_on_quadratic() {
        // Minimize (x - 3)^2 + (y + 1)^2.
        let mut params = vec![0.0, 0.0];
        let mut adam = AdamState::new(2, 0.05);
        for _ in 0..2000 {
            let grad = vec![2.0 * (params[0] - 3.0), 2.0 * (params[1] + 1.0)];
            adam.step(&mut params, &grad);
        }
        assert!((params[0] - 3.0).abs() < 1e-3);
        assert!((params[1] + 1.0).abs() < 1e-3);
    }

    #[test]
    fn params_json_roundtrip() {
        let params = MlpParams::hedging_arch(1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.json");
        params.save_json(&path).unwrap();
        let loaded = MlpParams::load_json(&path).unwrap();
        assert_eq!(params, loaded);
    }

    #[test]
    fn load_rejects_inconsistent_layers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"[{"fan_in":2,"fan_out":1,"weights":[0.1],"biases":[0.0]}]"#,
        )
        .unwrap();
        assert!(MlpParams::load_json(&path).is_err());
    }

    #[test]
    fn short_training_reduces_loss() {
        let paths = toy_paths(32, 5, 7);
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 16,
            seed: 7,
            tc_alpha: 0.01,
            ..TrainConfig::default()
        };
        let result = train(&paths, &cfg).unwrap();
        let head: f64 = result.history[..4].iter().map(|r| r.loss).sum::<f64>() / 4.0;
        let n = result.history.len();
        let tail: f64 = result.history[n - 4..].iter().map(|r| r.loss).sum::<f64>() / 4.0;
        assert!(
            tail < head,
            "loss should fall: first {head}, last {tail}"
        );
    }

    #[test]
    fn training_is_deterministic() {
        let paths = toy_paths(8, 4, 3);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 4,
            seed: 21,
            tc_alpha: 0.02,
            ..TrainConfig::default()
        };
        let a = train(&paths, &cfg).unwrap();
        let b = train(&paths, &cfg).unwrap();
        assert_eq!(a.params.values, b.params.values);
        let la: Vec<f64> = a.history.iter().map(|r| r.loss).collect();
        let lb: Vec<f64> = b.history.iter().map(|r| r.loss).collect();
        assert_eq!(la, lb);
    }

    #[test]
    fn train_rejects_unnormalized_paths() {
        let market = MarketParams::new(2.0, 0.05, 0.2, 0.0, 0.25).unwrap();
        let paths = simulate_gbm(&market, 4, 8, RngSeed(1)).unwrap();
        let cfg = TrainConfig::default();
        assert!(train(&paths, &cfg).is_err());
    }
}
