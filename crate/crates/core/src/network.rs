//! A single-hidden-layer sigmoid network trained by per-pattern stochastic
//! backpropagation, with constructive growth (one hidden node at a time on
//! stall) and post-hoc magnitude pruning of individual connections.
//!
//! Everything is deterministic in (seed, config, data): weights are
//! initialized from a counter-based ChaCha stream, patterns are visited in
//! dataset order, and no other randomness exists. Masked connections
//! contribute exactly zero and receive no updates.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network<S: Scalar> {
    pub input_count: usize,
    pub hidden_count: usize,
    pub output_count: usize,
    /// `weights_ih[h][i]`: input `i` to hidden node `h`.
    pub weights_ih: Vec<Vec<S>>,
    /// `weights_ho[o][h]`: hidden node `h` to output `o`.
    pub weights_ho: Vec<Vec<S>>,
    pub bias_h: Vec<S>,
    pub bias_o: Vec<S>,
    pub mask_ih: Vec<Vec<bool>>,
    pub mask_ho: Vec<Vec<bool>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig<S: Scalar> {
    pub learning_rate: S,
    pub momentum: S,
    pub max_epochs: usize,
    pub target_mse: f64,
    /// Epochs without meaningful improvement before a hidden node is added.
    pub stall_window: usize,
    /// Minimum MSE improvement over the stall window that counts as progress.
    pub stall_tolerance: f64,
    pub max_hidden: usize,
    /// How much training accuracy may drop before a pruned connection is
    /// reverted.
    pub prune_accuracy_slack: f64,
    pub seed: u64,
}

impl<S: Scalar> Default for TrainConfig<S> {
    fn default() -> Self {
        TrainConfig {
            learning_rate: S::of(0.3),
            momentum: S::of(0.7),
            max_epochs: 5000,
            target_mse: 0.01,
            stall_window: 50,
            stall_tolerance: 1e-4,
            max_hidden: 5,
            prune_accuracy_slack: 0.01,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub final_mse: f64,
    pub hidden_nodes_added: usize,
    pub connections_pruned: usize,
    pub inputs_removed: usize,
    pub train_accuracy: f64,
}

fn sigmoid<S: Scalar>(z: S) -> S {
    S::one() / (S::one() + (-z).exp())
}

fn init_weight<S: Scalar>(rng: &mut ChaCha8Rng) -> S {
    S::of(rng.gen_range(-0.5..0.5))
}

/// Seed stream for the weights introduced together with hidden node `index`
/// (the initial node is index 0). Deriving per node keeps `train`'s growth
/// and a manual [`grow`] call bit-identical.
fn node_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Fresh network with one hidden node and all connections active, weights
/// uniform in [-0.5, 0.5) from the seeded stream.
pub fn init_network<S: Scalar>(input_count: usize, output_count: usize, seed: u64) -> Network<S> {
    assert!(input_count > 0 && output_count > 0, "empty layer");
    let mut rng = node_rng(seed, 0);
    let weights_ih = vec![(0..input_count).map(|_| init_weight(&mut rng)).collect()];
    let bias_h = vec![init_weight(&mut rng)];
    let weights_ho: Vec<Vec<S>> = (0..output_count)
        .map(|_| vec![init_weight(&mut rng)])
        .collect();
    let bias_o = (0..output_count).map(|_| init_weight(&mut rng)).collect();
    Network {
        input_count,
        hidden_count: 1,
        output_count,
        weights_ih,
        weights_ho,
        bias_h,
        bias_o,
        mask_ih: vec![vec![true; input_count]],
        mask_ho: vec![vec![true; 1]; output_count],
    }
}

impl<S: Scalar> Network<S> {
    /// Forward pass; returns (hidden activations, output activations).
    pub fn forward(&self, input: &[S]) -> (Vec<S>, Vec<S>) {
        debug_assert_eq!(input.len(), self.input_count);
        let hidden: Vec<S> = (0..self.hidden_count)
            .map(|h| {
                let mut z = self.bias_h[h];
                for i in 0..self.input_count {
                    if self.mask_ih[h][i] {
                        z += self.weights_ih[h][i] * input[i];
                    }
                }
                sigmoid(z)
            })
            .collect();
        let outputs = self.forward_from_hidden(&hidden);
        (hidden, outputs)
    }

    /// Output layer alone, from given hidden activations.
    pub fn forward_from_hidden(&self, hidden: &[S]) -> Vec<S> {
        debug_assert_eq!(hidden.len(), self.hidden_count);
        (0..self.output_count)
            .map(|o| {
                let mut z = self.bias_o[o];
                for h in 0..self.hidden_count {
                    if self.mask_ho[o][h] {
                        z += self.weights_ho[o][h] * hidden[h];
                    }
                }
                sigmoid(z)
            })
            .collect()
    }

    /// Predicted class: argmax over outputs, ties toward the lowest index.
    pub fn predict(&self, input: &[S]) -> usize {
        argmax(&self.forward(input).1)
    }

    /// Input indices whose outgoing connections are all masked.
    pub fn removed_inputs(&self) -> Vec<usize> {
        (0..self.input_count)
            .filter(|&i| (0..self.hidden_count).all(|h| !self.mask_ih[h][i]))
            .collect()
    }

    pub fn active_connections(&self) -> usize {
        let ih: usize = self.mask_ih.iter().flatten().filter(|&&m| m).count();
        let ho: usize = self.mask_ho.iter().flatten().filter(|&&m| m).count();
        ih + ho
    }
}

/// Argmax with ties toward the lowest index.
pub fn argmax<S: Scalar>(xs: &[S]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// Classification accuracy of the network on encoded data. Empty data
/// counts as perfect (with a logged warning).
pub fn accuracy<S: Scalar>(net: &Network<S>, inputs: &[Vec<S>], labels: &[usize]) -> f64 {
    if inputs.is_empty() {
        log::warn!("accuracy of empty dataset defined as 1.0");
        return 1.0;
    }
    let hits = inputs
        .iter()
        .zip(labels)
        .filter(|(x, &label)| net.predict(x) == label)
        .count();
    hits as f64 / inputs.len() as f64
}

fn validate<S: Scalar>(net: &Network<S>, inputs: &[Vec<S>], labels: &[usize]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::Config("training data is empty".to_string()));
    }
    if inputs.len() != labels.len() {
        return Err(Error::Config("inputs and labels differ in length".to_string()));
    }
    if let Some(bad) = inputs.iter().find(|x| x.len() != net.input_count) {
        return Err(Error::Config(format!(
            "input width {} does not match network input count {}",
            bad.len(),
            net.input_count
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= net.output_count) {
        return Err(Error::Config(format!(
            "label {bad} not one-hot encodable with {} outputs",
            net.output_count
        )));
    }
    Ok(())
}

/// Same-shaped buffers as the network's weight structures, used for momentum
/// velocities and for gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightBuffers<S: Scalar> {
    pub ih: Vec<Vec<S>>,
    pub ho: Vec<Vec<S>>,
    pub bias_h: Vec<S>,
    pub bias_o: Vec<S>,
}

impl<S: Scalar> WeightBuffers<S> {
    fn zeros(net: &Network<S>) -> Self {
        WeightBuffers {
            ih: vec![vec![S::zero(); net.input_count]; net.hidden_count],
            ho: vec![vec![S::zero(); net.hidden_count]; net.output_count],
            bias_h: vec![S::zero(); net.hidden_count],
            bias_o: vec![S::zero(); net.output_count],
        }
    }

    fn grow(&mut self, net: &Network<S>) {
        self.ih.push(vec![S::zero(); net.input_count]);
        for row in &mut self.ho {
            row.push(S::zero());
        }
        self.bias_h.push(S::zero());
    }
}

/// Per-pattern loss: sum of squared output errors against the one-hot target.
fn pattern_loss<S: Scalar>(outputs: &[S], label: usize) -> f64 {
    outputs
        .iter()
        .enumerate()
        .map(|(o, &y)| {
            let t = if o == label { 1.0 } else { 0.0 };
            let e = y.as_f64() - t;
            e * e
        })
        .sum()
}

/// Analytic gradients of the per-pattern loss with respect to every weight
/// and bias. Masked connections get zero gradient.
pub fn loss_gradients<S: Scalar>(
    net: &Network<S>,
    input: &[S],
    label: usize,
) -> WeightBuffers<S> {
    let (hidden, outputs) = net.forward(input);
    let mut grad = WeightBuffers::zeros(net);
    let two = S::of(2.0);
    let mut delta_o = vec![S::zero(); net.output_count];
    for o in 0..net.output_count {
        let t = if o == label { S::one() } else { S::zero() };
        let y = outputs[o];
        delta_o[o] = two * (y - t) * y * (S::one() - y);
        grad.bias_o[o] = delta_o[o];
        for h in 0..net.hidden_count {
            if net.mask_ho[o][h] {
                grad.ho[o][h] = delta_o[o] * hidden[h];
            }
        }
    }
    for h in 0..net.hidden_count {
        let mut upstream = S::zero();
        for o in 0..net.output_count {
            if net.mask_ho[o][h] {
                upstream += net.weights_ho[o][h] * delta_o[o];
            }
        }
        let dh = upstream * hidden[h] * (S::one() - hidden[h]);
        grad.bias_h[h] = dh;
        for i in 0..net.input_count {
            if net.mask_ih[h][i] {
                grad.ih[h][i] = dh * input[i];
            }
        }
    }
    grad
}

fn sgd_step<S: Scalar>(
    net: &mut Network<S>,
    velocity: &mut WeightBuffers<S>,
    grad: &WeightBuffers<S>,
    cfg: &TrainConfig<S>,
) {
    let lr = cfg.learning_rate;
    let mu = cfg.momentum;
    for h in 0..net.hidden_count {
        for i in 0..net.input_count {
            if net.mask_ih[h][i] {
                velocity.ih[h][i] = mu * velocity.ih[h][i] - lr * grad.ih[h][i];
                net.weights_ih[h][i] += velocity.ih[h][i];
            }
        }
        velocity.bias_h[h] = mu * velocity.bias_h[h] - lr * grad.bias_h[h];
        net.bias_h[h] += velocity.bias_h[h];
    }
    for o in 0..net.output_count {
        for h in 0..net.hidden_count {
            if net.mask_ho[o][h] {
                velocity.ho[o][h] = mu * velocity.ho[o][h] - lr * grad.ho[o][h];
                net.weights_ho[o][h] += velocity.ho[o][h];
            }
        }
        velocity.bias_o[o] = mu * velocity.bias_o[o] - lr * grad.bias_o[o];
        net.bias_o[o] += velocity.bias_o[o];
    }
}

/// One hidden node added, fresh small random weights for the new node only;
/// every existing weight, bias, and mask entry is preserved bit for bit.
/// At `max_hidden` this is a no-op with a logged warning.
pub fn grow<S: Scalar>(net: &Network<S>, cfg: &TrainConfig<S>) -> Network<S> {
    if net.hidden_count >= cfg.max_hidden {
        log::warn!(
            "hidden layer already at its cap of {}; growth skipped",
            cfg.max_hidden
        );
        return net.clone();
    }
    let mut out = net.clone();
    let mut rng = node_rng(cfg.seed, net.hidden_count);
    out.weights_ih
        .push((0..net.input_count).map(|_| init_weight(&mut rng)).collect());
    out.bias_h.push(init_weight(&mut rng));
    for o in 0..net.output_count {
        out.weights_ho[o].push(init_weight(&mut rng));
    }
    out.mask_ih.push(vec![true; net.input_count]);
    for o in 0..net.output_count {
        out.mask_ho[o].push(true);
    }
    out.hidden_count += 1;
    out
}

struct EpochOutcome {
    epochs_run: usize,
    final_mse: f64,
}

/// Runs up to `epochs` epochs of per-pattern backpropagation in dataset
/// order, optionally growing on stall. Returns early once `target_mse` is
/// reached. `added` counts nodes grown here.
fn run_epochs<S: Scalar>(
    net: &mut Network<S>,
    inputs: &[Vec<S>],
    labels: &[usize],
    cfg: &TrainConfig<S>,
    epochs: usize,
    allow_growth: bool,
    added: &mut usize,
) -> Result<EpochOutcome> {
    let mut velocity = WeightBuffers::zeros(net);
    let mut history: Vec<f64> = Vec::new();
    let mut last_growth_epoch = 0usize;
    let mut final_mse = f64::INFINITY;
    let mut epochs_run = 0usize;

    for epoch in 1..=epochs {
        let mut loss_sum = 0.0;
        for (x, &label) in inputs.iter().zip(labels) {
            let (_, outputs) = net.forward(x);
            loss_sum += pattern_loss(&outputs, label);
            let grad = loss_gradients(net, x, label);
            sgd_step(net, &mut velocity, &grad, cfg);
        }
        let mse = loss_sum / inputs.len() as f64;
        if !mse.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        epochs_run = epoch;
        final_mse = mse;
        history.push(mse);
        if mse <= cfg.target_mse {
            break;
        }
        if allow_growth
            && cfg.stall_window > 0
            && epoch - last_growth_epoch >= cfg.stall_window
            && epoch >= cfg.stall_window
        {
            let reference = history[epoch - cfg.stall_window];
            if reference - mse < cfg.stall_tolerance {
                if net.hidden_count < cfg.max_hidden {
                    *net = grow(net, cfg);
                    velocity.grow(net);
                    *added += 1;
                }
                // At the cap, grow() warns; either way the stall clock
                // restarts so the check is not retriggered every epoch.
                last_growth_epoch = epoch;
            }
        }
    }
    Ok(EpochOutcome {
        epochs_run,
        final_mse,
    })
}

/// Constructive training: stochastic backpropagation with momentum against
/// one-hot targets, growing one hidden node whenever the MSE stalls above
/// `target_mse` (up to `max_hidden`). Stops at `target_mse` or `max_epochs`.
pub fn train<S: Scalar>(
    net: &mut Network<S>,
    inputs: &[Vec<S>],
    labels: &[usize],
    cfg: &TrainConfig<S>,
) -> Result<TrainReport> {
    validate(net, inputs, labels)?;
    let mut added = 0usize;
    let out = run_epochs(net, inputs, labels, cfg, cfg.max_epochs, true, &mut added)?;
    Ok(TrainReport {
        epochs_run: out.epochs_run,
        final_mse: out.final_mse,
        hidden_nodes_added: added,
        connections_pruned: 0,
        inputs_removed: 0,
        train_accuracy: accuracy(net, inputs, labels),
    })
}

/// Magnitude pruning: repeatedly masks the smallest-magnitude active
/// connection, retrains briefly (a tenth of `max_epochs`), and keeps the
/// mask if training accuracy stays within `prune_accuracy_slack` of the
/// pre-pruning baseline; otherwise the change is reverted and that
/// connection is left alone for good. Stops when no connection can be
/// pruned. Returns the pruned network and how many connections were masked.
pub fn prune<S: Scalar>(
    net: &Network<S>,
    inputs: &[Vec<S>],
    labels: &[usize],
    cfg: &TrainConfig<S>,
) -> Result<(Network<S>, usize)> {
    validate(net, inputs, labels)?;
    let mut net = net.clone();
    let baseline = accuracy(&net, inputs, labels);
    let retrain_epochs = cfg.max_epochs / 10;
    // Connections found unprunable, addressed as (layer, row, col) where
    // layer 0 is input-to-hidden and 1 is hidden-to-output.
    let mut unprunable: Vec<(u8, usize, usize)> = Vec::new();
    let mut pruned = 0usize;

    loop {
        let mut candidate: Option<(f64, (u8, usize, usize))> = None;
        let mut consider = |addr: (u8, usize, usize), w: S, masked: bool| {
            if masked || unprunable.contains(&addr) {
                return;
            }
            let magnitude = w.abs().as_f64();
            // Strict comparison keeps the first (lowest address) on ties.
            if candidate.map_or(true, |(best, _)| magnitude < best) {
                candidate = Some((magnitude, addr));
            }
        };
        for h in 0..net.hidden_count {
            for i in 0..net.input_count {
                consider((0, h, i), net.weights_ih[h][i], !net.mask_ih[h][i]);
            }
        }
        for o in 0..net.output_count {
            for h in 0..net.hidden_count {
                consider((1, o, h), net.weights_ho[o][h], !net.mask_ho[o][h]);
            }
        }
        let Some((_, addr)) = candidate else { break };

        let snapshot = net.clone();
        match addr {
            (0, h, i) => net.mask_ih[h][i] = false,
            (1, o, h) => net.mask_ho[o][h] = false,
            _ => unreachable!(),
        }
        let mut ignored = 0usize;
        run_epochs(&mut net, inputs, labels, cfg, retrain_epochs, false, &mut ignored)?;
        let acc = accuracy(&net, inputs, labels);
        if acc + 1e-12 >= baseline - cfg.prune_accuracy_slack {
            pruned += 1;
        } else {
            net = snapshot;
            unprunable.push(addr);
        }
    }
    Ok((net, pruned))
}
