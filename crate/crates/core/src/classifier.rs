//! Pooled linear back-end: mean-pooled feature blocks, trainable projections
//! to a shared width, and a logistic output unit trained with binary
//! cross-entropy by plain gradient descent.
//!
//! Mean pooling commutes with the affine projections, so training works on
//! the pooled *pre-projection* block vectors. A trained head can still score
//! full fused sequences; see [`LinearHead::score_fused`].

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontends::{FeatureMap, FusedFeatures, Projection, FUSION_WIDTH};
use crate::metrics::{eer, Label, ScoreSet};

/// Shape of one input block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub width: usize,
    /// Whether the block passes through a trainable projection.
    pub projected: bool,
}

/// One utterance: a pooled vector per block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub blocks: Vec<Vec<f64>>,
}

impl Example {
    pub fn new(blocks: Vec<Vec<f64>>) -> Self {
        Example { blocks }
    }
}

impl From<&FeatureMap> for Example {
    fn from(map: &FeatureMap) -> Self {
        Example::new(vec![map.mean_frame()])
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Block {
    spec: BlockSpec,
    mean: Vec<f64>,
    /// Reciprocal standard deviation.
    scale: Vec<f64>,
    projection: Option<Projection>,
}

impl Block {
    fn out_width(&self) -> usize {
        self.projection.as_ref().map_or(self.spec.width, |p| p.output)
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) * s)
            .collect()
    }

    fn hidden(&self, z: &[f64]) -> Vec<f64> {
        match &self.projection {
            Some(p) => p.apply(z).expect("width checked"),
            None => z.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    blocks: Vec<Block>,
    weights: Vec<f64>,
    bias: f64,
    pub trained: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `−[y ln σ(z) + (1−y) ln(1−σ(z))]`.
fn bce(z: f64, y: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
}

impl LinearHead {
    /// Fresh head: identity standardization, Gaussian projections with
    /// variance `1/width`, zero output weights.
    pub fn new(specs: &[BlockSpec], projection_width: usize, seed: u64) -> Self {
        let blocks = specs
            .iter()
            .enumerate()
            .map(|(i, &spec)| Block {
                spec,
                mean: vec![0.0; spec.width],
                scale: vec![1.0; spec.width],
                projection: spec
                    .projected
                    .then(|| Projection::random(spec.width, projection_width, seed.wrapping_add(i as u64))),
            })
            .collect::<Vec<_>>();
        let width = blocks.iter().map(Block::out_width).sum();
        LinearHead {
            blocks,
            weights: vec![0.0; width],
            bias: 0.0,
            trained: false,
        }
    }

    pub fn specs(&self) -> Vec<BlockSpec> {
        self.blocks.iter().map(|b| b.spec).collect()
    }

    /// Width of the vector the output unit sees.
    pub fn classifier_width(&self) -> usize {
        self.weights.len()
    }

    pub fn classifier_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Replaces the output unit.
    pub fn set_classifier(&mut self, weights: Vec<f64>, bias: f64) -> Result<()> {
        if weights.len() != self.weights.len() {
            return Err(Error::Contract(format!(
                "classifier width {} expected, got {}",
                self.weights.len(),
                weights.len()
            )));
        }
        self.weights = weights;
        self.bias = bias;
        Ok(())
    }

    /// Sets per-dimension z-scoring from `examples`; constant dimensions are
    /// only centered.
    pub fn fit_standardization(&mut self, examples: &[Example]) -> Result<()> {
        self.check_all(examples)?;
        let n = examples.len() as f64;
        for (b, block) in self.blocks.iter_mut().enumerate() {
            for d in 0..block.spec.width {
                let mean = examples.iter().map(|e| e.blocks[b][d]).sum::<f64>() / n;
                let var = examples.iter().map(|e| (e.blocks[b][d] - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                block.mean[d] = mean;
                block.scale[d] = if sd > 1e-12 * mean.abs().max(1e-300) { 1.0 / sd } else { 1.0 };
            }
        }
        Ok(())
    }

    fn check(&self, e: &Example) -> Result<()> {
        if e.blocks.len() != self.blocks.len() {
            return Err(Error::Contract(format!(
                "expected {} feature blocks, got {}",
                self.blocks.len(),
                e.blocks.len()
            )));
        }
        for (x, b) in e.blocks.iter().zip(&self.blocks) {
            if x.len() != b.spec.width {
                return Err(Error::Contract(format!(
                    "block width {} expected, got {}",
                    b.spec.width,
                    x.len()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data("non-finite feature".into()));
            }
        }
        Ok(())
    }

    fn check_all(&self, examples: &[Example]) -> Result<()> {
        examples.iter().try_for_each(|e| self.check(e))
    }

    pub fn logit(&self, e: &Example) -> Result<f64> {
        self.check(e)?;
        let mut z = self.bias;
        let mut offset = 0;
        for (x, b) in e.blocks.iter().zip(&self.blocks) {
            let h = b.hidden(&b.standardize(x));
            z += h.iter().zip(&self.weights[offset..]).map(|(a, w)| a * w).sum::<f64>();
            offset += h.len();
        }
        Ok(z)
    }

    /// `p̂ = σ(logit)`, the probability that the input is fake.
    pub fn score(&self, e: &Example) -> Result<f64> {
        Ok(sigmoid(self.logit(e)?))
    }

    /// Scores a feature map through a head with a single unprojected block.
    pub fn score_map(&self, map: &FeatureMap) -> Result<f64> {
        self.score(&Example::from(map))
    }

    /// Scores a projected sequence by mean pooling it and applying the
    /// output unit. Only meaningful for heads whose blocks are all projected
    /// with the projections from [`LinearHead::fused_projections`].
    pub fn score_fused(&self, f: &FusedFeatures) -> Result<f64> {
        if f.width != self.weights.len() || self.blocks.iter().any(|b| b.projection.is_none()) {
            return Err(Error::Contract(format!(
                "fused width {} does not match a fully projected head of width {}",
                f.width,
                self.weights.len()
            )));
        }
        let m = f.mean_row();
        Ok(sigmoid(
            self.bias + m.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>(),
        ))
    }

    /// Projections with the standardization folded in, one per projected
    /// block, for building [`FusedFeatures`] from raw block inputs.
    pub fn fused_projections(&self) -> Vec<Projection> {
        self.blocks
            .iter()
            .filter_map(|b| {
                let p = b.projection.as_ref()?;
                let mut out = p.clone();
                let mut bias = p.bias.clone();
                for i in 0..p.input {
                    for o in 0..p.output {
                        let w = p.weights[i * p.output + o] * b.scale[i];
                        out.weights[i * p.output + o] = w;
                        bias[o] -= w * b.mean[i];
                    }
                }
                out.bias = bias;
                Some(out)
            })
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.blocks
            .iter()
            .filter_map(|b| b.projection.as_ref())
            .map(|p| p.weights.len() + p.bias.len())
            .sum::<usize>()
            + self.weights.len()
            + 1
    }

    /// Trainable parameters: every projection (weights then bias), the
    /// output weights, the output bias.
    pub fn params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        for p in self.blocks.iter().filter_map(|b| b.projection.as_ref()) {
            v.extend_from_slice(&p.weights);
            v.extend_from_slice(&p.bias);
        }
        v.extend_from_slice(&self.weights);
        v.push(self.bias);
        v
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::Contract(format!(
                "{} parameters expected, got {}",
                self.num_params(),
                params.len()
            )));
        }
        let mut it = params.iter().copied();
        for p in self.blocks.iter_mut().filter_map(|b| b.projection.as_mut()) {
            p.weights.iter_mut().for_each(|w| *w = it.next().expect("length checked"));
            p.bias.iter_mut().for_each(|w| *w = it.next().expect("length checked"));
        }
        self.weights.iter_mut().for_each(|w| *w = it.next().expect("length checked"));
        self.bias = it.next().expect("length checked");
        Ok(())
    }

    /// Mean binary cross-entropy.
    pub fn loss(&self, examples: &[Example], labels: &[Label]) -> Result<f64> {
        let mut total = 0.0;
        for (e, l) in examples.iter().zip(labels) {
            total += bce(self.logit(e)?, l.is_fake() as u8 as f64);
        }
        Ok(total / examples.len().max(1) as f64)
    }

    /// Mean binary cross-entropy and its gradient with respect to
    /// [`LinearHead::params`].
    pub fn loss_and_gradient(&self, examples: &[Example], labels: &[Label]) -> Result<(f64, Vec<f64>)> {
        if examples.len() != labels.len() || examples.is_empty() {
            return Err(Error::Contract(format!(
                "{} examples with {} labels",
                examples.len(),
                labels.len()
            )));
        }
        self.check_all(examples)?;
        let n = examples.len() as f64;
        // The logit is linear in each standardized block, z = Σ u_b·x̃_b + const
        // with u_b = P_b w_b, so one pass over the data gives the residuals and
        // the residual-weighted block sums.
        let mut offsets = Vec::with_capacity(self.blocks.len());
        let mut constant = self.bias;
        let mut direction = Vec::with_capacity(self.blocks.len());
        let mut offset = 0;
        for b in &self.blocks {
            let w = &self.weights[offset..offset + b.out_width()];
            offsets.push(offset);
            offset += b.out_width();
            match &b.projection {
                Some(p) => {
                    constant += p.bias.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
                    direction.push(
                        (0..p.input)
                            .map(|i| {
                                p.weights[i * p.output..(i + 1) * p.output]
                                    .iter()
                                    .zip(w)
                                    .map(|(a, c)| a * c)
                                    .sum::<f64>()
                            })
                            .collect::<Vec<f64>>(),
                    );
                }
                None => direction.push(w.to_vec()),
            }
        }
        let mut loss = 0.0;
        let mut r_sum = 0.0;
        let mut v: Vec<Vec<f64>> = self.blocks.iter().map(|b| vec![0.0; b.spec.width]).collect();
        for (e, l) in examples.iter().zip(labels) {
            let xs: Vec<Vec<f64>> = e.blocks.iter().zip(&self.blocks).map(|(x, b)| b.standardize(x)).collect();
            let z = constant
                + xs
                    .iter()
                    .zip(&direction)
                    .map(|(x, u)| x.iter().zip(u).map(|(a, c)| a * c).sum::<f64>())
                    .sum::<f64>();
            let y = l.is_fake() as u8 as f64;
            loss += bce(z, y);
            let r = (sigmoid(z) - y) / n;
            r_sum += r;
            for (acc, x) in v.iter_mut().zip(&xs) {
                for (a, xi) in acc.iter_mut().zip(x) {
                    *a += r * xi;
                }
            }
        }
        let mut grad = Vec::with_capacity(self.num_params());
        let mut grad_w = vec![0.0; self.weights.len()];
        for ((b, vb), &off) in self.blocks.iter().zip(&v).zip(&offsets) {
            let w = &self.weights[off..off + b.out_width()];
            match &b.projection {
                Some(p) => {
                    for &vi in vb {
                        grad.extend(w.iter().map(|c| vi * c));
                    }
                    grad.extend(w.iter().map(|c| r_sum * c));
                    let h = p.apply(vb).expect("width checked");
                    for o in 0..p.output {
                        // Σ r·(Pᵀx̃ + b) = Pᵀv + b·Σr
                        grad_w[off + o] = h[o] - p.bias[o] + p.bias[o] * r_sum;
                    }
                }
                None => grad_w[off..off + b.spec.width].copy_from_slice(vb),
            }
        }
        grad.extend(grad_w);
        grad.push(r_sum);
        Ok((loss / n, grad))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// 0 means full batch.
    pub batch_size: usize,
    pub seed: u64,
    pub projection_width: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 5e-4,
            epochs: 100,
            batch_size: 0,
            seed: 0,
            projection_width: FUSION_WIDTH,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.projection_width == 0 {
            return Err(Error::Config("projection_width must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub head: LinearHead,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    /// Training loss measured at the start of each epoch.
    pub loss_history: Vec<f64>,
    /// Dev EER after each epoch; empty without a dev set.
    pub dev_eer_history: Vec<f64>,
    pub config: TrainConfig,
}

/// Labeled pooled examples.
#[derive(Debug, Clone, Copy)]
pub struct Labeled<'a> {
    pub examples: &'a [Example],
    pub labels: &'a [Label],
}

fn dev_metrics(head: &LinearHead, dev: Labeled<'_>) -> Result<(f64, f64)> {
    let scores = dev.examples.iter().map(|e| head.logit(e)).collect::<Result<Vec<_>>>()?;
    let set = ScoreSet::new(scores, dev.labels.to_vec())?;
    Ok((eer(&set)?.value, head.loss(dev.examples, dev.labels)?))
}

/// Gradient descent on mean binary cross-entropy. With a dev set, returns
/// the epoch with the lowest dev EER (ties: lower dev loss, then earlier);
/// without one, the last epoch.
pub fn train(specs: &[BlockSpec], train: Labeled<'_>, dev: Option<Labeled<'_>>, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.examples.len() != train.labels.len() {
        return Err(Error::Contract("examples and labels differ in length".into()));
    }
    let fakes = train.labels.iter().filter(|l| l.is_fake()).count();
    let reals = train.labels.len() - fakes;
    if fakes < 2 || reals < 2 {
        return Err(Error::Training(format!(
            "need at least 2 examples per class, got {reals} real / {fakes} fake"
        )));
    }
    let mut head = LinearHead::new(specs, cfg.projection_width, cfg.seed);
    head.fit_standardization(train.examples)?;
    if let Some(d) = dev {
        head.check_all(d.examples)?;
    }

    let n = train.examples.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let batch = if cfg.batch_size == 0 { n } else { cfg.batch_size.min(n) };
    let mut params = head.params();
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    let mut dev_eer_history = Vec::new();
    let mut best: Option<(f64, f64, usize, LinearHead)> = None;

    for epoch in 1..=cfg.epochs {
        loss_history.push(head.loss(train.examples, train.labels)?);
        if batch < n {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch) {
            let ex: Vec<Example> = chunk.iter().map(|&i| train.examples[i].clone()).collect();
            let lb: Vec<Label> = chunk.iter().map(|&i| train.labels[i]).collect();
            let (loss, grad) = head.loss_and_gradient(&ex, &lb)?;
            let next: Vec<f64> = params
                .iter()
                .zip(&grad)
                .map(|(p, g)| p - cfg.learning_rate * g)
                .collect();
            if !loss.is_finite() || next.iter().any(|p| !p.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    last_stable: Box::new(head),
                });
            }
            params = next;
            head.set_params(&params)?;
        }
        if let Some(d) = dev {
            let (e, l) = dev_metrics(&head, d)?;
            dev_eer_history.push(e);
            let better = match &best {
                None => true,
                Some((be, bl, _, _)) => e < *be || (e == *be && l < *bl),
            };
            if better {
                best = Some((e, l, epoch, head.clone()));
            }
        }
    }
    let (best_epoch, mut head) = match best {
        Some((_, _, epoch, h)) => (epoch, h),
        None => (cfg.epochs, head),
    };
    head.trained = true;
    Ok(TrainOutcome {
        head,
        best_epoch,
        loss_history,
        dev_eer_history,
        config: cfg.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointWidths {
    pub blocks: Vec<BlockSpec>,
    pub projection: usize,
    pub classifier: usize,
}

/// On-disk form of a trained head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub widths: CheckpointWidths,
    /// Base64 little-endian f64: every parameter except the output bias.
    pub weights: String,
    pub bias: f64,
    /// Base64 little-endian f64: per block, means then reciprocal deviations.
    pub standardization: String,
    pub train_config: TrainConfig,
    pub dev_eer_history: Vec<f64>,
    pub best_epoch: usize,
}

fn encode(v: &[f64]) -> String {
    let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode(s: &str) -> Result<Vec<f64>> {
    let bytes = STANDARD
        .decode(s)
        .map_err(|e| Error::Format(format!("bad base64: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format("base64 payload is not a whole number of f64".into()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

impl Checkpoint {
    pub fn from_outcome(outcome: &TrainOutcome) -> Self {
        let head = &outcome.head;
        let params = head.params();
        let mut stats = Vec::new();
        for b in &head.blocks {
            stats.extend_from_slice(&b.mean);
            stats.extend_from_slice(&b.scale);
        }
        Checkpoint {
            widths: CheckpointWidths {
                blocks: head.specs(),
                projection: outcome.config.projection_width,
                classifier: head.classifier_width(),
            },
            weights: encode(&params[..params.len() - 1]),
            bias: head.bias,
            standardization: encode(&stats),
            train_config: outcome.config.clone(),
            dev_eer_history: outcome.dev_eer_history.clone(),
            best_epoch: outcome.best_epoch,
        }
    }

    pub fn head(&self) -> Result<LinearHead> {
        let mut head = LinearHead::new(&self.widths.blocks, self.widths.projection, 0);
        if head.classifier_width() != self.widths.classifier {
            return Err(Error::Format("classifier width disagrees with block widths".into()));
        }
        let mut params = decode(&self.weights)?;
        params.push(self.bias);
        head.set_params(&params)
            .map_err(|_| Error::Format("parameter count disagrees with widths".into()))?;
        let stats = decode(&self.standardization)?;
        let expected: usize = self.widths.blocks.iter().map(|b| 2 * b.width).sum();
        if stats.len() != expected {
            return Err(Error::Format("standardization length disagrees with widths".into()));
        }
        let mut it = stats.into_iter();
        for b in &mut head.blocks {
            b.mean.iter_mut().for_each(|v| *v = it.next().expect("length checked"));
            b.scale.iter_mut().for_each(|v| *v = it.next().expect("length checked"));
        }
        head.trained = true;
        Ok(head)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
