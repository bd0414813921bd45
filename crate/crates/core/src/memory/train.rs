use rand::seq::SliceRandom;
use rand::Rng;

use super::encoder::{EncoderParams, Forward, EMBED_DIM, PARAM_COUNT};
use super::scalar::Scalar;
use super::tensor::GridTensor;
use super::MemoryError;
use crate::seed::{rng_from_seed, stage_seed};

fn norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `max(|a - s| - |a - d| + margin, 0)` with Euclidean norms.
pub fn triplet_loss(ea: &[f64], es: &[f64], ed: &[f64], margin: f64) -> f64 {
    (norm(ea, es) - norm(ea, ed) + margin).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHyper {
    pub margin: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Optimizer steps per epoch; each step draws a fresh batch of triplets.
    /// `None` sizes an epoch so that it draws as many anchors as there are
    /// training grids.
    pub steps_per_epoch: Option<usize>,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            margin: 1.0,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 64,
            epochs: 30,
            steps_per_epoch: None,
            seed: 0,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<(), MemoryError> {
        let ok = self.margin >= 0.0
            && self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.batch_size > 0
            && self.epochs > 0
            && self.steps_per_epoch != Some(0);
        if ok {
            Ok(())
        } else {
            Err(MemoryError::InvalidHyper)
        }
    }
}

/// Dataset indices `(cluster, member)` of one anchor/similar/dissimilar triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub anchor: (usize, usize),
    pub similar: (usize, usize),
    pub dissimilar: (usize, usize),
}

/// Uniform triplet: anchor cluster among those with two or more members,
/// distinct anchor and similar members, dissimilar from another cluster.
pub fn sample_triplet<R: Rng>(rng: &mut R, clusters: &[Vec<GridTensor>], eligible: &[usize]) -> Triplet {
    let ca = *eligible.choose(rng).expect("eligible clusters");
    let n = clusters[ca].len();
    let a = rng.gen_range(0..n);
    let mut s = rng.gen_range(0..n - 1);
    if s >= a {
        s += 1;
    }
    let mut cd = rng.gen_range(0..clusters.len() - 1);
    if cd >= ca {
        cd += 1;
    }
    let d = rng.gen_range(0..clusters[cd].len());
    Triplet {
        anchor: (ca, a),
        similar: (ca, s),
        dissimilar: (cd, d),
    }
}

fn check_clusters(clusters: &[Vec<GridTensor>]) -> Result<Vec<usize>, MemoryError> {
    if clusters.len() < 2 {
        return Err(MemoryError::TooFewClusters(clusters.len()));
    }
    if let Some(i) = clusters.iter().position(Vec::is_empty) {
        return Err(MemoryError::EmptyCluster(i));
    }
    let eligible: Vec<usize> = (0..clusters.len()).filter(|&i| clusters[i].len() >= 2).collect();
    if eligible.is_empty() {
        return Err(MemoryError::TooFewClusters(0));
    }
    Ok(eligible)
}

/// Mean triplet loss of a batch and its gradient with respect to the encoder
/// outputs (rows ordered anchor, similar, dissimilar per triplet).
fn loss_and_output_grad<T: Scalar>(fw: &Forward<T>, margin: f64) -> (f64, Vec<T>) {
    let out = fw.output();
    let n = fw.len() / 3;
    let mut grad = vec![T::zero(); out.len()];
    let mut total = 0.0;
    let scale = 1.0 / n as f64;
    let row = |i: usize| -> Vec<f64> { out[i * EMBED_DIM..(i + 1) * EMBED_DIM].iter().map(|v| v.as_f64()).collect() };
    for t in 0..n {
        let (a, s, d) = (row(3 * t), row(3 * t + 1), row(3 * t + 2));
        let (das, dad) = (norm(&a, &s), norm(&a, &d));
        let l = das - dad + margin;
        if l <= 0.0 {
            continue;
        }
        total += l;
        for k in 0..EMBED_DIM {
            let u = if das > 0.0 { (a[k] - s[k]) / das } else { 0.0 };
            let w = if dad > 0.0 { (a[k] - d[k]) / dad } else { 0.0 };
            let ga = (u - w) * scale;
            let gs = -u * scale;
            let gd = w * scale;
            grad[3 * t * EMBED_DIM + k] = T::of(ga);
            grad[(3 * t + 1) * EMBED_DIM + k] = T::of(gs);
            grad[(3 * t + 2) * EMBED_DIM + k] = T::of(gd);
        }
    }
    (total * scale, grad)
}

fn triplet_grids<'a>(clusters: &'a [Vec<GridTensor>], batch: &[Triplet]) -> Vec<&'a GridTensor> {
    batch
        .iter()
        .flat_map(|t| [t.anchor, t.similar, t.dissimilar])
        .map(|(c, m)| &clusters[c][m])
        .collect()
}

/// Mean loss over `batch` and its parameter gradient.
pub fn batch_loss_grad<T: Scalar>(
    params: &EncoderParams<T>,
    clusters: &[Vec<GridTensor>],
    batch: &[Triplet],
    margin: f64,
) -> (f64, Vec<T>, Forward<T>) {
    let fw = params.forward(&triplet_grids(clusters, batch));
    let (loss, d_out) = loss_and_output_grad(&fw, margin);
    let mut grad = vec![T::zero(); PARAM_COUNT];
    params.backward(&fw, &d_out, &mut grad);
    (loss, grad, fw)
}

pub fn batch_loss<T: Scalar>(params: &EncoderParams<T>, clusters: &[Vec<GridTensor>], batch: &[Triplet], margin: f64) -> f64 {
    let fw = params.forward(&triplet_grids(clusters, batch));
    loss_and_output_grad(&fw, margin).0
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: EncoderParams<f32>,
    /// Mean batch loss of each epoch.
    pub history: Vec<f64>,
}

/// Adam on uniformly sampled triplets. Deterministic in `h.seed`.
pub fn train(clusters: &[Vec<GridTensor>], h: &TrainHyper) -> Result<TrainOutcome, MemoryError> {
    h.validate()?;
    let eligible = check_clusters(clusters)?;
    let mut params = EncoderParams::<f32>::init(stage_seed(h.seed, "init"));
    let mut rng = rng_from_seed(stage_seed(h.seed, "triplets"));
    let mut m = vec![0.0f32; PARAM_COUNT];
    let mut v = vec![0.0f32; PARAM_COUNT];
    let (b1, b2) = (h.beta1 as f32, h.beta2 as f32);
    let grids: usize = clusters.iter().map(Vec::len).sum();
    let steps = h.steps_per_epoch.unwrap_or_else(|| grids.div_ceil(h.batch_size));
    let mut history = Vec::with_capacity(h.epochs);
    let mut t = 0i32;
    for epoch in 0..h.epochs {
        let mut sum = 0.0;
        for _ in 0..steps {
            let batch: Vec<Triplet> = (0..h.batch_size).map(|_| sample_triplet(&mut rng, clusters, &eligible)).collect();
            let (loss, grad, _) = batch_loss_grad(&params, clusters, &batch, h.margin);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(MemoryError::Diverged(epoch));
            }
            sum += loss;
            t += 1;
            let c1 = 1.0 - b1.powi(t);
            let c2 = 1.0 - b2.powi(t);
            let lr = h.learning_rate as f32;
            let eps = h.eps as f32;
            for (((p, g), mi), vi) in params.values_mut().iter_mut().zip(&grad).zip(&mut m).zip(&mut v) {
                *mi = b1 * *mi + (1.0 - b1) * g;
                *vi = b2 * *vi + (1.0 - b2) * g * g;
                *p -= lr * (*mi / c1) / ((*vi / c2).sqrt() + eps);
            }
        }
        history.push(sum / steps as f64);
    }
    if !params.is_finite() {
        return Err(MemoryError::Diverged(h.epochs));
    }
    Ok(TrainOutcome { params, history })
}

/// Result of comparing the analytic gradient with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    pub skipped: usize,
}

/// Compares the analytic gradient of the mean triplet loss with central
/// differences on `n_params` randomly chosen parameters. Probes whose
/// perturbation moves any ReLU, max-pool or hinge decision are skipped.
/// `corrupt` may rewrite the analytic gradient first (negative controls).
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
pub fn grad_check(
    params: &EncoderParams<f64>,
    clusters: &[Vec<GridTensor>],
    batch: &[Triplet],
    margin: f64,
    fd_epsilon: f64,
    n_params: usize,
    seed: u64,
    corrupt: Option<&dyn Fn(&mut [f64])>,
) -> GradCheck {
    let (_, mut grad, _) = batch_loss_grad(params, clusters, batch, margin);
    if let Some(f) = corrupt {
        f(&mut grad);
    }
    let mut rng = rng_from_seed(seed);
    let signature = |p: &EncoderParams<f64>| activation_signature(p, clusters, batch, margin);
    let base_sig = signature(params);
    let mut out = GradCheck {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    let mut tries = 0;
    while out.checked < n_params && tries < n_params * 20 {
        tries += 1;
        let i = rng.gen_range(0..PARAM_COUNT);
        let mut plus = params.clone();
        plus.values_mut()[i] += fd_epsilon;
        let mut minus = params.clone();
        minus.values_mut()[i] -= fd_epsilon;
        if signature(&plus) != base_sig || signature(&minus) != base_sig {
            out.skipped += 1;
            continue;
        }
        let lp = batch_loss(&plus, clusters, batch, margin);
        let lm = batch_loss(&minus, clusters, batch, margin);
        let fd = (lp - lm) / (2.0 * fd_epsilon);
        let a = grad[i];
        let denom = a.abs().max(fd.abs()).max(1e-8);
        out.max_rel_error = out.max_rel_error.max((a - fd).abs() / denom);
        out.checked += 1;
    }
    out
}

/// Every discrete decision of the forward pass (ReLU signs, pool winners,
/// hinge activity) with a tolerance band around each switching point.
fn activation_signature(p: &EncoderParams<f64>, clusters: &[Vec<GridTensor>], batch: &[Triplet], margin: f64) -> Vec<i32> {
    const BAND: f64 = 1e-6;
    let fw = p.forward(&triplet_grids(clusters, batch));
    let mut sig = fw.decision_signature(BAND);
    let out = fw.output();
    for t in 0..batch.len() {
        let row = |i: usize| &out[i * EMBED_DIM..(i + 1) * EMBED_DIM];
        let l = norm(row(3 * t), row(3 * t + 1)) - norm(row(3 * t), row(3 * t + 2)) + margin;
        sig.push(if l.abs() <= BAND { 2 } else if l > 0.0 { 1 } else { 0 });
    }
    sig
}
