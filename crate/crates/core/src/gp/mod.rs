//! Deep kernel learning: an MLP maps inputs to a low-dimensional latent
//! space, and an exact GP with an RBF kernel works on those coordinates.
//!
//! Targets are standardized before training; predictions come back in
//! target units.

mod kernel;

pub use kernel::{kernel_matrix, pairwise_sq_dists};
use kernel::rbf_from_sq_dists;

use serde::{Deserialize, Serialize};

use crate::num::{
    backward_substitute_t, cholesky, cholesky_inverse, cholesky_log_det, dot, forward_substitute,
    Activation, AdamConfig, AdamState, Matrix, MlpGrads, MlpParams, NumError, Rng,
};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GpError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("targets have zero variance; cannot standardize")]
    DegenerateTargets,
    #[error("targets contain non-finite values")]
    NonFiniteTargets,
    #[error("need at least {needed} training points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("latent grid needs a 2-D latent space, model has {0}")]
    LatentDimUnsupported(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl From<NumError> for GpError {
    fn from(e: NumError) -> Self {
        match e {
            NumError::ShapeMismatch(s) => GpError::ShapeMismatch(s),
            other => GpError::NumericalFailure(other.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DklConfig {
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
    pub activation: Activation,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    /// Pins σ_n² to this value and excludes it from optimization.
    pub fixed_noise: Option<f64>,
}

impl Default for DklConfig {
    fn default() -> Self {
        DklConfig {
            hidden: vec![128, 32],
            latent_dim: 2,
            activation: Activation::Tanh,
            epochs: 500,
            lr: 5e-3,
            seed: 0,
            fixed_noise: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DklParams {
    pub mlp: MlpParams,
    pub log_lengthscale: f64,
    pub log_outputscale: f64,
    pub log_noise: f64,
}

impl DklParams {
    pub fn init(input_dim: usize, cfg: &DklConfig, rng: &mut Rng) -> Self {
        let mut sizes = vec![input_dim];
        sizes.extend(&cfg.hidden);
        sizes.push(cfg.latent_dim);
        DklParams {
            mlp: MlpParams::glorot(&sizes, cfg.activation, rng),
            log_lengthscale: 0.0,
            log_outputscale: 0.0,
            log_noise: cfg.fixed_noise.unwrap_or(0.01).ln(),
        }
    }

    pub fn lengthscale(&self) -> f64 {
        self.log_lengthscale.exp()
    }

    pub fn outputscale(&self) -> f64 {
        self.log_outputscale.exp()
    }

    pub fn noise(&self) -> f64 {
        self.log_noise.exp()
    }

    pub fn latent_dim(&self) -> usize {
        self.mlp.output_dim()
    }

    pub fn num_params(&self) -> usize {
        self.mlp.num_params() + 3
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.mlp.to_flat();
        v.extend([self.log_lengthscale, self.log_outputscale, self.log_noise]);
        v
    }

    pub fn load_flat(&mut self, flat: &[f64]) {
        let rest = self.mlp.load_flat(flat);
        self.log_lengthscale = rest[0];
        self.log_outputscale = rest[1];
        self.log_noise = rest[2];
    }
}

/// Mean and standard deviation (population) used to standardize targets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetStats {
    pub mean: f64,
    pub std: f64,
}

impl TargetStats {
    pub const IDENTITY: TargetStats = TargetStats { mean: 0.0, std: 1.0 };

    pub fn fit(y: &[f64]) -> Result<Self, GpError> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(GpError::NonFiniteTargets);
        }
        if y.is_empty() {
            return Err(GpError::TooFewPoints { needed: 1, got: 0 });
        }
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if !(std > 0.0) || std <= 1e-12 * mean.abs() {
            return Err(GpError::DegenerateTargets);
        }
        Ok(TargetStats { mean, std })
    }

    pub fn standardize(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| (v - self.mean) / self.std).collect()
    }
}

/// Cholesky of `k + jitter·I`, escalating the jitter tenfold from
/// 1e-8·mean(diag) to 1e-2·mean(diag). Returns the factor and the jitter used.
pub fn jittered_cholesky(k: &Matrix) -> Result<(Matrix, f64), GpError> {
    let n = k.rows();
    let mean_diag = (0..n).map(|i| k[(i, i)]).sum::<f64>() / n.max(1) as f64;
    if !mean_diag.is_finite() || !k.is_finite() {
        return Err(GpError::NumericalFailure("kernel matrix is not finite".into()));
    }
    let mut rel = JITTER_START;
    loop {
        let jitter = rel * mean_diag;
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        match cholesky(&kj) {
            Ok(l) => return Ok((l, jitter)),
            Err(NumError::NotPositiveDefinite { pivot }) => {
                log::debug!("cholesky failed at pivot {pivot} with jitter {jitter:e}");
                if rel >= JITTER_MAX * 0.999 {
                    return Err(GpError::NumericalFailure(format!(
                        "kernel matrix not positive definite at pivot {pivot} even with jitter {jitter:e}"
                    )));
                }
                rel *= 10.0;
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Latent coordinates `f_NN(x)`.
pub fn embed(p: &DklParams, x: &Matrix) -> Result<Matrix, GpError> {
    Ok(p.mlp.predict(x)?)
}

fn noisy_kernel(p: &DklParams, z: &Matrix) -> Result<Matrix, GpError> {
    let mut k = kernel_matrix(z, z, p.lengthscale(), p.outputscale())?;
    let noise = p.noise();
    for i in 0..k.rows() {
        k[(i, i)] += noise;
    }
    Ok(k)
}

fn check_targets(x: &Matrix, y: &[f64]) -> Result<(), GpError> {
    if x.rows() != y.len() {
        return Err(GpError::ShapeMismatch(format!("{} inputs but {} targets", x.rows(), y.len())));
    }
    if y.is_empty() {
        return Err(GpError::TooFewPoints { needed: 1, got: 0 });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(GpError::NonFiniteTargets);
    }
    Ok(())
}

/// Negative log marginal likelihood of the standardized targets.
pub fn nll(p: &DklParams, x: &Matrix, y: &[f64], stats: &TargetStats) -> Result<f64, GpError> {
    check_targets(x, y)?;
    let z = embed(p, x)?;
    let yt = stats.standardize(y);
    let (l, _) = jittered_cholesky(&noisy_kernel(p, &z)?)?;
    Ok(nll_from_factor(&l, &yt).0)
}

fn nll_from_factor(l: &Matrix, yt: &[f64]) -> (f64, Vec<f64>) {
    let mut w = yt.to_vec();
    forward_substitute(l, &mut w);
    let quad = dot(&w, &w);
    backward_substitute_t(l, &mut w);
    let n = yt.len() as f64;
    (0.5 * quad + 0.5 * cholesky_log_det(l) + 0.5 * n * LN_2PI, w)
}

/// Gradient of [`nll`] with respect to every parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct DklGrads {
    pub mlp: MlpGrads,
    pub log_lengthscale: f64,
    pub log_outputscale: f64,
    pub log_noise: f64,
}

impl DklGrads {
    /// Same layout as [`DklParams::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.mlp.to_flat();
        v.extend([self.log_lengthscale, self.log_outputscale, self.log_noise]);
        v
    }
}

/// Value and gradient of the NLL. The jitter is proportional to the mean
/// diagonal `σ_f² + σ_n²`, so it contributes to both scale gradients.
pub fn nll_grad(p: &DklParams, x: &Matrix, y: &[f64], stats: &TargetStats) -> Result<(f64, DklGrads), GpError> {
    check_targets(x, y)?;
    let yt = stats.standardize(y);
    value_and_grad(p, x, &yt)
}

fn value_and_grad(p: &DklParams, x: &Matrix, yt: &[f64]) -> Result<(f64, DklGrads), GpError> {
    let (z, cache) = p.mlp.forward(x)?;
    let n = z.rows();
    let d2 = pairwise_sq_dists(&z, &z)?;
    let ls2 = p.lengthscale().powi(2);
    let s = p.outputscale();
    let noise = p.noise();
    let kernel = rbf_from_sq_dists(d2.clone(), p.lengthscale(), s);
    let mut k = kernel.clone();
    for i in 0..n {
        k[(i, i)] += noise;
    }
    let (l, jitter) = jittered_cholesky(&k)?;
    let rel_jitter = jitter / (s + noise);
    let (value, alpha) = nll_from_factor(&l, yt);
    if !value.is_finite() {
        return Err(GpError::NumericalFailure("non-finite marginal likelihood".into()));
    }

    // G = dNLL/dK̃ = ½(K̃⁻¹ − ααᵀ)
    let mut g = cholesky_inverse(&l);
    for i in 0..n {
        let row = g.row_mut(i);
        for (j, v) in row.iter_mut().enumerate() {
            *v = 0.5 * (*v - alpha[i] * alpha[j]);
        }
    }
    // d_noise accumulates tr(G)
    let mut d_noise = 0.0;
    let mut d_scale = 0.0;
    let mut d_ls = 0.0;
    let dim = z.cols();
    let mut dz = Matrix::zeros(n, dim);
    for i in 0..n {
        d_noise += g[(i, i)];
        let gi = g.row(i);
        let ki = kernel.row(i);
        let di = d2.row(i);
        let zi = z.row(i).to_vec();
        let mut acc = vec![0.0; dim];
        for j in 0..n {
            let gk = gi[j] * ki[j];
            d_scale += gk;
            d_ls += gk * di[j];
            if j != i {
                let zj = z.row(j);
                for c in 0..dim {
                    acc[c] -= 2.0 * gk * (zi[c] - zj[c]);
                }
            }
        }
        for (o, a) in dz.row_mut(i).iter_mut().zip(&acc) {
            *o = a / ls2;
        }
    }
    let mlp = p.mlp.backward(&cache, &dz)?;
    Ok((
        value,
        DklGrads {
            mlp,
            log_lengthscale: d_ls / ls2,
            log_outputscale: d_scale + d_noise * rel_jitter * s,
            log_noise: d_noise * noise * (1.0 + rel_jitter),
        },
    ))
}

/// A DKL model conditioned on its training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedDkl {
    pub params: DklParams,
    pub train_embeddings: Matrix,
    pub alpha: Vec<f64>,
    pub chol: Matrix,
    pub jitter: f64,
    pub target_stats: TargetStats,
}

impl TrainedDkl {
    /// Embeds `x`, factorizes the kernel and solves for the weights α.
    pub fn condition(params: DklParams, x: &Matrix, y: &[f64], stats: TargetStats) -> Result<Self, GpError> {
        check_targets(x, y)?;
        let z = embed(&params, x)?;
        let (chol, jitter) = jittered_cholesky(&noisy_kernel(&params, &z)?)?;
        let (_, alpha) = nll_from_factor(&chol, &stats.standardize(y));
        Ok(TrainedDkl {
            params,
            train_embeddings: z,
            alpha,
            chol,
            jitter,
            target_stats: stats,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.params.mlp.input_dim()
    }

    pub fn num_train(&self) -> usize {
        self.alpha.len()
    }

    /// Upper bound on the predictive variance in standardized units.
    pub fn prior_variance(&self) -> f64 {
        self.params.outputscale() + self.params.noise()
    }
}

/// Training outcome: the conditioned model and the per-epoch loss (NLL of
/// the standardized targets, evaluated before each update).
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: TrainedDkl,
    pub loss_curve: Vec<f64>,
    pub final_loss: f64,
}

/// Full-batch Adam on the exact marginal likelihood.
pub fn train_dkl(x: &Matrix, y: &[f64], cfg: &DklConfig) -> Result<TrainOutcome, GpError> {
    let mut rng = Rng::new(cfg.seed);
    let params = DklParams::init(x.cols(), cfg, &mut rng);
    train_from(params, x, y, cfg, cfg.epochs)
}

/// Continues training from existing parameters with a fresh optimizer state.
pub fn train_from(
    mut params: DklParams,
    x: &Matrix,
    y: &[f64],
    cfg: &DklConfig,
    epochs: usize,
) -> Result<TrainOutcome, GpError> {
    check_targets(x, y)?;
    if x.rows() < 2 {
        return Err(GpError::TooFewPoints { needed: 2, got: x.rows() });
    }
    if x.cols() != params.mlp.input_dim() {
        return Err(GpError::ShapeMismatch(format!(
            "inputs have {} columns, network expects {}",
            x.cols(),
            params.mlp.input_dim()
        )));
    }
    let stats = TargetStats::fit(y)?;
    let yt = stats.standardize(y);
    if let Some(noise) = cfg.fixed_noise {
        params.log_noise = noise.ln();
    }
    let adam_cfg = AdamConfig::with_lr(cfg.lr);
    let mut flat = params.to_flat();
    let mut adam = AdamState::new(flat.len());
    let mut loss_curve = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let (loss, grads) = value_and_grad(&params, x, &yt)?;
        loss_curve.push(loss);
        let mut g = grads.to_flat();
        if cfg.fixed_noise.is_some() {
            *g.last_mut().expect("hyperparameters present") = 0.0;
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(GpError::NumericalFailure(format!("non-finite gradient at epoch {epoch}")));
        }
        adam.step(&adam_cfg, &mut flat, &g)?;
        params.load_flat(&flat);
        if epoch % 50 == 0 {
            log::debug!("epoch {epoch}: nll {loss:.6}");
        }
    }
    let model = TrainedDkl::condition(params, x, y, stats)?;
    let final_loss = nll_from_factor(&model.chol, &yt).0;
    Ok(TrainOutcome {
        model,
        loss_curve,
        final_loss,
    })
}

/// Predictive mean and standard deviation in target units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Posterior {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Posterior at latent points; each row is computed independently of the
/// others.
pub fn predict_latent(m: &TrainedDkl, z: &Matrix) -> Result<Posterior, GpError> {
    if z.cols() != m.train_embeddings.cols() {
        return Err(GpError::ShapeMismatch(format!(
            "latent points have {} dims, model has {}",
            z.cols(),
            m.train_embeddings.cols()
        )));
    }
    let ks = kernel_matrix(z, &m.train_embeddings, m.params.lengthscale(), m.params.outputscale())?;
    let prior = m.prior_variance();
    let TargetStats { mean: mu, std: sd } = m.target_stats;
    let mut out = Posterior {
        mean: Vec::with_capacity(z.rows()),
        std: Vec::with_capacity(z.rows()),
    };
    // Queries are solved in small groups so each row of L is read once per
    // group; the arithmetic per query is that of `forward_substitute`.
    let l = &m.chol;
    let n = l.rows();
    for g0 in (0..z.rows()).step_by(16) {
        let g1 = (g0 + 16).min(z.rows());
        let mut vs: Vec<Vec<f64>> = (g0..g1).map(|r| ks.row(r).to_vec()).collect();
        for i in 0..n {
            let li = &l.row(i)[..i];
            let d = l[(i, i)];
            for v in vs.iter_mut() {
                v[i] = (v[i] - dot(li, &v[..i])) / d;
            }
        }
        for (r, v) in (g0..g1).zip(&vs) {
            let mean = dot(ks.row(r), &m.alpha);
            let var = (prior - dot(v, v)).max(0.0);
            out.mean.push(mean * sd + mu);
            out.std.push(var.sqrt() * sd);
        }
    }
    Ok(out)
}

pub fn predict(m: &TrainedDkl, x: &Matrix) -> Result<Posterior, GpError> {
    predict_latent(m, &embed(&m.params, x)?)
}

/// Same result as [`predict`], evaluated `batch_size` rows at a time.
pub fn batch_predict(m: &TrainedDkl, x: &Matrix, batch_size: usize) -> Result<Posterior, GpError> {
    if batch_size == 0 {
        return Err(GpError::InvalidArgument("batch size must be at least 1".into()));
    }
    let mut out = Posterior {
        mean: Vec::with_capacity(x.rows()),
        std: Vec::with_capacity(x.rows()),
    };
    let mut start = 0;
    while start < x.rows() {
        let end = (start + batch_size).min(x.rows());
        let p = predict(m, &x.slice_rows(start, end))?;
        out.mean.extend(p.mean);
        out.std.extend(p.std);
        start = end;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub z1: f64,
    pub z2: f64,
    pub mean: f64,
    pub std: f64,
}

/// Posterior on a `resolution × resolution` grid spanning the training
/// embeddings' bounding box, padded by 10% of the extent on each side.
/// Rows vary `z2` fastest.
pub fn latent_grid_predict(m: &TrainedDkl, resolution: usize) -> Result<Vec<GridPoint>, GpError> {
    let z = &m.train_embeddings;
    if z.cols() != 2 {
        return Err(GpError::LatentDimUnsupported(z.cols()));
    }
    if resolution < 2 {
        return Err(GpError::InvalidArgument("grid resolution must be at least 2".into()));
    }
    let axis = |c: usize| {
        let (lo, hi) = (0..z.rows()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            (lo.min(z[(i, c)]), hi.max(z[(i, c)]))
        });
        let mut pad = 0.1 * (hi - lo);
        if pad == 0.0 {
            pad = 0.5;
        }
        let (lo, hi) = (lo - pad, hi + pad);
        (0..resolution)
            .map(|k| lo + (hi - lo) * k as f64 / (resolution - 1) as f64)
            .collect::<Vec<f64>>()
    };
    let (a1, a2) = (axis(0), axis(1));
    let pts = Matrix::from_fn(resolution * resolution, 2, |r, c| {
        if c == 0 {
            a1[r / resolution]
        } else {
            a2[r % resolution]
        }
    });
    let post = predict_latent(m, &pts)?;
    Ok((0..pts.rows())
        .map(|r| GridPoint {
            z1: pts[(r, 0)],
            z2: pts[(r, 1)],
            mean: post.mean[r],
            std: post.std[r],
        })
        .collect())
}

#[cfg(test)]
mod tests;
