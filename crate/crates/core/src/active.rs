//! Active learning with a deep-kernel GP: seed a small measured set, retrain
//! each cycle, acquire by mean + standard deviation.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::gp::{
    batch_predict, embed, predict, train_dkl, train_from, DklConfig, GpError, Posterior, TargetStats, TrainedDkl,
};
use crate::num::{Matrix, Rng};
use crate::similarity::{pearson, SimilarityError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ActiveError {
    #[error("dataset has {got} points; need at least {needed}")]
    DatasetTooSmall { needed: usize, got: usize },
    #[error("cannot select {k} of {n} candidates")]
    KTooLarge { k: usize, n: usize },
    #[error("no unmeasured points remain")]
    Exhausted,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least 3 records with reference predictions, got {0}")]
    InsufficientData(usize),
    #[error("cycle {cycle}: {source}")]
    Cycle { cycle: usize, source: GpError },
    #[error(transparent)]
    Model(#[from] GpError),
    #[error(transparent)]
    Correlation(#[from] SimilarityError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcquisitionMode {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Acquisition,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub n_init: usize,
    pub acquisition_mode: AcquisitionMode,
    pub acq_batch: usize,
    pub predict_batch: usize,
    pub retrain_every: usize,
    /// Maximum number of cycles; `None` runs until the pool is exhausted.
    pub step_budget: Option<usize>,
    pub seed: u64,
    /// Weight on the standard deviation in the acquisition score.
    pub beta: f64,
    /// Retrain from a fresh initialization instead of the previous parameters.
    pub cold_start: bool,
    /// Adam epochs per warm-started retrain.
    pub cycle_epochs: usize,
    /// Latent snapshot interval in cycles; 0 disables snapshots.
    pub log_every: usize,
    pub dkl: DklConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_init: 100,
            acquisition_mode: AcquisitionMode::Maximize,
            acq_batch: 1,
            predict_batch: 250,
            retrain_every: 1,
            step_budget: None,
            seed: 0,
            beta: 1.0,
            cold_start: false,
            cycle_epochs: 50,
            log_every: 0,
            dkl: DklConfig::default(),
        }
    }
}

impl RunConfig {
    fn dkl_config(&self) -> DklConfig {
        DklConfig {
            seed: self.seed,
            ..self.dkl.clone()
        }
    }

    fn validate(&self, n: usize) -> Result<(), ActiveError> {
        if self.acq_batch == 0 || self.predict_batch == 0 || self.retrain_every == 0 {
            return Err(ActiveError::InvalidConfig(
                "acq_batch, predict_batch and retrain_every must be positive".into(),
            ));
        }
        if self.n_init < 2 {
            return Err(ActiveError::InvalidConfig("n_init must be at least 2".into()));
        }
        if n < self.n_init + 1 {
            return Err(ActiveError::DatasetTooSmall {
                needed: self.n_init + 1,
                got: n,
            });
        }
        Ok(())
    }
}

/// Candidate pool: features, ground truth and identity of every molecule.
#[derive(Clone, Debug)]
pub struct Pool {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub ids: Vec<String>,
    pub smiles: Vec<String>,
}

impl Pool {
    pub fn new(x: Matrix, y: Vec<f64>, ids: Vec<String>, smiles: Vec<String>) -> Result<Self, ActiveError> {
        let n = x.rows();
        if y.len() != n || ids.len() != n || smiles.len() != n {
            return Err(GpError::ShapeMismatch(format!(
                "{n} feature rows, {} targets, {} ids, {} smiles",
                y.len(),
                ids.len(),
                smiles.len()
            ))
            .into());
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(GpError::NonFiniteTargets.into());
        }
        Ok(Pool { x, y, ids, smiles })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn targets(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&i| self.y[i]).collect()
    }
}

#[derive(Clone, Debug)]
pub struct ActiveRunState {
    /// Measured indices in the order they were measured.
    pub measured: Vec<usize>,
    /// Unmeasured indices, ascending.
    pub unmeasured: Vec<usize>,
    pub model: TrainedDkl,
    pub cycle: usize,
    stale: bool,
    rng: Rng,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub cycle: usize,
    pub chosen: Vec<usize>,
    pub pred_mean: Vec<f64>,
    pub pred_std: Vec<f64>,
    pub true_value: Vec<f64>,
    /// Predicted minus ground truth.
    pub error: Vec<f64>,
    /// Static reference model at the chosen points; empty without a reference.
    pub ref_mean: Vec<f64>,
    pub ref_std: Vec<f64>,
    /// RMSE over the candidates the choice was made from.
    pub rmse_unmeasured: f64,
}

/// Embeddings of the whole pool at one cycle.
#[derive(Clone, Debug)]
pub struct LatentSnapshot {
    pub cycle: usize,
    pub z: Matrix,
    pub measured: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<TrajectoryRecord>,
    pub snapshots: Vec<LatentSnapshot>,
    pub final_state: ActiveRunState,
    /// Wall-clock seconds per cycle. Not deterministic.
    pub cycle_seconds: Vec<f64>,
}

impl RunOutcome {
    pub fn rmse_curve(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rmse_unmeasured).collect()
    }
}

/// Draws the initial measured set and trains the first model on it.
pub fn init_run(pool: &Pool, cfg: &RunConfig) -> Result<ActiveRunState, ActiveError> {
    cfg.validate(pool.len())?;
    let mut rng = Rng::new(cfg.seed);
    let measured = rng.sample_indices(pool.len(), cfg.n_init);
    let mut mask = vec![false; pool.len()];
    measured.iter().for_each(|&i| mask[i] = true);
    let unmeasured = (0..pool.len()).filter(|&i| !mask[i]).collect();
    let x = pool.x.select_rows(&measured);
    let model = train_dkl(&x, &pool.targets(&measured), &cfg.dkl_config())?.model;
    Ok(ActiveRunState {
        measured,
        unmeasured,
        model,
        cycle: 0,
        stale: false,
        rng,
    })
}

/// `β·σ ± μ`, signed so that the best candidate always has the largest score.
pub fn acquisition_weighted(post: &Posterior, mode: AcquisitionMode, beta: f64) -> Vec<f64> {
    let sign = match mode {
        AcquisitionMode::Maximize => 1.0,
        AcquisitionMode::Minimize => -1.0,
    };
    post.mean.iter().zip(&post.std).map(|(m, s)| sign * m + beta * s).collect()
}

pub fn acquisition(post: &Posterior, mode: AcquisitionMode) -> Vec<f64> {
    acquisition_weighted(post, mode, 1.0)
}

/// Indices of the `k` largest scores, best first; ties go to the lower index.
pub fn select_next(scores: &[f64], k: usize) -> Result<Vec<usize>, ActiveError> {
    if k > scores.len() {
        return Err(ActiveError::KTooLarge { k, n: scores.len() });
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    Ok(idx)
}

fn rmse(pred: &[f64], truth: &[f64]) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    let s: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    (s / pred.len() as f64).sqrt()
}

/// RMSE of the current model over the unmeasured set.
pub fn rmse_unmeasured(state: &ActiveRunState, pool: &Pool, predict_batch: usize) -> Result<f64, ActiveError> {
    let post = batch_predict(&state.model, &pool.x.select_rows(&state.unmeasured), predict_batch)?;
    Ok(rmse(&post.mean, &pool.targets(&state.unmeasured)))
}

fn refresh_model(state: &mut ActiveRunState, pool: &Pool, cfg: &RunConfig) -> Result<(), GpError> {
    let x = pool.x.select_rows(&state.measured);
    let y = pool.targets(&state.measured);
    state.model = if !state.cycle.is_multiple_of(cfg.retrain_every) {
        let stats = TargetStats::fit(&y)?;
        TrainedDkl::condition(state.model.params.clone(), &x, &y, stats)?
    } else if cfg.cold_start {
        train_dkl(&x, &y, &cfg.dkl_config())?.model
    } else {
        train_from(state.model.params.clone(), &x, &y, &cfg.dkl_config(), cfg.cycle_epochs)?.model
    };
    Ok(())
}

/// Positions within the candidate list chosen by `policy`.
pub fn choose(
    post: &Posterior,
    k: usize,
    policy: Policy,
    cfg: &RunConfig,
    rng: &mut Rng,
) -> Result<Vec<usize>, ActiveError> {
    match policy {
        Policy::Acquisition => select_next(&acquisition_weighted(post, cfg.acquisition_mode, cfg.beta), k),
        Policy::Random => {
            if k > post.len() {
                return Err(ActiveError::KTooLarge { k, n: post.len() });
            }
            Ok(rng.sample_indices(post.len(), k))
        }
    }
}

/// One cycle: refresh the model on the measured set, predict the unmeasured
/// set, move the chosen points and record them.
pub fn step(
    state: &mut ActiveRunState,
    pool: &Pool,
    cfg: &RunConfig,
    policy: Policy,
    reference: Option<&TrainedDkl>,
) -> Result<TrajectoryRecord, ActiveError> {
    if state.unmeasured.is_empty() {
        return Err(ActiveError::Exhausted);
    }
    let cycle = state.cycle;
    let at = |source| ActiveError::Cycle { cycle, source };
    if state.stale {
        refresh_model(state, pool, cfg).map_err(at)?;
        state.stale = false;
    }
    let post = batch_predict(&state.model, &pool.x.select_rows(&state.unmeasured), cfg.predict_batch).map_err(at)?;
    let truth = pool.targets(&state.unmeasured);
    let rmse_unmeasured = rmse(&post.mean, &truth);
    let k = cfg.acq_batch.min(state.unmeasured.len());
    let picks = choose(&post, k, policy, cfg, &mut state.rng)?;

    let chosen: Vec<usize> = picks.iter().map(|&p| state.unmeasured[p]).collect();
    let pred_mean: Vec<f64> = picks.iter().map(|&p| post.mean[p]).collect();
    let pred_std: Vec<f64> = picks.iter().map(|&p| post.std[p]).collect();
    let true_value: Vec<f64> = picks.iter().map(|&p| truth[p]).collect();
    let error = pred_mean.iter().zip(&true_value).map(|(p, t)| p - t).collect();
    let (ref_mean, ref_std) = match reference {
        Some(r) => {
            let rp = predict(r, &pool.x.select_rows(&chosen)).map_err(at)?;
            (rp.mean, rp.std)
        }
        None => (Vec::new(), Vec::new()),
    };

    state.measured.extend(&chosen);
    state.unmeasured.retain(|i| !chosen.contains(i));
    state.cycle += 1;
    state.stale = true;
    Ok(TrajectoryRecord {
        cycle,
        chosen,
        pred_mean,
        pred_std,
        true_value,
        error,
        ref_mean,
        ref_std,
        rmse_unmeasured,
    })
}

fn snapshot(state: &ActiveRunState, pool: &Pool) -> Result<LatentSnapshot, GpError> {
    let mut measured = vec![false; pool.len()];
    state.measured.iter().for_each(|&i| measured[i] = true);
    Ok(LatentSnapshot {
        cycle: state.cycle,
        z: embed(&state.model.params, &pool.x)?,
        measured,
    })
}

fn run_policy(
    pool: &Pool,
    cfg: &RunConfig,
    reference: Option<&TrainedDkl>,
    policy: Policy,
) -> Result<RunOutcome, ActiveError> {
    let mut state = init_run(pool, cfg)?;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut cycle_seconds = Vec::new();
    let budget = cfg.step_budget.unwrap_or(usize::MAX);
    while !state.unmeasured.is_empty() && state.cycle < budget {
        if cfg.log_every > 0 && state.cycle % cfg.log_every == 0 {
            snapshots.push(snapshot(&state, pool)?);
        }
        let t = Instant::now();
        let rec = step(&mut state, pool, cfg, policy, reference)?;
        cycle_seconds.push(t.elapsed().as_secs_f64());
        log::info!(
            "cycle {}: chose {:?}, rmse_unmeasured {:.4}",
            rec.cycle,
            rec.chosen,
            rec.rmse_unmeasured
        );
        records.push(rec);
    }
    if cfg.log_every > 0 {
        snapshots.push(snapshot(&state, pool)?);
    }
    Ok(RunOutcome {
        records,
        snapshots,
        final_state: state,
        cycle_seconds,
    })
}

/// Acquisition-driven run until the pool is exhausted or the budget is spent.
pub fn run(pool: &Pool, cfg: &RunConfig, reference: Option<&TrainedDkl>) -> Result<RunOutcome, ActiveError> {
    run_policy(pool, cfg, reference, Policy::Acquisition)
}

/// Same loop with uniformly random selection.
pub fn random_baseline(
    pool: &Pool,
    cfg: &RunConfig,
    reference: Option<&TrainedDkl>,
) -> Result<RunOutcome, ActiveError> {
    run_policy(pool, cfg, reference, Policy::Random)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCorrelation {
    pub pearson_mean: f64,
    pub pearson_std: f64,
}

/// Pearson r between the active model's and the reference model's means
/// and standard deviations over all chosen points.
pub fn compare_to_reference(records: &[TrajectoryRecord]) -> Result<ReferenceCorrelation, ActiveError> {
    let with_ref: Vec<&TrajectoryRecord> = records.iter().filter(|r| !r.ref_mean.is_empty()).collect();
    let flat = |f: fn(&TrajectoryRecord) -> &Vec<f64>| -> Vec<f64> {
        with_ref.iter().flat_map(|r| f(r).iter().copied()).collect()
    };
    let (pm, rm) = (flat(|r| &r.pred_mean), flat(|r| &r.ref_mean));
    if pm.len() < 3 {
        return Err(ActiveError::InsufficientData(pm.len()));
    }
    Ok(ReferenceCorrelation {
        pearson_mean: pearson(&pm, &rm)?,
        pearson_std: pearson(&flat(|r| &r.pred_std), &flat(|r| &r.ref_std))?,
    })
}

/// Molecules for a similarity panel: the `recent` most recently measured
/// (newest first) followed by the `uncertain` unmeasured points with the
/// largest predictive std (ties to the lower index).
pub fn panel_selection(
    state: &ActiveRunState,
    unmeasured_std: &[f64],
    recent: usize,
    uncertain: usize,
) -> Result<Vec<usize>, ActiveError> {
    if unmeasured_std.len() != state.unmeasured.len() {
        return Err(GpError::ShapeMismatch(format!(
            "{} std values for {} unmeasured points",
            unmeasured_std.len(),
            state.unmeasured.len()
        ))
        .into());
    }
    let mut out: Vec<usize> = state.measured.iter().rev().take(recent).copied().collect();
    let top = select_next(unmeasured_std, uncertain.min(unmeasured_std.len()))?;
    out.extend(top.into_iter().map(|p| state.unmeasured[p]));
    Ok(out)
}
