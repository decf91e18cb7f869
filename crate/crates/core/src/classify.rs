//! Kernel SVM: RBF kernel, sequential minimal optimization in the
//! simplified two-variable form, and the split-repeat evaluation protocol
//! used everywhere a (C, gamma) pair has to be chosen.
//!
//! Binary labels are +1 / -1 throughout. Models are plain data and
//! serialize to a JSON file with a version tag.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODEL_FORMAT_TAG: &str = "smokedet-svm/1";

/// Minimum alpha step for an SMO pair update to count as progress.
const MIN_ALPHA_STEP: f64 = 1e-5;

/// Hard cap on optimization sweeps; convergence is normally reached via
/// `max_passes` quiet sweeps long before this.
const SWEEP_CAP: usize = 2000;

/// Per-feature standardization fitted on training data and replayed at
/// prediction time. Applies to `len` features starting at `offset`;
/// everything else passes through. Zero-variance features pass through too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScoreScaler {
    pub offset: usize,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl ZScoreScaler {
    /// Fits mean and population std per feature in `[offset, offset + len)`.
    pub fn fit(samples: &[Vec<f64>], offset: usize, len: usize) -> ZScoreScaler {
        let n = samples.len().max(1) as f64;
        let mut means = vec![0.0; len];
        let mut stds = vec![0.0; len];
        for s in samples {
            for k in 0..len {
                means[k] += s[offset + k];
            }
        }
        for m in means.iter_mut() {
            *m /= n;
        }
        for s in samples {
            for k in 0..len {
                let d = s[offset + k] - means[k];
                stds[k] += d * d;
            }
        }
        for sd in stds.iter_mut() {
            *sd = (*sd / n).sqrt();
            if *sd == 0.0 {
                *sd = 1.0;
            }
        }
        ZScoreScaler { offset, means, stds }
    }

    pub fn apply(&self, x: &mut [f64]) {
        for k in 0..self.means.len() {
            x[self.offset + k] = (x[self.offset + k] - self.means[k]) / self.stds[k];
        }
    }

    pub fn applied(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.apply(&mut out);
        out
    }
}

/// Trained RBF-kernel SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub gamma: f64,
    /// Box constraint the model was trained with (kept for inspection).
    pub c: f64,
    pub bias: f64,
    pub feature_dim: usize,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub coefficients: Vec<f64>,
    pub scaler: Option<ZScoreScaler>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    model: SvmModel,
}

impl SvmModel {
    /// Decision value `f(x) = sum_i alpha_i y_i K(sv_i, x) + b`, applying
    /// the stored scaler first.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                got: x.len(),
            });
        }
        let scaled;
        let x = match &self.scaler {
            Some(s) => {
                scaled = s.applied(x);
                &scaled[..]
            }
            None => x,
        };
        let mut f = self.bias;
        for (sv, &coeff) in self.support_vectors.iter().zip(&self.coefficients) {
            f += coeff * rbf(self.gamma, sv, x);
        }
        Ok(f)
    }

    /// `(label, margin)` with `sign(0) = +1`.
    pub fn predict(&self, x: &[f64]) -> Result<(i8, f64)> {
        let margin = self.decision(x)?;
        Ok((if margin >= 0.0 { 1 } else { -1 }, margin))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            format: MODEL_FORMAT_TAG.to_string(),
            model: self.clone(),
        };
        let text = serde_json::to_string_pretty(&file)
            .map_err(|e| Error::ModelFormat(format!("serialize: {e}")))?;
        fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<SvmModel> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| {
            Error::ModelFormat(format!("{}: {e}", path.display()))
        })?;
        if file.format != MODEL_FORMAT_TAG {
            return Err(Error::ModelFormat(format!(
                "{}: unknown format tag {:?}, expected {MODEL_FORMAT_TAG:?}",
                path.display(),
                file.format
            )));
        }
        Ok(file.model)
    }
}

#[inline]
fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let mut d2 = 0.0;
    for (x, z) in a.iter().zip(b) {
        let d = x - z;
        d2 += d * d;
    }
    (-gamma * d2).exp()
}

/// SMO solver knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub c: f64,
    pub gamma: f64,
    /// KKT violation tolerance.
    pub tol: f64,
    /// Consecutive sweeps without an alpha update before stopping.
    pub max_passes: usize,
    /// Seed for the partner-index draw.
    pub seed: u64,
}

impl TrainParams {
    pub fn new(c: f64, gamma: f64) -> TrainParams {
        TrainParams {
            c,
            gamma,
            tol: 1e-3,
            max_passes: 10,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !(self.gamma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "C and gamma must be positive, got C={}, gamma={}",
                self.c, self.gamma
            )));
        }
        if !(self.tol > 0.0) || self.max_passes < 1 {
            return Err(Error::InvalidConfig(
                "tol must be positive and max_passes >= 1".into(),
            ));
        }
        Ok(())
    }
}

fn validate_training_set(samples: &[Vec<f64>], labels: &[i8]) -> Result<usize> {
    if samples.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            got: labels.len(),
        });
    }
    let dim = samples.first().map(|s| s.len()).unwrap_or(0);
    if dim == 0 {
        return Err(Error::SingleClass);
    }
    for (i, s) in samples.iter().enumerate() {
        if s.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.len(),
            });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { sample: i });
        }
    }
    let pos = labels.iter().filter(|&&y| y > 0).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::SingleClass);
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::InvalidConfig("labels must be +1 or -1".into()));
    }
    Ok(dim)
}

/// Trains an RBF SVM by sequential minimal optimization.
///
/// Samples are used as-is (no scaling); attach a scaler afterwards via
/// [`train_svm_scaled`] when features need standardization.
pub fn train_svm(samples: &[Vec<f64>], labels: &[i8], params: &TrainParams) -> Result<SvmModel> {
    params.validate()?;
    let dim = validate_training_set(samples, labels)?;
    let n = samples.len();
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();

    // Dense kernel matrix; training sets are capped upstream, so n^2 is fine.
    let kernel: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let gamma = params.gamma;
            (0..n).map(move |j| rbf(gamma, &samples[i], &samples[j]))
        })
        .collect();
    let k = |i: usize, j: usize| kernel[i * n + j];

    let mut alpha = vec![0.0f64; n];
    let mut b = 0.0f64;
    // Error cache: E_i = f(x_i) - y_i. With all alphas zero, f = 0.
    let mut err: Vec<f64> = y.iter().map(|&yi| -yi).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let c = params.c;
    let mut quiet_sweeps = 0;
    let mut sweeps = 0;
    while quiet_sweeps < params.max_passes && sweeps < SWEEP_CAP {
        sweeps += 1;
        let mut changed = 0usize;
        for i in 0..n {
            let e_i = err[i];
            let r = y[i] * e_i;
            // KKT check: inspect i only if it violates optimality by > tol.
            if !((r < -params.tol && alpha[i] < c) || (r > params.tol && alpha[i] > 0.0)) {
                continue;
            }
            let j = {
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                j
            };
            let e_j = err[j];
            let (a_i_old, a_j_old) = (alpha[i], alpha[j]);
            let (low, high) = if labels[i] != labels[j] {
                let d = a_j_old - a_i_old;
                ((0.0f64).max(d), c.min(c + d))
            } else {
                let s = a_i_old + a_j_old;
                ((0.0f64).max(s - c), c.min(s))
            };
            if low >= high {
                continue;
            }
            let eta = 2.0 * k(i, j) - k(i, i) - k(j, j);
            if eta >= 0.0 {
                continue;
            }
            let mut a_j = a_j_old - y[j] * (e_i - e_j) / eta;
            a_j = a_j.clamp(low, high);
            if (a_j - a_j_old).abs() < MIN_ALPHA_STEP {
                continue;
            }
            let a_i = a_i_old + y[i] * y[j] * (a_j_old - a_j);
            let d_i = y[i] * (a_i - a_i_old);
            let d_j = y[j] * (a_j - a_j_old);
            let b1 = b - e_i - d_i * k(i, i) - d_j * k(i, j);
            let b2 = b - e_j - d_i * k(i, j) - d_j * k(j, j);
            let b_new = if a_i > 0.0 && a_i < c {
                b1
            } else if a_j > 0.0 && a_j < c {
                b2
            } else {
                (b1 + b2) / 2.0
            };
            let d_b = b_new - b;
            alpha[i] = a_i;
            alpha[j] = a_j;
            b = b_new;
            for t in 0..n {
                err[t] += d_i * k(i, t) + d_j * k(j, t) + d_b;
            }
            changed += 1;
        }
        if changed == 0 {
            quiet_sweeps += 1;
        } else {
            quiet_sweeps = 0;
        }
    }

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for i in 0..n {
        if alpha[i] > 1e-12 {
            support_vectors.push(samples[i].clone());
            coefficients.push(alpha[i] * y[i]);
        }
    }
    debug_assert!(
        alpha.iter().all(|&a| (-1e-9..=c + 1e-9).contains(&a)),
        "alpha bounds violated"
    );
    debug_assert!(
        alpha
            .iter()
            .zip(&y)
            .map(|(&a, &yi)| a * yi)
            .sum::<f64>()
            .abs()
            < 1e-6,
        "dual equality constraint violated"
    );
    Ok(SvmModel {
        gamma: params.gamma,
        c,
        bias: b,
        feature_dim: dim,
        support_vectors,
        coefficients,
        scaler: None,
    })
}

/// Fits a scaler on `scale_prefix` leading features (when given), trains on
/// the standardized data and stores the scaler inside the model.
pub fn train_svm_scaled(
    samples: &[Vec<f64>],
    labels: &[i8],
    params: &TrainParams,
    scale_prefix: Option<usize>,
) -> Result<SvmModel> {
    match scale_prefix {
        None | Some(0) => train_svm(samples, labels, params),
        Some(len) => {
            validate_training_set(samples, labels)?;
            let scaler = ZScoreScaler::fit(samples, 0, len);
            let scaled: Vec<Vec<f64>> = samples.iter().map(|s| scaler.applied(s)).collect();
            let mut model = train_svm(&scaled, labels, params)?;
            model.scaler = Some(scaler);
            Ok(model)
        }
    }
}

/// Ordered (C, gamma) pairs to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub pairs: Vec<(f64, f64)>,
}

impl Default for ParamGrid {
    fn default() -> Self {
        ParamGrid {
            pairs: vec![
                (2.0, 100.0),
                (0.001, 1.0),
                (50.0, 1000.0),
                (0.5, 1000.0),
                (0.02, 1000.0),
            ],
        }
    }
}

impl ParamGrid {
    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::InvalidConfig("parameter grid is empty".into()));
        }
        for &(c, gamma) in &self.pairs {
            if !(c > 0.0) || !(gamma > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "grid pair (C={c}, gamma={gamma}) must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Split-repeat protocol knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossEvalParams {
    pub repeats: usize,
    /// Training fraction per class, in (0, 1).
    pub split: f64,
    pub seed: u64,
    pub tol: f64,
    pub max_passes: usize,
    /// Leading features to z-score per round (fit on the training half).
    pub scale_prefix: Option<usize>,
}

impl Default for CrossEvalParams {
    fn default() -> Self {
        CrossEvalParams {
            repeats: 10,
            split: 0.5,
            seed: 0,
            tol: 1e-3,
            max_passes: 10,
            scale_prefix: None,
        }
    }
}

/// Scores of one (C, gamma) pair over all rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub c: f64,
    pub gamma: f64,
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

/// Outcome of the split-repeat protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_pair: Vec<PairScore>,
    /// Index into `per_pair` of the best mean accuracy (ties: first listed).
    pub best_index: usize,
    /// Completed training runs; pairs x repeats when nothing failed.
    pub train_runs: usize,
}

impl EvalReport {
    pub fn best(&self) -> &PairScore {
        &self.per_pair[self.best_index]
    }
}

/// Mixes a base seed with pair and round indices; each round owns an
/// independent deterministic RNG stream regardless of execution order.
fn round_seed(seed: u64, pair: usize, round: usize) -> u64 {
    let mut z = seed
        ^ (pair as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (round as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws a stratified train/test split: per class, a seeded shuffle and a
/// train quota clamped to leave at least one sample on each side.
fn stratified_split(
    labels: &[i8],
    split: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [1i8, -1] {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == class)
            .map(|(i, _)| i)
            .collect();
        idx.shuffle(rng);
        let quota = ((idx.len() as f64 * split).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..quota]);
        test.extend_from_slice(&idx[quota..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Runs the split-repeat protocol over a parameter grid.
///
/// For every (C, gamma) pair, `repeats` rounds each draw a fresh stratified
/// split, train on one part and score accuracy on the other; the report
/// carries per-pair means and the best pair. Rounds are independent and run
/// in parallel; results are keyed by (pair, round) so the report is
/// reproducible for a fixed seed.
pub fn cross_eval(
    samples: &[Vec<f64>],
    labels: &[i8],
    grid: &ParamGrid,
    params: &CrossEvalParams,
) -> Result<EvalReport> {
    grid.validate()?;
    validate_training_set(samples, labels)?;
    if params.repeats < 1 {
        return Err(Error::InvalidConfig("repeats must be >= 1".into()));
    }
    if !(params.split > 0.0 && params.split < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split {} outside (0, 1)",
            params.split
        )));
    }
    for class in [1i8, -1] {
        let got = labels.iter().filter(|&&y| y == class).count();
        if got < 2 {
            return Err(Error::InsufficientData {
                class: (if class > 0 { "positive" } else { "negative" }).into(),
                got,
                min: 2,
            });
        }
    }

    let rounds: Vec<(usize, usize)> = (0..grid.pairs.len())
        .flat_map(|p| (0..params.repeats).map(move |r| (p, r)))
        .collect();
    let accuracies: Result<Vec<((usize, usize), f64)>> = rounds
        .par_iter()
        .map(|&(p, r)| {
            let (c, gamma) = grid.pairs[p];
            let seed = round_seed(params.seed, p, r);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (train_idx, test_idx) = stratified_split(labels, params.split, &mut rng);
            let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| samples[i].clone()).collect();
            let train_y: Vec<i8> = train_idx.iter().map(|&i| labels[i]).collect();
            let train_params = TrainParams {
                c,
                gamma,
                tol: params.tol,
                max_passes: params.max_passes,
                seed,
            };
            let model = train_svm_scaled(&train_x, &train_y, &train_params, params.scale_prefix)?;
            let mut correct = 0usize;
            for &i in &test_idx {
                let (label, _) = model.predict(&samples[i])?;
                if label == labels[i] {
                    correct += 1;
                }
            }
            Ok(((p, r), correct as f64 / test_idx.len() as f64))
        })
        .collect();
    let mut accuracies = accuracies?;
    accuracies.sort_by_key(|&(key, _)| key);

    let mut per_pair = Vec::with_capacity(grid.pairs.len());
    for (p, &(c, gamma)) in grid.pairs.iter().enumerate() {
        let accs: Vec<f64> = accuracies
            .iter()
            .filter(|((pp, _), _)| *pp == p)
            .map(|&(_, a)| a)
            .collect();
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        per_pair.push(PairScore {
            c,
            gamma,
            accuracies: accs,
            mean_accuracy: mean,
        });
    }
    let best_index = per_pair
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.mean_accuracy
                .partial_cmp(&b.mean_accuracy)
                .unwrap()
                .then(ib.cmp(ia)) // ties: keep the earliest pair
        })
        .map(|(i, _)| i)
        .expect("grid validated non-empty");
    Ok(EvalReport {
        per_pair,
        best_index,
        train_runs: accuracies.len(),
    })
}
