//! Shared helpers for integration tests: a dense QP reference solver for
//! the SVM dual and deterministic texture/noise generators.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Reference solution of the soft-margin SVM dual, found by projected
/// gradient ascent. Slow and simple on purpose: it shares no code with the
/// solver under test.
pub struct QpModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
}

/// Euclidean projection of `v` onto `{0 <= a <= c, sum y_i a_i = 0}`.
/// With `a_i(l) = clamp(v_i - l y_i, 0, c)` the constraint sum is
/// non-increasing in `l`, so bisection finds the multiplier.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let constraint = |l: f64| -> f64 {
        v.iter()
            .zip(y)
            .map(|(&vi, &yi)| yi * (vi - l * yi).clamp(0.0, c))
            .sum()
    };
    let m = v.iter().fold(0.0f64, |acc, &b| acc.max(b.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-m, m);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if constraint(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let l = 0.5 * (lo + hi);
    v.iter()
        .zip(y)
        .map(|(&vi, &yi)| (vi - l * yi).clamp(0.0, c))
        .collect()
}

/// Bias from the box conditions: interior points give equalities, bound
/// points give one-sided bounds; fall back to the feasible interval middle.
fn solve_bias(alpha: &[f64], y: &[f64], k: &[Vec<f64>], c: f64) -> f64 {
    let n = alpha.len();
    let eps = 1e-6 * c;
    let mut equalities = Vec::new();
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for i in 0..n {
        let e: f64 = (0..n).map(|j| alpha[j] * y[j] * k[i][j]).sum();
        let t = y[i] - e;
        if alpha[i] > eps && alpha[i] < c - eps {
            equalities.push(t);
        } else if alpha[i] <= eps {
            if y[i] > 0.0 {
                lower = lower.max(t);
            } else {
                upper = upper.min(t);
            }
        } else if y[i] > 0.0 {
            upper = upper.min(t);
        } else {
            lower = lower.max(t);
        }
    }
    if !equalities.is_empty() {
        equalities.iter().sum::<f64>() / equalities.len() as f64
    } else if lower.is_finite() && upper.is_finite() {
        0.5 * (lower + upper)
    } else if lower.is_finite() {
        lower
    } else if upper.is_finite() {
        upper
    } else {
        0.0
    }
}

pub fn solve_qp(samples: &[Vec<f64>], labels: &[i8], c: f64, gamma: f64) -> QpModel {
    let n = samples.len();
    let y: Vec<f64> = labels.iter().map(|&v| f64::from(v)).collect();
    let mut k = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            k[i][j] = rbf(gamma, &samples[i], &samples[j]);
        }
    }
    // row-sum bound on the spectral radius of Q (|Q_ij| = K_ij)
    let lipschitz = (0..n)
        .map(|i| k[i].iter().sum::<f64>())
        .fold(1e-12f64, f64::max);
    let step = 1.0 / lipschitz;

    let mut alpha = vec![0.0f64; n];
    for _ in 0..20_000 {
        let mut next = vec![0.0f64; n];
        for i in 0..n {
            let qa: f64 = (0..n).map(|j| y[i] * y[j] * k[i][j] * alpha[j]).sum();
            next[i] = alpha[i] + step * (1.0 - qa);
        }
        alpha = project(&next, &y, c);
    }
    let bias = solve_bias(&alpha, &y, &k, c);
    QpModel {
        alphas: alpha,
        bias,
        gamma,
    }
}

pub fn qp_decision(model: &QpModel, samples: &[Vec<f64>], labels: &[i8], x: &[f64]) -> f64 {
    model
        .alphas
        .iter()
        .zip(samples)
        .zip(labels)
        .map(|((&a, s), &y)| a * f64::from(y) * rbf(model.gamma, s, x))
        .sum::<f64>()
        + model.bias
}

/// Random 2-D dataset with both classes present, labeled by either a random
/// halfplane or a random disc.
pub fn random_dataset(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<i8>) {
    loop {
        let n = rng.gen_range(4..=20);
        let samples: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
            .collect();
        let labels: Vec<i8> = if rng.gen_bool(0.5) {
            let w = [rng.gen_range(-1.0..1.0f64), rng.gen_range(-1.0..1.0f64)];
            let b = rng.gen_range(-0.5..0.5);
            samples
                .iter()
                .map(|s| if w[0] * s[0] + w[1] * s[1] + b >= 0.0 { 1 } else { -1 })
                .collect()
        } else {
            let r2 = rng.gen_range(1.0..4.0);
            samples
                .iter()
                .map(|s| if s[0] * s[0] + s[1] * s[1] <= r2 { 1 } else { -1 })
                .collect()
        };
        let pos = labels.iter().filter(|&&y| y == 1).count();
        if pos >= 2 && labels.len() - pos >= 2 {
            return (samples, labels);
        }
    }
}

fn hash2(seed: u64, ix: i64, iy: i64) -> f64 {
    let mut z = seed
        ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// Deterministic textured gray value at integer coordinates: a bilinear
/// coarse layer plus per-pixel detail, so block matching locks on exactly.
pub fn textured_value(seed: u64, x: i64, y: i64) -> u8 {
    let cell = 16.0;
    let gx = x as f64 / cell;
    let gy = y as f64 / cell;
    let ix = gx.floor() as i64;
    let iy = gy.floor() as i64;
    let fx = gx - gx.floor();
    let fy = gy - gy.floor();
    let v00 = hash2(seed, ix, iy);
    let v10 = hash2(seed, ix + 1, iy);
    let v01 = hash2(seed, ix, iy + 1);
    let v11 = hash2(seed, ix + 1, iy + 1);
    let coarse = v00 + (v10 - v00) * fx + (v01 - v00) * fy + (v11 + v00 - v10 - v01) * fx * fy;
    let fine = hash2(seed ^ 0xF19E, x, y);
    (60.0 + 120.0 * coarse + 30.0 * fine).round().clamp(0.0, 255.0) as u8
}
