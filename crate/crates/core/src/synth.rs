//! Deterministic synthetic scenes for tests, demos and model bootstrap.
//!
//! Every generator is a pure function of its parameters and seed. The scenes
//! are built around the detector's stage contracts:
//!
//! * backgrounds are static, textured and gray (candidate stage sees nothing)
//! * the plume is a translucent gray turbulence field translating up 3 px
//!   per frame (passes color + motion, smoke-like texture and dynamics)
//! * the intruder is a saturated red body moving down (color and motion
//!   both reject it)
//! * the rigid mover is gray, sharp-striped and moves up (only the texture
//!   and space-time classifiers can reject it)

use crate::ingest::Frame;

/// Geometry and length shared by all scene generators.
#[derive(Debug, Clone, Copy)]
pub struct SceneParams {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub seed: u64,
}

impl SceneParams {
    pub fn new(width: usize, height: usize, frames: usize, seed: u64) -> Self {
        SceneParams {
            width,
            height,
            frames,
            seed,
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

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Smoothly interpolated lattice noise in [0, 1].
fn value_noise(seed: u64, x: f64, y: f64, cell: f64) -> f64 {
    let gx = x / cell;
    let gy = y / cell;
    let ix = gx.floor();
    let iy = gy.floor();
    let fx = gx - ix;
    let fy = gy - iy;
    let sx = fx * fx * (3.0 - 2.0 * fx);
    let sy = fy * fy * (3.0 - 2.0 * fy);
    let (ix, iy) = (ix as i64, iy as i64);
    let v00 = hash2(seed, ix, iy);
    let v10 = hash2(seed, ix + 1, iy);
    let v01 = hash2(seed, ix, iy + 1);
    let v11 = hash2(seed, ix + 1, iy + 1);
    lerp(lerp(v00, v10, sx), lerp(v01, v11, sx), sy)
}

/// Static gray background: coarse lighting variation plus fine texture so
/// block matching has something to lock onto. Values stay in [89, 167],
/// inside the default color-rule intensity band.
fn background(p: &SceneParams, x: usize, y: usize) -> f64 {
    let coarse = value_noise(p.seed, x as f64, y as f64, 24.0);
    let fine = hash2(p.seed ^ 0xBA5E, x as i64, y as i64);
    95.0 + 60.0 * coarse + 12.0 * (fine - 0.5)
}

fn gray_frame(p: &SceneParams, index: u64, mut value: impl FnMut(usize, usize) -> f64) -> Frame {
    let mut pixels = Vec::with_capacity(3 * p.width * p.height);
    for y in 0..p.height {
        for x in 0..p.width {
            let v = value(x, y).round().clamp(0.0, 255.0) as u8;
            pixels.extend_from_slice(&[v, v, v]);
        }
    }
    Frame::new(p.width, p.height, index, pixels)
}

/// Background only; nothing ever moves.
pub fn static_scene(p: &SceneParams) -> Vec<Frame> {
    (0..p.frames)
        .map(|t| gray_frame(p, t as u64, |x, y| background(p, x, y)))
        .collect()
}

/// Plume opacity at (x, y) for a given age (frames since onset), in [0, 1].
/// The turbulence field is sampled at `y + 3 age`, which translates the
/// pattern upward rigidly at 3 px per frame; the front rises at that speed.
fn plume_alpha(p: &SceneParams, x: usize, y: usize, age: usize, cx: f64, sigma: f64) -> f64 {
    let front = p.height as f64 - 3.0 * age as f64;
    let below_front = y as f64 - front; // positive inside the smoke column
    if below_front < -12.0 {
        return 0.0;
    }
    let edge = ((below_front + 12.0) / 24.0).clamp(0.0, 1.0);
    let dx = (x as f64 - cx) / sigma;
    let envx = (-0.5 * dx * dx).exp();
    let turb = value_noise(p.seed ^ 0x5101, x as f64, y as f64 + 3.0 * age as f64, 7.0);
    0.85 * envx * edge * (0.2 + 0.8 * turb)
}

fn plume_gray(p: &SceneParams, x: usize, y: usize, age: usize) -> f64 {
    let t2 = value_noise(p.seed ^ 0x5102, x as f64, y as f64 + 3.0 * age as f64, 6.0);
    180.0 + 45.0 * t2
}

/// Rising smoke plume over the static background; the smoke column climbs
/// from the bottom edge starting at frame `onset`, centered horizontally.
pub fn plume_scene(p: &SceneParams, onset: usize) -> Vec<Frame> {
    let cx = p.width as f64 / 2.0;
    let sigma = p.width as f64 / 7.0;
    (0..p.frames)
        .map(|t| {
            gray_frame(p, t as u64, |x, y| {
                let bg = background(p, x, y);
                if t < onset {
                    return bg;
                }
                let age = t - onset;
                let alpha = plume_alpha(p, x, y, age, cx, sigma);
                lerp(bg, plume_gray(p, x, y, age), alpha)
            })
        })
        .collect()
}

/// Saturated red rectangle with internal stripes moving straight down,
/// wrapping at the bottom. Fails the smoke color rule and drifts the wrong
/// way, so both candidate and motion stages reject it.
pub fn red_intruder_scene(p: &SceneParams) -> Vec<Frame> {
    let rw = (p.width / 5).max(16);
    let rh = (p.height / 5).max(16);
    let rx = p.width / 2 - rw / 2;
    (0..p.frames)
        .map(|t| {
            let ry = (3 * t) % (p.height - rh);
            let mut pixels = Vec::with_capacity(3 * p.width * p.height);
            for y in 0..p.height {
                for x in 0..p.width {
                    if x >= rx && x < rx + rw && y >= ry && y < ry + rh {
                        // pattern anchored to the rectangle: rigid motion
                        let (lx, ly) = (x - rx, y - ry);
                        let stripe = if (lx / 4 + ly / 4) % 2 == 0 { 60.0 } else { 0.0 };
                        let jitter = 10.0 * (hash2(p.seed ^ 0x6ED, lx as i64, ly as i64) - 0.5);
                        let r = (170.0 + stripe + jitter).clamp(0.0, 255.0) as u8;
                        pixels.extend_from_slice(&[r, 30, 30]);
                    } else {
                        let v = background(p, x, y).round().clamp(0.0, 255.0) as u8;
                        pixels.extend_from_slice(&[v, v, v]);
                    }
                }
            }
            Frame::new(p.width, p.height, t as u64, pixels)
        })
        .collect()
}

/// Gray, sharply striped rectangle moving straight up, wrapping at the top.
/// Passes the color rule and the upward-motion filter; only its texture and
/// dynamics give it away. This is the training counterexample to smoke.
pub fn gray_mover_scene(p: &SceneParams) -> Vec<Frame> {
    let rw = (p.width / 4).max(24);
    let rh = (p.height / 4).max(24);
    let rx = p.width / 2 - rw / 2;
    let span = p.height - rh;
    (0..p.frames)
        .map(|t| {
            let ry = span - (3 * t) % span;
            gray_frame(p, t as u64, |x, y| {
                if x >= rx && x < rx + rw && y >= ry && y < ry + rh {
                    let (lx, ly) = (x - rx, y - ry);
                    let check = if (lx / 4 + ly / 4) % 2 == 0 { 105.0 } else { 175.0 };
                    check + 12.0 * (hash2(p.seed ^ 0x307E5, lx as i64, ly as i64) - 0.5)
                } else {
                    background(p, x, y)
                }
            })
        })
        .collect()
}

/// Smoke-like puff that appears for `burst_len` consecutive frames every
/// `period` frames, rising while visible and vanishing in between. Gaps
/// longer than the history decay exercise the temporal debouncing stage.
pub fn flicker_scene(p: &SceneParams, burst_len: usize, period: usize) -> Vec<Frame> {
    assert!(burst_len >= 1 && period > burst_len);
    let cx = p.width as f64 / 2.0;
    let sigma = p.width as f64 / 7.0;
    (0..p.frames)
        .map(|t| {
            let phase = t % period;
            gray_frame(p, t as u64, |x, y| {
                let bg = background(p, x, y);
                if phase >= burst_len {
                    return bg;
                }
                // render the puff as a young plume several frames tall so
                // the whole burst shows solid smoke texture
                let age = 8 + phase;
                let alpha = plume_alpha(p, x, y, age, cx, sigma);
                lerp(bg, plume_gray(p, x, y, age), alpha)
            })
        })
        .collect()
}
