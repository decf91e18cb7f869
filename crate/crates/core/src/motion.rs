//! Stage 2: accumulative motion orientation.
//!
//! Each candidate block gets a direction code per frame via 8-direction
//! block matching, codes accumulate in a per-block sliding window, and the
//! upward-motion ratio of the windowed histogram gates the block.
//!
//! Direction codes 1..8 stand for 0°, 45°, 90°, ..., 315° counterclockwise
//! with 0° pointing right; upward (decreasing row) means codes 2, 3, 4.
//! Code 0 means "no motion" and never enters a histogram.

use std::collections::VecDeque;

use crate::candidate::BlockMask;
use crate::error::{Error, Result};
use crate::ingest::{BlockGrid, BlockRef, GrayFrame};

/// Unit displacement (dx, dy) per direction code 1..8. Image y grows
/// downward, so 90° (code 3) is dy = -1.
const DIRECTIONS: [(isize, isize); 8] = [
    (1, 0),   // 1: 0°
    (1, -1),  // 2: 45°
    (0, -1),  // 3: 90°
    (-1, -1), // 4: 135°
    (-1, 0),  // 5: 180°
    (-1, 1),  // 6: 225°
    (0, 1),   // 7: 270°
    (1, 1),   // 8: 315°
];

pub const DEFAULT_DISPLACEMENT: usize = 3;
pub const DEFAULT_WINDOW: usize = 15;
pub const DEFAULT_T_U: f64 = 0.55;

/// Counts of direction codes 1..8 inside the sliding window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MotionHistogram {
    /// `bins[0]` is code 1 (0°) through `bins[7]` = code 8 (315°).
    pub bins: [u32; 8],
}

impl MotionHistogram {
    pub fn total(&self) -> u32 {
        self.bins.iter().sum()
    }

    fn add(&mut self, code: u8) {
        if code >= 1 {
            self.bins[usize::from(code) - 1] += 1;
        }
    }

    fn remove(&mut self, code: u8) {
        if code >= 1 {
            self.bins[usize::from(code) - 1] -= 1;
        }
    }
}

/// Upward-motion ratio: share of window votes pointing up (codes 2, 3, 4).
/// `None` when the histogram is empty.
pub fn umr(h: &MotionHistogram) -> Option<f64> {
    let total = h.total();
    if total == 0 {
        return None;
    }
    let up = h.bins[1] + h.bins[2] + h.bins[3];
    Some(f64::from(up) / f64::from(total))
}

/// Per-block direction code for the step from `prev` to `cur`.
///
/// Shifts the block window in `prev` by `displacement` pixels along each of
/// the 8 directions and compares SAD against `cur`'s block. Returns the
/// lowest code achieving a SAD strictly below the zero-shift SAD, or 0 when
/// nothing beats staying put. Directions whose shifted window leaves the
/// frame are skipped.
pub fn block_direction(
    prev: &GrayFrame,
    cur: &GrayFrame,
    at: BlockRef,
    grid: &BlockGrid,
    displacement: usize,
) -> Result<u8> {
    grid.check(at)?;
    if prev.width != cur.width || prev.height != cur.height {
        return Err(Error::ShapeMismatch {
            expected_rows: prev.height,
            expected_cols: prev.width,
            rows: cur.height,
            cols: cur.width,
        });
    }
    let (x0, y0) = grid.block_origin(at);
    let cur_block = cur.block(grid, at)?;
    let d = displacement as isize;

    let sad_at = |sx: isize, sy: isize| -> u64 {
        let mut sum = 0u64;
        for y in 0..grid.block_height {
            let py = (y0 as isize + y as isize + sy) as usize;
            let row_off = py * prev.width;
            let cur_row = cur_block.row(y);
            for x in 0..grid.block_width {
                let px = (x0 as isize + x as isize + sx) as usize;
                sum += u64::from(prev.pixels[row_off + px].abs_diff(cur_row[x]));
            }
        }
        sum
    };

    let zero_sad = sad_at(0, 0);
    let mut best: Option<(u64, u8)> = None;
    for (i, (dx, dy)) in DIRECTIONS.iter().enumerate() {
        // Content moving along (dx, dy) appears in prev shifted back by it.
        let sx = -dx * d;
        let sy = -dy * d;
        let left = x0 as isize + sx;
        let top = y0 as isize + sy;
        if left < 0
            || top < 0
            || left + grid.block_width as isize > prev.width as isize
            || top + grid.block_height as isize > prev.height as isize
        {
            continue;
        }
        let sad = sad_at(sx, sy);
        let code = (i + 1) as u8;
        match best {
            Some((best_sad, _)) if sad >= best_sad => {}
            _ => best = Some((sad, code)),
        }
    }
    match best {
        Some((sad, code)) if sad < zero_sad => Ok(code),
        _ => Ok(0),
    }
}

/// Direction codes for every grid block in one frame step.
pub fn direction_field(
    prev: &GrayFrame,
    cur: &GrayFrame,
    grid: &BlockGrid,
    displacement: usize,
) -> Result<Vec<u8>> {
    let mut codes = Vec::with_capacity(grid.len());
    for at in grid.iter() {
        codes.push(block_direction(prev, cur, at, grid, displacement)?);
    }
    Ok(codes)
}

/// Sliding-window accumulator of per-block direction codes.
#[derive(Debug, Clone)]
pub struct AmoState {
    rows: usize,
    cols: usize,
    window: usize,
    /// Oldest frame first; each entry is a full grid of codes.
    frames: VecDeque<Vec<u8>>,
    /// Incrementally maintained histogram per block.
    hists: Vec<MotionHistogram>,
}

impl AmoState {
    pub fn new(grid: &BlockGrid, window: usize) -> Result<Self> {
        if window < 1 {
            return Err(Error::InvalidConfig("motion window must be >= 1".into()));
        }
        Ok(AmoState {
            rows: grid.rows,
            cols: grid.cols,
            window,
            frames: VecDeque::with_capacity(window + 1),
            hists: vec![MotionHistogram::default(); grid.len()],
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Frames currently inside the window.
    pub fn frames_accumulated(&self) -> usize {
        self.frames.len()
    }

    /// Pushes one frame's codes, evicting the oldest frame beyond the window.
    pub fn accumulate(&mut self, codes: Vec<u8>) -> Result<()> {
        if codes.len() != self.rows * self.cols {
            return Err(Error::ShapeMismatch {
                expected_rows: self.rows,
                expected_cols: self.cols,
                rows: codes.len() / self.cols.max(1),
                cols: self.cols,
            });
        }
        for (hist, &code) in self.hists.iter_mut().zip(&codes) {
            debug_assert!(code <= 8, "direction code out of range");
            hist.add(code);
        }
        self.frames.push_back(codes);
        if self.frames.len() > self.window {
            let old = self.frames.pop_front().expect("non-empty after push");
            for (hist, &code) in self.hists.iter_mut().zip(&old) {
                hist.remove(code);
            }
        }
        Ok(())
    }

    pub fn histogram(&self, at: BlockRef) -> MotionHistogram {
        self.hists[at.row * self.cols + at.col]
    }

    pub fn block_umr(&self, at: BlockRef) -> Option<f64> {
        umr(&self.histogram(at))
    }
}

/// Keeps candidates whose UMR is defined and at least `t_u`.
pub fn filter_by_umr(mask: &BlockMask, state: &AmoState, t_u: f64) -> BlockMask {
    let mut out = BlockMask::new(mask.rows, mask.cols);
    for at in mask.iter_set() {
        if let Some(r) = state.block_umr(at) {
            if r >= t_u {
                out.set(at, true);
            }
        }
    }
    out
}
