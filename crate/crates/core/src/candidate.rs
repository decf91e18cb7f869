//! Stage 1: candidate block extraction.
//!
//! A block is a candidate when it is moving (per-block sum of absolute
//! inter-frame differences above a threshold) and smoke-colored (a large
//! enough fraction of its pixels are near-achromatic with mid intensity).

use crate::error::{Error, Result};
use crate::ingest::{BlockGrid, BlockRef, Frame, GrayFrame};

/// One boolean per grid block, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockMask {
    pub rows: usize,
    pub cols: usize,
    bits: Vec<bool>,
}

impl BlockMask {
    pub fn new(rows: usize, cols: usize) -> Self {
        BlockMask {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: bool) -> Self {
        BlockMask {
            rows,
            cols,
            bits: vec![value; rows * cols],
        }
    }

    pub fn for_grid(grid: &BlockGrid) -> Self {
        Self::new(grid.rows, grid.cols)
    }

    #[inline]
    pub fn get(&self, at: BlockRef) -> bool {
        self.bits[at.row * self.cols + at.col]
    }

    #[inline]
    pub fn set(&mut self, at: BlockRef, value: bool) {
        self.bits[at.row * self.cols + at.col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    /// Set blocks in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = BlockRef> + '_ {
        let cols = self.cols;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| BlockRef::new(i / cols, i % cols))
    }

    fn check_shape(&self, other: &BlockMask) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch {
                expected_rows: self.rows,
                expected_cols: self.cols,
                rows: other.rows,
                cols: other.cols,
            });
        }
        Ok(())
    }

    /// Bitwise AND of equally shaped masks.
    pub fn and(&self, other: &BlockMask) -> Result<BlockMask> {
        self.check_shape(other)?;
        Ok(BlockMask {
            rows: self.rows,
            cols: self.cols,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a && b)
                .collect(),
        })
    }
}

/// Pixel-level smoke color rule plus the per-block vote threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorRuleParams {
    /// Max over the three pairwise channel differences, 8-bit units.
    pub max_channel_spread: u8,
    pub intensity_low: u8,
    pub intensity_high: u8,
    /// Fraction of a block's pixels that must qualify, in [0, 1].
    pub min_fraction: f64,
}

impl Default for ColorRuleParams {
    fn default() -> Self {
        ColorRuleParams {
            max_channel_spread: 20,
            intensity_low: 80,
            intensity_high: 220,
            min_fraction: 0.5,
        }
    }
}

impl ColorRuleParams {
    pub fn validate(&self) -> Result<()> {
        if self.intensity_low >= self.intensity_high {
            return Err(Error::InvalidConfig(format!(
                "intensity range [{}, {}] is empty",
                self.intensity_low, self.intensity_high
            )));
        }
        if !(0.0..=1.0).contains(&self.min_fraction) {
            return Err(Error::InvalidConfig(format!(
                "min_fraction {} outside [0, 1]",
                self.min_fraction
            )));
        }
        Ok(())
    }

    /// Whether one RGB pixel qualifies as smoke-colored.
    #[inline]
    pub fn pixel_qualifies(&self, r: u8, g: u8, b: u8) -> bool {
        let spread = r.abs_diff(g).max(g.abs_diff(b)).max(b.abs_diff(r));
        if spread > self.max_channel_spread {
            return false;
        }
        let intensity = (u32::from(r) + u32::from(g) + u32::from(b)) as f64 / 3.0;
        f64::from(self.intensity_low) <= intensity && intensity <= f64::from(self.intensity_high)
    }
}

/// Default moving-block threshold: an average of 4 gray levels per pixel.
pub fn default_t_b(grid: &BlockGrid) -> u64 {
    4 * grid.block_width as u64 * grid.block_height as u64
}

/// Flags blocks whose sum of absolute inter-frame differences exceeds `t_b`.
pub fn moving_blocks(
    prev: &GrayFrame,
    cur: &GrayFrame,
    grid: &BlockGrid,
    t_b: u64,
) -> Result<BlockMask> {
    if prev.width != cur.width || prev.height != cur.height {
        return Err(Error::ShapeMismatch {
            expected_rows: prev.height,
            expected_cols: prev.width,
            rows: cur.height,
            cols: cur.width,
        });
    }
    let mut mask = BlockMask::for_grid(grid);
    for at in grid.iter() {
        let a = prev.block(grid, at)?;
        let b = cur.block(grid, at)?;
        let mut sum: u64 = 0;
        for y in 0..grid.block_height {
            let ra = a.row(y);
            let rb = b.row(y);
            for x in 0..grid.block_width {
                sum += u64::from(ra[x].abs_diff(rb[x]));
            }
        }
        mask.set(at, sum > t_b);
    }
    Ok(mask)
}

/// Flags blocks where at least `min_fraction` of the pixels pass the
/// per-pixel color rule.
pub fn smoke_colored_blocks(frame: &Frame, grid: &BlockGrid, params: &ColorRuleParams) -> BlockMask {
    let mut mask = BlockMask::for_grid(grid);
    let block_pixels = (grid.block_width * grid.block_height) as f64;
    for at in grid.iter() {
        let (x0, y0) = grid.block_origin(at);
        let mut qualifying = 0usize;
        for y in y0..y0 + grid.block_height {
            for x in x0..x0 + grid.block_width {
                let (r, g, b) = frame.rgb(x, y);
                if params.pixel_qualifies(r, g, b) {
                    qualifying += 1;
                }
            }
        }
        mask.set(at, qualifying as f64 >= params.min_fraction * block_pixels);
    }
    mask
}

/// Candidates are blocks that are both moving and smoke-colored.
pub fn candidate_blocks(moving: &BlockMask, colored: &BlockMask) -> Result<BlockMask> {
    moving.and(colored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::make_grid;

    fn gray(width: usize, height: usize, index: u64, f: impl Fn(usize, usize) -> u8) -> GrayFrame {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        GrayFrame::new(width, height, index, pixels)
    }

    fn rgb(width: usize, height: usize, f: impl Fn(usize, usize) -> (u8, u8, u8)) -> Frame {
        let mut pixels = Vec::with_capacity(3 * width * height);
        for y in 0..height {
            for x in 0..width {
                let (r, g, b) = f(x, y);
                pixels.extend_from_slice(&[r, g, b]);
            }
        }
        Frame::new(width, height, 0, pixels)
    }

    /// Independent per-block difference sum, no view plumbing.
    fn diff_sum_oracle(prev: &GrayFrame, cur: &GrayFrame, grid: &BlockGrid, at: BlockRef) -> u64 {
        let (x0, y0) = grid.block_origin(at);
        let mut sum = 0u64;
        for y in y0..y0 + grid.block_height {
            for x in x0..x0 + grid.block_width {
                sum += u64::from(prev.get(x, y).abs_diff(cur.get(x, y)));
            }
        }
        sum
    }

    #[test]
    fn identical_frames_never_move() {
        let grid = make_grid(96, 64, 32, 32).unwrap();
        let f = gray(96, 64, 0, |x, y| ((x * 31 + y * 17) % 256) as u8);
        let mut g = f.clone();
        g.index = 1;
        let mask = moving_blocks(&f, &g, &grid, 0).unwrap();
        assert_eq!(mask.count(), 0);
    }

    #[test]
    fn single_block_change_matches_direct_sum() {
        let grid = make_grid(96, 64, 32, 32).unwrap();
        let prev = gray(96, 64, 0, |_, _| 100);
        // +10 inside block (row 1, col 2) only
        let cur = gray(96, 64, 1, |x, y| {
            if (32..64).contains(&y) && (64..96).contains(&x) {
                110
            } else {
                100
            }
        });
        let t_b = 5120;
        let changed = BlockRef::new(1, 2);
        assert_eq!(diff_sum_oracle(&prev, &cur, &grid, changed), 10 * 32 * 32);

        let mask = moving_blocks(&prev, &cur, &grid, t_b).unwrap();
        for at in grid.iter() {
            assert_eq!(mask.get(at), at == changed, "block {at:?}");
        }
    }

    #[test]
    fn global_shift_below_threshold_is_quiet() {
        let grid = make_grid(64, 64, 32, 32).unwrap();
        let prev = gray(64, 64, 0, |x, _| (x % 200) as u8);
        let cur = gray(64, 64, 1, |x, _| (x % 200) as u8 + 1);
        // sum per block = 1024, threshold 5120
        let mask = moving_blocks(&prev, &cur, &grid, 32 * 32 * 5).unwrap();
        assert_eq!(mask.count(), 0);
    }

    #[test]
    fn moving_is_symmetric_and_monotone_in_threshold() {
        let grid = make_grid(64, 64, 32, 32).unwrap();
        let a = gray(64, 64, 0, |x, y| ((x * 13 + y * 7) % 251) as u8);
        let b = gray(64, 64, 1, |x, y| ((x * 5 + y * 29) % 241) as u8);

        let fwd = moving_blocks(&a, &b, &grid, 3000).unwrap();
        let rev = moving_blocks(&b, &a, &grid, 3000).unwrap();
        assert_eq!(fwd, rev);

        let loose = moving_blocks(&a, &b, &grid, 100).unwrap();
        let tight = moving_blocks(&a, &b, &grid, 100_000).unwrap();
        for at in grid.iter() {
            assert!(!tight.get(at) || loose.get(at), "raising T_B added {at:?}");
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let grid = make_grid(64, 64, 32, 32).unwrap();
        let a = gray(64, 64, 0, |_, _| 0);
        let b = gray(64, 32, 1, |_, _| 0);
        assert!(matches!(
            moving_blocks(&a, &b, &grid, 10),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn color_rule_fixed_points() {
        let p = ColorRuleParams::default();
        assert!(p.pixel_qualifies(128, 128, 128));
        assert!(!p.pixel_qualifies(255, 0, 0)); // spread 255
        assert!(!p.pixel_qualifies(30, 30, 30)); // too dark
        assert!(!p.pixel_qualifies(240, 240, 240)); // too bright
        assert!(p.pixel_qualifies(100, 110, 120)); // spread 20, intensity 110
        assert!(!p.pixel_qualifies(100, 110, 121)); // spread 21
    }

    #[test]
    fn uniform_gray_sets_all_blocks_and_red_sets_none() {
        let grid = make_grid(64, 64, 32, 32).unwrap();
        let gray_frame = rgb(64, 64, |_, _| (128, 128, 128));
        assert_eq!(
            smoke_colored_blocks(&gray_frame, &grid, &ColorRuleParams::default()).count(),
            grid.len()
        );
        let red = rgb(64, 64, |_, _| (255, 0, 0));
        assert_eq!(
            smoke_colored_blocks(&red, &grid, &ColorRuleParams::default()).count(),
            0
        );
    }

    #[test]
    fn vote_fraction_thresholds_at_exact_count() {
        let grid = make_grid(32, 32, 32, 32).unwrap();
        // Exactly 40% qualifying pixels: first 409 pixels gray, rest red.
        let cutoff_40 = (0.4 * 1024.0) as usize;
        let frame = rgb(32, 32, |x, y| {
            if y * 32 + x < cutoff_40 {
                (128, 128, 128)
            } else {
                (255, 0, 0)
            }
        });
        let p = ColorRuleParams::default();
        assert!(!smoke_colored_blocks(&frame, &grid, &p).any());

        // Exactly 50% must pass the >= vote.
        let frame = rgb(32, 32, |x, y| {
            if y * 32 + x < 512 {
                (128, 128, 128)
            } else {
                (255, 0, 0)
            }
        });
        assert!(smoke_colored_blocks(&frame, &grid, &p).any());

        let stricter = ColorRuleParams {
            min_fraction: 0.51,
            ..p
        };
        assert!(!smoke_colored_blocks(&frame, &grid, &stricter).any());
    }

    #[test]
    fn candidate_and_semantics() {
        let mut m = BlockMask::new(2, 3);
        m.set(BlockRef::new(0, 1), true);
        m.set(BlockRef::new(1, 2), true);

        let all = BlockMask::filled(2, 3, true);
        let none = BlockMask::new(2, 3);

        assert_eq!(candidate_blocks(&m, &all).unwrap(), m);
        assert_eq!(candidate_blocks(&m, &none).unwrap().count(), 0);
        assert_eq!(candidate_blocks(&m, &m).unwrap(), m);

        let mut disjoint = BlockMask::new(2, 3);
        disjoint.set(BlockRef::new(0, 0), true);
        assert_eq!(candidate_blocks(&m, &disjoint).unwrap().count(), 0);

        let wrong = BlockMask::new(3, 2);
        assert!(matches!(
            candidate_blocks(&m, &wrong),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
