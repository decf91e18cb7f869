//! Stage 5: smoke history image.
//!
//! Each block keeps a recency counter in [0, T]. A frame's raw detection
//! only becomes a final alarm when the block's counter already meets the
//! threshold TH, i.e. the block was detected recently; the counter is then
//! refreshed (detection) or decays by one (no detection), after the
//! decision. From a cold start the 2nd consecutive detection is the first
//! possible alarm.

use crate::candidate::BlockMask;
use crate::error::{Error, Result};
use crate::ingest::BlockGrid;

pub const DEFAULT_T_MAX: u32 = 15;
pub const DEFAULT_THRESHOLD: u32 = 10;

/// Per-block recency counters plus the (T, TH) configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiMap {
    pub rows: usize,
    pub cols: usize,
    /// Max counter value T.
    pub t_max: u32,
    /// Alarm threshold TH.
    pub threshold: u32,
    counters: Vec<u32>,
}

impl ShiMap {
    /// Fresh map with all counters at 0 (first detections are suppressed).
    pub fn new(grid: &BlockGrid, t_max: u32, threshold: u32) -> Result<Self> {
        if threshold == 0 || threshold > t_max {
            return Err(Error::InvalidConfig(format!(
                "history threshold must satisfy 0 < TH <= T, got TH={threshold}, T={t_max}"
            )));
        }
        Ok(ShiMap {
            rows: grid.rows,
            cols: grid.cols,
            t_max,
            threshold,
            counters: vec![0; grid.len()],
        })
    }

    #[inline]
    pub fn counter(&self, row: usize, col: usize) -> u32 {
        self.counters[row * self.cols + col]
    }

    pub fn counters(&self) -> &[u32] {
        &self.counters
    }

    /// Counters rescaled to [0, 255] for visual dumps.
    pub fn to_gray(&self) -> Vec<u8> {
        self.counters
            .iter()
            .map(|&c| ((c * 255) / self.t_max) as u8)
            .collect()
    }

    fn check_shape(&self, det: &BlockMask) -> Result<()> {
        if det.rows != self.rows || det.cols != self.cols {
            return Err(Error::ShapeMismatch {
                expected_rows: self.rows,
                expected_cols: self.cols,
                rows: det.rows,
                cols: det.cols,
            });
        }
        Ok(())
    }
}

/// Applies one frame's raw detections: the returned mask holds the final
/// alarms (detection AND pre-update counter >= TH), then counters update
/// in place (refresh to T on detection, else decrement with a floor of 0).
pub fn decide_and_update(shi: &mut ShiMap, det: &BlockMask) -> Result<BlockMask> {
    shi.check_shape(det)?;
    let mut finals = BlockMask::new(shi.rows, shi.cols);
    for row in 0..shi.rows {
        for col in 0..shi.cols {
            let i = row * shi.cols + col;
            let detected = det.get(crate::ingest::BlockRef::new(row, col));
            if detected && shi.counters[i] >= shi.threshold {
                finals.set(crate::ingest::BlockRef::new(row, col), true);
            }
            shi.counters[i] = if detected {
                shi.t_max
            } else {
                shi.counters[i].saturating_sub(1)
            };
        }
    }
    Ok(finals)
}
