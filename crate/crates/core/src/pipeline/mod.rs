//! The full detection pipeline: candidate blocks, motion filtering, texture
//! and space-time classification, and temporal debouncing, wired in order.
//!
//! Stage contracts:
//!
//! * each stage only removes blocks, so per-frame stage counts are
//!   non-increasing left to right
//! * a disabled stage passes its input through unchanged
//! * stages that need history pass blocks through until warm: the motion
//!   filter needs one accumulated frame, the space-time classifier a full
//!   q-frame window
//! * the debouncing stage is stateful across the whole run

use std::collections::VecDeque;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::candidate::{self, BlockMask, ColorRuleParams};
use crate::classify::SvmModel;
use crate::error::{Error, Result};
use crate::ingest::{make_grid, to_grayscale, BlockGrid, BlockRef, Frame, GrayFrame};
use crate::motion::{direction_field, filter_by_umr, AmoState};
use crate::shi::{decide_and_update, ShiMap};
use crate::spacetime::{bifd_cm_len, fused_feature, BlockVolume};
use crate::texture::{classify_texture, hep_histogram, Kernel, Label};

pub mod config;
pub mod events;
pub mod train;

pub use config::{Fusion, PipelineConfig};
pub use events::{
    evaluate, false_alarm_count, first_alarm_frame, read_events_jsonl, write_events_jsonl,
    DetectionEvent, EvalSummary, GroundTruth,
};
pub use train::{
    harvest_features, read_video_manifest, train_from_paths, train_models, ClassHarvest,
    HarvestedFeatures, PartEval, SpacetimeModel, TrainReport, TrainedModels,
    MIN_SAMPLES_PER_CLASS,
};

/// Blocks surviving each stage of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTrace {
    pub candidate: usize,
    pub motion: usize,
    pub texture: usize,
    pub spacetime: usize,
    #[serde(rename = "final")]
    pub alarmed: usize,
}

impl StageTrace {
    fn zero() -> StageTrace {
        StageTrace {
            candidate: 0,
            motion: 0,
            texture: 0,
            spacetime: 0,
            alarmed: 0,
        }
    }

    /// Counts never grow along the stage order.
    pub fn is_monotone(&self) -> bool {
        self.candidate >= self.motion
            && self.motion >= self.texture
            && self.texture >= self.spacetime
            && self.spacetime >= self.alarmed
    }
}

/// Outcome of stepping the detector by one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame: u64,
    /// Alarmed blocks in row-major order.
    pub blocks: Vec<BlockRef>,
    pub trace: StageTrace,
    pub seconds: f64,
}

impl FrameResult {
    pub fn to_event(&self) -> DetectionEvent {
        DetectionEvent {
            frame: self.frame,
            blocks: self.blocks.iter().map(|b| [b.row, b.col]).collect(),
            stages: self.trace,
        }
    }
}

/// Stateful detector over one video stream.
pub struct Detector {
    cfg: PipelineConfig,
    kernel: Kernel,
    top_kernel: Kernel,
    color: ColorRuleParams,
    grid: BlockGrid,
    t_b: u64,
    texture_model: SvmModel,
    spacetime_model: SpacetimeModel,
    amo: AmoState,
    shi: ShiMap,
    /// Last q frames, oldest first; the back entry is the current frame.
    history: VecDeque<GrayFrame>,
    width: usize,
    height: usize,
    next_frame: u64,
}

impl Detector {
    pub fn new(
        cfg: PipelineConfig,
        texture_model: SvmModel,
        spacetime_model: SpacetimeModel,
        width: usize,
        height: usize,
    ) -> Result<Detector> {
        cfg.validate()?;
        let kernel = cfg.texture_kernel()?;
        let top_kernel = cfg.top_kernel()?;
        let grid = make_grid(width, height, cfg.block.width, cfg.block.height)?;
        let t_b = cfg.candidate.t_b.unwrap_or_else(|| candidate::default_t_b(&grid));

        if texture_model.feature_dim != kernel.bin_count() {
            return Err(Error::DimensionMismatch {
                expected: kernel.bin_count(),
                got: texture_model.feature_dim,
            });
        }
        spacetime_model.check_dims(cfg.spacetime.q, top_kernel)?;
        if spacetime_model.fusion() != cfg.spacetime.fusion {
            return Err(Error::ModelFormat(format!(
                "model fusion {:?} does not match configured {:?}",
                spacetime_model.fusion(),
                cfg.spacetime.fusion
            )));
        }

        let amo = AmoState::new(&grid, cfg.motion.w_t)?;
        let shi = ShiMap::new(&grid, cfg.shi.t_max, cfg.shi.threshold)?;
        let q = cfg.spacetime.q;
        let color = cfg.color_params();
        Ok(Detector {
            cfg,
            kernel,
            top_kernel,
            color,
            grid,
            t_b,
            texture_model,
            spacetime_model,
            amo,
            shi,
            history: VecDeque::with_capacity(q + 1),
            width,
            height,
            next_frame: 0,
        })
    }

    pub fn grid(&self) -> &BlockGrid {
        &self.grid
    }

    pub fn shi(&self) -> &ShiMap {
        &self.shi
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Processes one frame and reports surviving blocks per stage. The first
    /// frame only primes the state; nothing can alarm before frame 1.
    pub fn step(&mut self, frame: &Frame) -> Result<FrameResult> {
        let start = Instant::now();
        if frame.width != self.width || frame.height != self.height {
            return Err(Error::ShapeMismatch {
                expected_rows: self.height,
                expected_cols: self.width,
                rows: frame.height,
                cols: frame.width,
            });
        }
        let index = self.next_frame;
        self.next_frame += 1;

        let gray = to_grayscale(frame);
        self.history.push_back(gray);
        if self.history.len() > self.cfg.spacetime.q {
            self.history.pop_front();
        }
        if self.history.len() < 2 {
            return Ok(FrameResult {
                frame: index,
                blocks: Vec::new(),
                trace: StageTrace::zero(),
                seconds: start.elapsed().as_secs_f64(),
            });
        }

        let cur = &self.history[self.history.len() - 1];
        let prev = &self.history[self.history.len() - 2];
        let mut trace = StageTrace::zero();

        // stage 1: moving and smoke-colored blocks
        let moving = candidate::moving_blocks(prev, cur, &self.grid, self.t_b)?;
        let colored = candidate::smoke_colored_blocks(frame, &self.grid, &self.color);
        let cand = candidate::candidate_blocks(&moving, &colored)?;
        trace.candidate = cand.count();

        // stage 2: accumulated upward-motion ratio
        let after_motion = if self.cfg.stages.umr {
            let codes = direction_field(prev, cur, &self.grid, self.cfg.motion.displacement)?;
            self.amo.accumulate(codes)?;
            if self.amo.frames_accumulated() == 0 {
                cand.clone()
            } else {
                filter_by_umr(&cand, &self.amo, self.cfg.motion.t_u)
            }
        } else {
            cand.clone()
        };
        trace.motion = after_motion.count();

        // stage 3: texture classifier on the current frame
        let after_texture = if self.cfg.stages.texture {
            let mut keep = BlockMask::new(self.grid.rows, self.grid.cols);
            for at in after_motion.iter_set() {
                let hist = hep_histogram(&cur.block(&self.grid, at)?, self.kernel)?;
                if classify_texture(&hist, &self.texture_model)? == Label::Smoke {
                    keep.set(at, true);
                }
            }
            keep
        } else {
            after_motion.clone()
        };
        trace.texture = after_texture.count();

        // stage 4: space-time classifier once a full q-frame window exists
        let warm = self.history.len() == self.cfg.spacetime.q;
        let after_spacetime = if self.cfg.stages.spacetime && warm {
            let frames: Vec<&GrayFrame> = self.history.iter().collect();
            let cm_len = bifd_cm_len(self.cfg.spacetime.q);
            let mut keep = BlockMask::new(self.grid.rows, self.grid.cols);
            for at in after_texture.iter_set() {
                let volume = BlockVolume::from_frames(&frames, &self.grid, at)?;
                let fused = fused_feature(&volume, self.top_kernel)?;
                if self.spacetime_model.classify_fused(&fused.values, cm_len)? {
                    keep.set(at, true);
                }
            }
            keep
        } else {
            after_texture.clone()
        };
        trace.spacetime = after_spacetime.count();

        // stage 5: smoke-history debouncing
        let alarmed = if self.cfg.stages.shi {
            decide_and_update(&mut self.shi, &after_spacetime)?
        } else {
            after_spacetime.clone()
        };
        trace.alarmed = alarmed.count();
        debug_assert!(trace.is_monotone(), "stage counts must not grow: {trace:?}");

        Ok(FrameResult {
            frame: index,
            blocks: alarmed.iter_set().collect(),
            trace,
            seconds: start.elapsed().as_secs_f64(),
        })
    }
}

/// Stage counts and wall time of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameMetric {
    pub frame: u64,
    pub trace: StageTrace,
    pub seconds: f64,
}

/// Whole-run statistics with the per-frame breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub frames: u64,
    pub alarm_frames: usize,
    pub first_alarm_frame: Option<u64>,
    pub total_s: f64,
    pub mean_frame_s: f64,
    pub max_frame_s: f64,
    pub per_frame: Vec<FrameMetric>,
}

impl MetricsReport {
    fn from_frames(per_frame: Vec<FrameMetric>, events: &[DetectionEvent]) -> MetricsReport {
        let total_s: f64 = per_frame.iter().map(|m| m.seconds).sum();
        let frames = per_frame.len() as u64;
        MetricsReport {
            frames,
            alarm_frames: events.len(),
            first_alarm_frame: first_alarm_frame(events),
            total_s,
            mean_frame_s: if frames > 0 {
                total_s / frames as f64
            } else {
                0.0
            },
            max_frame_s: per_frame.iter().map(|m| m.seconds).fold(0.0, f64::max),
            per_frame,
        }
    }

    /// One row per frame: `frame,candidate,motion,texture,spacetime,final,seconds`.
    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        let mut emit = || -> std::io::Result<()> {
            writeln!(out, "frame,candidate,motion,texture,spacetime,final,seconds")?;
            for m in &self.per_frame {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{:.6}",
                    m.frame,
                    m.trace.candidate,
                    m.trace.motion,
                    m.trace.texture,
                    m.trace.spacetime,
                    m.trace.alarmed,
                    m.seconds
                )?;
            }
            Ok(())
        };
        emit().map_err(|e| Error::Io {
            path: "<metrics>".into(),
            source: e,
        })
    }
}

/// Runs the detector over a frame stream. A frame alarms when at least
/// `alarm.min_blocks` blocks survive every stage; each alarmed frame yields
/// one event. The observer sees every frame and its result, for dumps.
pub fn run_detection<I>(
    frames: I,
    detector: &mut Detector,
    mut observer: impl FnMut(&Frame, &FrameResult, &ShiMap) -> Result<()>,
) -> Result<(Vec<DetectionEvent>, MetricsReport)>
where
    I: IntoIterator<Item = Result<Frame>>,
{
    let min_blocks = detector.config().alarm.min_blocks;
    let mut events = Vec::new();
    let mut per_frame = Vec::new();
    for frame in frames {
        let frame = frame?;
        let result = detector.step(&frame)?;
        observer(&frame, &result, detector.shi())?;
        if result.blocks.len() >= min_blocks {
            events.push(result.to_event());
        }
        per_frame.push(FrameMetric {
            frame: result.frame,
            trace: result.trace,
            seconds: result.seconds,
        });
    }
    let metrics = MetricsReport::from_frames(per_frame, &events);
    Ok((events, metrics))
}

/// `run_detection` without an observer.
pub fn run_detection_collect<I>(
    frames: I,
    detector: &mut Detector,
) -> Result<(Vec<DetectionEvent>, MetricsReport)>
where
    I: IntoIterator<Item = Result<Frame>>,
{
    run_detection(frames, detector, |_, _, _| Ok(()))
}

/// Copy of the frame with a red border drawn around each listed block.
pub fn annotate_frame(frame: &Frame, grid: &BlockGrid, blocks: &[BlockRef]) -> Frame {
    let mut out = frame.clone();
    let mut paint = |x: usize, y: usize| {
        let i = 3 * (y * out.width + x);
        out.pixels[i] = 255;
        out.pixels[i + 1] = 0;
        out.pixels[i + 2] = 0;
    };
    for &at in blocks {
        let (x0, y0) = grid.block_origin(at);
        let (bw, bh) = (grid.block_width, grid.block_height);
        for t in 0..2usize.min(bh) {
            for x in x0..x0 + bw {
                paint(x, y0 + t);
                paint(x, y0 + bh - 1 - t);
            }
        }
        for t in 0..2usize.min(bw) {
            for y in y0..y0 + bh {
                paint(x0 + t, y);
                paint(x0 + bw - 1 - t, y);
            }
        }
    }
    out
}
