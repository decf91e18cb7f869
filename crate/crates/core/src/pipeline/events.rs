//! Detection event stream (JSONL) and ground-truth span evaluation.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::StageTrace;

/// One alarmed frame: which blocks fired and how many blocks survived each
/// stage. Serialized as one JSON object per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub frame: u64,
    /// `[row, col]` of every alarmed block, row-major order.
    pub blocks: Vec<[usize; 2]>,
    pub stages: StageTrace,
}

pub fn write_events_jsonl(out: &mut dyn Write, events: &[DetectionEvent]) -> Result<()> {
    for event in events {
        let line = serde_json::to_string(event)
            .map_err(|e| Error::ModelFormat(format!("event serialize: {e}")))?;
        writeln!(out, "{line}").map_err(|e| Error::Io {
            path: "<stream>".into(),
            source: e,
        })?;
    }
    Ok(())
}

pub fn read_events_jsonl(path: &Path) -> Result<Vec<DetectionEvent>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event: DetectionEvent = serde_json::from_str(line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            frame: Some(i as u64),
            detail: format!("bad event line: {e}"),
        })?;
        events.push(event);
    }
    Ok(events)
}

/// Known smoke intervals of one video. Spans are inclusive frame ranges;
/// frames outside every span are alarm-free by definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub frames: u64,
    pub spans: Vec<(u64, u64)>,
}

impl GroundTruth {
    /// Parses the span format:
    ///
    /// ```text
    /// frames 300
    /// smoke 100 250
    /// smoke 260 280
    /// ```
    ///
    /// Blank lines and `#` comments are ignored. The `frames` line must come
    /// first; spans are inclusive and must fit inside the video.
    pub fn parse(text: &str) -> Result<GroundTruth> {
        let mut frames: Option<u64> = None;
        let mut spans = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let keyword = tokens.next().unwrap();
            let bad = |detail: String| Error::Format {
                path: "<truth>".into(),
                frame: Some(lineno as u64),
                detail,
            };
            match keyword {
                "frames" => {
                    if frames.is_some() {
                        return Err(bad("duplicate frames line".into()));
                    }
                    let n: u64 = tokens
                        .next()
                        .ok_or_else(|| bad("frames needs a count".into()))?
                        .parse()
                        .map_err(|e| bad(format!("bad frame count: {e}")))?;
                    frames = Some(n);
                }
                "smoke" => {
                    let total =
                        frames.ok_or_else(|| bad("smoke span before frames line".into()))?;
                    let mut field = || -> Result<u64> {
                        tokens
                            .next()
                            .ok_or_else(|| bad("smoke needs start and end".into()))?
                            .parse()
                            .map_err(|e| bad(format!("bad span bound: {e}")))
                    };
                    let start = field()?;
                    let end = field()?;
                    if start > end || end >= total {
                        return Err(Error::SpanOutOfRange {
                            start,
                            end,
                            frames: total,
                        });
                    }
                    spans.push((start, end));
                }
                other => return Err(bad(format!("unknown keyword {other:?}"))),
            }
            if tokens.next().is_some() {
                return Err(Error::Format {
                    path: "<truth>".into(),
                    frame: Some(lineno as u64),
                    detail: "trailing tokens".into(),
                });
            }
        }
        let frames = frames.ok_or_else(|| Error::Format {
            path: "<truth>".into(),
            frame: None,
            detail: "missing frames line".into(),
        })?;
        Ok(GroundTruth { frames, spans })
    }

    pub fn load(path: &Path) -> Result<GroundTruth> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        GroundTruth::parse(&text)
    }

    /// Video known to contain no smoke at all.
    pub fn all_clear(frames: u64) -> GroundTruth {
        GroundTruth {
            frames,
            spans: Vec::new(),
        }
    }

    pub fn is_smoke(&self, frame: u64) -> bool {
        self.spans.iter().any(|&(s, e)| s <= frame && frame <= e)
    }
}

/// Frame of the earliest event, if any.
pub fn first_alarm_frame(events: &[DetectionEvent]) -> Option<u64> {
    events.iter().map(|e| e.frame).min()
}

/// Alarmed frames that fall outside every smoke span. An event beyond the
/// video length is a contract violation, not a false alarm.
pub fn false_alarm_count(events: &[DetectionEvent], truth: &GroundTruth) -> Result<usize> {
    let mut count = 0;
    for event in events {
        if event.frame >= truth.frames {
            return Err(Error::EventOutOfRange {
                frame: event.frame,
                frames: truth.frames,
            });
        }
        if !truth.is_smoke(event.frame) {
            count += 1;
        }
    }
    Ok(count)
}

/// Event stream scored against ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalSummary {
    pub frames: u64,
    pub alarm_frames: usize,
    /// Alarms inside smoke spans.
    pub hits: usize,
    pub false_alarms: usize,
    pub first_alarm: Option<u64>,
    /// Earliest alarm inside a smoke span.
    pub first_hit: Option<u64>,
}

pub fn evaluate(events: &[DetectionEvent], truth: &GroundTruth) -> Result<EvalSummary> {
    let false_alarms = false_alarm_count(events, truth)?;
    let hits = events.len() - false_alarms;
    Ok(EvalSummary {
        frames: truth.frames,
        alarm_frames: events.len(),
        hits,
        false_alarms,
        first_alarm: first_alarm_frame(events),
        first_hit: events
            .iter()
            .filter(|e| truth.is_smoke(e.frame))
            .map(|e| e.frame)
            .min(),
    })
}
