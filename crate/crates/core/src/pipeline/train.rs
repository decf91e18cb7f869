//! Model bootstrap: harvest per-block features from labeled videos, pick
//! SVM parameters by the split-repeat protocol, then train on everything.
//!
//! Harvesting mirrors the detector's first stage only: every moving,
//! smoke-colored block contributes one texture histogram and one space-time
//! vector once a full q-frame window exists. The later stages are exactly
//! what the models are being trained to replace.

use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::candidate;
use crate::classify::{cross_eval, train_svm_scaled, EvalReport, SvmModel, TrainParams};
use crate::error::{Error, Result};
use crate::ingest::{load_sequence, make_grid, to_grayscale, BlockGrid, Frame, GrayFrame};
use crate::pipeline::config::{Fusion, PipelineConfig};
use crate::spacetime::{bifd_cm_len, fused_feature, BlockVolume};
use crate::texture::hep_histogram;

/// Fewest usable samples per class; below this no meaningful split exists.
pub const MIN_SAMPLES_PER_CLASS: usize = 10;

const SPACETIME_FORMAT_TAG: &str = "smokedet-spacetime/1";

/// Space-time classifier: one SVM over the fused vector, or one SVM per
/// part with detections required from both.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "fusion", rename_all = "snake_case")]
pub enum SpacetimeModel {
    Concat { model: SvmModel },
    AndOfTwo { cm: SvmModel, top: SvmModel },
}

#[derive(Serialize, Deserialize)]
struct SpacetimeFile {
    format: String,
    #[serde(flatten)]
    model: SpacetimeModel,
}

impl SpacetimeModel {
    pub fn fusion(&self) -> Fusion {
        match self {
            SpacetimeModel::Concat { .. } => Fusion::Concat,
            SpacetimeModel::AndOfTwo { .. } => Fusion::AndOfTwo,
        }
    }

    /// Verifies the stored dimensions against window depth and plane kernel.
    pub fn check_dims(&self, q: usize, top_kernel: crate::texture::Kernel) -> Result<()> {
        let cm_len = bifd_cm_len(q);
        let top_len = 3 * top_kernel.bin_count();
        let expect = |expected: usize, got: usize| -> Result<()> {
            if expected != got {
                return Err(Error::DimensionMismatch { expected, got });
            }
            Ok(())
        };
        match self {
            SpacetimeModel::Concat { model } => {
                expect(cm_len + top_len, model.feature_dim)
            }
            SpacetimeModel::AndOfTwo { cm, top } => {
                expect(cm_len, cm.feature_dim)?;
                expect(top_len, top.feature_dim)
            }
        }
    }

    /// Classifies a fused vector whose first `cm_len` entries are the moment
    /// part. Smoke requires agreement of both parts under `AndOfTwo`.
    pub fn classify_fused(&self, fused: &[f64], cm_len: usize) -> Result<bool> {
        match self {
            SpacetimeModel::Concat { model } => Ok(model.decision(fused)? >= 0.0),
            SpacetimeModel::AndOfTwo { cm, top } => {
                if fused.len() < cm_len {
                    return Err(Error::DimensionMismatch {
                        expected: cm_len,
                        got: fused.len(),
                    });
                }
                Ok(cm.decision(&fused[..cm_len])? >= 0.0
                    && top.decision(&fused[cm_len..])? >= 0.0)
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = SpacetimeFile {
            format: SPACETIME_FORMAT_TAG.to_string(),
            model: self.clone(),
        };
        let text = serde_json::to_string_pretty(&file)
            .map_err(|e| Error::ModelFormat(format!("serialize: {e}")))?;
        fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<SpacetimeModel> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let file: SpacetimeFile = serde_json::from_str(&text)
            .map_err(|e| Error::ModelFormat(format!("{}: {e}", path.display())))?;
        if file.format != SPACETIME_FORMAT_TAG {
            return Err(Error::ModelFormat(format!(
                "{}: unknown format tag {:?}, expected {SPACETIME_FORMAT_TAG:?}",
                path.display(),
                file.format
            )));
        }
        Ok(file.model)
    }
}

/// Paired per-block features harvested from one video. `texture[i]` and
/// `fused[i]` describe the same block of the same frame.
#[derive(Debug, Clone, Default)]
pub struct HarvestedFeatures {
    pub texture: Vec<Vec<f64>>,
    pub fused: Vec<Vec<f64>>,
    /// Frames that contributed at least one sample.
    pub frames_used: usize,
    pub frames_total: usize,
}

/// Runs candidate extraction over a stream and collects features from every
/// candidate block once the q-frame window is full.
pub fn harvest_features<I>(frames: I, cfg: &PipelineConfig) -> Result<HarvestedFeatures>
where
    I: IntoIterator<Item = Result<Frame>>,
{
    cfg.validate()?;
    let kernel = cfg.texture_kernel()?;
    let top_kernel = cfg.top_kernel()?;
    let color = cfg.color_params();
    let q = cfg.spacetime.q;

    let mut out = HarvestedFeatures::default();
    let mut grid: Option<BlockGrid> = None;
    let mut t_b = 0u64;
    let mut history: VecDeque<GrayFrame> = VecDeque::with_capacity(q + 1);

    for frame in frames {
        let frame = frame?;
        out.frames_total += 1;
        let grid = match &grid {
            Some(g) => g,
            None => {
                let g = make_grid(frame.width, frame.height, cfg.block.width, cfg.block.height)?;
                t_b = cfg.candidate.t_b.unwrap_or_else(|| candidate::default_t_b(&g));
                grid.insert(g)
            }
        };
        history.push_back(to_grayscale(&frame));
        if history.len() > q {
            history.pop_front();
        }
        if history.len() < q {
            continue;
        }
        let cur = &history[history.len() - 1];
        let prev = &history[history.len() - 2];
        let moving = candidate::moving_blocks(prev, cur, grid, t_b)?;
        let colored = candidate::smoke_colored_blocks(&frame, grid, &color);
        let cand = candidate::candidate_blocks(&moving, &colored)?;
        if !cand.any() {
            continue;
        }
        let window: Vec<&GrayFrame> = history.iter().collect();
        for at in cand.iter_set() {
            let hist = hep_histogram(&cur.block(grid, at)?, kernel)?;
            let volume = BlockVolume::from_frames(&window, grid, at)?;
            let feature = fused_feature(&volume, top_kernel)?;
            out.texture.push(hist.bins);
            out.fused.push(feature.values);
        }
        out.frames_used += 1;
    }
    Ok(out)
}

/// One class's harvest statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassHarvest {
    pub videos: usize,
    pub frames_total: usize,
    pub frames_used: usize,
    pub harvested: usize,
    /// Samples remaining after the per-class cap.
    pub kept: usize,
}

/// Parameter-selection detail for one trained classifier part.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartEval {
    pub part: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub smoke: ClassHarvest,
    pub nonsmoke: ClassHarvest,
    pub texture: EvalReport,
    pub spacetime: Vec<PartEval>,
}

pub struct TrainedModels {
    pub texture: SvmModel,
    pub spacetime: SpacetimeModel,
    pub report: TrainReport,
}

impl TrainedModels {
    /// Writes `texture.json`, `spacetime.json` and `report.json` into `dir`.
    pub fn save_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        self.texture.save(&dir.join("texture.json"))?;
        self.spacetime.save(&dir.join("spacetime.json"))?;
        let text = serde_json::to_string_pretty(&self.report)
            .map_err(|e| Error::ModelFormat(format!("serialize report: {e}")))?;
        let path = dir.join("report.json");
        fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
    }
}

/// Deterministic even-spaced subsample of `0..n`, at most `cap` indices.
fn subsample_even(n: usize, cap: usize) -> Vec<usize> {
    if n <= cap {
        (0..n).collect()
    } else {
        (0..cap).map(|i| i * n / cap).collect()
    }
}

struct ClassSamples {
    stats: ClassHarvest,
    texture: Vec<Vec<f64>>,
    fused: Vec<Vec<f64>>,
}

fn gather_class(harvests: &[HarvestedFeatures], cap: usize, class: &str) -> Result<ClassSamples> {
    let mut texture = Vec::new();
    let mut fused = Vec::new();
    let mut stats = ClassHarvest {
        videos: harvests.len(),
        frames_total: 0,
        frames_used: 0,
        harvested: 0,
        kept: 0,
    };
    for h in harvests {
        debug_assert_eq!(h.texture.len(), h.fused.len(), "pairing broken");
        stats.frames_total += h.frames_total;
        stats.frames_used += h.frames_used;
        texture.extend(h.texture.iter().cloned());
        fused.extend(h.fused.iter().cloned());
    }
    stats.harvested = texture.len();
    let keep = subsample_even(texture.len(), cap);
    stats.kept = keep.len();
    if stats.kept < MIN_SAMPLES_PER_CLASS {
        return Err(Error::InsufficientData {
            class: class.to_string(),
            got: stats.kept,
            min: MIN_SAMPLES_PER_CLASS,
        });
    }
    Ok(ClassSamples {
        stats,
        texture: keep.iter().map(|&i| texture[i].clone()).collect(),
        fused: keep.iter().map(|&i| fused[i].clone()).collect(),
    })
}

/// Parameter selection followed by a final fit on all samples.
fn fit_classifier(
    samples: &[Vec<f64>],
    labels: &[i8],
    cfg: &PipelineConfig,
    scale_prefix: Option<usize>,
) -> Result<(EvalReport, SvmModel)> {
    let grid = cfg.param_grid();
    let report = cross_eval(samples, labels, &grid, &cfg.cross_eval_params(scale_prefix))?;
    let best = report.best();
    let params = TrainParams {
        c: best.c,
        gamma: best.gamma,
        tol: cfg.svm.tol,
        max_passes: cfg.svm.max_passes,
        seed: cfg.svm.seed,
    };
    let model = train_svm_scaled(samples, labels, &params, scale_prefix)?;
    Ok((report, model))
}

/// Trains the texture and space-time classifiers from per-video harvests.
pub fn train_models(
    smoke: &[HarvestedFeatures],
    nonsmoke: &[HarvestedFeatures],
    cfg: &PipelineConfig,
) -> Result<TrainedModels> {
    cfg.validate()?;
    let cap = cfg.svm.max_samples_per_class;
    let pos = gather_class(smoke, cap, "smoke")?;
    let neg = gather_class(nonsmoke, cap, "non-smoke")?;

    let mut labels: Vec<i8> = vec![1; pos.stats.kept];
    labels.extend(std::iter::repeat(-1).take(neg.stats.kept));

    let texture_samples: Vec<Vec<f64>> =
        pos.texture.iter().chain(&neg.texture).cloned().collect();
    let (texture_report, texture_model) = fit_classifier(&texture_samples, &labels, cfg, None)?;

    let fused_samples: Vec<Vec<f64>> = pos.fused.iter().chain(&neg.fused).cloned().collect();
    let cm_len = bifd_cm_len(cfg.spacetime.q);
    let (spacetime_evals, spacetime_model) = match cfg.spacetime.fusion {
        Fusion::Concat => {
            let (report, model) = fit_classifier(&fused_samples, &labels, cfg, Some(cm_len))?;
            (
                vec![PartEval {
                    part: "concat".into(),
                    report,
                }],
                SpacetimeModel::Concat { model },
            )
        }
        Fusion::AndOfTwo => {
            let cm_samples: Vec<Vec<f64>> = fused_samples
                .iter()
                .map(|v| v[..cm_len].to_vec())
                .collect();
            let top_samples: Vec<Vec<f64>> = fused_samples
                .iter()
                .map(|v| v[cm_len..].to_vec())
                .collect();
            let (cm_report, cm) = fit_classifier(&cm_samples, &labels, cfg, Some(cm_len))?;
            let (top_report, top) = fit_classifier(&top_samples, &labels, cfg, None)?;
            (
                vec![
                    PartEval {
                        part: "cm".into(),
                        report: cm_report,
                    },
                    PartEval {
                        part: "top".into(),
                        report: top_report,
                    },
                ],
                SpacetimeModel::AndOfTwo { cm, top },
            )
        }
    };

    Ok(TrainedModels {
        texture: texture_model,
        spacetime: spacetime_model,
        report: TrainReport {
            smoke: pos.stats,
            nonsmoke: neg.stats,
            texture: texture_report,
            spacetime: spacetime_evals,
        },
    })
}

/// Video paths listed one per line; blanks and `#` comments are skipped.
/// Relative paths resolve against the manifest's directory.
pub fn read_video_manifest(path: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut videos = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let p = PathBuf::from(line);
        videos.push(if p.is_absolute() { p } else { base.join(p) });
    }
    if videos.is_empty() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            frame: None,
            detail: "manifest lists no videos".into(),
        });
    }
    Ok(videos)
}

/// Harvests every listed video and trains both classifiers.
pub fn train_from_paths(
    smoke: &[PathBuf],
    nonsmoke: &[PathBuf],
    cfg: &PipelineConfig,
) -> Result<TrainedModels> {
    let harvest_all = |paths: &[PathBuf]| -> Result<Vec<HarvestedFeatures>> {
        paths
            .iter()
            .map(|p| harvest_features(load_sequence(p)?, cfg))
            .collect()
    };
    let pos = harvest_all(smoke)?;
    let neg = harvest_all(nonsmoke)?;
    train_models(&pos, &neg, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gray_mover_scene, plume_scene, static_scene, SceneParams};

    fn ok_frames(frames: &[Frame]) -> impl Iterator<Item = Result<Frame>> + '_ {
        frames.iter().cloned().map(Ok)
    }

    fn tiny_cfg() -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        cfg.svm.pairs = vec![[2.0, 100.0], [0.5, 1000.0]];
        cfg.svm.repeats = 2;
        cfg.svm.max_samples_per_class = 60;
        cfg
    }

    #[test]
    fn subsampling_is_even_and_capped() {
        assert_eq!(subsample_even(5, 10), vec![0, 1, 2, 3, 4]);
        assert_eq!(subsample_even(10, 5), vec![0, 2, 4, 6, 8]);
        assert_eq!(subsample_even(7, 3), vec![0, 2, 4]);
        let idx = subsample_even(1000, 600);
        assert_eq!(idx.len(), 600);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert!(*idx.last().unwrap() < 1000);
    }

    #[test]
    fn harvest_pairs_texture_and_spacetime_samples() {
        let p = SceneParams::new(128, 96, 24, 17);
        let cfg = PipelineConfig::default();
        let h = harvest_features(ok_frames(&gray_mover_scene(&p)), &cfg).unwrap();
        assert!(h.texture.len() >= 10, "harvested {}", h.texture.len());
        assert_eq!(h.texture.len(), h.fused.len());
        assert_eq!(h.frames_total, 24);
        assert!(h.frames_used > 0 && h.frames_used <= 24 - 4);
        for t in &h.texture {
            assert_eq!(t.len(), 255);
            assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        for f in &h.fused {
            assert_eq!(f.len(), 12 + 48);
        }

        let again = harvest_features(ok_frames(&gray_mover_scene(&p)), &cfg).unwrap();
        assert_eq!(h.texture, again.texture, "harvest must be deterministic");
        assert_eq!(h.fused, again.fused);
    }

    #[test]
    fn harvest_of_static_video_is_empty_and_fails_training() {
        let p = SceneParams::new(128, 96, 16, 3);
        let cfg = tiny_cfg();
        let empty = harvest_features(ok_frames(&static_scene(&p)), &cfg).unwrap();
        assert_eq!(empty.texture.len(), 0);

        let smoke_scene = plume_scene(&SceneParams { frames: 26, ..p }, 2);
        let smoke = harvest_features(ok_frames(&smoke_scene), &cfg).unwrap();
        assert!(smoke.texture.len() >= 10, "harvested {}", smoke.texture.len());
        let err = train_models(&[smoke], &[empty], &cfg);
        assert!(matches!(
            err,
            Err(Error::InsufficientData { ref class, min: 10, .. }) if class == "non-smoke"
        ));
    }

    #[test]
    fn trains_both_models_on_synthetic_corpus() {
        let cfg = tiny_cfg();
        let p = SceneParams::new(128, 96, 26, 5);
        let smoke = [
            harvest_features(ok_frames(&plume_scene(&p, 2)), &cfg).unwrap(),
            harvest_features(
                ok_frames(&plume_scene(&SceneParams { seed: 6, ..p }, 4)),
                &cfg,
            )
            .unwrap(),
        ];
        let nonsmoke = [
            harvest_features(ok_frames(&gray_mover_scene(&p)), &cfg).unwrap(),
            harvest_features(
                ok_frames(&gray_mover_scene(&SceneParams { seed: 8, ..p })),
                &cfg,
            )
            .unwrap(),
        ];
        let trained = train_models(&smoke, &nonsmoke, &cfg).unwrap();

        assert_eq!(trained.texture.feature_dim, 255);
        trained.spacetime.check_dims(5, crate::texture::Kernel::Eoh).unwrap();
        assert_eq!(trained.report.smoke.videos, 2);
        assert!(trained.report.smoke.kept <= 60);
        assert!(trained.report.smoke.kept >= 10);
        assert_eq!(trained.report.texture.train_runs, 2 * 2);
        assert_eq!(trained.report.spacetime.len(), 1);
        assert_eq!(trained.report.spacetime[0].part, "concat");

        // training classes should separate on their own training samples
        let hist = &smoke[0].texture[0];
        let (label, _) = trained.texture.predict(hist).unwrap();
        assert_eq!(label, 1, "a smoke training histogram must classify smoke");

        let dir = tempfile::tempdir().unwrap();
        trained.save_to_dir(dir.path()).unwrap();
        let texture = SvmModel::load(&dir.path().join("texture.json")).unwrap();
        let spacetime = SpacetimeModel::load(&dir.path().join("spacetime.json")).unwrap();
        assert_eq!(texture.feature_dim, 255);
        assert_eq!(spacetime.fusion(), Fusion::Concat);
        assert!(dir.path().join("report.json").exists());
    }

    #[test]
    fn and_of_two_trains_two_parts_and_requires_agreement() {
        let mut cfg = tiny_cfg();
        cfg.spacetime.fusion = Fusion::AndOfTwo;
        let p = SceneParams::new(128, 96, 26, 5);
        let smoke = [harvest_features(ok_frames(&plume_scene(&p, 2)), &cfg).unwrap()];
        let nonsmoke = [harvest_features(ok_frames(&gray_mover_scene(&p)), &cfg).unwrap()];
        let trained = train_models(&smoke, &nonsmoke, &cfg).unwrap();
        assert_eq!(trained.report.spacetime.len(), 2);
        assert_eq!(trained.report.spacetime[0].part, "cm");
        assert_eq!(trained.report.spacetime[1].part, "top");
        match &trained.spacetime {
            SpacetimeModel::AndOfTwo { cm, top } => {
                assert_eq!(cm.feature_dim, 12);
                assert_eq!(top.feature_dim, 48);
            }
            other => panic!("expected AndOfTwo, got {:?}", other.fusion()),
        }
        // agreement semantics on hand-built parts
        let yes = SvmModel {
            gamma: 1.0,
            c: 1.0,
            bias: 1.0,
            feature_dim: 2,
            support_vectors: Vec::new(),
            coefficients: Vec::new(),
            scaler: None,
        };
        let no = SvmModel { bias: -1.0, ..yes.clone() };
        let pair = SpacetimeModel::AndOfTwo {
            cm: yes.clone(),
            top: no,
        };
        assert!(!pair.classify_fused(&[0.0; 4], 2).unwrap());
        let pair = SpacetimeModel::AndOfTwo {
            cm: yes.clone(),
            top: yes,
        };
        assert!(pair.classify_fused(&[0.0; 4], 2).unwrap());
    }

    #[test]
    fn spacetime_model_round_trips_and_rejects_bad_tags() {
        let model = SvmModel {
            gamma: 2.5,
            c: 1.0,
            bias: 0.125,
            feature_dim: 3,
            support_vectors: vec![vec![0.1, 0.2, 0.3]],
            coefficients: vec![0.7],
            scaler: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("st.json");
        let st = SpacetimeModel::Concat {
            model: model.clone(),
        };
        st.save(&path).unwrap();
        match SpacetimeModel::load(&path).unwrap() {
            SpacetimeModel::Concat { model: m } => {
                assert_eq!(m.bias, model.bias);
                assert_eq!(m.support_vectors, model.support_vectors);
            }
            _ => panic!("fusion changed across round trip"),
        }

        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace(SPACETIME_FORMAT_TAG, "smokedet-spacetime/9");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            SpacetimeModel::load(&path),
            Err(Error::ModelFormat(_))
        ));
    }

    #[test]
    fn manifest_reader_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("videos.txt");
        std::fs::write(&manifest, "# corpus\nclip_a\n\n/abs/clip_b\n").unwrap();
        let videos = read_video_manifest(&manifest).unwrap();
        assert_eq!(videos[0], dir.path().join("clip_a"));
        assert_eq!(videos[1], PathBuf::from("/abs/clip_b"));

        std::fs::write(&manifest, "# nothing\n").unwrap();
        assert!(read_video_manifest(&manifest).is_err());
    }
}
