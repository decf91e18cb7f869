//! Detector configuration: JSON-backed, every field optional with defaults.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::candidate::ColorRuleParams;
use crate::classify::{CrossEvalParams, ParamGrid};
use crate::error::{Error, Result};
use crate::motion;
use crate::shi;
use crate::texture::Kernel;

/// Full pipeline configuration. Deserializes from JSON where every section
/// and field may be omitted; unknown keys are rejected to catch typos.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub block: BlockConfig,
    pub candidate: CandidateConfig,
    pub motion: MotionConfig,
    pub texture: TextureConfig,
    pub spacetime: SpacetimeConfig,
    pub shi: ShiConfig,
    pub svm: SvmConfig,
    pub stages: StageToggles,
    pub alarm: AlarmConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockConfig {
    pub width: usize,
    pub height: usize,
}

impl Default for BlockConfig {
    fn default() -> Self {
        BlockConfig {
            width: 32,
            height: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CandidateConfig {
    /// Inter-frame difference threshold; `null` means 4 per pixel.
    pub t_b: Option<u64>,
    pub color: ColorConfig,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        CandidateConfig {
            t_b: None,
            color: ColorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColorConfig {
    pub spread: u8,
    pub low: u8,
    pub high: u8,
    pub min_fraction: f64,
}

impl Default for ColorConfig {
    fn default() -> Self {
        let p = ColorRuleParams::default();
        ColorConfig {
            spread: p.max_channel_spread,
            low: p.intensity_low,
            high: p.intensity_high,
            min_fraction: p.min_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionConfig {
    /// Accumulation window in frames.
    pub w_t: usize,
    /// Upward-motion ratio threshold.
    pub t_u: f64,
    /// Block-matching displacement in pixels.
    pub displacement: usize,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            w_t: motion::DEFAULT_WINDOW,
            t_u: motion::DEFAULT_T_U,
            displacement: motion::DEFAULT_DISPLACEMENT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextureConfig {
    pub kernel: String,
}

impl Default for TextureConfig {
    fn default() -> Self {
        TextureConfig {
            kernel: "BGC3".to_string(),
        }
    }
}

/// How the space-time classifier combines moment and histogram features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    /// One SVM over the concatenated vector.
    Concat,
    /// Separate SVMs per part; smoke only if both agree.
    AndOfTwo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpacetimeConfig {
    /// Temporal window depth in frames.
    pub q: usize,
    pub fusion: Fusion,
    pub top_kernel: String,
}

impl Default for SpacetimeConfig {
    fn default() -> Self {
        SpacetimeConfig {
            q: 5,
            fusion: Fusion::Concat,
            top_kernel: "EOH".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShiConfig {
    pub t_max: u32,
    pub threshold: u32,
}

impl Default for ShiConfig {
    fn default() -> Self {
        ShiConfig {
            t_max: shi::DEFAULT_T_MAX,
            threshold: shi::DEFAULT_THRESHOLD,
        }
    }
}

/// Whether the first listed number of a pair is C or gamma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairOrder {
    #[serde(rename = "c-gamma")]
    CGamma,
    #[serde(rename = "gamma-c")]
    GammaC,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Candidate parameter pairs, interpreted per `order`.
    pub pairs: Vec<[f64; 2]>,
    pub order: PairOrder,
    pub repeats: usize,
    pub split: f64,
    pub seed: u64,
    pub tol: f64,
    pub max_passes: usize,
    /// Training-sample cap per class during model bootstrap.
    pub max_samples_per_class: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            pairs: ParamGrid::default()
                .pairs
                .iter()
                .map(|&(c, g)| [c, g])
                .collect(),
            order: PairOrder::CGamma,
            repeats: 10,
            split: 0.5,
            seed: 0,
            tol: 1e-3,
            max_passes: 10,
            max_samples_per_class: 600,
        }
    }
}

/// Per-stage enable switches; a disabled stage passes blocks through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    pub umr: bool,
    pub texture: bool,
    pub spacetime: bool,
    pub shi: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            umr: true,
            texture: true,
            spacetime: true,
            shi: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlarmConfig {
    /// Blocks that must alarm simultaneously to flag the frame.
    pub min_blocks: usize,
}

impl Default for AlarmConfig {
    fn default() -> Self {
        AlarmConfig { min_blocks: 1 }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.block.width == 0 || self.block.height == 0 {
            return Err(Error::InvalidConfig("block dimensions must be >= 1".into()));
        }
        self.color_params().validate()?;
        if self.motion.w_t < 1 {
            return Err(Error::InvalidConfig("motion.w_t must be >= 1".into()));
        }
        if self.motion.displacement < 1 {
            return Err(Error::InvalidConfig(
                "motion.displacement must be >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.motion.t_u) {
            return Err(Error::InvalidConfig(format!(
                "motion.t_u {} outside [0, 1]",
                self.motion.t_u
            )));
        }
        self.texture_kernel()?;
        self.top_kernel()?;
        if self.spacetime.q < 3 {
            return Err(Error::InvalidConfig(
                "spacetime.q must be >= 3 (plane histograms need depth 3)".into(),
            ));
        }
        if self.shi.threshold == 0 || self.shi.threshold > self.shi.t_max {
            return Err(Error::InvalidConfig(format!(
                "shi requires 0 < threshold <= t_max, got {}/{}",
                self.shi.threshold, self.shi.t_max
            )));
        }
        self.param_grid().validate()?;
        if self.svm.repeats < 1 {
            return Err(Error::InvalidConfig("svm.repeats must be >= 1".into()));
        }
        if !(self.svm.split > 0.0 && self.svm.split < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "svm.split {} outside (0, 1)",
                self.svm.split
            )));
        }
        if self.svm.max_samples_per_class < 2 {
            return Err(Error::InvalidConfig(
                "svm.max_samples_per_class must be >= 2".into(),
            ));
        }
        if self.alarm.min_blocks < 1 {
            return Err(Error::InvalidConfig("alarm.min_blocks must be >= 1".into()));
        }
        Ok(())
    }

    pub fn texture_kernel(&self) -> Result<Kernel> {
        Kernel::parse(&self.texture.kernel)
    }

    pub fn top_kernel(&self) -> Result<Kernel> {
        Kernel::parse(&self.spacetime.top_kernel)
    }

    pub fn color_params(&self) -> ColorRuleParams {
        ColorRuleParams {
            max_channel_spread: self.candidate.color.spread,
            intensity_low: self.candidate.color.low,
            intensity_high: self.candidate.color.high,
            min_fraction: self.candidate.color.min_fraction,
        }
    }

    /// (C, gamma) pairs in listed order, resolving the column order switch.
    pub fn param_grid(&self) -> ParamGrid {
        let pairs = self
            .svm
            .pairs
            .iter()
            .map(|&[a, b]| match self.svm.order {
                PairOrder::CGamma => (a, b),
                PairOrder::GammaC => (b, a),
            })
            .collect();
        ParamGrid { pairs }
    }

    pub fn cross_eval_params(&self, scale_prefix: Option<usize>) -> CrossEvalParams {
        CrossEvalParams {
            repeats: self.svm.repeats,
            split: self.svm.split,
            seed: self.svm.seed,
            tol: self.svm.tol,
            max_passes: self.svm.max_passes,
            scale_prefix,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_is_the_default_config() {
        let cfg: PipelineConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        cfg.validate().unwrap();
        assert_eq!(cfg.block.width, 32);
        assert_eq!(cfg.motion.w_t, 15);
        assert_eq!(cfg.motion.t_u, 0.55);
        assert_eq!(cfg.spacetime.q, 5);
        assert_eq!(cfg.shi.t_max, 15);
        assert_eq!(cfg.shi.threshold, 10);
        assert_eq!(cfg.texture_kernel().unwrap(), Kernel::Bgc3);
        assert_eq!(cfg.top_kernel().unwrap(), Kernel::Eoh);
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = PipelineConfig::default();
        let text = cfg.to_json_pretty();
        let back: PipelineConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_overrides_keep_other_defaults() {
        let cfg: PipelineConfig = serde_json::from_str(
            r#"{"texture": {"kernel": "uniform-LBP"}, "shi": {"threshold": 3, "t_max": 4}}"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.texture_kernel().unwrap(), Kernel::UniformLbp);
        assert_eq!(cfg.shi.threshold, 3);
        assert_eq!(cfg.block.width, 32);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<PipelineConfig>(r#"{"blocks": {"width": 16}}"#);
        assert!(err.is_err());
        let err = serde_json::from_str::<PipelineConfig>(r#"{"motion": {"wt": 5}}"#);
        assert!(err.is_err());
    }

    #[test]
    fn pair_order_switch_flips_columns() {
        let cfg: PipelineConfig = serde_json::from_str(
            r#"{"svm": {"pairs": [[100, 2], [1, 0.001]], "order": "gamma-c"}}"#,
        )
        .unwrap();
        let grid = cfg.param_grid();
        assert_eq!(grid.pairs, vec![(2.0, 100.0), (0.001, 1.0)]);

        let cfg: PipelineConfig =
            serde_json::from_str(r#"{"svm": {"pairs": [[2, 100]]}}"#).unwrap();
        assert_eq!(cfg.param_grid().pairs, vec![(2.0, 100.0)]);
    }

    #[test]
    fn default_grid_matches_classifier_default() {
        assert_eq!(
            PipelineConfig::default().param_grid(),
            ParamGrid::default()
        );
    }

    #[test]
    fn validation_rejects_bad_sections() {
        let mut cfg = PipelineConfig::default();
        cfg.spacetime.q = 2;
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.shi.threshold = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.shi.threshold = 20;
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.texture.kernel = "LTP".into();
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.svm.split = 1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.motion.t_u = 1.5;
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.alarm.min_blocks = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn fusion_names_are_snake_case() {
        let cfg: PipelineConfig =
            serde_json::from_str(r#"{"spacetime": {"fusion": "and_of_two"}}"#).unwrap();
        assert_eq!(cfg.spacetime.fusion, Fusion::AndOfTwo);
        assert!(serde_json::from_str::<PipelineConfig>(
            r#"{"spacetime": {"fusion": "both"}}"#
        )
        .is_err());
    }
}
