//! Stage 3: texture descriptors.
//!
//! Every descriptor here is a normalized histogram over integer codes that a
//! pattern function assigns to each interior pixel from its 3x3
//! neighborhood. The exception is EOH, a gradient-orientation histogram
//! weighted by gradient magnitude; it lives in this module because the
//! space-time stage applies it per plane.

pub mod kernels;

mod benchmark;

pub use benchmark::{
    benchmark_descriptors, load_image_set, select_descriptor, write_benchmark_csv, BenchmarkParams,
    BenchmarkRow, LabeledImage, LabeledImageSet,
};

use crate::classify::SvmModel;
use crate::error::{Error, Result};
use crate::ingest::GrayView;

/// Texture label produced by the per-block classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Smoke,
    NonSmoke,
}

/// The implemented descriptor kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kernel {
    Gld,
    Rt,
    Rtu,
    Lbp,
    UniformLbp,
    Mts,
    CsLbp,
    Cbp,
    Bgc1,
    Bgc2,
    Bgc3,
    Eoh,
}

/// All implemented kernels in a stable reporting order.
pub const ALL_KERNELS: [Kernel; 12] = [
    Kernel::Gld,
    Kernel::Rt,
    Kernel::Rtu,
    Kernel::Lbp,
    Kernel::UniformLbp,
    Kernel::Mts,
    Kernel::CsLbp,
    Kernel::Cbp,
    Kernel::Bgc1,
    Kernel::Bgc2,
    Kernel::Bgc3,
    Kernel::Eoh,
];

impl Kernel {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Gld => "GLD",
            Kernel::Rt => "RT",
            Kernel::Rtu => "RTU",
            Kernel::Lbp => "LBP",
            Kernel::UniformLbp => "uniform-LBP",
            Kernel::Mts => "MTS",
            Kernel::CsLbp => "CS-LBP",
            Kernel::Cbp => "CBP",
            Kernel::Bgc1 => "BGC1",
            Kernel::Bgc2 => "BGC2",
            Kernel::Bgc3 => "BGC3",
            Kernel::Eoh => "EOH",
        }
    }

    /// Number of histogram bins (codes span `[0, bin_count)`).
    pub fn bin_count(&self) -> usize {
        match self {
            Kernel::Gld => 256,
            Kernel::Rt => 9,
            Kernel::Rtu => 45,
            Kernel::Lbp => 256,
            Kernel::UniformLbp => 59,
            Kernel::Mts => 16,
            Kernel::CsLbp => 16,
            Kernel::Cbp => 32,
            Kernel::Bgc1 => 255,
            Kernel::Bgc2 => 225,
            Kernel::Bgc3 => 255,
            Kernel::Eoh => 16,
        }
    }

    /// Parses a kernel name as used in CLI lists and config files.
    /// Case-insensitive; '-' and '_' are interchangeable.
    pub fn parse(name: &str) -> Result<Kernel> {
        let folded = name.trim().to_ascii_lowercase().replace('_', "-");
        ALL_KERNELS
            .iter()
            .find(|k| k.name().to_ascii_lowercase() == folded)
            .copied()
            .ok_or_else(|| Error::UnsupportedKernel(name.trim().to_string()))
    }

    fn pattern_fn(&self) -> Option<fn(u8, &[u8; 8]) -> usize> {
        match self {
            Kernel::Gld => Some(kernels::gld),
            Kernel::Rt => Some(kernels::rank),
            Kernel::Rtu => Some(kernels::rank_with_ties),
            Kernel::Lbp => Some(kernels::lbp),
            Kernel::UniformLbp => Some(kernels::uniform_lbp),
            Kernel::Mts => Some(kernels::mts),
            Kernel::CsLbp => Some(kernels::cs_lbp),
            Kernel::Cbp => Some(kernels::cbp),
            Kernel::Bgc1 => Some(kernels::bgc1),
            Kernel::Bgc2 => Some(kernels::bgc2),
            Kernel::Bgc3 => Some(kernels::bgc3),
            Kernel::Eoh => None,
        }
    }
}

/// Normalized descriptor histogram; bins sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub kernel: Kernel,
    pub bins: Vec<f64>,
}

impl Histogram {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

/// Adds one image's raw (unnormalized) descriptor mass into `acc` and
/// returns the mass contributed: the interior pixel count for pattern
/// kernels, the total gradient magnitude for EOH.
pub(crate) fn accumulate_raw(image: &GrayView, kernel: Kernel, acc: &mut [f64]) -> Result<f64> {
    debug_assert_eq!(acc.len(), kernel.bin_count());
    let (w, h) = (image.width(), image.height());
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }
    let mut mass = 0.0;
    for y in 1..h - 1 {
        let above = image.row(y - 1);
        let here = image.row(y);
        let below = image.row(y + 1);
        match kernel.pattern_fn() {
            Some(f) => {
                for x in 1..w - 1 {
                    let n = [
                        here[x + 1],
                        below[x + 1],
                        below[x],
                        below[x - 1],
                        here[x - 1],
                        above[x - 1],
                        above[x],
                        above[x + 1],
                    ];
                    let code = f(here[x], &n);
                    debug_assert!(code < acc.len(), "code {code} out of range");
                    acc[code] += 1.0;
                }
                mass += (w - 2) as f64;
            }
            None => {
                for x in 1..w - 1 {
                    let n = [
                        here[x + 1],
                        below[x + 1],
                        below[x],
                        below[x - 1],
                        here[x - 1],
                        above[x - 1],
                        above[x],
                        above[x + 1],
                    ];
                    let (gx, gy) = kernels::sobel(here[x], &n);
                    let magnitude = gx.hypot(gy);
                    if magnitude > 0.0 {
                        acc[kernels::eoh_bin(gx, gy)] += magnitude;
                        mass += magnitude;
                    }
                }
            }
        }
    }
    Ok(mass)
}

/// Normalizes accumulated mass in place. Zero mass (possible only for EOH
/// on gradient-free content) falls back to the uniform histogram so the
/// unit-sum invariant holds for every input.
pub(crate) fn normalize(bins: &mut [f64], mass: f64) {
    if mass > 0.0 {
        for b in bins.iter_mut() {
            *b /= mass;
        }
    } else {
        let uniform = 1.0 / bins.len() as f64;
        bins.fill(uniform);
    }
}

/// Descriptor histogram of one gray image (or block view).
pub fn hep_histogram(image: &GrayView, kernel: Kernel) -> Result<Histogram> {
    let mut bins = vec![0.0; kernel.bin_count()];
    let mass = accumulate_raw(image, kernel, &mut bins)?;
    normalize(&mut bins, mass);
    Ok(Histogram { kernel, bins })
}

/// Classifies one descriptor histogram with a trained SVM.
pub fn classify_texture(hist: &Histogram, model: &SvmModel) -> Result<Label> {
    let score = model.decision(&hist.bins)?;
    Ok(if score >= 0.0 { Label::Smoke } else { Label::NonSmoke })
}
