//! Descriptor benchmark: extract histograms per kernel, run the
//! split-repeat SVM protocol, and report accuracy/time/dims rows from which
//! a pipeline descriptor can be picked.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::classify::{cross_eval, train_svm, CrossEvalParams, ParamGrid, TrainParams};
use crate::error::{Error, Result};
use crate::ingest::{decode_frame_file, to_grayscale, GrayFrame};
use crate::texture::{hep_histogram, Kernel};

/// One gray image with its binary label (+1 smoke, -1 non-smoke).
#[derive(Debug, Clone)]
pub struct LabeledImage {
    pub image: GrayFrame,
    pub label: i8,
    pub path: PathBuf,
}

/// Benchmark dataset. Loaded from a manifest or built in memory.
#[derive(Debug, Clone, Default)]
pub struct LabeledImageSet {
    pub images: Vec<LabeledImage>,
}

impl LabeledImageSet {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    fn labels(&self) -> Vec<i8> {
        self.images.iter().map(|e| e.label).collect()
    }

    fn validate_two_classes(&self) -> Result<()> {
        let pos = self.images.iter().filter(|e| e.label > 0).count();
        if pos == 0 || pos == self.images.len() {
            return Err(Error::SingleClass);
        }
        Ok(())
    }
}

/// Loads a dataset manifest: one `path<TAB>label` line per image, label
/// `smoke` or `non-smoke`, paths relative to the manifest's directory.
/// Blank lines and `#` comment lines are skipped.
pub fn load_image_set(manifest: &Path) -> Result<LabeledImageSet> {
    let text = fs::read_to_string(manifest).map_err(|e| Error::Io {
        path: manifest.to_path_buf(),
        source: e,
    })?;
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let mut images = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (path_part, label_part) = line.split_once('\t').ok_or_else(|| Error::Format {
            path: manifest.to_path_buf(),
            frame: None,
            detail: format!("line {}: expected path<TAB>label", lineno + 1),
        })?;
        let label = match label_part.trim().to_ascii_lowercase().as_str() {
            "smoke" => 1,
            "non-smoke" | "nonsmoke" => -1,
            other => {
                return Err(Error::Format {
                    path: manifest.to_path_buf(),
                    frame: None,
                    detail: format!("line {}: unknown label {other:?}", lineno + 1),
                })
            }
        };
        let image_path = base.join(path_part.trim());
        let frame = decode_frame_file(&image_path, images.len() as u64)?;
        images.push(LabeledImage {
            image: to_grayscale(&frame),
            label,
            path: image_path,
        });
    }
    Ok(LabeledImageSet { images })
}

#[derive(Debug, Clone, Default)]
pub struct BenchmarkParams {
    pub grid: ParamGrid,
    pub eval: CrossEvalParams,
}

/// One report row per kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub kernel: Kernel,
    /// Best mean accuracy over the parameter grid.
    pub accuracy: f64,
    /// Wall-clock seconds to extract histograms for the whole set.
    pub extract_s: f64,
    pub dims: usize,
    /// Wall-clock seconds to classify the held-out half with the best pair.
    pub recognize_s: f64,
}

/// Deterministic stratified halving used only for the recognition timing:
/// even positions within each class train, odd positions are timed.
fn even_odd_split(labels: &[i8]) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [1i8, -1] {
        for (pos, idx) in labels
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == class)
            .map(|(i, _)| i)
            .enumerate()
        {
            if pos % 2 == 0 {
                train.push(idx);
            } else {
                test.push(idx);
            }
        }
    }
    (train, test)
}

/// Benchmarks each kernel on the dataset: one timed extraction pass, the
/// split-repeat protocol over the grid, and a timed recognition pass with
/// the winning pair.
pub fn benchmark_descriptors(
    set: &LabeledImageSet,
    kernels: &[Kernel],
    params: &BenchmarkParams,
) -> Result<Vec<BenchmarkRow>> {
    set.validate_two_classes()?;
    if kernels.is_empty() {
        return Err(Error::InvalidConfig("no kernels requested".into()));
    }
    let labels = set.labels();
    let mut rows = Vec::with_capacity(kernels.len());
    for &kernel in kernels {
        let started = Instant::now();
        let mut features = Vec::with_capacity(set.len());
        for entry in &set.images {
            features.push(hep_histogram(&entry.image.view(), kernel)?.bins);
        }
        let extract_s = started.elapsed().as_secs_f64();

        let report = cross_eval(&features, &labels, &params.grid, &params.eval)?;
        let best = report.best();

        let (train_idx, test_idx) = even_odd_split(&labels);
        let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| features[i].clone()).collect();
        let train_y: Vec<i8> = train_idx.iter().map(|&i| labels[i]).collect();
        let model = train_svm(
            &train_x,
            &train_y,
            &TrainParams {
                c: best.c,
                gamma: best.gamma,
                tol: params.eval.tol,
                max_passes: params.eval.max_passes,
                seed: params.eval.seed,
            },
        )?;
        let started = Instant::now();
        for &i in &test_idx {
            model.predict(&features[i])?;
        }
        let recognize_s = started.elapsed().as_secs_f64();

        rows.push(BenchmarkRow {
            kernel,
            accuracy: best.mean_accuracy,
            extract_s,
            dims: kernel.bin_count(),
            recognize_s,
        });
    }
    Ok(rows)
}

/// Renders report rows as CSV with the fixed header
/// `kernel,accuracy,extract_s,dims,recognize_s`.
pub fn write_benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from("kernel,accuracy,extract_s,dims,recognize_s\n");
    for row in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{},{:.6}\n",
            row.kernel.name(),
            row.accuracy,
            row.extract_s,
            row.dims,
            row.recognize_s
        ));
    }
    out
}

/// Picks a kernel from benchmark rows: keep rows with accuracy >= `acc_min`,
/// extraction time <= `time_max` seconds and dims <= `dims_max`; among the
/// survivors the highest accuracy wins, ties break toward faster extraction.
/// `None` when nothing qualifies.
pub fn select_descriptor(
    rows: &[BenchmarkRow],
    acc_min: f64,
    time_max: f64,
    dims_max: usize,
) -> Option<Kernel> {
    rows.iter()
        .filter(|r| r.accuracy >= acc_min && r.extract_s <= time_max && r.dims <= dims_max)
        .max_by(|a, b| {
            a.accuracy
                .partial_cmp(&b.accuracy)
                .unwrap()
                .then(b.extract_s.partial_cmp(&a.extract_s).unwrap())
        })
        .map(|r| r.kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::encode_pgm;

    fn gray(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> GrayFrame {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        GrayFrame::new(width, height, 0, pixels)
    }

    fn noise(width: usize, height: usize, seed: u64) -> GrayFrame {
        let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(1);
        gray(width, height, move |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 56) as u8
        })
    }

    /// Checkerboards vs random noise: trivially separable textures.
    fn synthetic_set() -> LabeledImageSet {
        let mut images = Vec::new();
        for i in 0..8u64 {
            let phase = (i % 2) as usize;
            images.push(LabeledImage {
                image: gray(16, 16, |x, y| {
                    if (x / 2 + y / 2 + phase) % 2 == 0 {
                        200
                    } else {
                        40
                    }
                }),
                label: 1,
                path: PathBuf::new(),
            });
            images.push(LabeledImage {
                image: noise(16, 16, i + 1),
                label: -1,
                path: PathBuf::new(),
            });
        }
        LabeledImageSet { images }
    }

    #[test]
    fn manifest_loading_and_labels() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.pgm");
        let b = dir.path().join("b.pgm");
        std::fs::write(&a, encode_pgm(4, 4, &[100; 16])).unwrap();
        std::fs::write(&b, encode_pgm(4, 4, &[50; 16])).unwrap();
        let manifest = dir.path().join("set.tsv");
        std::fs::write(&manifest, "# comment\na.pgm\tsmoke\n\nb.pgm\tnon-smoke\n").unwrap();

        let set = load_image_set(&manifest).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.images[0].label, 1);
        assert_eq!(set.images[1].label, -1);
        assert_eq!(set.images[0].image.get(0, 0), 100);

        std::fs::write(&manifest, "a.pgm\tfog\n").unwrap();
        assert!(matches!(
            load_image_set(&manifest),
            Err(Error::Format { .. })
        ));

        std::fs::write(&manifest, "a.pgm smoke\n").unwrap();
        assert!(matches!(
            load_image_set(&manifest),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn separable_textures_reach_full_accuracy() {
        let set = synthetic_set();
        let params = BenchmarkParams {
            grid: ParamGrid {
                pairs: vec![(2.0, 100.0), (0.5, 1000.0)],
            },
            eval: CrossEvalParams {
                repeats: 3,
                seed: 11,
                ..CrossEvalParams::default()
            },
        };
        let rows =
            benchmark_descriptors(&set, &[Kernel::Rt, Kernel::Lbp, Kernel::Eoh], &params).unwrap();
        for row in &rows {
            assert_eq!(row.dims, row.kernel.bin_count());
            assert!(
                row.accuracy == 1.0,
                "{} accuracy {}",
                row.kernel.name(),
                row.accuracy
            );
            assert!(row.extract_s >= 0.0 && row.recognize_s >= 0.0);
        }
    }

    #[test]
    fn single_class_set_is_rejected() {
        let mut set = synthetic_set();
        set.images.retain(|e| e.label == 1);
        let err = benchmark_descriptors(&set, &[Kernel::Rt], &BenchmarkParams::default());
        assert!(matches!(err, Err(Error::SingleClass)));
    }

    #[test]
    fn csv_layout_is_stable() {
        let rows = vec![BenchmarkRow {
            kernel: Kernel::Bgc3,
            accuracy: 0.97584,
            extract_s: 13.78,
            dims: 255,
            recognize_s: 0.32,
        }];
        let csv = write_benchmark_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("kernel,accuracy,extract_s,dims,recognize_s"));
        assert_eq!(lines.next(), Some("BGC3,0.975840,13.780000,255,0.320000"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn selection_filters_and_tie_breaks() {
        let row = |kernel, accuracy, extract_s, dims| BenchmarkRow {
            kernel,
            accuracy,
            extract_s,
            dims,
            recognize_s: 0.1,
        };
        // shaped like the published comparison: two survivors, the faster
        // and more accurate contour kernel wins
        let rows = vec![
            row(Kernel::Lbp, 0.9731, 11.9, 256),
            row(Kernel::Rtu, 0.9750, 17.72, 45),
            row(Kernel::Bgc3, 0.9758, 13.78, 255),
            row(Kernel::Bgc2, 0.9770, 25.0, 225), // too slow
            row(Kernel::Gld, 0.9990, 1.0, 256),   // dims boundary: kept
        ];
        assert_eq!(select_descriptor(&rows, 0.975, 20.0, 256), Some(Kernel::Gld));
        // without GLD the contour kernel wins on accuracy
        assert_eq!(
            select_descriptor(&rows[..4], 0.975, 20.0, 256),
            Some(Kernel::Bgc3)
        );
        // raise the accuracy bar beyond every fast row
        assert_eq!(select_descriptor(&rows[..4], 0.99, 20.0, 256), None);
        // single qualifying row
        assert_eq!(
            select_descriptor(&rows[1..2], 0.97, 20.0, 256),
            Some(Kernel::Rtu)
        );
        // tie on accuracy: faster extraction wins
        let tied = vec![
            row(Kernel::Lbp, 0.98, 12.0, 256),
            row(Kernel::Mts, 0.98, 2.0, 16),
        ];
        assert_eq!(select_descriptor(&tied, 0.9, 20.0, 256), Some(Kernel::Mts));
    }
}
