//! Deterministic input generators shared by the benchmark targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smokedet_core::classify::SvmModel;
use smokedet_core::ingest::BlockRef;
use smokedet_core::spacetime::BlockVolume;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform random raster, `width * height` bytes.
pub fn noise_raster(seed: u64, width: usize, height: usize) -> Vec<u8> {
    let mut rng = rng(seed);
    (0..width * height).map(|_| rng.gen()).collect()
}

/// Random block volume for the plane-histogram benches.
pub fn noise_volume(seed: u64, side: usize, depth: usize) -> BlockVolume {
    let mut rng = rng(seed);
    let voxels = (0..side * side * depth).map(|_| rng.gen()).collect();
    BlockVolume::from_voxels(side, side, depth, depth as u64 - 1, BlockRef::new(0, 0), voxels)
        .expect("valid volume")
}

/// Classifier with `sv_count` random support vectors, sized and scaled to
/// make a single decision call representative of detection-time cost.
pub fn synthetic_model(seed: u64, feature_dim: usize, sv_count: usize) -> SvmModel {
    let mut rng = rng(seed);
    let support_vectors = (0..sv_count)
        .map(|_| (0..feature_dim).map(|_| rng.gen_range(0.0..0.05)).collect())
        .collect();
    let coefficients = (0..sv_count)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    SvmModel {
        gamma: 10.0,
        c: 2.0,
        bias: 0.1,
        feature_dim,
        support_vectors,
        coefficients,
        scaler: None,
    }
}
