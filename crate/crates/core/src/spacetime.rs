//! Stage 4: space-time features over a short stack of co-located blocks.
//!
//! Two families are provided. Block inter-frame difference (BIFD) features
//! summarize the q-1 absolute difference rasters between adjacent slices,
//! either by color moments (mean, std, skewness) or by Hu moment
//! invariants. TOP features cut the volume into XY, XT and YT planes,
//! run a texture kernel over every plane, and concatenate one normalized
//! histogram per plane type.

use crate::error::{Error, Result};
use crate::ingest::{BlockGrid, BlockRef, GrayFrame, GrayView};
use crate::texture::{self, Kernel};

/// A block's gray voxels over `depth` consecutive frames (oldest first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockVolume {
    pub width: usize,
    pub height: usize,
    pub depth: usize,
    /// Frame index of the newest slice.
    pub last_frame: u64,
    pub block: BlockRef,
    /// `depth` slices of `width * height` bytes each.
    voxels: Vec<u8>,
}

impl BlockVolume {
    /// Assembles a volume for one block from consecutive frames
    /// (oldest first).
    pub fn from_frames(frames: &[&GrayFrame], grid: &BlockGrid, at: BlockRef) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::VolumeTooShallow {
                depth: frames.len(),
                min: 2,
            });
        }
        let mut voxels = Vec::with_capacity(frames.len() * grid.block_width * grid.block_height);
        for frame in frames {
            let view = frame.block(grid, at)?;
            for y in 0..view.height() {
                voxels.extend_from_slice(view.row(y));
            }
        }
        Ok(BlockVolume {
            width: grid.block_width,
            height: grid.block_height,
            depth: frames.len(),
            last_frame: frames[frames.len() - 1].index,
            block: at,
            voxels,
        })
    }

    pub fn from_voxels(
        width: usize,
        height: usize,
        depth: usize,
        last_frame: u64,
        block: BlockRef,
        voxels: Vec<u8>,
    ) -> Result<Self> {
        if depth < 2 {
            return Err(Error::VolumeTooShallow { depth, min: 2 });
        }
        assert_eq!(voxels.len(), width * height * depth, "voxel count mismatch");
        Ok(BlockVolume {
            width,
            height,
            depth,
            last_frame,
            block,
            voxels,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, t: usize) -> u8 {
        self.voxels[(t * self.height + y) * self.width + x]
    }

    /// One time slice as a view.
    pub fn slice(&self, t: usize) -> GrayView<'_> {
        let len = self.width * self.height;
        GrayView::from_raster(&self.voxels[t * len..(t + 1) * len], self.width, self.height)
    }

    /// Temporally reversed copy (newest slice first). Test support.
    pub fn reversed(&self) -> BlockVolume {
        let len = self.width * self.height;
        let mut voxels = Vec::with_capacity(self.voxels.len());
        for t in (0..self.depth).rev() {
            voxels.extend_from_slice(&self.voxels[t * len..(t + 1) * len]);
        }
        BlockVolume {
            voxels,
            ..self.clone()
        }
    }
}

/// Stack of q-1 absolute difference rasters between adjacent slices.
#[derive(Debug, Clone, PartialEq)]
pub struct Bda {
    pub width: usize,
    pub height: usize,
    /// `diffs[k][i] = |slice_{k+1}[i] - slice_k[i]|`.
    pub diffs: Vec<Vec<u8>>,
}

/// Builds the difference stack of a volume.
pub fn build_bda(volume: &BlockVolume) -> Bda {
    let len = volume.width * volume.height;
    let mut diffs = Vec::with_capacity(volume.depth - 1);
    for t in 0..volume.depth - 1 {
        let mut d = Vec::with_capacity(len);
        for i in 0..len {
            d.push(volume.voxels[(t + 1) * len + i].abs_diff(volume.voxels[t * len + i]));
        }
        diffs.push(d);
    }
    Bda {
        width: volume.width,
        height: volume.height,
        diffs,
    }
}

/// Mean, population standard deviation and signed-cube-root skewness of a
/// raster. The cube root keeps the skew feature real for negative third
/// moments while preserving sign and monotonicity.
pub fn color_moments(raster: &[u8]) -> (f64, f64, f64) {
    let n = raster.len() as f64;
    let mean = raster.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    for &v in raster {
        let d = f64::from(v) - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    (mean, m2.sqrt(), m3.cbrt())
}

/// The seven Hu moment invariants of a non-negative raster, computed from
/// normalized central moments in double precision. A zero-mass raster is
/// degenerate: all seven come back 0 along with `false`.
pub fn hu_moments(raster: &[u8], width: usize, height: usize) -> ([f64; 7], bool) {
    debug_assert_eq!(raster.len(), width * height);
    let mut m00 = 0.0;
    let mut m10 = 0.0;
    let mut m01 = 0.0;
    for y in 0..height {
        for x in 0..width {
            let v = f64::from(raster[y * width + x]);
            m00 += v;
            m10 += x as f64 * v;
            m01 += y as f64 * v;
        }
    }
    if m00 == 0.0 {
        return ([0.0; 7], false);
    }
    let cx = m10 / m00;
    let cy = m01 / m00;

    // central moments mu_pq up to order 3
    let mut mu = [[0.0f64; 4]; 4];
    for y in 0..height {
        for x in 0..width {
            let v = f64::from(raster[y * width + x]);
            if v == 0.0 {
                continue;
            }
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let dx2 = dx * dx;
            let dy2 = dy * dy;
            mu[2][0] += dx2 * v;
            mu[0][2] += dy2 * v;
            mu[1][1] += dx * dy * v;
            mu[3][0] += dx2 * dx * v;
            mu[0][3] += dy2 * dy * v;
            mu[2][1] += dx2 * dy * v;
            mu[1][2] += dx * dy2 * v;
        }
    }
    // eta_pq = mu_pq / m00^(1 + (p+q)/2)
    let norm2 = m00 * m00;
    let norm3 = m00.powf(2.5);
    let n20 = mu[2][0] / norm2;
    let n02 = mu[0][2] / norm2;
    let n11 = mu[1][1] / norm2;
    let n30 = mu[3][0] / norm3;
    let n03 = mu[0][3] / norm3;
    let n21 = mu[2][1] / norm3;
    let n12 = mu[1][2] / norm3;

    let h1 = n20 + n02;
    let h2 = (n20 - n02).powi(2) + 4.0 * n11 * n11;
    let h3 = (n30 - 3.0 * n12).powi(2) + (3.0 * n21 - n03).powi(2);
    let h4 = (n30 + n12).powi(2) + (n21 + n03).powi(2);
    let h5 = (n30 - 3.0 * n12)
        * (n30 + n12)
        * ((n30 + n12).powi(2) - 3.0 * (n21 + n03).powi(2))
        + (3.0 * n21 - n03) * (n21 + n03) * (3.0 * (n30 + n12).powi(2) - (n21 + n03).powi(2));
    let h6 = (n20 - n02) * ((n30 + n12).powi(2) - (n21 + n03).powi(2))
        + 4.0 * n11 * (n30 + n12) * (n21 + n03);
    let h7 = (3.0 * n21 - n03) * (n30 + n12) * ((n30 + n12).powi(2) - 3.0 * (n21 + n03).powi(2))
        - (n30 - 3.0 * n12) * (n21 + n03) * (3.0 * (n30 + n12).powi(2) - (n21 + n03).powi(2));

    ([h1, h2, h3, h4, h5, h6, h7], true)
}

/// Feature vector layouts produced by this module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    BifdCm,
    BifdHu,
    Top(Kernel),
    Fused,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub layout: Layout,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Color-moment BIFD: (mean, std, skew) per difference raster, 3(q-1) dims.
pub fn bifd_cm(bda: &Bda) -> FeatureVector {
    let mut values = Vec::with_capacity(3 * bda.diffs.len());
    for d in &bda.diffs {
        let (mean, std, skew) = color_moments(d);
        values.extend_from_slice(&[mean, std, skew]);
    }
    FeatureVector {
        layout: Layout::BifdCm,
        values,
    }
}

/// Hu-moment BIFD: 7 invariants per difference raster, 7(q-1) dims.
/// Degenerate (all-zero) rasters contribute an all-zero 7-block.
pub fn bifd_hu(bda: &Bda) -> FeatureVector {
    let mut values = Vec::with_capacity(7 * bda.diffs.len());
    for d in &bda.diffs {
        let (h, _defined) = hu_moments(d, bda.width, bda.height);
        values.extend_from_slice(&h);
    }
    FeatureVector {
        layout: Layout::BifdHu,
        values,
    }
}

/// Plane kernels accepted by [`top_descriptor`].
pub const TOP_KERNELS: [Kernel; 4] = [Kernel::UniformLbp, Kernel::Eoh, Kernel::Rtu, Kernel::Bgc3];

/// TOP descriptor: one histogram per plane family (XY, XT, YT), each
/// accumulated over every plane of that family and normalized to sum 1,
/// concatenated in that order. Length is 3x the kernel's bin count.
///
/// XY planes are the time slices; the XT plane at row y maps (x, t) onto
/// image (x, y); the YT plane at column x maps (t, y) likewise. Kernels
/// need a 3x3 window in-plane, so the volume must be at least 3 deep for
/// the XT/YT families.
pub fn top_descriptor(volume: &BlockVolume, plane_kernel: Kernel) -> Result<FeatureVector> {
    if !TOP_KERNELS.contains(&plane_kernel) {
        return Err(Error::UnsupportedKernel(format!(
            "{} cannot be used as a TOP plane kernel",
            plane_kernel.name()
        )));
    }
    if volume.depth < 3 {
        return Err(Error::VolumeTooShallow {
            depth: volume.depth,
            min: 3,
        });
    }
    let bins = plane_kernel.bin_count();
    let mut values = Vec::with_capacity(3 * bins);

    // XY family: planes indexed by t, raster (x, y).
    {
        let mut acc = vec![0.0; bins];
        let mut mass = 0.0;
        for t in 0..volume.depth {
            mass += texture::accumulate_raw(&volume.slice(t), plane_kernel, &mut acc)?;
        }
        texture::normalize(&mut acc, mass);
        values.extend_from_slice(&acc);
    }
    // XT family: planes indexed by y, raster (x, t).
    {
        let mut acc = vec![0.0; bins];
        let mut mass = 0.0;
        let mut plane = vec![0u8; volume.width * volume.depth];
        for y in 0..volume.height {
            for t in 0..volume.depth {
                for x in 0..volume.width {
                    plane[t * volume.width + x] = volume.get(x, y, t);
                }
            }
            let view = GrayView::from_raster(&plane, volume.width, volume.depth);
            mass += texture::accumulate_raw(&view, plane_kernel, &mut acc)?;
        }
        texture::normalize(&mut acc, mass);
        values.extend_from_slice(&acc);
    }
    // YT family: planes indexed by x, raster (t, y).
    {
        let mut acc = vec![0.0; bins];
        let mut mass = 0.0;
        let mut plane = vec![0u8; volume.depth * volume.height];
        for x in 0..volume.width {
            for y in 0..volume.height {
                for t in 0..volume.depth {
                    plane[y * volume.depth + t] = volume.get(x, y, t);
                }
            }
            let view = GrayView::from_raster(&plane, volume.depth, volume.height);
            mass += texture::accumulate_raw(&view, plane_kernel, &mut acc)?;
        }
        texture::normalize(&mut acc, mass);
        values.extend_from_slice(&acc);
    }

    Ok(FeatureVector {
        layout: Layout::Top(plane_kernel),
        values,
    })
}

/// Dims of the color-moment part of the fused vector for window depth q.
pub fn bifd_cm_len(q: usize) -> usize {
    3 * (q - 1)
}

/// The default fused space-time feature: BIFD color moments followed by the
/// EOH TOP histogram; 3(q-1) + 48 dims.
pub fn spacetime_feature(volume: &BlockVolume) -> Result<FeatureVector> {
    fused_feature(volume, Kernel::Eoh)
}

/// Fused vector with a caller-chosen TOP plane kernel.
pub fn fused_feature(volume: &BlockVolume, top_kernel: Kernel) -> Result<FeatureVector> {
    let mut values = bifd_cm(&build_bda(volume)).values;
    values.extend(top_descriptor(volume, top_kernel)?.values);
    Ok(FeatureVector {
        layout: Layout::Fused,
        values,
    })
}
