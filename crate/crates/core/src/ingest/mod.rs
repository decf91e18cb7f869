//! Frame ingestion: sequence decoding, grayscale conversion and the block
//! grid that every later stage works on.
//!
//! Supported sources are a directory of binary PPM/PGM files (lexicographic
//! frame order) or a single Y4M file (4:2:0 or 4:4:4 chroma).

mod pnm;
mod y4m;

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub use pnm::{
    decode_frame_file, decode_pgm, decode_ppm, encode_pgm, encode_ppm, write_pgm, write_ppm,
};
pub use y4m::encode_gray_y4m;

/// One decoded RGB video frame, 8 bits per channel, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    /// 0-based frame number within its sequence.
    pub index: u64,
    /// Interleaved RGB, `3 * width * height` bytes.
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, index: u64, pixels: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1, "frame dimensions must be >= 1");
        assert_eq!(pixels.len(), 3 * width * height, "RGB raster size mismatch");
        Frame {
            width,
            height,
            index,
            pixels,
        }
    }

    #[inline]
    pub fn rgb(&self, x: usize, y: usize) -> (u8, u8, u8) {
        let i = 3 * (y * self.width + x);
        (self.pixels[i], self.pixels[i + 1], self.pixels[i + 2])
    }
}

/// Single-channel luminance frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayFrame {
    pub width: usize,
    pub height: usize,
    pub index: u64,
    pub pixels: Vec<u8>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, index: u64, pixels: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1, "frame dimensions must be >= 1");
        assert_eq!(pixels.len(), width * height, "gray raster size mismatch");
        GrayFrame {
            width,
            height,
            index,
            pixels,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// View of the whole frame.
    pub fn view(&self) -> GrayView<'_> {
        GrayView {
            data: &self.pixels,
            width: self.width,
            height: self.height,
            stride: self.width,
        }
    }

    /// View of one grid block. Fails if `at` is outside the grid.
    pub fn block(&self, grid: &BlockGrid, at: BlockRef) -> Result<GrayView<'_>> {
        grid.check(at)?;
        let (x0, y0) = grid.block_origin(at);
        debug_assert!(x0 + grid.block_width <= self.width);
        debug_assert!(y0 + grid.block_height <= self.height);
        Ok(GrayView {
            data: &self.pixels[y0 * self.width + x0..],
            width: grid.block_width,
            height: grid.block_height,
            stride: self.width,
        })
    }
}

/// Borrowed rectangular window into a gray raster. `stride` is the row pitch
/// of the underlying buffer, which may exceed `width` for block views.
#[derive(Debug, Clone, Copy)]
pub struct GrayView<'a> {
    data: &'a [u8],
    width: usize,
    height: usize,
    stride: usize,
}

impl<'a> GrayView<'a> {
    pub fn from_raster(data: &'a [u8], width: usize, height: usize) -> Self {
        assert_eq!(data.len(), width * height);
        GrayView {
            data,
            width,
            height,
            stride: width,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.stride + x]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &'a [u8] {
        &self.data[y * self.stride..y * self.stride + self.width]
    }

    /// Copies the window into a contiguous buffer.
    pub fn to_vec(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.width * self.height);
        for y in 0..self.height {
            out.extend_from_slice(self.row(y));
        }
        out
    }
}

/// ITU-R BT.601 luminance, rounded and clamped to `[0, 255]`.
pub fn to_grayscale(frame: &Frame) -> GrayFrame {
    let mut pixels = Vec::with_capacity(frame.width * frame.height);
    for chunk in frame.pixels.chunks_exact(3) {
        let y = 0.299 * f64::from(chunk[0]) + 0.587 * f64::from(chunk[1]) + 0.114 * f64::from(chunk[2]);
        pixels.push(y.round().clamp(0.0, 255.0) as u8);
    }
    GrayFrame::new(frame.width, frame.height, frame.index, pixels)
}

/// Partition of a frame into non-overlapping `block_width x block_height`
/// blocks. Trailing pixels that do not fill a whole block are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockGrid {
    pub block_width: usize,
    pub block_height: usize,
    pub rows: usize,
    pub cols: usize,
}

/// Grid coordinate of one block: row `i`, column `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockRef {
    pub row: usize,
    pub col: usize,
}

impl BlockRef {
    pub fn new(row: usize, col: usize) -> Self {
        BlockRef { row, col }
    }
}

/// Builds the block grid: `rows = floor(image_height / block_height)`,
/// `cols = floor(image_width / block_width)`.
pub fn make_grid(
    image_width: usize,
    image_height: usize,
    block_width: usize,
    block_height: usize,
) -> Result<BlockGrid> {
    if image_width < 1 || image_height < 1 || block_width < 1 || block_height < 1 {
        return Err(Error::InvalidConfig(
            "image and block dimensions must be >= 1".into(),
        ));
    }
    if block_width > image_width || block_height > image_height {
        return Err(Error::InvalidConfig(format!(
            "block {}x{} larger than image {}x{}",
            block_width, block_height, image_width, image_height
        )));
    }
    Ok(BlockGrid {
        block_width,
        block_height,
        rows: image_height / block_height,
        cols: image_width / block_width,
    })
}

impl BlockGrid {
    /// Number of blocks in the grid.
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major flat index of a block.
    #[inline]
    pub fn index(&self, at: BlockRef) -> usize {
        at.row * self.cols + at.col
    }

    /// Pixel coordinates of the block's top-left corner.
    #[inline]
    pub fn block_origin(&self, at: BlockRef) -> (usize, usize) {
        (at.col * self.block_width, at.row * self.block_height)
    }

    pub fn check(&self, at: BlockRef) -> Result<()> {
        if at.row >= self.rows || at.col >= self.cols {
            return Err(Error::BlockOutOfRange {
                row: at.row,
                col: at.col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    /// Iterates blocks in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = BlockRef> + '_ {
        let cols = self.cols;
        (0..self.rows).flat_map(move |row| (0..cols).map(move |col| BlockRef { row, col }))
    }
}

/// Streaming frame source; yields frames with strictly increasing indices
/// starting at 0 and verifies that all frames share one geometry.
pub struct FrameSource {
    inner: SourceImpl,
    next_index: u64,
    dims: Option<(usize, usize)>,
}

enum SourceImpl {
    Files { paths: Vec<PathBuf>, cursor: usize },
    Y4m(y4m::Y4mReader),
}

/// Opens a frame sequence. A directory is read as PPM/PGM files in
/// lexicographic name order; a file is decoded as Y4M.
pub fn load_sequence(source: &Path) -> Result<FrameSource> {
    let meta = fs::metadata(source).map_err(|e| Error::Io {
        path: source.to_path_buf(),
        source: e,
    })?;
    let inner = if meta.is_dir() {
        let mut paths: Vec<PathBuf> = fs::read_dir(source)
            .map_err(|e| Error::Io {
                path: source.to_path_buf(),
                source: e,
            })?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                matches!(
                    p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
                    Some("ppm") | Some("pgm")
                )
            })
            .collect();
        paths.sort();
        SourceImpl::Files { paths, cursor: 0 }
    } else {
        SourceImpl::Y4m(y4m::Y4mReader::open(source)?)
    };
    Ok(FrameSource {
        inner,
        next_index: 0,
        dims: None,
    })
}

impl FrameSource {
    fn next_frame(&mut self) -> Result<Option<Frame>> {
        let index = self.next_index;
        let frame = match &mut self.inner {
            SourceImpl::Files { paths, cursor } => {
                if *cursor >= paths.len() {
                    return Ok(None);
                }
                let path = &paths[*cursor];
                *cursor += 1;
                Some(pnm::decode_frame_file(path, index)?)
            }
            SourceImpl::Y4m(reader) => reader.next_frame(index)?,
        };
        let Some(frame) = frame else { return Ok(None) };
        match self.dims {
            None => self.dims = Some((frame.width, frame.height)),
            Some((w, h)) => {
                if frame.width != w || frame.height != h {
                    return Err(Error::Format {
                        path: self.source_path(),
                        frame: Some(index),
                        detail: format!(
                            "dimension mismatch: sequence is {}x{}, frame is {}x{}",
                            w, h, frame.width, frame.height
                        ),
                    });
                }
            }
        }
        self.next_index += 1;
        Ok(Some(frame))
    }

    fn source_path(&self) -> PathBuf {
        match &self.inner {
            SourceImpl::Files { paths, cursor } => paths
                .get(cursor.saturating_sub(1))
                .cloned()
                .unwrap_or_default(),
            SourceImpl::Y4m(reader) => reader.path().to_path_buf(),
        }
    }
}

impl Iterator for FrameSource {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_floor_arithmetic() {
        let g = make_grid(320, 240, 32, 32).unwrap();
        assert_eq!((g.rows, g.cols), (7, 10));

        let g = make_grid(320, 250, 32, 32).unwrap();
        assert_eq!((g.rows, g.cols), (7, 10));

        assert!(matches!(
            make_grid(31, 240, 32, 32),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn grid_never_covers_partial_blocks() {
        for (iw, ih, bw, bh) in [(320, 240, 32, 32), (321, 241, 32, 32), (33, 97, 16, 24)] {
            let g = make_grid(iw, ih, bw, bh).unwrap();
            assert!(g.rows * bh <= ih);
            assert!(g.cols * bw <= iw);
            assert!(g.rows >= 1 && g.cols >= 1);
        }
    }

    #[test]
    fn grayscale_fixed_points() {
        let f = Frame::new(3, 1, 0, vec![255, 255, 255, 0, 0, 0, 100, 100, 100]);
        let g = to_grayscale(&f);
        assert_eq!(g.pixels, vec![255, 0, 100]);
    }

    #[test]
    fn grayscale_achromatic_identity() {
        for v in 0..=255u8 {
            let f = Frame::new(1, 1, 0, vec![v, v, v]);
            assert_eq!(to_grayscale(&f).pixels[0], v);
        }
    }

    #[test]
    fn block_view_origin_and_bounds() {
        let g = make_grid(320, 240, 32, 32).unwrap();
        assert_eq!(g.block_origin(BlockRef::new(0, 0)), (0, 0));
        assert_eq!(g.block_origin(BlockRef::new(1, 2)), (64, 32));

        let mut pixels = vec![0u8; 320 * 240];
        // mark (64, 32)
        pixels[32 * 320 + 64] = 7;
        let frame = GrayFrame::new(320, 240, 0, pixels);
        let view = frame.block(&g, BlockRef::new(1, 2)).unwrap();
        assert_eq!(view.get(0, 0), 7);
        assert_eq!(view.width(), 32);

        assert!(matches!(
            frame.block(&g, BlockRef::new(7, 0)),
            Err(Error::BlockOutOfRange { .. })
        ));
    }
}
