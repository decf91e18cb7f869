//! Binary PPM (P6) and PGM (P5) codec, maxval 255 only.
//!
//! Header tokens are separated by whitespace; `#` starts a comment running to
//! end of line and may appear between any two tokens.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{Frame, GrayFrame};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        frame: None,
        detail: detail.into(),
    }
}

/// Reads the next header token, skipping whitespace and `#` comments.
/// Returns the token and the offset just past it.
fn next_token(data: &[u8], mut pos: usize) -> Option<(&[u8], usize)> {
    loop {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < data.len() && data[pos] == b'#' {
            while pos < data.len() && data[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        break;
    }
    if pos >= data.len() {
        return None;
    }
    let start = pos;
    while pos < data.len() && !data[pos].is_ascii_whitespace() && data[pos] != b'#' {
        pos += 1;
    }
    Some((&data[start..pos], pos))
}

struct PnmHeader {
    width: usize,
    height: usize,
    /// Offset of the first raster byte.
    raster: usize,
}

/// Parses `<magic> width height maxval` and positions the cursor one
/// whitespace byte past maxval, at the raster.
fn parse_header(path: &Path, data: &[u8], magic: &[u8]) -> Result<PnmHeader> {
    let (tok, mut pos) = next_token(data, 0)
        .ok_or_else(|| format_err(path, "empty file"))?;
    if tok != magic {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: format!(
                "expected magic {:?}, found {:?}",
                String::from_utf8_lossy(magic),
                String::from_utf8_lossy(&tok[..tok.len().min(8)])
            ),
        });
    }
    let mut fields = [0usize; 3];
    for (i, name) in ["width", "height", "maxval"].iter().enumerate() {
        let (tok, next) = next_token(data, pos)
            .ok_or_else(|| format_err(path, format!("truncated header: missing {name}")))?;
        let text = std::str::from_utf8(tok)
            .map_err(|_| format_err(path, format!("non-ASCII {name} field")))?;
        fields[i] = text
            .parse()
            .map_err(|_| format_err(path, format!("bad {name} field {text:?}")))?;
        pos = next;
    }
    let [width, height, maxval] = fields;
    if width < 1 || height < 1 {
        return Err(format_err(path, format!("bad dimensions {width}x{height}")));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: format!("maxval {maxval} not supported, only 255"),
        });
    }
    // Exactly one whitespace byte separates maxval from the raster.
    if pos >= data.len() || !data[pos].is_ascii_whitespace() {
        return Err(format_err(path, "missing raster separator after maxval"));
    }
    Ok(PnmHeader {
        width,
        height,
        raster: pos + 1,
    })
}

fn raster<'d>(path: &Path, data: &'d [u8], header: &PnmHeader, channels: usize) -> Result<&'d [u8]> {
    let need = channels * header.width * header.height;
    let have = data.len() - header.raster;
    if have < need {
        return Err(format_err(
            path,
            format!("raster truncated: need {need} bytes, have {have}"),
        ));
    }
    Ok(&data[header.raster..header.raster + need])
}

/// Decodes a binary P6 PPM file into an RGB frame with the given index.
pub fn decode_ppm(path: &Path, index: u64) -> Result<Frame> {
    let data = fs::read(path).map_err(|e| io_err(path, e))?;
    let header = parse_header(path, &data, b"P6")?;
    let raster = raster(path, &data, &header, 3)?;
    Ok(Frame::new(header.width, header.height, index, raster.to_vec()))
}

/// Decodes a binary P5 PGM file into a gray frame with the given index.
pub fn decode_pgm(path: &Path, index: u64) -> Result<GrayFrame> {
    let data = fs::read(path).map_err(|e| io_err(path, e))?;
    let header = parse_header(path, &data, b"P5")?;
    let raster = raster(path, &data, &header, 1)?;
    Ok(GrayFrame::new(
        header.width,
        header.height,
        index,
        raster.to_vec(),
    ))
}

/// Decodes a PPM or PGM file (by magic number) into an RGB frame; PGM gray
/// values are replicated across the three channels.
pub fn decode_frame_file(path: &Path, index: u64) -> Result<Frame> {
    let data = fs::read(path).map_err(|e| io_err(path, e))?;
    let magic = next_token(&data, 0).map(|(tok, _)| tok);
    match magic {
        Some(b"P6") => {
            let header = parse_header(path, &data, b"P6")?;
            let raster = raster(path, &data, &header, 3)?;
            Ok(Frame::new(header.width, header.height, index, raster.to_vec()))
        }
        Some(b"P5") => {
            let header = parse_header(path, &data, b"P5")?;
            let raster = raster(path, &data, &header, 1)?;
            let mut rgb = Vec::with_capacity(3 * raster.len());
            for &g in raster {
                rgb.extend_from_slice(&[g, g, g]);
            }
            Ok(Frame::new(header.width, header.height, index, rgb))
        }
        _ => Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: "not a P5/P6 PNM file".into(),
        }),
    }
}

/// Encodes an RGB raster as binary P6.
pub fn encode_ppm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), 3 * width * height);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Encodes a gray raster as binary P5.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn write_ppm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    fs::write(path, encode_ppm(width, height, pixels)).map_err(|e| io_err(path, e))
}

pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    fs::write(path, encode_pgm(width, height, pixels)).map_err(|e| io_err(path, e))
}
