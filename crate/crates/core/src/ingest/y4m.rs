//! Y4M (YUV4MPEG2) reader for 4:2:0 and 4:4:4 8-bit streams.
//!
//! Layout: one header line `YUV4MPEG2 W<w> H<h> ...\n`, then per frame a
//! `FRAME[ params]\n` marker followed by packed Y, Cb, Cr planes. 4:2:0
//! chroma is upsampled by nearest neighbor; YCbCr is taken as full range
//! and converted with BT.601 coefficients.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::ingest::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Chroma {
    C420,
    C444,
}

pub struct Y4mReader {
    path: PathBuf,
    reader: BufReader<File>,
    width: usize,
    height: usize,
    chroma: Chroma,
    /// Reusable plane buffer, `y_len + 2 * c_len` bytes.
    planes: Vec<u8>,
}

impl Y4mReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut reader = BufReader::new(file);
        // A malformed first line (not even newline-terminated) means this
        // is not a Y4M stream at all.
        let header = match read_line(path, &mut reader, None) {
            Ok(Some(line)) => line,
            Ok(None) => return Err(format_err(path, None, "empty file")),
            Err(e @ Error::Io { .. }) => return Err(e),
            Err(_) => {
                return Err(Error::UnsupportedFormat {
                    path: path.to_path_buf(),
                    detail: "missing YUV4MPEG2 signature".into(),
                })
            }
        };
        let mut tags = header.split(' ').filter(|t| !t.is_empty());
        if tags.next() != Some("YUV4MPEG2") {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: "missing YUV4MPEG2 signature".into(),
            });
        }
        let mut width = None;
        let mut height = None;
        let mut chroma = Chroma::C420; // stream default per the format
        for tag in tags {
            let (key, value) = tag.split_at(1);
            match key {
                "W" => width = Some(parse_dim(path, "W", value)?),
                "H" => height = Some(parse_dim(path, "H", value)?),
                "C" => {
                    chroma = match value {
                        "420" | "420jpeg" | "420mpeg2" | "420paldv" => Chroma::C420,
                        "444" => Chroma::C444,
                        other => {
                            return Err(Error::UnsupportedFormat {
                                path: path.to_path_buf(),
                                detail: format!("chroma mode C{other} not supported"),
                            })
                        }
                    }
                }
                // F (rate), I (interlace), A (aspect), X (extension): ignored.
                _ => {}
            }
        }
        let width = width.ok_or_else(|| format_err(path, None, "header missing W tag"))?;
        let height = height.ok_or_else(|| format_err(path, None, "header missing H tag"))?;
        if chroma == Chroma::C420 && (width % 2 != 0 || height % 2 != 0) {
            return Err(format_err(
                path,
                None,
                format!("4:2:0 needs even dimensions, got {width}x{height}"),
            ));
        }
        let c_len = match chroma {
            Chroma::C420 => (width / 2) * (height / 2),
            Chroma::C444 => width * height,
        };
        Ok(Y4mReader {
            path: path.to_path_buf(),
            reader,
            width,
            height,
            chroma,
            planes: vec![0; width * height + 2 * c_len],
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Reads the next frame, or `None` at a clean end of stream.
    pub fn next_frame(&mut self, index: u64) -> Result<Option<Frame>> {
        let Some(marker) = read_line(&self.path, &mut self.reader, Some(index))? else {
            return Ok(None);
        };
        if marker != "FRAME" && !marker.starts_with("FRAME ") {
            return Err(format_err(
                &self.path,
                Some(index),
                format!("expected FRAME marker, found {:?}", &marker[..marker.len().min(16)]),
            ));
        }
        self.reader.read_exact(&mut self.planes).map_err(|_| {
            format_err(&self.path, Some(index), "truncated frame payload")
        })?;
        Ok(Some(self.to_rgb(index)))
    }

    fn to_rgb(&self, index: u64) -> Frame {
        let (w, h) = (self.width, self.height);
        let y_plane = &self.planes[..w * h];
        let (cb_plane, cr_plane) = match self.chroma {
            Chroma::C420 => {
                let cw = w / 2;
                let ch = h / 2;
                let cb = &self.planes[w * h..w * h + cw * ch];
                let cr = &self.planes[w * h + cw * ch..];
                (cb, cr)
            }
            Chroma::C444 => {
                let cb = &self.planes[w * h..2 * w * h];
                let cr = &self.planes[2 * w * h..];
                (cb, cr)
            }
        };
        let mut rgb = Vec::with_capacity(3 * w * h);
        for y in 0..h {
            for x in 0..w {
                let luma = f64::from(y_plane[y * w + x]);
                let ci = match self.chroma {
                    Chroma::C420 => (y / 2) * (w / 2) + x / 2,
                    Chroma::C444 => y * w + x,
                };
                let cb = f64::from(cb_plane[ci]) - 128.0;
                let cr = f64::from(cr_plane[ci]) - 128.0;
                let r = luma + 1.402 * cr;
                let g = luma - 0.344136 * cb - 0.714136 * cr;
                let b = luma + 1.772 * cb;
                rgb.push(r.round().clamp(0.0, 255.0) as u8);
                rgb.push(g.round().clamp(0.0, 255.0) as u8);
                rgb.push(b.round().clamp(0.0, 255.0) as u8);
            }
        }
        Frame::new(w, h, index, rgb)
    }
}

fn parse_dim(path: &Path, tag: &str, value: &str) -> Result<usize> {
    let n: usize = value
        .parse()
        .map_err(|_| format_err(path, None, format!("bad {tag} tag value {value:?}")))?;
    if n < 1 {
        return Err(format_err(path, None, format!("{tag} tag must be >= 1")));
    }
    Ok(n)
}

fn format_err(path: &Path, frame: Option<u64>, detail: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        frame,
        detail: detail.into(),
    }
}

/// Reads bytes up to (not including) `\n`. Returns `None` at a clean EOF
/// before any byte is read.
fn read_line(path: &Path, reader: &mut impl Read, frame: Option<u64>) -> Result<Option<String>> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        match reader.read(&mut byte) {
            Ok(0) => {
                if line.is_empty() {
                    return Ok(None);
                }
                return Err(format_err(path, frame, "unterminated header line"));
            }
            Ok(_) => {
                if byte[0] == b'\n' {
                    let text = String::from_utf8(line)
                        .map_err(|_| format_err(path, frame, "non-UTF8 header line"))?;
                    return Ok(Some(text));
                }
                if line.len() > 4096 {
                    return Err(format_err(path, frame, "header line too long"));
                }
                line.push(byte[0]);
            }
            Err(e) => {
                return Err(Error::Io {
                    path: path.to_path_buf(),
                    source: e,
                })
            }
        }
    }
}

/// Encodes gray frames as a 4:2:0 Y4M stream with neutral chroma. With
/// Cb = Cr = 128 the RGB output reproduces the luma exactly.
pub fn encode_gray_y4m(width: usize, height: usize, frames: &[Vec<u8>]) -> Vec<u8> {
    assert!(width % 2 == 0 && height % 2 == 0, "4:2:0 needs even dims");
    let mut out = format!("YUV4MPEG2 W{width} H{height} F25:1 Ip A1:1 C420\n").into_bytes();
    let c_len = (width / 2) * (height / 2);
    for frame in frames {
        assert_eq!(frame.len(), width * height);
        out.extend_from_slice(b"FRAME\n");
        out.extend_from_slice(frame);
        out.extend(std::iter::repeat(128u8).take(2 * c_len));
    }
    out
}
