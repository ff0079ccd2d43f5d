//! Binary greyscale PGM (P5, maxval 255).

use std::path::Path;

use crate::bregman::Vector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Format(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    /// Intensities scaled to `[0, 1]`.
    pub fn to_vector(&self) -> Vector {
        Vector::from_iterator(self.pixels.len(), self.pixels.iter().map(|&p| p as f64 / 255.0))
    }

    /// Clamps to `[0, 1]` and rounds to 8 bits.
    pub fn from_vector(width: usize, height: usize, v: &Vector) -> Result<Self> {
        let pixels = v.iter().map(|&x| (x.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
        Self::new(width, height, pixels)
    }
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // whitespace and comments between header tokens
        while pos < bytes.len() {
            if bytes[pos].is_ascii_whitespace() {
                pos += 1;
            } else if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated header".into()));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| Error::Format("non-ASCII header".into()))?);
    }
    if fields[0] != "P5" {
        return Err(Error::Format(format!("expected magic P5, found {:?}", fields[0])));
    }
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad {what}: {s:?}")))
    };
    let width = num(fields[1], "width")?;
    let height = num(fields[2], "height")?;
    let maxval = num(fields[3], "maxval")?;
    if maxval != 255 {
        return Err(Error::Format(format!("maxval must be 255, found {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::Format("zero image dimension".into()));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Format("missing raster".into()));
    }
    pos += 1;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format("image too large".into()))?;
    let data = &bytes[pos..];
    if data.len() < n {
        return Err(Error::Format(format!(
            "expected {n} bytes of raster, found {}",
            data.len()
        )));
    }
    GrayImage::new(width, height, data[..n].to_vec())
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes)
}

pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let img = GrayImage::new(8, 8, (0..64u8).map(|i| i.wrapping_mul(37)).collect()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        write_pgm(&img, &path).unwrap();
        assert_eq!(read_pgm(&path).unwrap(), img);
    }

    #[test]
    fn minimal_header() {
        let img = parse_pgm(b"P5 2 2 255\n\x00\x01\x02\x03").unwrap();
        assert_eq!((img.width, img.height), (2, 2));
        assert_eq!(img.pixels, vec![0, 1, 2, 3]);
        let img = parse_pgm(b"P5\n# comment\n2 1\n255\n\xff\x00").unwrap();
        assert_eq!(img.pixels, vec![255, 0]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(
            parse_pgm(b"P5 2 2 65535\n\x00\x00\x00\x00"),
            Err(Error::Format(_))
        ));
        assert!(matches!(parse_pgm(b"P2 2 2 255\n0 0 0 0"), Err(Error::Format(_))));
        assert!(matches!(parse_pgm(b"P5 2 2 255\n\x00"), Err(Error::Format(_))));
        assert!(matches!(parse_pgm(b"P5 2"), Err(Error::Format(_))));
        assert!(matches!(parse_pgm(b"P5 x 2 255\n\x00\x00"), Err(Error::Format(_))));
    }

    #[test]
    fn vector_conversion_is_lossless_for_quantised() {
        let img = GrayImage::new(3, 2, vec![0, 17, 128, 200, 254, 255]).unwrap();
        let back = GrayImage::from_vector(3, 2, &img.to_vector()).unwrap();
        assert_eq!(back, img);
    }
}
