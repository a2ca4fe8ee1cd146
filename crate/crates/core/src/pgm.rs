//! Binary 8-bit PGM (`P5`) images.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmImage {
    width: usize,
    height: usize,
    maxval: u8,
    pixels: Vec<u8>,
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

impl PgmImage {
    pub fn new(width: usize, height: usize, maxval: u8, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(format_err("image must be non-empty"));
        }
        if maxval == 0 {
            return Err(format_err("maxval must be positive"));
        }
        if pixels.len() != width * height {
            return Err(format_err(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|&&p| p > maxval) {
            return Err(format_err(format!(
                "pixel value {p} exceeds maxval {maxval}"
            )));
        }
        Ok(Self {
            width,
            height,
            maxval,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let pixels = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self::new(width, height, 255, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn maxval(&self) -> u8 {
        self.maxval
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Parses a `P5` file. Header comments (`#` to end of line) are allowed
    /// between tokens; exactly one whitespace byte separates maxval from the
    /// raster, and the raster must be exactly `width * height` bytes.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let magic = next_token(bytes, &mut pos)?;
        if magic != b"P5" {
            return Err(format_err(format!(
                "unsupported magic {:?}; only binary P5 is read",
                String::from_utf8_lossy(magic)
            )));
        }
        let width = parse_num(next_token(bytes, &mut pos)?, "width")?;
        let height = parse_num(next_token(bytes, &mut pos)?, "height")?;
        let maxval = parse_num(next_token(bytes, &mut pos)?, "maxval")?;
        if maxval == 0 || maxval > 255 {
            return Err(format_err(format!(
                "maxval {maxval} outside 1..=255 (8-bit only)"
            )));
        }
        match bytes.get(pos) {
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            _ => return Err(format_err("missing whitespace after maxval")),
        }
        let raster = &bytes[pos..];
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| format_err("image dimensions overflow"))?;
        if raster.len() != expected {
            return Err(format_err(format!(
                "expected {expected} raster bytes for {width}x{height}, found {}",
                raster.len()
            )));
        }
        Self::new(width, height, maxval as u8, raster.to_vec())
    }

    /// Canonical encoding: `P5\n<w> <h>\n<maxval>\n` then the raster.
    pub fn encode(&self) -> Vec<u8> {
        let header = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval);
        let mut out = Vec::with_capacity(header.len() + self.pixels.len());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&self.pixels);
        out
    }

    /// Pixel values as an `H x W` plane, unscaled.
    pub fn to_plane(&self) -> Tensor<f64> {
        Tensor::new(
            &[self.height, self.width],
            self.pixels.iter().map(|&p| f64::from(p)).collect(),
        )
        .expect("dimensions validated")
    }

    /// Maps `|v|` linearly from `[0, max|v|]` onto `[0, 255]`, rounding to
    /// nearest. An all-zero plane maps to all zeros.
    pub fn from_magnitudes(plane: &Tensor<f64>) -> Result<Self> {
        if plane.rank() != 2 {
            return Err(Error::InvalidArgument(format!(
                "expected an H x W plane, got shape {:?}",
                plane.shape()
            )));
        }
        let peak = plane.max_abs();
        let pixels = plane
            .data()
            .iter()
            .map(|v| {
                if peak > 0.0 {
                    (v.abs() / peak * 255.0).round() as u8
                } else {
                    0
                }
            })
            .collect();
        Self::new(plane.shape()[1], plane.shape()[0], 255, pixels)
    }
}

fn skip_space_and_comments(bytes: &[u8], pos: &mut usize) {
    while let Some(&b) = bytes.get(*pos) {
        if b == b'#' {
            while let Some(&c) = bytes.get(*pos) {
                *pos += 1;
                if c == b'\n' || c == b'\r' {
                    break;
                }
            }
        } else if b.is_ascii_whitespace() {
            *pos += 1;
        } else {
            break;
        }
    }
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    skip_space_and_comments(bytes, pos);
    let start = *pos;
    while bytes
        .get(*pos)
        .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
    {
        *pos += 1;
    }
    if start == *pos {
        return Err(format_err("truncated header"));
    }
    Ok(&bytes[start..*pos])
}

fn parse_num(tok: &[u8], what: &str) -> Result<usize> {
    std::str::from_utf8(tok)
        .ok()
        .filter(|s| s.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| format_err(format!("invalid {what} {:?}", String::from_utf8_lossy(tok))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_comments() {
        let mut bytes = b"P5\n# made by hand\n3 2 # dims\n200\n".to_vec();
        bytes.extend_from_slice(&[0, 1, 2, 100, 150, 200]);
        let img = PgmImage::decode(&bytes).unwrap();
        assert_eq!((img.width(), img.height(), img.maxval()), (3, 2, 200));
        let canonical = img.encode();
        assert_eq!(PgmImage::decode(&canonical).unwrap().encode(), canonical);
    }

    #[test]
    fn rejects_bad_files() {
        for bad in [
            &b"P2\n1 1\n255\n0"[..],
            b"P5\n2 2\n255\n\x00\x00\x00",
            b"P5\n1 1\n256\n\x00",
            b"P5\n1 1\n0\n\x00",
            b"P5\n1 1\n10\n\x0b",
            b"P5\n1",
            b"P5\n-1 1\n255\n\x00",
        ] {
            assert!(
                matches!(PgmImage::decode(bad), Err(Error::Format(_))),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn magnitude_normalization() {
        let plane = Tensor::new(&[1, 3], vec![-2.0, 1.0, 0.0]).unwrap();
        assert_eq!(
            PgmImage::from_magnitudes(&plane).unwrap().pixels(),
            &[255, 128, 0]
        );
        let zero = Tensor::new(&[2, 2], vec![0.0; 4]).unwrap();
        assert!(PgmImage::from_magnitudes(&zero)
            .unwrap()
            .pixels()
            .iter()
            .all(|&p| p == 0));
    }
}
