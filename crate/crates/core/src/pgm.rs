//! Minimal PGM reader (P2/P5) and writer (P5).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Image;

pub const MAX_MAXVAL: u32 = 65535;

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: u32,
    /// Offset of the first payload byte.
    offset: usize,
}

fn skip_space_and_comments(data: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < data.len() && data[pos] == b'#' {
            while pos < data.len() && data[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn read_number(data: &[u8], pos: usize, what: &str) -> Result<(u64, usize)> {
    let start = skip_space_and_comments(data, pos);
    let mut end = start;
    while end < data.len() && data[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return Err(Error::PgmHeader(format!("expected {what}")));
    }
    let text = std::str::from_utf8(&data[start..end]).expect("ascii digits");
    let value = text
        .parse::<u64>()
        .map_err(|_| Error::PgmHeader(format!("{what} out of range")))?;
    Ok((value, end))
}

fn parse_header(data: &[u8]) -> Result<Header> {
    if data.len() < 2 || data[0] != b'P' {
        let magic = String::from_utf8_lossy(&data[..data.len().min(2)]).into_owned();
        return Err(Error::PgmUnsupported(magic));
    }
    let binary = match data[1] {
        b'2' => false,
        b'5' => true,
        _ => {
            return Err(Error::PgmUnsupported(
                String::from_utf8_lossy(&data[..2]).into_owned(),
            ))
        }
    };
    let (width, pos) = read_number(data, 2, "width")?;
    let (height, pos) = read_number(data, pos, "height")?;
    let (maxval, pos) = read_number(data, pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::PgmHeader(format!("empty image {width}x{height}")));
    }
    if maxval == 0 || maxval > MAX_MAXVAL as u64 {
        return Err(Error::PgmHeader(format!(
            "maxval {maxval} outside 1..=65535"
        )));
    }
    let at_end = pos >= data.len();
    if (at_end && binary) || (!at_end && !data[pos].is_ascii_whitespace()) {
        return Err(Error::PgmHeader("missing whitespace after maxval".into()));
    }
    Ok(Header {
        binary,
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        offset: pos + 1,
    })
}

/// Decodes a P2 or P5 byte stream; samples keep their native scale `[0, maxval]`.
pub fn parse_pgm(data: &[u8]) -> Result<Image> {
    parse_pgm_with_maxval(data).map(|(img, _)| img)
}

/// [`parse_pgm`] that also returns the header's maxval.
pub fn parse_pgm_with_maxval(data: &[u8]) -> Result<(Image, u32)> {
    let hdr = parse_header(data)?;
    let n = hdr
        .width
        .checked_mul(hdr.height)
        .ok_or_else(|| Error::PgmHeader("dimensions overflow".into()))?;
    let mut values = Vec::with_capacity(n);
    if hdr.binary {
        let bytes_per = if hdr.maxval > 255 { 2 } else { 1 };
        let payload = data.get(hdr.offset..).unwrap_or(&[]);
        let found = payload.len() / bytes_per;
        if found < n {
            return Err(Error::PgmTruncated { expected: n, found });
        }
        for k in 0..n {
            let v = if bytes_per == 2 {
                u16::from_be_bytes([payload[2 * k], payload[2 * k + 1]]) as u32
            } else {
                payload[k] as u32
            };
            if v > hdr.maxval {
                return Err(Error::PgmPayload(format!(
                    "sample {v} exceeds maxval {}",
                    hdr.maxval
                )));
            }
            values.push(v as f64);
        }
    } else {
        let mut pos = hdr.offset.min(data.len());
        for found in 0..n {
            let start = skip_space_and_comments(data, pos);
            if start >= data.len() {
                return Err(Error::PgmTruncated { expected: n, found });
            }
            let (v, end) = read_number(data, start, "sample")
                .map_err(|_| Error::PgmPayload(format!("non-numeric sample at byte {start}")))?;
            if v > hdr.maxval as u64 {
                return Err(Error::PgmPayload(format!(
                    "sample {v} exceeds maxval {}",
                    hdr.maxval
                )));
            }
            values.push(v as f64);
            pos = end;
        }
    }
    Ok((Image::new(hdr.width, hdr.height, values)?, hdr.maxval))
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Image> {
    parse_pgm(&fs::read(path)?)
}

pub fn load_pgm_with_maxval(path: impl AsRef<Path>) -> Result<(Image, u32)> {
    parse_pgm_with_maxval(&fs::read(path)?)
}

/// Clamps to `[0, maxval]`, rounds half to even.
#[inline]
pub fn quantize(v: f64, maxval: u32) -> u32 {
    if v.is_nan() {
        return 0;
    }
    v.clamp(0.0, maxval as f64).round_ties_even() as u32
}

/// P5 encoding of an image; 16-bit big-endian samples when `maxval > 255`.
pub fn encode_pgm(img: &Image, maxval: u32) -> Result<Vec<u8>> {
    if maxval == 0 || maxval > MAX_MAXVAL {
        return Err(Error::PgmHeader(format!(
            "maxval {maxval} outside 1..=65535"
        )));
    }
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), maxval).into_bytes();
    let wide = maxval > 255;
    out.reserve(img.len() * if wide { 2 } else { 1 });
    for &v in img.values() {
        let q = quantize(v, maxval);
        if wide {
            out.extend_from_slice(&(q as u16).to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    Ok(out)
}

pub fn save_pgm(img: &Image, path: impl AsRef<Path>, maxval: u32) -> Result<()> {
    fs::write(path, encode_pgm(img, maxval)?)?;
    Ok(())
}
