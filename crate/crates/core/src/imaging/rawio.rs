//! Lossless raw float interchange format.
//!
//! Layout: 4-byte magic `RLK1`, then little-endian `u32` width, height and
//! channels, then `width * height * channels` little-endian `f32` values in
//! planar order.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::srgb::display_encode;
use super::ImageBuffer;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RLK1";
pub const HEADER_LEN: usize = 16;

pub fn encode_raw(img: &ImageBuffer) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + img.data().len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(img.width() as u32).to_le_bytes());
    out.extend_from_slice(&(img.height() as u32).to_le_bytes());
    out.extend_from_slice(&(img.channels() as u32).to_le_bytes());
    for v in img.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses raw bytes; `origin` only labels errors.
pub fn decode_raw(bytes: &[u8], origin: &Path) -> Result<ImageBuffer> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::schema(origin, "truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::schema(origin, "bad magic, expected RLK1"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (w, h, c) = (word(4), word(8), word(12));
    let n = w
        .checked_mul(h)
        .and_then(|v| v.checked_mul(c))
        .ok_or_else(|| Error::schema(origin, "dimensions overflow"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != n * 4 {
        return Err(Error::schema(
            origin,
            format!("expected {} payload bytes, found {}", n * 4, payload.len()),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    ImageBuffer::from_planar(w, h, c, data).map_err(|e| Error::schema(origin, e.to_string()))
}

pub fn write_raw(path: &Path, img: &ImageBuffer) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_raw(img)).map_err(|e| Error::io(path, e))
}

pub fn read_raw(path: &Path) -> Result<ImageBuffer> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_raw(&bytes, path)
}

/// Writes an sRGB 8-bit PNG preview. Previews are for people; the pipeline
/// never reads them back.
pub fn write_preview(path: &Path, img: &ImageBuffer) -> Result<()> {
    let disp = display_encode(img);
    let (w, h) = (disp.width as u32, disp.height as u32);
    let res = match disp.channels {
        1 => image::GrayImage::from_raw(w, h, disp.pixels).map(|i| i.save(path)),
        3 => image::RgbImage::from_raw(w, h, disp.pixels).map(|i| i.save(path)),
        c => {
            return Err(Error::Shape(format!(
                "preview needs 1 or 3 channels, got {c}"
            )))
        }
    };
    match res {
        Some(Ok(())) => Ok(()),
        Some(Err(e)) => Err(Error::io(path, std::io::Error::other(e))),
        None => Err(Error::Shape("preview buffer size".into())),
    }
}
