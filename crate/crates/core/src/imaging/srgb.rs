//! Standard piecewise sRGB transfer for 8-bit previews.

use super::ImageBuffer;

#[inline]
pub fn linear_to_srgb(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if x <= 0.0031308 {
        12.92 * x
    } else {
        1.055 * x.powf(1.0 / 2.4) - 0.055
    }
}

#[inline]
pub fn srgb_to_linear(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
pub fn encode_value(x: f32) -> u8 {
    let x = if x.is_finite() { x as f64 } else { 0.0 };
    (linear_to_srgb(x) * 255.0).round() as u8
}

#[inline]
pub fn decode_value(code: u8) -> f32 {
    srgb_to_linear(code as f64 / 255.0) as f32
}

/// 8-bit display image, interleaved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisplayImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
}

pub fn display_encode(img: &ImageBuffer) -> DisplayImage {
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let mut pixels = Vec::with_capacity(w * h * c);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                pixels.push(encode_value(img.get(x, y, ch)));
            }
        }
    }
    DisplayImage {
        width: w,
        height: h,
        channels: c,
        pixels,
    }
}

pub fn display_decode(img: &DisplayImage) -> ImageBuffer {
    ImageBuffer::from_fn(img.width, img.height, img.channels, |x, y, c| {
        decode_value(img.pixels[(y * img.width + x) * img.channels + c])
    })
}
