use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::DepthMap;
use crate::error::Result;
use crate::imaging::ImageBuffer;

/// Depth corruption applied to simulate a consumer depth sensor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradeParams {
    pub noise_sigma: f64,
    /// Gaussian blur sigma in pixels; 0 disables the blur.
    pub blur_sigma: f64,
    /// Half-width of the truncated blur kernel (2 gives 5x5).
    pub blur_radius: usize,
}

impl Default for DegradeParams {
    fn default() -> Self {
        DegradeParams {
            noise_sigma: 6.25e-2,
            blur_sigma: 1.0,
            blur_radius: 2,
        }
    }
}

impl DegradeParams {
    pub const NONE: DegradeParams = DegradeParams {
        noise_sigma: 0.0,
        blur_sigma: 0.0,
        blur_radius: 2,
    };
}

/// Adds i.i.d. Gaussian noise, then applies a separable truncated Gaussian
/// blur (edge-replicated), then clamps to `[0, 1]`. Invalid pixels stay
/// invalid and do not contribute to the blur.
pub fn degrade_depth(depth: &DepthMap, params: &DegradeParams, seed: u64) -> Result<DepthMap> {
    let img = depth.image();
    let (w, h) = (img.width(), img.height());
    let valid: Vec<bool> = img.data().iter().map(|&v| v > 0.0).collect();

    let mut values: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
    if params.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, params.noise_sigma)
            .map_err(|e| crate::Error::Validation(e.to_string()))?;
        for v in values.iter_mut() {
            // one draw per pixel, valid or not, so the stream is layout-stable
            let n = normal.sample(&mut rng);
            *v += n;
        }
    }

    if params.blur_sigma > 0.0 {
        let kernel = gaussian_kernel(params.blur_sigma, params.blur_radius);
        values = blur_axis(&values, &valid, w, h, &kernel, true);
        values = blur_axis(&values, &valid, w, h, &kernel, false);
    }

    let out: Vec<f32> = values
        .iter()
        .zip(&valid)
        .map(|(&v, &ok)| if ok { v.clamp(0.0, 1.0) as f32 } else { 0.0 })
        .collect();
    DepthMap::new(ImageBuffer::from_planar(w, h, 1, out)?)
}

fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let k: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

fn blur_axis(
    src: &[f64],
    valid: &[bool],
    w: usize,
    h: usize,
    kernel: &[f64],
    horizontal: bool,
) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut out = src.to_vec();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !valid[i] {
                continue;
            }
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (t, &kv) in kernel.iter().enumerate() {
                let off = t as isize - r;
                let (xx, yy) = if horizontal {
                    ((x as isize + off).clamp(0, w as isize - 1) as usize, y)
                } else {
                    (x, (y as isize + off).clamp(0, h as isize - 1) as usize)
                };
                let j = yy * w + xx;
                if valid[j] {
                    acc += kv * src[j];
                    wsum += kv;
                }
            }
            out[i] = acc / wsum;
        }
    }
    out
}
