use serde::{Deserialize, Serialize};

use super::ImageBuffer;
use crate::error::Result;

/// PSNR reported when two images are (numerically) identical.
pub const PSNR_CAP_DB: f64 = 99.0;
/// Below this MSE the PSNR is reported as [`PSNR_CAP_DB`].
pub const MSE_FLOOR: f64 = 1e-10;

/// Mean squared error over every element.
pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    a.check_same_shape(b)?;
    if a.data().is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// Converts an MSE to PSNR in dB with peak 1.0.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse < MSE_FLOOR {
        PSNR_CAP_DB
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB)
    }
}

pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

/// `max(a - b, 0)` elementwise, used to isolate the flash contribution from a
/// flash/no-flash pair.
pub fn subtract_clamped(a: &ImageBuffer, b: &ImageBuffer) -> Result<ImageBuffer> {
    a.zip_map(b, |x, y| (x - y).max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionMetric {
    pub index: usize,
    pub direction: [f64; 3],
    pub mse: f64,
    pub psnr: f64,
}

/// Per-direction error rows plus their means.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<DirectionMetric>,
}

impl MetricReport {
    pub fn push(&mut self, index: usize, direction: [f64; 3], mse: f64) {
        self.rows.push(DirectionMetric {
            index,
            direction,
            mse,
            psnr: psnr_from_mse(mse),
        });
    }

    pub fn mean_mse(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.mse))
    }

    pub fn mean_psnr(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.psnr))
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
