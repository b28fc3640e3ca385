use crate::error::{domain_err, shape_err, Result};

/// Planar linear-intensity image.
///
/// Storage is channel-major: all of channel 0 row by row, then channel 1, and
/// so on. Values are nominally in `[0, 1]` but render outputs may exceed 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageBuffer {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        ImageBuffer {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    /// Wraps planar data, checking its length and that every value is finite.
    pub fn from_planar(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(shape_err!(
                "{} values for a {}x{}x{} image",
                data.len(),
                width,
                height,
                channels
            ));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(domain_err!("non-finite value at element {i}"));
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y, c)` at every element.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(x, y, c));
                }
            }
        }
        ImageBuffer {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f32) {
        let i = self.index(x, y, c);
        self.data[i] = value;
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.pixel_count();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        let n = self.pixel_count();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Reads all channels of pixel `(x, y)` as an RGB triple; single-channel
    /// images are broadcast.
    pub fn rgb(&self, x: usize, y: usize) -> [f32; 3] {
        if self.channels == 1 {
            let v = self.get(x, y, 0);
            [v, v, v]
        } else {
            [self.get(x, y, 0), self.get(x, y, 1), self.get(x, y, 2)]
        }
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn check_same_shape(&self, other: &ImageBuffer) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(shape_err!(
                "{}x{}x{} vs {}x{}x{}",
                self.width,
                self.height,
                self.channels,
                other.width,
                other.height,
                other.channels
            ))
        }
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> ImageBuffer {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ImageBuffer, f: impl Fn(f32, f32) -> f32) -> Result<ImageBuffer> {
        self.check_same_shape(other)?;
        Ok(self.with_data(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// Multiplies every channel by a single-channel mask of the same size.
    pub fn mul_mask(&self, mask: &ImageBuffer) -> Result<ImageBuffer> {
        if mask.channels != 1 || mask.width != self.width || mask.height != self.height {
            return Err(shape_err!("mask must be {}x{}x1", self.width, self.height));
        }
        let mut out = self.clone();
        for c in 0..self.channels {
            for (v, &m) in out.channel_mut(c).iter_mut().zip(mask.data()) {
                *v *= m;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, k: f32) -> ImageBuffer {
        self.map(|v| v * k)
    }

    pub fn add(&self, other: &ImageBuffer) -> Result<ImageBuffer> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn max_abs_diff(&self, other: &ImageBuffer) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a as f64 - b as f64).abs())
            .fold(0.0, f64::max))
    }

    pub fn min_value(&self) -> f32 {
        self.data.iter().copied().fold(f32::INFINITY, f32::min)
    }

    pub fn max_value(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn with_data(&self, data: Vec<f32>) -> ImageBuffer {
        debug_assert_eq!(data.len(), self.data.len());
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data,
        }
    }
}
