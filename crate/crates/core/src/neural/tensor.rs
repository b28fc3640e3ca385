use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{shape_err, Result};
use crate::imaging::ImageBuffer;

/// Dense row-major f64 tensor. Activations use `(N, C, H, W)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn filled(shape: &[usize], v: f64) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![v; shape.iter().product()],
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            shape: vec![],
            data: vec![v],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(shape_err!("shape {:?} needs {} values, got {}", shape, n, data.len()));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn randn(shape: &[usize], std: f64, rng: &mut impl Rng) -> Self {
        let dist = Normal::new(0.0, std).expect("finite std");
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: (0..n).map(|_| dist.sample(rng)).collect(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn item(&self) -> f64 {
        self.data[0]
    }

    /// `(N, C, H, W)` of a 4-d tensor.
    pub fn dims4(&self) -> Result<(usize, usize, usize, usize)> {
        match self.shape[..] {
            [n, c, h, w] => Ok((n, c, h, w)),
            _ => Err(shape_err!("expected a 4-d tensor, got shape {:?}", self.shape)),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Stacks equally sized images into an `(N, C, H, W)` batch.
    pub fn from_images(images: &[&ImageBuffer]) -> Result<Tensor> {
        let first = images
            .first()
            .ok_or_else(|| shape_err!("cannot batch zero images"))?;
        let (c, h, w) = (first.channels(), first.height(), first.width());
        let mut data = Vec::with_capacity(images.len() * c * h * w);
        for img in images {
            first.check_same_shape(img)?;
            data.extend(img.data().iter().map(|&v| v as f64));
        }
        Tensor::from_vec(&[images.len(), c, h, w], data)
    }

    /// Concatenates images along channels into a single-item batch.
    pub fn from_channels(images: &[&ImageBuffer]) -> Result<Tensor> {
        let first = images
            .first()
            .ok_or_else(|| shape_err!("cannot stack zero images"))?;
        let (h, w) = (first.height(), first.width());
        let mut c = 0;
        let mut data = Vec::new();
        for img in images {
            if img.width() != w || img.height() != h {
                return Err(shape_err!("channel stack needs equal image sizes"));
            }
            c += img.channels();
            data.extend(img.data().iter().map(|&v| v as f64));
        }
        Tensor::from_vec(&[1, c, h, w], data)
    }

    /// Item `n` of a batch as an image.
    pub fn to_image(&self, n: usize) -> Result<ImageBuffer> {
        let (_, c, h, w) = self.dims4()?;
        let len = c * h * w;
        let data = self.data[n * len..(n + 1) * len].iter().map(|&v| v as f32).collect();
        ImageBuffer::from_planar(w, h, c, data)
    }

    /// Stacks batches along N.
    pub fn cat_batch(parts: &[Tensor]) -> Result<Tensor> {
        let first = parts.first().ok_or_else(|| shape_err!("empty batch list"))?;
        let (_, c, h, w) = first.dims4()?;
        let mut n = 0;
        let mut data = Vec::new();
        for p in parts {
            let (pn, pc, ph, pw) = p.dims4()?;
            if (pc, ph, pw) != (c, h, w) {
                return Err(shape_err!("batch items disagree in shape"));
            }
            n += pn;
            data.extend_from_slice(&p.data);
        }
        Tensor::from_vec(&[n, c, h, w], data)
    }
}
