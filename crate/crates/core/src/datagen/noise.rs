use rand::Rng;

/// Smoothly interpolated lattice noise in `[0, 1]`, tileless.
#[derive(Clone, Debug)]
pub struct ValueNoise {
    size: usize,
    lattice: Vec<f64>,
}

impl ValueNoise {
    /// `size` lattice cells span the unit square.
    pub fn new(rng: &mut impl Rng, size: usize) -> Self {
        let size = size.max(1);
        let lattice = (0..(size + 1) * (size + 1)).map(|_| rng.gen::<f64>()).collect();
        ValueNoise { size, lattice }
    }

    /// Sample at `(s, t)` in `[0, 1]²`.
    pub fn sample(&self, s: f64, t: f64) -> f64 {
        let n = self.size;
        let fx = (s.clamp(0.0, 1.0) * n as f64).min(n as f64 - 1e-9);
        let fy = (t.clamp(0.0, 1.0) * n as f64).min(n as f64 - 1e-9);
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        let (ax, ay) = (smooth(fx - ix as f64), smooth(fy - iy as f64));
        let at = |x: usize, y: usize| self.lattice[y * (n + 1) + x];
        let top = at(ix, iy) * (1.0 - ax) + at(ix + 1, iy) * ax;
        let bottom = at(ix, iy + 1) * (1.0 - ax) + at(ix + 1, iy + 1) * ax;
        top * (1.0 - ay) + bottom * ay
    }
}

/// Sum of octaves with halving amplitude, normalized back to `[0, 1]`.
#[derive(Clone, Debug)]
pub struct FractalNoise {
    octaves: Vec<ValueNoise>,
}

impl FractalNoise {
    pub fn new(rng: &mut impl Rng, base: usize, octaves: usize) -> Self {
        let octaves = (0..octaves.max(1))
            .map(|o| ValueNoise::new(rng, base << o))
            .collect();
        FractalNoise { octaves }
    }

    pub fn sample(&self, s: f64, t: f64) -> f64 {
        let (mut acc, mut norm, mut amp) = (0.0, 0.0, 1.0);
        for o in &self.octaves {
            acc += amp * o.sample(s, t);
            norm += amp;
            amp *= 0.5;
        }
        acc / norm
    }
}

#[inline]
fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}
