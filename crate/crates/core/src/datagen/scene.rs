use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::noise::FractalNoise;
use crate::brdf::MaterialMaps;
use crate::error::{Error, Result};
use crate::geometry::{normals_from_depth, unproject, CameraIntrinsics, DepthMap};
use crate::imaging::ImageBuffer;
use crate::math::Vec3;

/// Nearest and farthest depth any generated scene may occupy.
pub const DEPTH_BAND: (f64, f64) = (0.25, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryFamily {
    /// Gaussian bumps rising from a frontal plane.
    Bumps,
    /// Flat-topped rectangular blocks with hard edges.
    Steps,
    /// Wide overlapping blobs blended through a soft saturation.
    Blobs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextureFamily {
    Constant,
    Checker,
    SmoothNoise,
}

/// Family selector; `Any` draws the family from the scene seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice<T> {
    Any,
    Fixed(T),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub seed: u64,
    pub geometry: Choice<GeometryFamily>,
    pub texture: Choice<TextureFamily>,
    /// Inclusive range of bump/block/blob counts.
    pub bump_count: [u32; 2],
    /// Range of heights (toward the camera) in scene units.
    pub bump_amplitude: [f64; 2],
    /// Range of the background plane depth.
    pub base_depth: [f64; 2],
    pub roughness: [f64; 2],
    /// Strength of the normal-map perturbation; 0 keeps geometric normals.
    pub normal_detail: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            seed: 0,
            geometry: Choice::Any,
            texture: Choice::Any,
            bump_count: [2, 6],
            bump_amplitude: [0.05, 0.3],
            base_depth: [0.8, 0.95],
            roughness: [0.3, 1.0],
            normal_detail: 0.15,
        }
    }
}

impl SceneSpec {
    pub fn with_seed(&self, seed: u64) -> SceneSpec {
        SceneSpec {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Validation(format!("scene spec: {m}")));
        let [r0, r1] = self.roughness;
        if !(r0 > 0.0 && r0 <= r1 && r1 <= 1.0) {
            return bad("roughness range must satisfy 0 < lo <= hi <= 1");
        }
        let [a0, a1] = self.bump_amplitude;
        if !(a0 >= 0.0 && a0 <= a1) {
            return bad("bump amplitude range must satisfy 0 <= lo <= hi");
        }
        let [d0, d1] = self.base_depth;
        if !(d0 >= DEPTH_BAND.0 && d0 <= d1 && d1 <= DEPTH_BAND.1) {
            return bad("base depth range must lie within [0.25, 1]");
        }
        if self.bump_count[0] > self.bump_count[1] {
            return bad("bump count range is reversed");
        }
        if !(self.normal_detail >= 0.0 && self.normal_detail.is_finite()) {
            return bad("normal detail must be non-negative");
        }
        Ok(())
    }
}

/// Generated geometry plus ground-truth materials.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub spec: SceneSpec,
    pub geometry: GeometryFamily,
    pub texture: TextureFamily,
    pub depth: DepthMap,
    pub maps: MaterialMaps,
}

struct Feature {
    s: f64,
    t: f64,
    size: f64,
    aspect: f64,
    amplitude: f64,
}

pub fn make_scene(spec: &SceneSpec, camera: &CameraIntrinsics) -> Result<Scene> {
    spec.validate()?;
    camera.validate()?;
    let (w, h) = (camera.width, camera.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let geometry = match spec.geometry {
        Choice::Fixed(g) => g,
        Choice::Any => [GeometryFamily::Bumps, GeometryFamily::Steps, GeometryFamily::Blobs]
            [rng.gen_range(0..3)],
    };
    let texture = match spec.texture {
        Choice::Fixed(t) => t,
        Choice::Any => [
            TextureFamily::Constant,
            TextureFamily::Checker,
            TextureFamily::SmoothNoise,
        ][rng.gen_range(0..3)],
    };

    let base = uniform(&mut rng, spec.base_depth);
    let count = rng.gen_range(spec.bump_count[0]..=spec.bump_count[1]);
    let (size_lo, size_hi) = match geometry {
        GeometryFamily::Bumps => (0.05, 0.15),
        GeometryFamily::Steps => (0.15, 0.45),
        GeometryFamily::Blobs => (0.15, 0.35),
    };
    let features: Vec<Feature> = (0..count)
        .map(|_| Feature {
            s: rng.gen_range(0.1..0.9),
            t: rng.gen_range(0.1..0.9),
            size: rng.gen_range(size_lo..size_hi),
            aspect: rng.gen_range(0.6..1.6),
            amplitude: uniform(&mut rng, spec.bump_amplitude),
        })
        .collect();
    let amp_cap = spec.bump_amplitude[1].max(1e-12);

    let height = |s: f64, t: f64| -> f64 {
        match geometry {
            GeometryFamily::Bumps => features
                .iter()
                .map(|f| {
                    let (ds, dt) = ((s - f.s) / f.size, (t - f.t) / (f.size * f.aspect));
                    f.amplitude * (-0.5 * (ds * ds + dt * dt)).exp()
                })
                .sum(),
            GeometryFamily::Steps => features
                .iter()
                .filter(|f| (s - f.s).abs() <= f.size / 2.0 && (t - f.t).abs() <= f.size * f.aspect / 2.0)
                .map(|f| f.amplitude)
                .fold(0.0, f64::max),
            GeometryFamily::Blobs => {
                let sum: f64 = features
                    .iter()
                    .map(|f| {
                        let (ds, dt) = ((s - f.s) / f.size, (t - f.t) / (f.size * f.aspect));
                        f.amplitude * (-0.5 * (ds * ds + dt * dt)).exp()
                    })
                    .sum();
                amp_cap * (sum / amp_cap).tanh()
            }
        }
    };

    let depth_img = ImageBuffer::from_fn(w, h, 1, |x, y, _| {
        let (s, t) = ((x as f64 + 0.5) / w as f64, (y as f64 + 0.5) / h as f64);
        (base - height(s, t)).clamp(DEPTH_BAND.0, DEPTH_BAND.1) as f32
    });
    let depth = DepthMap::new(depth_img)?;

    let albedo = albedo_texture(&mut rng, texture, w, h);
    let roughness = roughness_map(&mut rng, spec.roughness, w, h);

    let points = unproject(&depth, camera)?;
    let mut normal = normals_from_depth(&points);
    if spec.normal_detail > 0.0 {
        let nx = FractalNoise::new(&mut rng, 6, 3);
        let ny = FractalNoise::new(&mut rng, 6, 3);
        for y in 0..h {
            for x in 0..w {
                let (s, t) = ((x as f64 + 0.5) / w as f64, (y as f64 + 0.5) / h as f64);
                let n0 = normal.rgb(x, y);
                let n0 = Vec3::new(n0[0] as f64, n0[1] as f64, n0[2] as f64);
                let offset = Vec3::new(2.0 * nx.sample(s, t) - 1.0, 2.0 * ny.sample(s, t) - 1.0, 0.0);
                let p = points.at(x, y);
                let n1 = (n0 + offset * spec.normal_detail)
                    .normalized()
                    .filter(|n| n.dot(-p) > 0.0)
                    .unwrap_or(n0);
                for (c, v) in n1.to_array().into_iter().enumerate() {
                    normal.set(x, y, c, v as f32);
                }
            }
        }
    }

    Ok(Scene {
        spec: spec.clone(),
        geometry,
        texture,
        depth,
        maps: MaterialMaps {
            albedo,
            normal,
            roughness,
        },
    })
}

fn uniform(rng: &mut impl Rng, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

fn random_colour(rng: &mut impl Rng) -> [f64; 3] {
    [
        rng.gen_range(0.1..0.9),
        rng.gen_range(0.1..0.9),
        rng.gen_range(0.1..0.9),
    ]
}

fn albedo_texture(rng: &mut impl Rng, family: TextureFamily, w: usize, h: usize) -> ImageBuffer {
    let a = random_colour(rng);
    match family {
        TextureFamily::Constant => ImageBuffer::from_fn(w, h, 3, |_, _, c| a[c] as f32),
        TextureFamily::Checker => {
            let b = random_colour(rng);
            let cells = rng.gen_range(3..9) as f64;
            ImageBuffer::from_fn(w, h, 3, |x, y, c| {
                let (s, t) = (x as f64 / w as f64, y as f64 / h as f64);
                let parity = ((s * cells).floor() as i64 + (t * cells).floor() as i64) % 2 == 0;
                (if parity { a[c] } else { b[c] }) as f32
            })
        }
        TextureFamily::SmoothNoise => {
            let b = random_colour(rng);
            let noise = FractalNoise::new(rng, 4, 3);
            ImageBuffer::from_fn(w, h, 3, |x, y, c| {
                let k = noise.sample((x as f64 + 0.5) / w as f64, (y as f64 + 0.5) / h as f64);
                (a[c] * (1.0 - k) + b[c] * k) as f32
            })
        }
    }
}

fn roughness_map(rng: &mut impl Rng, [lo, hi]: [f64; 2], w: usize, h: usize) -> ImageBuffer {
    let clamp = |v: f64| (v.clamp(lo, hi) as f32).max(f32::MIN_POSITIVE);
    if rng.gen_bool(0.5) {
        let r = uniform(rng, [lo, hi]);
        ImageBuffer::filled(w, h, 1, clamp(r))
    } else {
        let noise = FractalNoise::new(rng, 3, 2);
        ImageBuffer::from_fn(w, h, 1, |x, y, _| {
            let k = noise.sample((x as f64 + 0.5) / w as f64, (y as f64 + 0.5) / h as f64);
            clamp(lo + (hi - lo) * k)
        })
    }
}
