//! Linear combination of directional relights and end-to-end inference.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;

use crate::brdf::{shade_directional, BrdfConstants, MaterialMaps};
use crate::error::{domain_err, shape_err, Result};
use crate::geometry::{cast_shadow_mask, unproject, CameraIntrinsics, DepthMap, LightDirection, ShadowConfig};
use crate::imaging::{read_raw, ImageBuffer};
use crate::math::Vec3;
use crate::neural::TrainedModels;

/// Images of one view under single directional lights, one per direction.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisStack {
    directions: Vec<LightDirection>,
    images: Vec<ImageBuffer>,
}

impl BasisStack {
    pub fn new(directions: Vec<LightDirection>, images: Vec<ImageBuffer>) -> Result<Self> {
        if directions.len() != images.len() {
            return Err(shape_err!("{} directions for {} basis images", directions.len(), images.len()));
        }
        let first = images.first().ok_or_else(|| shape_err!("empty basis stack"))?;
        for img in &images {
            first.check_same_shape(img)?;
        }
        for (i, a) in directions.iter().enumerate() {
            if directions[..i].iter().any(|b| (a.vec() - b.vec()).norm() < 1e-12) {
                return Err(domain_err!("duplicate basis direction {:?}", a.vec().to_array()));
            }
        }
        Ok(BasisStack { directions, images })
    }

    pub fn directions(&self) -> &[LightDirection] {
        &self.directions
    }

    pub fn images(&self) -> &[ImageBuffer] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// `Σᵢ wᵢ·Bᵢ` per channel, accumulated in f64.
pub fn superpose(stack: &BasisStack, weights: &[[f64; 3]]) -> Result<ImageBuffer> {
    if weights.len() != stack.len() {
        return Err(shape_err!("{} weights for {} basis images", weights.len(), stack.len()));
    }
    if weights.iter().flatten().any(|w| !(*w >= 0.0)) {
        return Err(domain_err!("superposition weights must be non-negative"));
    }
    let first = &stack.images[0];
    let (w, h, c) = (first.width(), first.height(), first.channels());
    let plane = w * h;
    let data: Vec<f32> = (0..c * plane)
        .into_par_iter()
        .map(|i| {
            let ch = (i / plane).min(2);
            stack
                .images
                .iter()
                .zip(weights)
                .map(|(img, wt)| wt[ch] * img.data()[i] as f64)
                .sum::<f64>() as f32
        })
        .collect();
    ImageBuffer::from_planar(w, h, c, data)
}

/// Linear RGB radiance over the visible hemisphere of light directions.
///
/// Row `y` covers polar angle `θ ∈ [y, y+1)·(π/2)/H` measured from the
/// optical axis, column `x` covers azimuth `φ ∈ [x, x+1)·2π/W`. A texel at
/// `(θ, φ)` emits light travelling along `(sinθ cosφ, sinθ sinφ, cosθ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentMap(ImageBuffer);

impl EnvironmentMap {
    pub fn new(img: ImageBuffer) -> Result<Self> {
        if img.channels() != 3 {
            return Err(shape_err!("environment map needs 3 channels, got {}", img.channels()));
        }
        if img.data().iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(domain_err!("environment radiance must be finite and non-negative"));
        }
        Ok(EnvironmentMap(img))
    }

    pub fn uniform(width: usize, height: usize, radiance: [f32; 3]) -> Result<Self> {
        EnvironmentMap::new(ImageBuffer::from_fn(width, height, 3, |_, _, c| radiance[c]))
    }

    pub fn read(path: &Path) -> Result<Self> {
        EnvironmentMap::new(read_raw(path)?)
    }

    pub fn image(&self) -> &ImageBuffer {
        &self.0
    }

    fn bands(&self) -> (f64, f64) {
        (PI / 2.0 / self.0.height() as f64, 2.0 * PI / self.0.width() as f64)
    }

    /// Center direction of texel `(x, y)`.
    pub fn texel_direction(&self, x: usize, y: usize) -> Vec3 {
        let (dt, dp) = self.bands();
        let (theta, phi) = ((y as f64 + 0.5) * dt, (x as f64 + 0.5) * dp);
        Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
    }

    pub fn texel_solid_angle(&self, y: usize) -> f64 {
        let (dt, dp) = self.bands();
        ((y as f64 * dt).cos() - ((y + 1) as f64 * dt).cos()) * dp
    }
}

/// Radiance times solid angle of every texel, summed into the nearest
/// direction of `dirs` (largest dot product, first wins on ties).
pub fn env_weights(env: &EnvironmentMap, dirs: &[LightDirection]) -> Result<Vec<[f64; 3]>> {
    if dirs.is_empty() {
        return Err(domain_err!("environment binning needs at least one direction"));
    }
    let img = env.image();
    let mut weights = vec![[0.0; 3]; dirs.len()];
    for y in 0..img.height() {
        let omega = env.texel_solid_angle(y);
        for x in 0..img.width() {
            let t = env.texel_direction(x, y);
            let mut best = 0;
            for (i, d) in dirs.iter().enumerate() {
                if t.dot(d.vec()) > t.dot(dirs[best].vec()) {
                    best = i;
                }
            }
            for c in 0..3 {
                weights[best][c] += img.get(x, y, c) as f64 * omega;
            }
        }
    }
    Ok(weights)
}

/// Environment relight from a stack whose images were lit with
/// `basis_intensity` per direction.
pub fn relight_environment(
    stack: &BasisStack,
    env: &EnvironmentMap,
    basis_intensity: [f64; 3],
) -> Result<ImageBuffer> {
    if basis_intensity.iter().any(|v| !(*v > 0.0)) {
        return Err(domain_err!("basis intensity must be positive"));
    }
    let w = env_weights(env, stack.directions())?
        .into_iter()
        .map(|w| [0, 1, 2].map(|c| w[c] / basis_intensity[c]))
        .collect::<Vec<_>>();
    superpose(stack, &w)
}

/// Ground-truth stand-ins for the networks.
#[derive(Clone, Copy, Debug)]
pub struct OracleInputs<'a> {
    pub maps: &'a MaterialMaps,
    /// One visibility mask per direction; cast from depth when absent.
    pub shadows: Option<&'a [ImageBuffer]>,
    pub shadow_config: &'a ShadowConfig,
    pub light_intensity: [f64; 3],
    pub brdf: &'a BrdfConstants,
}

#[derive(Clone, Copy, Debug)]
pub enum InferMode<'a> {
    Oracle(OracleInputs<'a>),
    Network(&'a TrainedModels),
}

/// Relit images of the view for each direction.
pub fn infer_relit(
    flash: &ImageBuffer,
    depth: &DepthMap,
    camera: &CameraIntrinsics,
    dirs: &[LightDirection],
    mode: InferMode<'_>,
) -> Result<Vec<ImageBuffer>> {
    if flash.channels() != 3 || flash.width() != depth.width() || flash.height() != depth.height() {
        return Err(shape_err!("flash image must be rgb and match the depth map"));
    }
    match mode {
        InferMode::Network(models) => models.relight(flash, depth, camera, dirs),
        InferMode::Oracle(o) => {
            if let Some(s) = o.shadows {
                if s.len() != dirs.len() {
                    return Err(shape_err!("{} oracle masks for {} directions", s.len(), dirs.len()));
                }
            }
            let points = unproject(depth, camera)?;
            dirs.iter()
                .enumerate()
                .map(|(i, &d)| {
                    let cast;
                    let mask = match o.shadows {
                        Some(s) => &s[i],
                        None => {
                            cast = cast_shadow_mask(&points, d, o.shadow_config)?;
                            &cast
                        }
                    };
                    shade_directional(o.maps, &points, d, o.light_intensity, Some(mask), o.brdf)
                })
                .collect()
        }
    }
}

/// Relights the view under every direction of `dirs` to form a basis.
pub fn build_basis(
    flash: &ImageBuffer,
    depth: &DepthMap,
    camera: &CameraIntrinsics,
    dirs: &[LightDirection],
    mode: InferMode<'_>,
) -> Result<BasisStack> {
    let images = infer_relit(flash, depth, camera, dirs, mode)?;
    BasisStack::new(dirs.to_vec(), images)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::direction_grid;
    use crate::Error;

    fn stack() -> BasisStack {
        let dirs = direction_grid(1, 3);
        let imgs = (0..dirs.len())
            .map(|i| ImageBuffer::from_fn(4, 3, 3, |x, y, c| (i * 100 + x + 10 * y + c) as f32 * 0.01))
            .collect();
        BasisStack::new(dirs, imgs).unwrap()
    }

    #[test]
    fn one_hot_selects_basis() {
        let s = stack();
        for j in 0..s.len() {
            let mut w = vec![[0.0; 3]; s.len()];
            w[j] = [1.0; 3];
            assert_eq!(superpose(&s, &w).unwrap(), s.images()[j]);
        }
    }

    #[test]
    fn unit_weights_sum() {
        let s = stack();
        let out = superpose(&s, &vec![[1.0; 3]; s.len()]).unwrap();
        let mut sum = ImageBuffer::zeros(4, 3, 3);
        for img in s.images() {
            sum = sum.add(img).unwrap();
        }
        assert!(out.max_abs_diff(&sum).unwrap() < 1e-6);
    }

    #[test]
    fn superpose_is_linear() {
        let s = stack();
        let w1: Vec<[f64; 3]> = (0..s.len()).map(|i| [0.5 * i as f64, 1.0, 0.25]).collect();
        let w2: Vec<[f64; 3]> = (0..s.len()).map(|i| [1.0, 0.125 * i as f64, 2.0]).collect();
        let (a, b) = (2.0, 0.5);
        let mix: Vec<[f64; 3]> = w1
            .iter()
            .zip(&w2)
            .map(|(p, q)| [0, 1, 2].map(|c| a * p[c] + b * q[c]))
            .collect();
        let lhs = superpose(&s, &mix).unwrap();
        let rhs = superpose(&s, &w1)
            .unwrap()
            .scale(a as f32)
            .add(&superpose(&s, &w2).unwrap().scale(b as f32))
            .unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-5);
    }

    #[test]
    fn bad_weights_rejected() {
        let s = stack();
        assert!(matches!(superpose(&s, &[[1.0; 3]]), Err(Error::Shape(_))));
        let mut w = vec![[0.0; 3]; s.len()];
        w[1][2] = -1.0;
        assert!(matches!(superpose(&s, &w), Err(Error::Domain(_))));
    }

    #[test]
    fn stack_invariants() {
        let d = LightDirection::ZENITH;
        let img = ImageBuffer::zeros(2, 2, 3);
        assert!(BasisStack::new(vec![d, d], vec![img.clone(), img.clone()]).is_err());
        assert!(BasisStack::new(vec![d], vec![]).is_err());
        let other = LightDirection::new(Vec3::new(0.3, 0.0, 1.0)).unwrap();
        assert!(BasisStack::new(vec![d, other], vec![img, ImageBuffer::zeros(3, 2, 3)]).is_err());
    }

    #[test]
    fn black_environment_has_no_weight() {
        let env = EnvironmentMap::uniform(16, 8, [0.0; 3]).unwrap();
        let w = env_weights(&env, &direction_grid(2, 5)).unwrap();
        assert!(w.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_environment_integrates_hemisphere() {
        let env = EnvironmentMap::uniform(32, 16, [1.0, 2.0, 0.5]).unwrap();
        let w = env_weights(&env, &direction_grid(3, 8)).unwrap();
        for (c, k) in [1.0, 2.0, 0.5].into_iter().enumerate() {
            let total: f64 = w.iter().map(|v| v[c]).sum();
            assert!((total / (2.0 * PI * k) - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn weights_conserve_flux() {
        let env = EnvironmentMap::new(ImageBuffer::from_fn(24, 10, 3, |x, y, c| {
            ((x * 7 + y * 3 + c) % 5) as f32 * 0.3
        }))
        .unwrap();
        let w = env_weights(&env, &direction_grid(2, 6)).unwrap();
        for c in 0..3 {
            let mut flux = 0.0;
            for y in 0..10 {
                for x in 0..24 {
                    flux += env.image().get(x, y, c) as f64 * env.texel_solid_angle(y);
                }
            }
            let total: f64 = w.iter().map(|v| v[c]).sum();
            assert!((total - flux).abs() <= 1e-6 * flux);
        }
    }

    #[test]
    fn bright_texel_lands_on_nearest_direction() {
        let mut img = ImageBuffer::zeros(16, 8, 3);
        img.set(5, 6, 1, 10.0);
        let env = EnvironmentMap::new(img).unwrap();
        let dirs = direction_grid(2, 5);
        let t = env.texel_direction(5, 6);
        let nearest = (0..dirs.len())
            .max_by(|&a, &b| t.dot(dirs[a].vec()).total_cmp(&t.dot(dirs[b].vec())))
            .unwrap();
        let w = env_weights(&env, &dirs).unwrap();
        for (i, v) in w.iter().enumerate() {
            assert_eq!(v[1] > 0.0, i == nearest);
            assert_eq!(v[0], 0.0);
        }
    }

    #[test]
    fn environment_validation() {
        assert!(EnvironmentMap::new(ImageBuffer::zeros(4, 4, 1)).is_err());
        assert!(EnvironmentMap::uniform(4, 4, [-1.0, 0.0, 0.0]).is_err());
        let env = EnvironmentMap::uniform(4, 4, [1.0; 3]).unwrap();
        assert!(env_weights(&env, &[]).is_err());
    }
}
