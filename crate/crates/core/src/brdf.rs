//! Microfacet BRDF (GGX distribution, Schlick-Smith masking with the
//! `k = (r + 1)² / 8` remapping, spherical-Gaussian Fresnel) plus closed-form
//! one-bounce shading under a directional light or a co-located flash.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, shape_err, Result};
use crate::geometry::{LightDirection, PointImage};
use crate::imaging::ImageBuffer;
use crate::math::Vec3;

pub const DEFAULT_F0: f64 = 0.05;
pub const DEFAULT_COS_EPS: f64 = 1e-4;

/// Constants shared by every shading call.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BrdfConstants {
    /// Specular reflectance at normal incidence.
    pub f0: f64,
    /// Lower clamp for `n·l` and `n·v` in the specular denominator.
    pub cos_eps: f64,
}

impl Default for BrdfConstants {
    fn default() -> Self {
        BrdfConstants {
            f0: DEFAULT_F0,
            cos_eps: DEFAULT_COS_EPS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrdfParams {
    pub albedo: [f64; 3],
    pub roughness: f64,
    pub f0: f64,
}

impl BrdfParams {
    pub fn new(albedo: [f64; 3], roughness: f64) -> Result<Self> {
        check_roughness(roughness)?;
        Ok(BrdfParams {
            albedo,
            roughness,
            f0: DEFAULT_F0,
        })
    }
}

/// Normal, to-light, to-viewer and half vectors, all unit length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadingGeometry {
    pub n: Vec3,
    pub l: Vec3,
    pub v: Vec3,
    pub h: Vec3,
}

impl ShadingGeometry {
    pub fn new(n: Vec3, l: Vec3, v: Vec3) -> Result<Self> {
        for (name, u) in [("n", n), ("l", l), ("v", v)] {
            if (u.norm() - 1.0).abs() > 1e-6 {
                return Err(domain_err!("{name} is not unit length"));
            }
        }
        let h = (l + v)
            .normalized()
            .filter(|_| (l + v).norm() > 1e-9)
            .ok_or_else(|| domain_err!("half vector undefined for l = -v"))?;
        Ok(ShadingGeometry { n, l, v, h })
    }
}

fn check_roughness(r: f64) -> Result<()> {
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(domain_err!("roughness {r} outside (0, 1]"))
    }
}

/// GGX normal distribution with `α = roughness²`.
pub fn ggx_d(n_dot_h: f64, roughness: f64) -> Result<f64> {
    check_roughness(roughness)?;
    Ok(ggx_d_unchecked(n_dot_h.clamp(0.0, 1.0), roughness))
}

#[inline]
fn ggx_d_unchecked(n_dot_h: f64, roughness: f64) -> f64 {
    let a2 = roughness.powi(4);
    let d = n_dot_h * n_dot_h * (a2 - 1.0) + 1.0;
    a2 / (PI * d * d)
}

/// Separable Smith masking-shadowing with the Schlick-GGX approximation.
pub fn smith_g(n_dot_l: f64, n_dot_v: f64, roughness: f64) -> Result<f64> {
    check_roughness(roughness)?;
    if n_dot_l <= 0.0 || n_dot_v <= 0.0 {
        return Err(domain_err!("smith_g needs positive cosines"));
    }
    Ok(smith_g_unchecked(n_dot_l, n_dot_v, roughness))
}

#[inline]
fn smith_k(roughness: f64) -> f64 {
    (roughness + 1.0).powi(2) / 8.0
}

#[inline]
fn g1(x: f64, k: f64) -> f64 {
    x / (x * (1.0 - k) + k)
}

#[inline]
fn smith_g_unchecked(n_dot_l: f64, n_dot_v: f64, roughness: f64) -> f64 {
    let k = smith_k(roughness);
    g1(n_dot_l, k) * g1(n_dot_v, k)
}

/// Spherical-Gaussian approximation of Schlick's Fresnel.
pub fn fresnel_sg(v_dot_h: f64, f0: f64) -> f64 {
    let c = v_dot_h.clamp(0.0, 1.0);
    f0 + (1.0 - f0) * ((-5.55473 * c - 6.98316) * c).exp2()
}

/// Full BRDF value per colour channel.
pub fn brdf_eval(geom: &ShadingGeometry, params: &BrdfParams) -> Result<[f64; 3]> {
    check_roughness(params.roughness)?;
    let consts = BrdfConstants {
        f0: params.f0,
        ..Default::default()
    };
    let spec = specular(geom.n, geom.l, geom.v, geom.h, params.roughness, &consts);
    Ok(params.albedo.map(|a| a / PI + spec))
}

/// Specular lobe `D F G / (4 (n·l)(n·v))` with clamped cosines.
#[inline]
fn specular(n: Vec3, l: Vec3, v: Vec3, h: Vec3, roughness: f64, c: &BrdfConstants) -> f64 {
    let nl = n.dot(l).max(c.cos_eps);
    let nv = n.dot(v).max(c.cos_eps);
    let nh = n.dot(h).clamp(0.0, 1.0);
    let vh = v.dot(h).clamp(0.0, 1.0);
    ggx_d_unchecked(nh, roughness) * fresnel_sg(vh, c.f0) * smith_g_unchecked(nl, nv, roughness)
        / (4.0 * nl * nv)
}

/// Specular lobe and its derivative with respect to roughness.
pub(crate) fn specular_with_droughness(
    n: Vec3,
    l: Vec3,
    v: Vec3,
    roughness: f64,
    c: &BrdfConstants,
) -> (f64, f64) {
    let h = match (l + v).normalized() {
        Some(h) => h,
        None => return (0.0, 0.0),
    };
    let nl = n.dot(l).max(c.cos_eps);
    let nv = n.dot(v).max(c.cos_eps);
    let nh = n.dot(h).clamp(0.0, 1.0);
    let vh = v.dot(h).clamp(0.0, 1.0);
    let r = roughness;

    let a2 = r.powi(4);
    let q = nh * nh * (a2 - 1.0) + 1.0;
    let d = a2 / (PI * q * q);
    let dd_da2 = (q - 2.0 * a2 * nh * nh) / (PI * q * q * q);
    let dd_dr = dd_da2 * 4.0 * r.powi(3);

    let k = smith_k(r);
    let dk_dr = (r + 1.0) / 4.0;
    let (gl, gv) = (g1(nl, k), g1(nv, k));
    let dg1 = |x: f64| {
        let den = x * (1.0 - k) + k;
        -x * (1.0 - x) / (den * den)
    };
    let g = gl * gv;
    let dg_dr = (dg1(nl) * gv + gl * dg1(nv)) * dk_dr;

    let f = fresnel_sg(vh, c.f0);
    let scale = f / (4.0 * nl * nv);
    (d * g * scale, (dd_dr * g + d * dg_dr) * scale)
}

/// Albedo (3ch), unit normal (3ch) and roughness (1ch) maps.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialMaps {
    pub albedo: ImageBuffer,
    pub normal: ImageBuffer,
    pub roughness: ImageBuffer,
}

impl MaterialMaps {
    pub fn width(&self) -> usize {
        self.albedo.width()
    }

    pub fn height(&self) -> usize {
        self.albedo.height()
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.width(), self.height());
        let dims_ok = |img: &ImageBuffer, c: usize| {
            img.width() == w && img.height() == h && img.channels() == c
        };
        if !dims_ok(&self.albedo, 3) || !dims_ok(&self.normal, 3) || !dims_ok(&self.roughness, 1)
        {
            return Err(shape_err!("material maps disagree in size or channel count"));
        }
        Ok(())
    }

    fn check_points(&self, points: &PointImage) -> Result<()> {
        self.validate()?;
        if points.width() != self.width() || points.height() != self.height() {
            return Err(shape_err!(
                "points {}x{} vs maps {}x{}",
                points.width(),
                points.height(),
                self.width(),
                self.height()
            ));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn texel(&self, x: usize, y: usize) -> ([f64; 3], Vec3, f64) {
        let a = self.albedo.rgb(x, y).map(|v| v as f64);
        let n = self.normal.rgb(x, y);
        let n = Vec3::new(n[0] as f64, n[1] as f64, n[2] as f64);
        // clamp guards user-supplied or network maps at the open end
        let r = (self.roughness.get(x, y, 0) as f64).clamp(1e-4, 1.0);
        (a, n, r)
    }
}

/// A directional light with RGB intensity and an optional visibility mask.
#[derive(Clone, Copy, Debug)]
pub struct DirectionalLight<'a> {
    pub direction: LightDirection,
    pub intensity: [f64; 3],
    pub shadow: Option<&'a ImageBuffer>,
}

/// One-bounce image under a single directional light, optionally multiplied
/// by a visibility mask.
pub fn shade_directional(
    maps: &MaterialMaps,
    points: &PointImage,
    omega: LightDirection,
    intensity: [f64; 3],
    shadow: Option<&ImageBuffer>,
    consts: &BrdfConstants,
) -> Result<ImageBuffer> {
    shade_lights(
        maps,
        points,
        &[DirectionalLight {
            direction: omega,
            intensity,
            shadow,
        }],
        consts,
    )
}

/// One-bounce image under several simultaneous directional lights, summed
/// per pixel in double precision.
pub fn shade_lights(
    maps: &MaterialMaps,
    points: &PointImage,
    lights: &[DirectionalLight<'_>],
    consts: &BrdfConstants,
) -> Result<ImageBuffer> {
    maps.check_points(points)?;
    for light in lights {
        if let Some(m) = light.shadow {
            if m.channels() != 1 || m.width() != maps.width() || m.height() != maps.height() {
                return Err(shape_err!("shadow mask must be {}x{}x1", maps.width(), maps.height()));
            }
        }
    }
    let (w, h) = (maps.width(), maps.height());
    let rows: Vec<Vec<[f64; 3]>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    if !points.is_valid(x, y) {
                        return [0.0; 3];
                    }
                    let (albedo, n, r) = maps.texel(x, y);
                    let Some(v) = (-points.at(x, y)).normalized() else {
                        return [0.0; 3];
                    };
                    let mut acc = [0.0; 3];
                    for light in lights {
                        let l = light.direction.to_light();
                        let cos = n.dot(l);
                        if cos <= 0.0 {
                            continue;
                        }
                        let vis = light.shadow.map_or(1.0, |m| m.get(x, y, 0) as f64);
                        if vis == 0.0 {
                            continue;
                        }
                        let Some(hv) = (l + v).normalized() else {
                            continue;
                        };
                        let spec = specular(n, l, v, hv, r, consts);
                        for c in 0..3 {
                            acc[c] += (albedo[c] / PI + spec) * cos * light.intensity[c] * vis;
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Ok(pack_rgb(w, h, &rows))
}

/// Image lit by an ideal point light at the camera origin, with inverse-square
/// falloff. The co-located light casts no visible shadows.
pub fn render_flash(
    maps: &MaterialMaps,
    points: &PointImage,
    intensity: f64,
    consts: &BrdfConstants,
) -> Result<ImageBuffer> {
    maps.check_points(points)?;
    let (w, h) = (maps.width(), maps.height());
    for y in 0..h {
        for x in 0..w {
            if points.is_valid(x, y) && points.at(x, y).norm() < 1e-6 {
                return Err(domain_err!("point at pixel ({x}, {y}) coincides with the flash"));
            }
        }
    }
    let rows: Vec<Vec<[f64; 3]>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    if !points.is_valid(x, y) {
                        return [0.0; 3];
                    }
                    let p = points.at(x, y);
                    let dist2 = p.dot(p);
                    let l = -p * (1.0 / dist2.sqrt());
                    let (albedo, n, r) = maps.texel(x, y);
                    let cos = n.dot(l);
                    if cos <= 0.0 {
                        return [0.0; 3];
                    }
                    let spec = specular(n, l, l, l, r, consts);
                    albedo.map(|a| (a / PI + spec) * cos * intensity / dist2)
                })
                .collect()
        })
        .collect();
    Ok(pack_rgb(w, h, &rows))
}

fn pack_rgb(w: usize, h: usize, rows: &[Vec<[f64; 3]>]) -> ImageBuffer {
    ImageBuffer::from_fn(w, h, 3, |x, y, c| rows[y][x][c] as f32)
}
