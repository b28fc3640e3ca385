//! Reference implementations written directly from the textbook formulas,
//! sharing no code with the library beyond plain data types.

#![allow(dead_code)]

use std::f64::consts::PI;

use relightkit::geometry::{CameraIntrinsics, DepthMap};
use relightkit::imaging::ImageBuffer;
use relightkit::math::Vec3;

pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn unit(a: [f64; 3]) -> [f64; 3] {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Trowbridge-Reitz density with alpha = roughness squared.
pub fn ggx(n_dot_h: f64, roughness: f64) -> f64 {
    let alpha = roughness * roughness;
    let a2 = alpha * alpha;
    let c2 = n_dot_h * n_dot_h;
    let t = c2 * a2 + (1.0 - c2);
    a2 / (PI * t * t)
}

/// Schlick-GGX masking for both directions with k = (r + 1)^2 / 8.
pub fn smith(n_dot_l: f64, n_dot_v: f64, roughness: f64) -> f64 {
    let k = (roughness + 1.0) * (roughness + 1.0) / 8.0;
    let g = |c: f64| c / (c * (1.0 - k) + k);
    g(n_dot_l) * g(n_dot_v)
}

/// Schlick Fresnel with the spherical-Gaussian exponent.
pub fn fresnel(v_dot_h: f64, f0: f64) -> f64 {
    let p = -5.55473 * v_dot_h * v_dot_h - 6.98316 * v_dot_h;
    f0 + (1.0 - f0) * 2f64.powf(p)
}

/// Lambert plus specular microfacet lobe, cosines in the denominator
/// floored at `cos_eps`.
pub fn brdf(n: [f64; 3], l: [f64; 3], v: [f64; 3], albedo: [f64; 3], roughness: f64, f0: f64, cos_eps: f64) -> [f64; 3] {
    let h = unit([l[0] + v[0], l[1] + v[1], l[2] + v[2]]);
    let nl = dot(n, l).max(cos_eps);
    let nv = dot(n, v).max(cos_eps);
    let nh = dot(n, h).clamp(0.0, 1.0);
    let vh = dot(v, h).clamp(0.0, 1.0);
    let spec = ggx(nh, roughness) * smith(nl, nv, roughness) * fresnel(vh, f0) / (4.0 * nl * nv);
    [albedo[0] / PI + spec, albedo[1] / PI + spec, albedo[2] / PI + spec]
}

/// Bilinear depth at continuous pixel coordinates; `None` outside the image
/// or next to an invalid sample.
fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Distance along `d` from `o` to triangle `abc`, if the ray hits it.
fn ray_triangle(o: [f64; 3], d: [f64; 3], tri: [[f64; 3]; 3]) -> Option<f64> {
    let (e1, e2) = (sub(tri[1], tri[0]), sub(tri[2], tri[0]));
    let p = cross(d, e2);
    let det = dot(e1, p);
    if det.abs() < 1e-15 {
        return None;
    }
    let s = sub(o, tri[0]);
    let u = dot(s, p) / det;
    let q = cross(s, e1);
    let v = dot(d, q) / det;
    if u < 0.0 || v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(dot(e2, q) / det)
}

/// Casts a ray from every surface point towards the light through the
/// triangulated depth surface and reports 0 where it hits a triangle more
/// than `bias` away. Each pixel quad is split along its (x+1, y)-(x, y+1)
/// diagonal; the projected ray is walked cell by cell in the image.
pub fn ray_march_shadow(depth: &DepthMap, cam: &CameraIntrinsics, omega: [f64; 3], bias: f64) -> ImageBuffer {
    let img = depth.image();
    let (w, h) = (img.width(), img.height());
    let d = unit([-omega[0], -omega[1], -omega[2]]);
    assert!(d[2] < 0.0, "light must travel away from the camera");
    let point = |x: usize, y: usize| -> Option<[f64; 3]> {
        let z = img.get(x, y, 0) as f64;
        (z > 0.0).then(|| {
            let p = cam.unproject_pixel(x as f64, y as f64, z);
            [p.x, p.y, p.z]
        })
    };
    let zmin = img.data().iter().filter(|&&z| z > 0.0).fold(f64::INFINITY, |m, &z| m.min(z as f64));
    let blocked = |o: [f64; 3], cx: usize, cy: usize| -> bool {
        let c = [point(cx, cy), point(cx + 1, cy), point(cx, cy + 1), point(cx + 1, cy + 1)];
        [[0, 1, 2], [1, 3, 2]].iter().any(|t| match (c[t[0]], c[t[1]], c[t[2]]) {
            (Some(a), Some(b), Some(e)) => ray_triangle(o, d, [a, b, e]).is_some_and(|t| t > bias),
            _ => false,
        })
    };
    ImageBuffer::from_fn(w, h, 1, |x, y, _| {
        let Some(p) = point(x, y) else { return 1.0 };
        // past this distance the ray is nearer the camera than any surface
        let t_end = (p[2] - zmin + bias) / -d[2];
        let e = [p[0] + t_end * d[0], p[1] + t_end * d[1], p[2] + t_end * d[2]];
        let (ue, ve) = cam.project(Vec3::new(e[0], e[1], e[2]));
        let (u0, v0) = (x as f64, y as f64);
        let len = (ue - u0).hypot(ve - v0);
        let n = (len / 0.25).ceil().max(1.0) as usize;
        let mut recent: Vec<(usize, usize)> = Vec::new();
        let mut prev = (u0, v0);
        for k in 1..=n {
            let f = k as f64 / n as f64;
            let cur = (u0 + f * (ue - u0), v0 + f * (ve - v0));
            // every cell the step could touch, widened for boundary cases
            let eps = 1e-7;
            let xa = (prev.0.min(cur.0) - eps).floor().max(0.0) as usize;
            let ya = (prev.1.min(cur.1) - eps).floor().max(0.0) as usize;
            let xb = (prev.0.max(cur.0) + eps).floor();
            let yb = (prev.1.max(cur.1) + eps).floor();
            if xb < 0.0 || yb < 0.0 || xa + 1 >= w || ya + 1 >= h {
                break;
            }
            let (xb, yb) = ((xb as usize).min(w - 2), (yb as usize).min(h - 2));
            let mut cells = Vec::new();
            for cy in ya..=yb {
                for cx in xa..=xb {
                    if !recent.contains(&(cx, cy)) {
                        if blocked(p, cx, cy) {
                            return 0.0;
                        }
                        cells.push((cx, cy));
                    }
                }
            }
            recent.retain(|c| c.0 + 1 >= xa && c.0 <= xb + 1 && c.1 + 1 >= ya && c.1 <= yb + 1);
            recent.extend(cells);
            prev = cur;
        }
        1.0
    })
}

/// Smooth random heightfield: a tilted base plane plus Gaussian bumps
/// rising towards the camera.
pub fn heightfield(size: usize, rng: &mut impl rand::Rng) -> DepthMap {
    let bumps: Vec<(f64, f64, f64, f64)> = (0..rng.gen_range(3..8))
        .map(|_| {
            (
                rng.gen_range(0.1..0.9),
                rng.gen_range(0.1..0.9),
                rng.gen_range(0.04..0.15),
                rng.gen_range(0.05..0.25),
            )
        })
        .collect();
    let (tx, ty) = (rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05));
    let n = size as f64;
    let img = ImageBuffer::from_fn(size, size, 1, |x, y, _| {
        let (s, t) = (x as f64 / n, y as f64 / n);
        let mut z = 0.9 + tx * (s - 0.5) + ty * (t - 0.5);
        for &(cx, cy, r, a) in &bumps {
            let d2 = (s - cx).powi(2) + (t - cy).powi(2);
            z -= a * (-d2 / (r * r)).exp();
        }
        z as f32
    });
    DepthMap::new(img).expect("positive depths")
}

/// Pixels whose 3x3 neighbourhood contains an invalid pixel or the image
/// border.
pub fn silhouette_band(depth: &DepthMap) -> Vec<bool> {
    let (w, h) = (depth.width(), depth.height());
    let mut band = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut edge = x == 0 || y == 0 || x + 1 == w || y + 1 == h;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (xx, yy) = (x as i64 + dx, y as i64 + dy);
                    if xx >= 0 && yy >= 0 && (xx as usize) < w && (yy as usize) < h {
                        edge |= depth.get(xx as usize, yy as usize) <= 0.0;
                    }
                }
            }
            band[y * w + x] = edge;
        }
    }
    band
}
