//! Cast-shadow masks from a single depth map.
//!
//! A directional light casts the same shadows an orthographic camera looking
//! along ω would see as occlusion. Points are moved into the light frame,
//! where the third coordinate is depth along the light, and each point is
//! tested against the smallest light-depth rendered over its `(x, y)` cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{light_frame, LightDirection, PointImage};
use crate::error::{domain_err, Result};
use crate::imaging::ImageBuffer;
use crate::math::Vec3;

/// How the light-view depth buffer is rasterized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowMethod {
    /// Each 2x2 pixel quad becomes two triangles; a point is tested against
    /// the triangles covering its exact light-frame position.
    Mesh,
    /// Each point is splatted into its cell and the cells within
    /// `splat_radius` (Manhattan); a point is tested against its cell minimum.
    PointSplat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShadowConfig {
    pub method: ShadowMethod,
    /// Buffer cells across the larger light-frame extent, per image pixel.
    pub resolution_multiplier: f64,
    /// Depth bias in scene units.
    pub bias: f64,
    pub splat_radius: usize,
}

impl Default for ShadowConfig {
    fn default() -> Self {
        ShadowConfig {
            method: ShadowMethod::Mesh,
            resolution_multiplier: 2.0,
            bias: 1e-3,
            splat_radius: 1,
        }
    }
}

/// Hard `{0, 1}` mask in the camera's pixel grid; 0 means shadowed.
/// Invalid pixels are reported as lit.
pub fn cast_shadow_mask(
    points: &PointImage,
    omega: LightDirection,
    cfg: &ShadowConfig,
) -> Result<ImageBuffer> {
    if points.valid_count() == 0 {
        return Err(domain_err!("no valid points to cast shadows from"));
    }
    let frame = light_frame(omega.vec())?;
    let local = points.map_valid(|p| frame.transform(p));
    let grid = Grid::covering(&local, cfg.resolution_multiplier);
    let (w, h) = (points.width(), points.height());

    let lit: Vec<f32> = match cfg.method {
        ShadowMethod::PointSplat => {
            let buf = splat_points(&local, &grid, cfg.splat_radius);
            (0..w * h)
                .into_par_iter()
                .map(|i| {
                    if !local.valid()[i] {
                        return 1.0;
                    }
                    let q = local.points()[i];
                    let min = buf[grid.cell_index(q)];
                    if q.z <= min + cfg.bias {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        ShadowMethod::Mesh => {
            let mesh = LightMesh::build(&local, grid);
            (0..w * h)
                .into_par_iter()
                .map(|i| {
                    if !local.valid()[i] {
                        return 1.0;
                    }
                    let q = local.points()[i];
                    if mesh.occluded(q, cfg.bias) {
                        0.0
                    } else {
                        1.0
                    }
                })
                .collect()
        }
    };
    ImageBuffer::from_planar(w, h, 1, lit)
}

#[derive(Clone, Copy, Debug)]
struct Grid {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
}

impl Grid {
    fn covering(local: &PointImage, multiplier: f64) -> Grid {
        let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
        let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (p, _) in local.points().iter().zip(local.valid()).filter(|(_, v)| **v) {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        let extent = (x1 - x0).max(y1 - y0).max(1e-9);
        let cells_across = (multiplier.max(0.01) * local.width().max(local.height()) as f64)
            .ceil()
            .max(1.0);
        let cell = extent / cells_across;
        let nx = ((x1 - x0) / cell).floor() as usize + 1;
        let ny = ((y1 - y0) / cell).floor() as usize + 1;
        Grid {
            x0,
            y0,
            cell,
            nx,
            ny,
        }
    }

    #[inline]
    fn coords(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x - self.x0) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64);
        let j = ((y - self.y0) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64);
        (i as usize, j as usize)
    }

    #[inline]
    fn cell_index(&self, p: Vec3) -> usize {
        let (i, j) = self.coords(p.x, p.y);
        j * self.nx + i
    }
}

fn splat_points(local: &PointImage, grid: &Grid, radius: usize) -> Vec<f64> {
    let mut buf = vec![f64::INFINITY; grid.nx * grid.ny];
    let r = radius as isize;
    for (p, _) in local.points().iter().zip(local.valid()).filter(|(_, v)| **v) {
        let (ci, cj) = grid.coords(p.x, p.y);
        for dj in -r..=r {
            for di in -r..=r {
                if di.abs() + dj.abs() > r {
                    continue;
                }
                let (i, j) = (ci as isize + di, cj as isize + dj);
                if i < 0 || j < 0 || i >= grid.nx as isize || j >= grid.ny as isize {
                    continue;
                }
                let k = j as usize * grid.nx + i as usize;
                buf[k] = buf[k].min(p.z);
            }
        }
    }
    buf
}

/// Light-frame triangle mesh binned on the buffer grid.
struct LightMesh {
    grid: Grid,
    triangles: Vec<[Vec3; 3]>,
    /// CSR layout: triangles overlapping cell `k` are
    /// `items[starts[k]..starts[k + 1]]`.
    starts: Vec<usize>,
    items: Vec<u32>,
}

impl LightMesh {
    fn build(local: &PointImage, grid: Grid) -> LightMesh {
        let (w, h) = (local.width(), local.height());
        let mut triangles = Vec::new();
        for y in 0..h.saturating_sub(1) {
            for x in 0..w.saturating_sub(1) {
                let corners = [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)];
                let ok: Vec<bool> = corners.iter().map(|&(a, b)| local.is_valid(a, b)).collect();
                let p: Vec<Vec3> = corners.iter().map(|&(a, b)| local.at(a, b)).collect();
                if ok[0] && ok[1] && ok[2] {
                    triangles.push([p[0], p[1], p[2]]);
                }
                if ok[1] && ok[3] && ok[2] {
                    triangles.push([p[1], p[3], p[2]]);
                }
                // fall back to the other diagonal when one corner is missing
                if !ok[2] && ok[0] && ok[1] && ok[3] {
                    triangles.push([p[0], p[1], p[3]]);
                }
                if !ok[1] && ok[0] && ok[2] && ok[3] {
                    triangles.push([p[0], p[3], p[2]]);
                }
            }
        }

        let ncells = grid.nx * grid.ny;
        let bbox = |t: &[Vec3; 3]| {
            let (xa, ya) = grid.coords(
                t[0].x.min(t[1].x).min(t[2].x),
                t[0].y.min(t[1].y).min(t[2].y),
            );
            let (xb, yb) = grid.coords(
                t[0].x.max(t[1].x).max(t[2].x),
                t[0].y.max(t[1].y).max(t[2].y),
            );
            (xa, ya, xb, yb)
        };
        let mut counts = vec![0usize; ncells + 1];
        for t in &triangles {
            let (xa, ya, xb, yb) = bbox(t);
            for j in ya..=yb {
                for i in xa..=xb {
                    counts[j * grid.nx + i + 1] += 1;
                }
            }
        }
        for k in 0..ncells {
            counts[k + 1] += counts[k];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut items = vec![0u32; starts[ncells]];
        for (ti, t) in triangles.iter().enumerate() {
            let (xa, ya, xb, yb) = bbox(t);
            for j in ya..=yb {
                for i in xa..=xb {
                    let k = j * grid.nx + i;
                    items[fill[k]] = ti as u32;
                    fill[k] += 1;
                }
            }
        }
        LightMesh {
            grid,
            triangles,
            starts,
            items,
        }
    }

    fn occluded(&self, q: Vec3, bias: f64) -> bool {
        let k = self.grid.cell_index(q);
        self.items[self.starts[k]..self.starts[k + 1]]
            .iter()
            .any(|&ti| match interpolate_depth(&self.triangles[ti as usize], q.x, q.y) {
                Some(z) => z < q.z - bias,
                None => false,
            })
    }
}

/// Depth of triangle `t` at `(x, y)` if the point lies inside its projection.
fn interpolate_depth(t: &[Vec3; 3], x: f64, y: f64) -> Option<f64> {
    let (a, b, c) = (t[0], t[1], t[2]);
    let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    if det.abs() < 1e-18 {
        return None;
    }
    let l1 = ((x - a.x) * (c.y - a.y) - (c.x - a.x) * (y - a.y)) / det;
    let l2 = ((b.x - a.x) * (y - a.y) - (x - a.x) * (b.y - a.y)) / det;
    let l0 = 1.0 - l1 - l2;
    const EPS: f64 = 1e-9;
    if l0 < -EPS || l1 < -EPS || l2 < -EPS {
        return None;
    }
    Some(l0 * a.z + l1 * b.z + l2 * c.z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{unproject, CameraIntrinsics, DepthMap};

    fn points(w: usize, h: usize, f: impl Fn(usize, usize) -> f32) -> PointImage {
        let d = DepthMap::new(ImageBuffer::from_fn(w, h, 1, |x, y, _| f(x, y))).unwrap();
        unproject(&d, &CameraIntrinsics::centered(w, h)).unwrap()
    }

    fn dir(x: f64, y: f64, z: f64) -> LightDirection {
        LightDirection::new(Vec3::new(x, y, z)).unwrap()
    }

    #[test]
    fn frontal_plane_is_fully_lit() {
        let pts = points(32, 32, |_, _| 0.8);
        let cfg = ShadowConfig::default();
        for d in [dir(0.0, 0.0, 1.0), dir(0.5, 0.2, 0.6), dir(-0.7, 0.6, 0.3)] {
            let m = cast_shadow_mask(&pts, d, &cfg).unwrap();
            assert!(m.data().iter().all(|&v| v == 1.0), "{d:?}");
        }
        // splatting only stays acne-free for near-axial light at this bias
        let splat = ShadowConfig {
            method: ShadowMethod::PointSplat,
            ..Default::default()
        };
        let m = cast_shadow_mask(&pts, dir(0.0, 0.0, 1.0), &splat).unwrap();
        assert!(m.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn step_casts_band_on_far_plane() {
        // far plane z=1 on the left half, raised block z=0.8 on the right
        let (w, h) = (128, 16);
        let k = CameraIntrinsics::centered(w, h);
        let pts = points(w, h, |x, _| if (x as f64) < k.cx { 1.0 } else { 0.8 });
        // light travelling toward -x at 45 degrees
        let d = dir(-1.0, 0.0, 1.0);
        let m = cast_shadow_mask(&pts, d, &ShadowConfig::default()).unwrap();
        let row = h / 2;
        for x in 0..w {
            let p = pts.at(x, row);
            let expect_shadow = p.z == 1.0 && p.x > -0.2 + 1e-2;
            let clearly_lit = p.z < 1.0 || p.x < -0.2 - 1e-2;
            if expect_shadow {
                assert_eq!(m.get(x, row, 0), 0.0, "x={x} p={p:?}");
            } else if clearly_lit {
                assert_eq!(m.get(x, row, 0), 1.0, "x={x} p={p:?}");
            }
        }
    }

    #[test]
    fn empty_point_set_is_domain_error() {
        let pts = points(4, 4, |_, _| 0.0);
        assert!(cast_shadow_mask(&pts, LightDirection::ZENITH, &ShadowConfig::default()).is_err());
    }

    #[test]
    fn axis_light_on_centred_bump_casts_nothing() {
        // Under perspective an axial light only clears every ray when depth
        // never decreases moving outward from the principal point.
        let pts = points(48, 48, |x, y| {
            let (dx, dy) = (x as f32 - 23.5, y as f32 - 23.5);
            0.9 - 0.3 * (-(dx * dx + dy * dy) / 60.0).exp()
        });
        let m = cast_shadow_mask(&pts, LightDirection::ZENITH, &ShadowConfig::default()).unwrap();
        assert!(m.data().iter().all(|&v| v == 1.0));
    }
}
