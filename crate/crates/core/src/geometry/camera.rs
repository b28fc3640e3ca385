use serde::{Deserialize, Serialize};

use crate::error::{domain_err, shape_err, Error, Result};
use crate::imaging::ImageBuffer;
use crate::math::Vec3;

/// Pinhole intrinsics. The camera sits at the origin looking down `+z`;
/// pixel `(u, v)` has its centre at integer coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    /// Square-pixel camera with focal length equal to the image width and the
    /// principal point at the image centre.
    pub fn centered(width: usize, height: usize) -> Self {
        CameraIntrinsics {
            fx: width as f64,
            fy: width as f64,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.cx >= 0.0
            && self.cx < self.width as f64
            && self.cy >= 0.0
            && self.cy < self.height as f64;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("invalid camera intrinsics {self:?}")))
        }
    }

    #[inline]
    pub fn unproject_pixel(&self, u: f64, v: f64, z: f64) -> Vec3 {
        Vec3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }

    /// Continuous pixel coordinates of a camera-space point.
    #[inline]
    pub fn project(&self, p: Vec3) -> (f64, f64) {
        (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }
}

/// Single-channel z-depth map; 0 marks an invalid pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap(ImageBuffer);

impl DepthMap {
    pub fn new(img: ImageBuffer) -> Result<Self> {
        if img.channels() != 1 {
            return Err(shape_err!("depth map needs 1 channel, got {}", img.channels()));
        }
        if let Some(v) = img.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(domain_err!("depth value {v} outside [0, 1]"));
        }
        Ok(DepthMap(img))
    }

    pub fn image(&self) -> &ImageBuffer {
        &self.0
    }

    pub fn into_image(self) -> ImageBuffer {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.0.get(x, y, 0)
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.get(x, y) > 0.0
    }
}

/// Per-pixel camera-space (or light-space) coordinates with a validity flag.
#[derive(Clone, Debug, PartialEq)]
pub struct PointImage {
    width: usize,
    height: usize,
    points: Vec<Vec3>,
    valid: Vec<bool>,
}

impl PointImage {
    pub fn new(width: usize, height: usize, points: Vec<Vec3>, valid: Vec<bool>) -> Result<Self> {
        if points.len() != width * height || valid.len() != width * height {
            return Err(shape_err!("point image buffers do not match {width}x{height}"));
        }
        Ok(PointImage {
            width,
            height,
            points,
            valid,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Vec3 {
        self.points[y * self.width + x]
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Applies `f` to every valid point; invalid points stay flagged.
    pub fn map_valid(&self, f: impl Fn(Vec3) -> Vec3) -> PointImage {
        let points = self
            .points
            .iter()
            .zip(&self.valid)
            .map(|(&p, &ok)| if ok { f(p) } else { Vec3::ZERO })
            .collect();
        PointImage {
            width: self.width,
            height: self.height,
            points,
            valid: self.valid.clone(),
        }
    }

    /// Three-channel image of the coordinates; invalid pixels are zero.
    pub fn to_image(&self) -> ImageBuffer {
        ImageBuffer::from_fn(self.width, self.height, 3, |x, y, c| {
            if self.is_valid(x, y) {
                self.at(x, y).component(c) as f32
            } else {
                0.0
            }
        })
    }
}

pub fn unproject(depth: &DepthMap, k: &CameraIntrinsics) -> Result<PointImage> {
    k.validate()?;
    if depth.width() != k.width || depth.height() != k.height {
        return Err(shape_err!(
            "depth {}x{} vs camera {}x{}",
            depth.width(),
            depth.height(),
            k.width,
            k.height
        ));
    }
    let (w, h) = (k.width, k.height);
    let mut points = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let z = depth.get(x, y) as f64;
            if z > 0.0 {
                points.push(k.unproject_pixel(x as f64, y as f64, z));
                valid.push(true);
            } else {
                points.push(Vec3::ZERO);
                valid.push(false);
            }
        }
    }
    PointImage::new(w, h, points, valid)
}

/// Unit normals from central-difference tangents, oriented toward the camera.
/// Pixels whose tangents degenerate take the normal of the nearest pixel that
/// has one; invalid pixels get `(0, 0, -1)`.
pub fn normals_from_depth(points: &PointImage) -> ImageBuffer {
    let (w, h) = (points.width, points.height);
    let mut normals: Vec<Option<Vec3>> = vec![None; w * h];

    let tangent = |x: usize, y: usize, dx: isize, dy: isize| -> Option<Vec3> {
        let at = |xx: isize, yy: isize| -> Option<Vec3> {
            if xx < 0 || yy < 0 || xx >= w as isize || yy >= h as isize {
                return None;
            }
            let (xx, yy) = (xx as usize, yy as usize);
            points.is_valid(xx, yy).then(|| points.at(xx, yy))
        };
        let (x, y) = (x as isize, y as isize);
        match (at(x + dx, y + dy), at(x - dx, y - dy)) {
            (Some(a), Some(b)) => Some(a - b),
            (Some(a), None) => Some(a - points.at(x as usize, y as usize)),
            (None, Some(b)) => Some(points.at(x as usize, y as usize) - b),
            (None, None) => None,
        }
    };

    for y in 0..h {
        for x in 0..w {
            if !points.is_valid(x, y) {
                continue;
            }
            let (Some(tx), Some(ty)) = (tangent(x, y, 1, 0), tangent(x, y, 0, 1)) else {
                continue;
            };
            if let Some(n) = tx.cross(ty).normalized() {
                let p = points.at(x, y);
                normals[y * w + x] = Some(if n.dot(-p) < 0.0 { -n } else { n });
            }
        }
    }

    fill_from_nearest(&mut normals, w, h, points.valid());

    ImageBuffer::from_fn(w, h, 3, |x, y, c| {
        normals[y * w + x]
            .unwrap_or(Vec3::new(0.0, 0.0, -1.0))
            .component(c) as f32
    })
}

/// Breadth-first fill of missing entries at valid pixels from their nearest
/// (4-connected) neighbour that has a value.
fn fill_from_nearest(values: &mut [Option<Vec3>], w: usize, h: usize, valid: &[bool]) {
    use std::collections::VecDeque;
    let mut queue: VecDeque<usize> = (0..w * h).filter(|&i| values[i].is_some()).collect();
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        let v = values[i];
        let mut visit = |j: usize| {
            if valid[j] && values[j].is_none() {
                values[j] = v;
                queue.push_back(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < w {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - w);
        }
        if y + 1 < h {
            visit(i + w);
        }
    }
}
