use serde::{Deserialize, Serialize};

use super::PointImage;
use crate::error::{domain_err, Result};
use crate::math::{Mat3, Vec3};

/// Unit direction in which light travels, expressed in camera coordinates.
///
/// `z > 0` means the light sits on the camera's side of the scene (the
/// visible hemisphere); `(0, 0, 1)` is a light shining along the optical axis.
/// The surface-to-light vector used in shading is `-ω`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct LightDirection(Vec3);

impl LightDirection {
    pub const ZENITH: LightDirection = LightDirection(Vec3::new(0.0, 0.0, 1.0));

    /// Normalizes `v`; rejects zero vectors and directions with `z <= 0`.
    pub fn new(v: Vec3) -> Result<Self> {
        let u = v
            .normalized()
            .ok_or_else(|| domain_err!("zero light direction"))?;
        if u.z <= 0.0 {
            return Err(domain_err!("light below visible hemisphere: {:?}", v.to_array()));
        }
        Ok(LightDirection(u))
    }

    pub fn vec(self) -> Vec3 {
        self.0
    }

    /// Unit vector from a surface point toward the light.
    pub fn to_light(self) -> Vec3 {
        -self.0
    }
}

impl TryFrom<[f64; 3]> for LightDirection {
    type Error = crate::Error;
    fn try_from(a: [f64; 3]) -> Result<Self> {
        LightDirection::new(Vec3::from_array(a))
    }
}

impl From<LightDirection> for [f64; 3] {
    fn from(d: LightDirection) -> Self {
        d.0.to_array()
    }
}

/// Orthonormal light frame: `rotation` has ω as its third column.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightFrame {
    pub rotation: Mat3,
    pub translation: Vec3,
}

pub const FRAME_TRANSLATION: Vec3 = Vec3::new(0.0, 0.0, 1.0);

impl LightFrame {
    /// `Rᵀ p + t`.
    #[inline]
    pub fn transform(&self, p: Vec3) -> Vec3 {
        let r = &self.rotation;
        Vec3::new(
            r.column(0).dot(p),
            r.column(1).dot(p),
            r.column(2).dot(p),
        ) + self.translation
    }
}

/// Completes `omega` into a rotation by Gram-Schmidt over the two standard
/// basis vectors least aligned with it (ties go to the lower index).
pub fn light_frame(omega: Vec3) -> Result<LightFrame> {
    let w = omega
        .normalized()
        .ok_or_else(|| domain_err!("zero direction has no light frame"))?;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        w.component(a)
            .abs()
            .total_cmp(&w.component(b).abs())
            .then(a.cmp(&b))
    });
    let (i, j) = (order[0].min(order[1]), order[0].max(order[1]));
    let basis = |k: usize| {
        let mut a = [0.0; 3];
        a[k] = 1.0;
        Vec3::from_array(a)
    };
    let ei = basis(i);
    let ej = basis(j);
    let u1 = (ei - w * ei.dot(w))
        .normalized()
        .ok_or_else(|| domain_err!("degenerate Gram-Schmidt step"))?;
    let u2 = (ej - w * ej.dot(w) - u1 * ej.dot(u1))
        .normalized()
        .ok_or_else(|| domain_err!("degenerate Gram-Schmidt step"))?;
    let mut rotation = Mat3::from_columns(u1, u2, w);
    if rotation.determinant() < 0.0 {
        rotation = Mat3::from_columns(-u1, u2, w);
    }
    Ok(LightFrame {
        rotation,
        translation: FRAME_TRANSLATION,
    })
}

/// Moves every valid point into the light frame of `omega`.
pub fn shadow_encode(points: &PointImage, omega: LightDirection) -> Result<PointImage> {
    let frame = light_frame(omega.vec())?;
    Ok(points.map_valid(|p| frame.transform(p)))
}
