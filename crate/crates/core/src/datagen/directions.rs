use std::f64::consts::PI;

use crate::geometry::LightDirection;
use crate::math::Vec3;

/// Light directions over the visible hemisphere on equal-area rings.
///
/// The zenith gets a polar cap holding one cell's worth of solid angle; the
/// rest of `cos θ ∈ [0, 1)` is split into `n_rings` bands of equal width, so
/// every ring (and every direction within a ring) covers the same solid angle.
/// Ring directions sit at the middle of their band in `cos θ`, with azimuths
/// evenly spaced and odd rings offset by half a step.
pub fn direction_grid(n_rings: usize, per_ring: usize) -> Vec<LightDirection> {
    let mut dirs = vec![LightDirection::ZENITH];
    if n_rings == 0 || per_ring == 0 {
        return dirs;
    }
    let total = (n_rings * per_ring + 1) as f64;
    let cap = 1.0 / total;
    let band = (1.0 - cap) / n_rings as f64;
    for ring in 0..n_rings {
        let cos_hi = 1.0 - cap - ring as f64 * band;
        let cos_t = cos_hi - 0.5 * band;
        let sin_t = (1.0 - cos_t * cos_t).sqrt();
        let offset = if ring % 2 == 1 { 0.5 } else { 0.0 };
        for j in 0..per_ring {
            let phi = 2.0 * PI * (j as f64 + offset) / per_ring as f64;
            let v = Vec3::new(sin_t * phi.cos(), sin_t * phi.sin(), cos_t);
            dirs.push(LightDirection::new(v).expect("ring directions lie above the horizon"));
        }
    }
    dirs
}

/// `cos θ` bounds `(lower, upper)` of each ring's band, zenith cap excluded.
pub fn ring_bands(n_rings: usize, per_ring: usize) -> Vec<(f64, f64)> {
    let total = (n_rings * per_ring + 1) as f64;
    let cap = 1.0 / total;
    let band = (1.0 - cap) / n_rings.max(1) as f64;
    (0..n_rings)
        .map(|r| {
            let hi = 1.0 - cap - r as f64 * band;
            (hi - band, hi)
        })
        .collect()
}
