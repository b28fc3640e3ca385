mod oracles;

use relightkit::geometry::{cast_shadow_mask, unproject, CameraIntrinsics, DepthMap, LightDirection, ShadowConfig};
use relightkit::imaging::ImageBuffer;
use relightkit::math::Vec3;

fn depth(w: usize, h: usize, f: impl Fn(usize, usize) -> f32) -> DepthMap {
    DepthMap::new(ImageBuffer::from_fn(w, h, 1, |x, y, _| f(x, y))).unwrap()
}

#[test]
fn step_band_matches_ray_cast() {
    let (w, h) = (128, 16);
    let cam = CameraIntrinsics::centered(w, h);
    let d = depth(w, h, |x, _| if (x as f64) < cam.cx { 1.0 } else { 0.8 });
    let pts = unproject(&d, &cam).unwrap();
    let omega = [-1.0 / 2f64.sqrt(), 0.0, 1.0 / 2f64.sqrt()];
    let cfg = ShadowConfig::default();
    let mask = cast_shadow_mask(&pts, LightDirection::new(Vec3::new(omega[0], omega[1], omega[2])).unwrap(), &cfg)
        .unwrap();
    let reference = oracles::ray_march_shadow(&d, &cam, omega, cfg.bias);
    assert_eq!(mask.data(), reference.data());

    // band on the far plane spans x in (-0.2, 0)
    let row = h / 2;
    let shadowed: Vec<f64> = (0..w)
        .filter(|&x| mask.get(x, row, 0) == 0.0)
        .map(|x| pts.at(x, row).x)
        .collect();
    assert!(shadowed.iter().all(|&x| (-0.2..0.0).contains(&x)), "{shadowed:?}");
    let first = shadowed.iter().cloned().fold(f64::INFINITY, f64::min);
    // the wall top sits half a pixel right of x = 0 and the band is sampled
    // on the pixel grid
    let pixel = 1.0 / cam.fx;
    assert!((first + 0.2).abs() <= 2.0 * pixel, "band starts at {first}");
}

#[test]
fn axial_light_on_bump_is_unshadowed() {
    let (w, h) = (64, 64);
    let cam = CameraIntrinsics::centered(w, h);
    let d = depth(w, h, |x, y| {
        let (dx, dy) = (x as f32 - 31.5, y as f32 - 31.5);
        0.9 - 0.25 * (-(dx * dx + dy * dy) / 120.0).exp()
    });
    let pts = unproject(&d, &cam).unwrap();
    let cfg = ShadowConfig::default();
    let mask = cast_shadow_mask(&pts, LightDirection::ZENITH, &cfg).unwrap();
    let reference = oracles::ray_march_shadow(&d, &cam, [0.0, 0.0, 1.0], cfg.bias);
    assert!(reference.data().iter().all(|&v| v == 1.0));
    assert_eq!(mask.data(), reference.data());
}

#[test]
fn oblique_light_on_random_heightfields() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let cam = CameraIntrinsics::centered(48, 48);
    let cfg = ShadowConfig::default();
    let mut shadowed = 0;
    for _ in 0..3 {
        let d = oracles::heightfield(48, &mut rng);
        let pts = unproject(&d, &cam).unwrap();
        for _ in 0..4 {
            let z: f64 = rng.gen_range(0.2..0.9);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - z * z).sqrt();
            let omega = [s * phi.cos(), s * phi.sin(), z];
            let mask =
                cast_shadow_mask(&pts, LightDirection::new(Vec3::new(omega[0], omega[1], omega[2])).unwrap(), &cfg)
                    .unwrap();
            let reference = oracles::ray_march_shadow(&d, &cam, omega, cfg.bias);
            let agree = mask.data().iter().zip(reference.data()).filter(|(a, b)| a == b).count();
            assert!(agree as f64 >= 0.99 * (48 * 48) as f64, "{agree}");
            shadowed += reference.data().iter().filter(|&&v| v == 0.0).count();
        }
    }
    assert!(shadowed > 0);
}
