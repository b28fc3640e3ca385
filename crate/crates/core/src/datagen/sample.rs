use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Scene;
use crate::brdf::{render_flash, shade_directional, BrdfConstants, MaterialMaps};
use crate::error::Result;
use crate::geometry::{
    cast_shadow_mask, degrade_depth, unproject, CameraIntrinsics, DegradeParams, DepthMap,
    LightDirection, ShadowConfig,
};
use crate::imaging::ImageBuffer;

/// Everything besides the scene that determines a rendered sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderSettings {
    pub flash_intensity: f64,
    /// RGB intensity of each directional basis light.
    pub light_intensity: [f64; 3],
    pub brdf: BrdfConstants,
    pub shadow: ShadowConfig,
    pub degrade: DegradeParams,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            flash_intensity: 1.5,
            light_intensity: [3.0, 3.0, 3.0],
            brdf: BrdfConstants::default(),
            shadow: ShadowConfig::default(),
            degrade: DegradeParams::default(),
        }
    }
}

/// One scene's worth of training/evaluation data.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSample {
    pub flash: ImageBuffer,
    pub depth: DepthMap,
    pub depth_noisy: DepthMap,
    pub maps: MaterialMaps,
    pub directions: Vec<LightDirection>,
    pub relit: Vec<ImageBuffer>,
    pub shadows: Vec<ImageBuffer>,
}

impl DatasetSample {
    pub fn width(&self) -> usize {
        self.flash.width()
    }

    pub fn height(&self) -> usize {
        self.flash.height()
    }
}

/// Renders the flash view, noisy depth and, per direction, the hard shadow
/// mask and the shadowed one-bounce image.
pub fn render_sample(
    scene: &Scene,
    directions: &[LightDirection],
    camera: &CameraIntrinsics,
    noise_seed: u64,
    settings: &RenderSettings,
) -> Result<DatasetSample> {
    let points = unproject(&scene.depth, camera)?;
    let flash = render_flash(&scene.maps, &points, settings.flash_intensity, &settings.brdf)?;
    let depth_noisy = degrade_depth(&scene.depth, &settings.degrade, noise_seed)?;

    let per_dir: Vec<(ImageBuffer, ImageBuffer)> = directions
        .par_iter()
        .map(|&d| {
            let mask = cast_shadow_mask(&points, d, &settings.shadow)?;
            let relit = shade_directional(
                &scene.maps,
                &points,
                d,
                settings.light_intensity,
                Some(&mask),
                &settings.brdf,
            )?;
            Ok((relit, mask))
        })
        .collect::<Result<_>>()?;
    let (relit, shadows) = per_dir.into_iter().unzip();

    Ok(DatasetSample {
        flash,
        depth: scene.depth.clone(),
        depth_noisy,
        maps: scene.maps.clone(),
        directions: directions.to_vec(),
        relit,
        shadows,
    })
}
