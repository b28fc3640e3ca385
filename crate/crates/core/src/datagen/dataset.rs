use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{direction_grid, make_scene, render_sample, DatasetSample, RenderSettings, SceneSpec};
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthMap, LightDirection};
use crate::imaging::{read_raw, write_raw, ImageBuffer};
use crate::brdf::MaterialMaps;

pub const MANIFEST_FILE: &str = "manifest";
pub const MANIFEST_FORMAT: &str = "relightkit-dataset";
pub const MANIFEST_VERSION: u32 = 1;
pub const PIPELINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub index: usize,
    pub path: String,
    pub split: Split,
    pub seed: u64,
    pub noise_seed: u64,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub pipeline_version: String,
    pub width: usize,
    pub height: usize,
    pub camera: CameraIntrinsics,
    pub render: RenderSettings,
    pub directions: Vec<LightDirection>,
    pub scenes: Vec<SceneRecord>,
}

/// Manifest plus all scene data, in manifest order.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub samples: Vec<DatasetSample>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = (&SceneRecord, &DatasetSample)> {
        self.manifest
            .scenes
            .iter()
            .zip(&self.samples)
            .filter(move |(r, _)| r.split == split)
    }

    pub fn camera(&self) -> &CameraIntrinsics {
        &self.manifest.camera
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub width: usize,
    pub height: usize,
    pub rings: usize,
    pub per_ring: usize,
    pub train_scenes: usize,
    pub test_scenes: usize,
    pub seed: u64,
    pub scene: SceneSpec,
    pub render: RenderSettings,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            width: 64,
            height: 64,
            rings: 4,
            per_ring: 20,
            train_scenes: 20,
            test_scenes: 4,
            seed: 1,
            scene: SceneSpec::default(),
            render: RenderSettings::default(),
        }
    }
}

impl DatasetConfig {
    pub fn camera(&self) -> CameraIntrinsics {
        CameraIntrinsics::centered(self.width, self.height)
    }

    pub fn directions(&self) -> Vec<LightDirection> {
        direction_grid(self.rings, self.per_ring)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Validation("image size must be positive".into()));
        }
        if self.train_scenes + self.test_scenes == 0 {
            return Err(Error::Validation("dataset needs at least one scene".into()));
        }
        self.scene.validate()?;
        self.camera().validate()
    }
}

/// SplitMix64 finalizer, kept to 63 bits so seeds survive signed text formats.
pub fn derive_seed(base: u64, index: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) >> 1
}

fn scene_files(n_dirs: usize) -> Vec<String> {
    let mut files: Vec<String> = [
        "flash.rlk",
        "depth.rlk",
        "depth_noisy.rlk",
        "albedo.rlk",
        "normal.rlk",
        "rough.rlk",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    files.extend((0..n_dirs).map(|i| format!("relit_{i}.rlk")));
    files.extend((0..n_dirs).map(|i| format!("shadow_{i}.rlk")));
    files
}

/// Generates every scene of the dataset; a pure function of the config.
pub fn generate_dataset(cfg: &DatasetConfig) -> Result<Dataset> {
    cfg.validate()?;
    let camera = cfg.camera();
    let directions = cfg.directions();
    let total = cfg.train_scenes + cfg.test_scenes;
    let records: Vec<SceneRecord> = (0..total)
        .map(|k| SceneRecord {
            index: k,
            path: format!("scene_{k}"),
            split: if k < cfg.train_scenes { Split::Train } else { Split::Test },
            seed: derive_seed(cfg.seed, k as u64, 0),
            noise_seed: derive_seed(cfg.seed, k as u64, 1),
            files: scene_files(directions.len()),
        })
        .collect();
    let samples = records
        .par_iter()
        .map(|r| {
            let scene = make_scene(&cfg.scene.with_seed(r.seed), &camera)?;
            render_sample(&scene, &directions, &camera, r.noise_seed, &cfg.render)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        manifest: Manifest {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            pipeline_version: PIPELINE_VERSION.into(),
            width: cfg.width,
            height: cfg.height,
            camera,
            render: cfg.render.clone(),
            directions,
            scenes: records,
        },
        samples,
    })
}

pub fn write_dataset(dataset: &Dataset, root: &Path) -> Result<()> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let m = &dataset.manifest;
    dataset
        .samples
        .par_iter()
        .zip(&m.scenes)
        .map(|(s, r)| {
            let dir = root.join(&r.path);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for (name, img) in sample_images(s) {
                write_raw(&dir.join(name), img)?;
            }
            Ok(())
        })
        .collect::<Result<Vec<()>>>()?;
    let text = toml::to_string(m).map_err(|e| Error::Config(e.to_string()))?;
    let path = root.join(MANIFEST_FILE);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn sample_images(s: &DatasetSample) -> Vec<(String, &ImageBuffer)> {
    let mut out: Vec<(String, &ImageBuffer)> = vec![
        ("flash.rlk".into(), &s.flash),
        ("depth.rlk".into(), s.depth.image()),
        ("depth_noisy.rlk".into(), s.depth_noisy.image()),
        ("albedo.rlk".into(), &s.maps.albedo),
        ("normal.rlk".into(), &s.maps.normal),
        ("rough.rlk".into(), &s.maps.roughness),
    ];
    out.extend(s.relit.iter().enumerate().map(|(i, r)| (format!("relit_{i}.rlk"), r)));
    out.extend(s.shadows.iter().enumerate().map(|(i, r)| (format!("shadow_{i}.rlk"), r)));
    out
}

pub fn read_manifest(root: &Path) -> Result<Manifest> {
    let path = root.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: Manifest = toml::from_str(&text).map_err(|e| Error::schema(&path, e.to_string()))?;
    if m.format != MANIFEST_FORMAT || m.version != MANIFEST_VERSION {
        return Err(Error::schema(
            &path,
            format!("unsupported format {} v{}", m.format, m.version),
        ));
    }
    Ok(m)
}

pub fn load_dataset(root: &Path) -> Result<Dataset> {
    let manifest = read_manifest(root)?;
    let n = manifest.directions.len();
    let samples = manifest
        .scenes
        .par_iter()
        .map(|r| load_scene(&root.join(&r.path), n, &manifest))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { manifest, samples })
}

fn load_scene(dir: &Path, n_dirs: usize, m: &Manifest) -> Result<DatasetSample> {
    let read = |name: &str| -> Result<ImageBuffer> {
        let p: PathBuf = dir.join(name);
        let img = read_raw(&p)?;
        if img.width() != m.width || img.height() != m.height {
            return Err(Error::schema(&p, "image size differs from manifest"));
        }
        Ok(img)
    };
    let depth = |name: &str| -> Result<DepthMap> {
        let p = dir.join(name);
        DepthMap::new(read(name)?).map_err(|e| Error::schema(&p, e.to_string()))
    };
    Ok(DatasetSample {
        flash: read("flash.rlk")?,
        depth: depth("depth.rlk")?,
        depth_noisy: depth("depth_noisy.rlk")?,
        maps: MaterialMaps {
            albedo: read("albedo.rlk")?,
            normal: read("normal.rlk")?,
            roughness: read("rough.rlk")?,
        },
        directions: m.directions.clone(),
        relit: (0..n_dirs)
            .map(|i| read(&format!("relit_{i}.rlk")))
            .collect::<Result<_>>()?,
        shadows: (0..n_dirs)
            .map(|i| read(&format!("shadow_{i}.rlk")))
            .collect::<Result<_>>()?,
    })
}
