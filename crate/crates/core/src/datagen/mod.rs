//! Procedural scenes and the synthetic relighting dataset.

mod dataset;
mod directions;
pub mod noise;
mod sample;
mod scene;

pub use dataset::{
    derive_seed, generate_dataset, load_dataset, read_manifest, write_dataset, Dataset,
    DatasetConfig, Manifest, SceneRecord, Split, MANIFEST_FILE, PIPELINE_VERSION,
};
pub use directions::{direction_grid, ring_bands};
pub use sample::{render_sample, DatasetSample, RenderSettings};
pub use scene::{make_scene, Choice, GeometryFamily, Scene, SceneSpec, TextureFamily, DEPTH_BAND};
