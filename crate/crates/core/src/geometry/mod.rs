//! Camera model, point clouds, light frames and cast shadows.

mod camera;
mod degrade;
mod frame;
mod shadow;

pub use camera::{normals_from_depth, unproject, CameraIntrinsics, DepthMap, PointImage};
pub use degrade::{degrade_depth, DegradeParams};
pub use frame::{light_frame, shadow_encode, LightDirection, LightFrame, FRAME_TRANSLATION};
pub use shadow::{cast_shadow_mask, ShadowConfig, ShadowMethod};
