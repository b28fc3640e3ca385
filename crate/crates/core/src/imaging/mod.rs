//! Image buffers, quality metrics, display transfer and file I/O.

mod buffer;
pub mod metrics;
pub mod rawio;
pub mod srgb;

pub use buffer::ImageBuffer;
pub use metrics::{mse, psnr, psnr_from_mse, subtract_clamped, DirectionMetric, MetricReport};
pub use rawio::{read_raw, write_preview, write_raw};
pub use srgb::{display_decode, display_encode, DisplayImage};
