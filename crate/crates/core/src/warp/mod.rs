//! Two-pass distortion correction: render the desired view from the user's
//! eye, then map it through the reconstructed geometry into the projector
//! framebuffer. Also simulates what the user finally sees.

mod content;
mod image;
mod pass2;
mod simulate;

pub use content::{render_user_view, CheckerPattern, ColoredMesh, Content, Equirect};
pub use image::{RasterImage, Rgb, BLACK, WHITE};
pub use pass2::{texture_coordinate, warp_to_projector, WorldGeometry};
pub use simulate::{propagate_corners, simulate_projection_and_view, CornerPath, PosedDevice, Unresolved, AMBIENT};
