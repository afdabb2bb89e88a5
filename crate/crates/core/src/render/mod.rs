//! CPU gaussian splatting: projection, tiled rasterization, an untiled
//! reference, and the depth compositor that merges avatar layers into the
//! scene frame.

mod camera;
mod composite;
mod frame;
mod project;
mod raster;
mod reference;
mod sh;

pub use camera::{look_along, look_at, Camera};
pub use composite::{composite, DEPTH_OWNERSHIP_ALPHA};
pub use frame::FrameRGBD;
pub use project::{
    project_cloud, project_gaussian, project_point, projection_jacobian, Footprint, ProjectedCloud,
    ScreenSplat, COV2D_REGULARIZATION, MIN_COV2D_DET, SUPPORT_SIGMAS,
};
pub use raster::{rasterize, rasterize_layer, Rasterizer, RenderStats, ALPHA_MAX, THREADS_ENV, TILE_SIZE, T_MIN};
pub use reference::rasterize_reference;
pub use sh::{eval_sh, sh_basis};

use crate::assets::GaussianCloud;

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("export failed: {0}")]
    Export(String),
}

/// Scene frame with all avatars drawn as one concatenated layer and
/// depth-composited on top.
pub fn render_observation(
    scene: &GaussianCloud,
    avatars: &[GaussianCloud],
    camera: &Camera,
    background: [f32; 3],
) -> Result<FrameRGBD, RenderError> {
    render_observation_with(&Rasterizer::default(), scene, avatars, camera, background)
}

pub fn render_observation_with(
    rasterizer: &Rasterizer,
    scene: &GaussianCloud,
    avatars: &[GaussianCloud],
    camera: &Camera,
    background: [f32; 3],
) -> Result<FrameRGBD, RenderError> {
    let (back, _) = rasterizer.render(scene, camera, background);
    if avatars.iter().all(GaussianCloud::is_empty) {
        return Ok(back);
    }
    let merged = GaussianCloud::concat(avatars);
    let (front, _) = rasterizer.render_layer(&merged, camera);
    composite(&front, &back)
}
