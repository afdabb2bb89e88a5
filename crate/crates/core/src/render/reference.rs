//! Untiled per-pixel renderer used to check the tiled path.

use super::project::{project_cloud, ScreenSplat};
use super::raster::{Backdrop, PixelAccum};
use super::{Camera, FrameRGBD};
use crate::assets::GaussianCloud;

/// Renders every pixel against the full depth-sorted splat list with no
/// tiling and no parallelism.
pub fn rasterize_reference(cloud: &GaussianCloud, camera: &Camera, background: [f32; 3]) -> FrameRGBD {
    let mut splats: Vec<ScreenSplat> = project_cloud(cloud, camera).splats;
    splats.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.index.cmp(&b.index)));
    let far = camera.far as f32;
    let mut frame = FrameRGBD::filled(camera.width, camera.height, background, far);
    for y in 0..camera.height {
        for x in 0..camera.width {
            let (px, py) = (x as f32 + 0.5, y as f32 + 0.5);
            let mut acc = PixelAccum::EMPTY;
            for s in &splats {
                if !acc.blend(s, px, py) {
                    break;
                }
            }
            let (c, a, d) = acc.finish(Backdrop::Opaque(background), far);
            let i = frame.index(x, y);
            frame.color[i] = c;
            frame.alpha[i] = a;
            frame.depth[i] = d;
        }
    }
    frame
}
