use super::{FrameRGBD, RenderError};

/// Coverage at or above which the front layer owns the output depth.
pub const DEPTH_OWNERSHIP_ALPHA: f32 = 0.5;

/// Depth-aware "over" of a straight-color `front` layer onto `back`.
///
/// Where the front layer is nearer, color is `front * a + back * (1 - a)`
/// and depth comes from the front layer once its coverage reaches 0.5.
/// Elsewhere the background pixel is kept unchanged.
pub fn composite(front: &FrameRGBD, back: &FrameRGBD) -> Result<FrameRGBD, RenderError> {
    if (front.width, front.height) != (back.width, back.height) {
        return Err(RenderError::Contract(format!(
            "cannot composite {}x{} over {}x{}",
            front.width, front.height, back.width, back.height
        )));
    }
    let mut out = back.clone();
    for i in 0..out.color.len() {
        let a = front.alpha[i];
        if a <= 0.0 || !(front.depth[i] < back.depth[i]) {
            continue;
        }
        for c in 0..3 {
            out.color[i][c] = front.color[i][c] * a + back.color[i][c] * (1.0 - a);
        }
        out.alpha[i] = a + back.alpha[i] * (1.0 - a);
        if a >= DEPTH_OWNERSHIP_ALPHA {
            out.depth[i] = front.depth[i];
        }
    }
    Ok(out)
}
