use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::RenderError;

/// Rendered color, coverage and expected depth, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameRGBD {
    pub width: usize,
    pub height: usize,
    pub color: Vec<[f32; 3]>,
    pub alpha: Vec<f32>,
    pub depth: Vec<f32>,
    /// Depth written where nothing was hit.
    pub far: f32,
}

impl FrameRGBD {
    pub fn filled(width: usize, height: usize, color: [f32; 3], far: f32) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            color: vec![color; n],
            alpha: vec![0.0; n],
            depth: vec![far; n],
            far,
        }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Largest absolute per-channel difference against `other`, over color,
    /// alpha and depth respectively.
    pub fn max_abs_diff(&self, other: &FrameRGBD) -> (f32, f32, f32) {
        assert_eq!((self.width, self.height), (other.width, other.height), "frame size mismatch");
        let mut d = (0.0f32, 0.0f32, 0.0f32);
        for i in 0..self.color.len() {
            for c in 0..3 {
                d.0 = d.0.max((self.color[i][c] - other.color[i][c]).abs());
            }
            d.1 = d.1.max((self.alpha[i] - other.alpha[i]).abs());
            d.2 = d.2.max((self.depth[i] - other.depth[i]).abs());
        }
        d
    }

    /// 8-bit RGB buffer.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.color
            .iter()
            .flat_map(|c| c.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8))
            .collect()
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<(), RenderError> {
        let path = path.as_ref();
        image::save_buffer(
            path,
            &self.to_rgb8(),
            self.width as u32,
            self.height as u32,
            image::ColorType::Rgb8,
        )
        .map_err(|e| RenderError::Export(format!("{}: {e}", path.display())))
    }

    /// Raw little-endian `f32` depth plus a JSON sidecar (`<path>.json`)
    /// holding width, height and the far value.
    pub fn write_depth_f32(&self, path: impl AsRef<Path>) -> Result<(), RenderError> {
        let path = path.as_ref();
        let mut w = create(path)?;
        for d in &self.depth {
            w.write_all(&d.to_le_bytes()).map_err(export_err(path))?;
        }
        w.flush().map_err(export_err(path))?;
        let meta = serde_json::json!({
            "width": self.width,
            "height": self.height,
            "far": self.far,
            "dtype": "float32",
            "order": "row-major",
        });
        let mut side = path.as_os_str().to_owned();
        side.push(".json");
        std::fs::write(&side, serde_json::to_string_pretty(&meta).expect("static json"))
            .map_err(export_err(Path::new(&side)))
    }

    /// Depth as a single-channel little-endian PFM (bottom row first).
    pub fn write_depth_pfm(&self, path: impl AsRef<Path>) -> Result<(), RenderError> {
        let path = path.as_ref();
        let mut w = create(path)?;
        write!(w, "Pf\n{} {}\n-1.0\n", self.width, self.height).map_err(export_err(path))?;
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                w.write_all(&self.depth[self.index(x, y)].to_le_bytes())
                    .map_err(export_err(path))?;
            }
        }
        w.flush().map_err(export_err(path))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, RenderError> {
    File::create(path).map(BufWriter::new).map_err(export_err(path))
}

fn export_err(path: &Path) -> impl Fn(std::io::Error) -> RenderError + '_ {
    move |e| RenderError::Export(format!("{}: {e}", path.display()))
}
