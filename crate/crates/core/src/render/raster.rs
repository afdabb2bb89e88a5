//! Tile-based front-to-back splatting.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use super::project::{project_cloud, ProjectedCloud, ScreenSplat};
use super::{Camera, FrameRGBD};
use crate::assets::GaussianCloud;

/// Resolved `(color, alpha, depth)` per pixel.
type Pixel = ([f32; 3], f32, f32);

pub const TILE_SIZE: usize = 16;
/// Per-splat opacity clip.
pub const ALPHA_MAX: f32 = 0.99;
/// Blending stops before transmittance would fall below this.
pub const T_MIN: f32 = 1e-4;

/// Environment variable selecting the number of raster threads.
pub const THREADS_ENV: &str = "SPLATNAV_THREADS";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RenderStats {
    pub visible: usize,
    pub culled: usize,
    pub degenerate: usize,
    /// Total splat-tile pairs after binning.
    pub tile_entries: usize,
}

impl RenderStats {
    fn from_projection(p: &ProjectedCloud) -> Self {
        Self {
            visible: p.splats.len(),
            culled: p.culled,
            degenerate: p.degenerate,
            tile_entries: 0,
        }
    }
}

/// Whether the frame is composited over an opaque background or kept as a
/// layer with straight (unpremultiplied) color.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Backdrop {
    Opaque([f32; 3]),
    Layer,
}

/// Running front-to-back accumulation for one pixel.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PixelAccum {
    pub color: [f32; 3],
    pub weight: f32,
    pub depth: f32,
    pub transmittance: f32,
}

impl PixelAccum {
    pub const EMPTY: Self = Self {
        color: [0.0; 3],
        weight: 0.0,
        depth: 0.0,
        transmittance: 1.0,
    };

    /// Blends one splat. Returns `false` once the pixel is saturated; the
    /// splat that would cross the threshold does not contribute.
    #[inline]
    pub fn blend(&mut self, s: &ScreenSplat, px: f32, py: f32) -> bool {
        let Some(g) = s.falloff(px, py) else {
            return true;
        };
        let alpha = (s.opacity * g).min(ALPHA_MAX);
        let next_t = self.transmittance * (1.0 - alpha);
        if next_t < T_MIN {
            return false;
        }
        let w = alpha * self.transmittance;
        for c in 0..3 {
            self.color[c] += w * s.color[c];
        }
        self.weight += w;
        self.depth += w * s.depth;
        self.transmittance = next_t;
        true
    }

    pub fn finish(&self, backdrop: Backdrop, far: f32) -> Pixel {
        let depth = if self.weight > 0.0 { self.depth / self.weight } else { far };
        let alpha = 1.0 - self.transmittance;
        let color = match backdrop {
            Backdrop::Opaque(bg) => {
                std::array::from_fn(|c| (self.color[c] + self.transmittance * bg[c]).clamp(0.0, 1.0))
            }
            Backdrop::Layer if self.weight > 0.0 => {
                std::array::from_fn(|c| (self.color[c] / self.weight).clamp(0.0, 1.0))
            }
            Backdrop::Layer => [0.0; 3],
        };
        (color, alpha, depth)
    }
}

fn env_pool() -> Option<Arc<rayon::ThreadPool>> {
    static POOL: OnceLock<Option<Arc<rayon::ThreadPool>>> = OnceLock::new();
    POOL.get_or_init(|| {
        let raw = std::env::var(THREADS_ENV).ok()?;
        match raw.trim().parse::<usize>() {
            Ok(n) if n > 0 => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map(Arc::new)
                .map_err(|e| log::warn!("could not build {n}-thread pool: {e}"))
                .ok(),
            _ => {
                log::warn!("ignoring {THREADS_ENV}={raw:?}: expected a positive integer");
                None
            }
        }
    })
    .clone()
}

/// Tiled rasterizer. Tiles are shaded in parallel; splat order inside every
/// pixel is the global `(depth, index)` order, so the output does not depend
/// on the thread count.
#[derive(Clone, Debug)]
pub struct Rasterizer {
    tile_size: usize,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl Default for Rasterizer {
    /// 16x16 tiles; thread count from `SPLATNAV_THREADS`, else rayon's global pool.
    fn default() -> Self {
        Self {
            tile_size: TILE_SIZE,
            pool: env_pool(),
        }
    }
}

impl Rasterizer {
    pub fn new(tile_size: usize, threads: Option<usize>) -> Self {
        assert!(tile_size > 0, "tile size must be positive");
        let pool = threads.map(|n| {
            Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .expect("thread pool"),
            )
        });
        Self { tile_size, pool }
    }

    pub fn tile_size(&self) -> usize {
        self.tile_size
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(p) => p.install(f),
            None => f(),
        }
    }

    /// Renders over an opaque background.
    pub fn render(&self, cloud: &GaussianCloud, camera: &Camera, background: [f32; 3]) -> (FrameRGBD, RenderStats) {
        self.install(|| {
            let p = project_cloud(cloud, camera);
            self.rasterize_projected(&p, camera, Backdrop::Opaque(background))
        })
    }

    /// Renders a transparent layer with straight color, for compositing.
    pub fn render_layer(&self, cloud: &GaussianCloud, camera: &Camera) -> (FrameRGBD, RenderStats) {
        self.install(|| {
            let p = project_cloud(cloud, camera);
            self.rasterize_projected(&p, camera, Backdrop::Layer)
        })
    }

    pub(crate) fn rasterize_projected(
        &self,
        projected: &ProjectedCloud,
        camera: &Camera,
        backdrop: Backdrop,
    ) -> (FrameRGBD, RenderStats) {
        let (w, h, ts) = (camera.width, camera.height, self.tile_size);
        let (tx, ty) = (w.div_ceil(ts), h.div_ceil(ts));
        let bins = bin_splats(&projected.splats, tx, ty, ts);
        let mut stats = RenderStats::from_projection(projected);
        stats.tile_entries = bins.iter().map(Vec::len).sum();

        let far = camera.far as f32;
        let mut frame = FrameRGBD::filled(w, h, [0.0; 3], far);
        let tiles: Vec<(usize, Vec<Pixel>)> = (0..tx * ty)
            .into_par_iter()
            .map(|t| {
                let (x0, y0) = ((t % tx) * ts, (t / tx) * ts);
                let (x1, y1) = ((x0 + ts).min(w), (y0 + ts).min(h));
                let list = &bins[t];
                let mut out = Vec::with_capacity((x1 - x0) * (y1 - y0));
                for y in y0..y1 {
                    for x in x0..x1 {
                        let (px, py) = (x as f32 + 0.5, y as f32 + 0.5);
                        let mut acc = PixelAccum::EMPTY;
                        for &i in list {
                            if !acc.blend(&projected.splats[i as usize], px, py) {
                                break;
                            }
                        }
                        out.push(acc.finish(backdrop, far));
                    }
                }
                (t, out)
            })
            .collect();
        for (t, px) in tiles {
            let (x0, y0) = ((t % tx) * ts, (t / tx) * ts);
            let x1 = (x0 + ts).min(w);
            let tw = x1 - x0;
            for (k, (c, a, d)) in px.into_iter().enumerate() {
                let i = frame.index(x0 + k % tw, y0 + k / tw);
                frame.color[i] = c;
                frame.alpha[i] = a;
                frame.depth[i] = d;
            }
        }
        (frame, stats)
    }
}

/// Per-tile lists of splat positions in the sorted array, in sorted order.
/// The 3-sigma box is widened by a pixel so rounding never drops a splat
/// that reaches a pixel center.
fn bin_splats(splats: &[ScreenSplat], tx: usize, ty: usize, ts: usize) -> Vec<Vec<u32>> {
    let mut bins = vec![Vec::new(); tx * ty];
    let tsf = ts as f32;
    for (k, s) in splats.iter().enumerate() {
        let lo_x = ((s.mean[0] - s.extent[0] - 1.0) / tsf).floor();
        let hi_x = ((s.mean[0] + s.extent[0] + 1.0) / tsf).floor();
        let lo_y = ((s.mean[1] - s.extent[1] - 1.0) / tsf).floor();
        let hi_y = ((s.mean[1] + s.extent[1] + 1.0) / tsf).floor();
        if hi_x < 0.0 || hi_y < 0.0 || lo_x >= tx as f32 || lo_y >= ty as f32 {
            continue;
        }
        let (x0, x1) = (lo_x.max(0.0) as usize, (hi_x as usize).min(tx - 1));
        let (y0, y1) = (lo_y.max(0.0) as usize, (hi_y as usize).min(ty - 1));
        for by in y0..=y1 {
            for bx in x0..=x1 {
                bins[by * tx + bx].push(k as u32);
            }
        }
    }
    bins
}

/// Renders `cloud` over `background` with the default rasterizer.
pub fn rasterize(cloud: &GaussianCloud, camera: &Camera, background: [f32; 3]) -> FrameRGBD {
    Rasterizer::default().render(cloud, camera, background).0
}

/// Renders `cloud` as a straight-color layer with the default rasterizer.
pub fn rasterize_layer(cloud: &GaussianCloud, camera: &Camera) -> FrameRGBD {
    Rasterizer::default().render_layer(cloud, camera).0
}
