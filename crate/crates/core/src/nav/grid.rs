use std::path::Path;

use super::NavError;
use crate::assets::NavGridConfig;

/// Binary free/blocked map before erosion. Cell `(ix, iy)` is centered at
/// `origin + (ix, iy) * resolution`.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyMap {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: [f64; 2],
    /// Row-major, `free[iy * width + ix]`.
    pub free: Vec<bool>,
}

impl OccupancyMap {
    pub fn all_free(width: usize, height: usize, resolution: f64, origin: [f64; 2]) -> Self {
        Self {
            width,
            height,
            resolution,
            origin,
            free: vec![true; width * height],
        }
    }

    /// Free rectangle with axis-aligned blocked boxes `[x0, y0, x1, y1]`
    /// (meters); a cell is blocked when its center lies in a box.
    pub fn procedural(
        width: usize,
        height: usize,
        resolution: f64,
        origin: [f64; 2],
        obstacles: &[[f64; 4]],
    ) -> Self {
        let mut map = Self::all_free(width, height, resolution, origin);
        for iy in 0..height {
            for ix in 0..width {
                let [x, y] = map.cell_center(ix, iy);
                if obstacles.iter().any(|b| {
                    x >= b[0].min(b[2]) && x <= b[0].max(b[2]) && y >= b[1].min(b[3]) && y <= b[1].max(b[3])
                }) {
                    map.free[iy * width + ix] = false;
                }
            }
        }
        map
    }

    /// 8-bit grayscale PNG; pixel column `u` is `ix`, row `v` is `iy`, and
    /// values >= 128 are free.
    pub fn from_png(path: impl AsRef<Path>, resolution: f64, origin: [f64; 2]) -> Result<Self, NavError> {
        let path = path.as_ref();
        let img = image::open(path)
            .map_err(|e| NavError::Build(format!("{}: {e}", path.display())))?
            .into_luma8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let free = img.pixels().map(|p| p.0[0] >= 128).collect();
        Ok(Self {
            width: w,
            height: h,
            resolution,
            origin,
            free,
        })
    }

    pub fn from_config(cfg: &NavGridConfig) -> Result<Self, NavError> {
        match cfg {
            NavGridConfig::Image {
                png, resolution, origin, ..
            } => Self::from_png(png, *resolution, *origin),
            NavGridConfig::Procedural {
                width,
                height,
                resolution,
                origin,
                obstacles,
                ..
            } => Ok(Self::procedural(*width, *height, *resolution, *origin, obstacles)),
        }
    }

    /// Writes the map as a grayscale PNG (255 free, 0 blocked).
    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<(), NavError> {
        let path = path.as_ref();
        let buf: Vec<u8> = self.free.iter().map(|&f| if f { 255 } else { 0 }).collect();
        image::save_buffer(path, &buf, self.width as u32, self.height as u32, image::ColorType::L8)
            .map_err(|e| NavError::Build(format!("{}: {e}", path.display())))
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + ix as f64 * self.resolution,
            self.origin[1] + iy as f64 * self.resolution,
        ]
    }
}

/// Walkability grid, already eroded by the agent radius.
#[derive(Clone, Debug, PartialEq)]
pub struct NavGrid {
    pub resolution: f64,
    pub origin: [f64; 2],
    pub width: usize,
    pub height: usize,
    walkable: Vec<bool>,
}

/// Erosion radius in cells for an agent radius.
pub fn erosion_cells(agent_radius: f64, resolution: f64) -> usize {
    (agent_radius / resolution - 1e-9).ceil().max(0.0) as usize
}

/// Erodes the free space by `ceil(agent_radius / resolution)` cells in the
/// Chebyshev metric. Cells outside the map count as blocked.
pub fn build_navgrid(map: &OccupancyMap, agent_radius: f64) -> Result<NavGrid, NavError> {
    if !(map.resolution > 0.0) {
        return Err(NavError::Build(format!("resolution must be positive, got {}", map.resolution)));
    }
    if !(agent_radius >= 0.0) {
        return Err(NavError::Build(format!("agent radius must be >= 0, got {agent_radius}")));
    }
    let (w, h) = (map.width, map.height);
    if map.free.len() != w * h {
        return Err(NavError::Build("occupancy buffer does not match its size".into()));
    }
    let k = erosion_cells(agent_radius, map.resolution);
    // prefix sums of free cells, (w+1) x (h+1)
    let mut sum = vec![0u32; (w + 1) * (h + 1)];
    for iy in 0..h {
        for ix in 0..w {
            sum[(iy + 1) * (w + 1) + ix + 1] = u32::from(map.free[iy * w + ix]) + sum[iy * (w + 1) + ix + 1]
                + sum[(iy + 1) * (w + 1) + ix]
                - sum[iy * (w + 1) + ix];
        }
    }
    let window = ((2 * k + 1) * (2 * k + 1)) as u32;
    let mut walkable = vec![false; w * h];
    for iy in k..h.saturating_sub(k) {
        for ix in k..w.saturating_sub(k) {
            let (x0, y0, x1, y1) = (ix - k, iy - k, ix + k + 1, iy + k + 1);
            let free = sum[y1 * (w + 1) + x1] + sum[y0 * (w + 1) + x0] - sum[y0 * (w + 1) + x1] - sum[y1 * (w + 1) + x0];
            walkable[iy * w + ix] = free == window;
        }
    }
    if !walkable.iter().any(|&b| b) {
        return Err(NavError::Build(format!(
            "no walkable cells remain after eroding {w}x{h} map by {k} cells"
        )));
    }
    Ok(NavGrid {
        resolution: map.resolution,
        origin: map.origin,
        width: w,
        height: h,
        walkable,
    })
}

impl NavGrid {
    /// Builds a grid from an explicit walkability mask without erosion.
    pub fn from_walkable(
        width: usize,
        height: usize,
        resolution: f64,
        origin: [f64; 2],
        walkable: Vec<bool>,
    ) -> Result<Self, NavError> {
        if walkable.len() != width * height || !(resolution > 0.0) {
            return Err(NavError::Build("invalid grid dimensions".into()));
        }
        if !walkable.iter().any(|&b| b) {
            return Err(NavError::Build("grid has no walkable cells".into()));
        }
        Ok(Self {
            resolution,
            origin,
            width,
            height,
            walkable,
        })
    }

    pub fn len(&self) -> usize {
        self.walkable.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walkable.is_empty()
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    pub fn walkable_mask(&self) -> &[bool] {
        &self.walkable
    }

    #[inline]
    pub fn is_walkable(&self, ix: usize, iy: usize) -> bool {
        ix < self.width && iy < self.height && self.walkable[iy * self.width + ix]
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + ix as f64 * self.resolution,
            self.origin[1] + iy as f64 * self.resolution,
        ]
    }

    /// Cell whose center is nearest to `p`, if inside the grid.
    pub fn cell_of(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let fx = ((p[0] - self.origin[0]) / self.resolution).round();
        let fy = ((p[1] - self.origin[1]) / self.resolution).round();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 || !fx.is_finite() || !fy.is_finite() {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    /// Whether the cell containing `p` is walkable.
    pub fn is_walkable_at(&self, p: [f64; 2]) -> bool {
        self.cell_of(p).is_some_and(|(x, y)| self.is_walkable(x, y))
    }

    pub fn walkable_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.walkable
            .iter()
            .enumerate()
            .filter(|(_, &w)| w)
            .map(|(i, _)| self.coords(i))
    }

    pub fn walkable_count(&self) -> usize {
        self.walkable.iter().filter(|&&w| w).count()
    }

    /// Nearest walkable cell to `p` whose center lies within `max_dist`.
    /// Ties go to the lower row-major index.
    pub fn snap(&self, p: [f64; 2], max_dist: f64) -> Result<(usize, usize), NavError> {
        let r = (max_dist / self.resolution).ceil() as i64 + 1;
        let cx = ((p[0] - self.origin[0]) / self.resolution).round() as i64;
        let cy = ((p[1] - self.origin[1]) / self.resolution).round() as i64;
        let mut best: Option<(f64, usize)> = None;
        for iy in (cy - r).max(0)..=(cy + r).min(self.height as i64 - 1) {
            for ix in (cx - r).max(0)..=(cx + r).min(self.width as i64 - 1) {
                let (ux, uy) = (ix as usize, iy as usize);
                if !self.is_walkable(ux, uy) {
                    continue;
                }
                let c = self.cell_center(ux, uy);
                let d = (c[0] - p[0]).hypot(c[1] - p[1]);
                if d > max_dist {
                    continue;
                }
                let idx = self.index(ux, uy);
                if best.is_none_or(|(bd, bi)| d < bd || (d == bd && idx < bi)) {
                    best = Some((d, idx));
                }
            }
        }
        best.map(|(_, i)| self.coords(i))
            .ok_or(NavError::InvalidEndpoint { point: p, max_dist })
    }
}
