//! 8-connected Dijkstra with exact path costs.
//!
//! A path cost is kept as `(straight, diagonal)` step counts and compared as
//! `straight + diagonal * sqrt(2)` in exact integer arithmetic, so equal
//! lengths never depend on floating-point summation order.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::{NavError, NavGrid};

/// Snap radius for geodesic endpoints, meters.
pub const SNAP_DISTANCE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct PathCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl PathCost {
    pub const ZERO: Self = Self {
        straight: 0,
        diagonal: 0,
    };

    pub fn meters(&self, resolution: f64) -> f64 {
        (f64::from(self.straight) + f64::from(self.diagonal) * std::f64::consts::SQRT_2) * resolution
    }

    fn step(self, diagonal: bool) -> Self {
        if diagonal {
            Self {
                diagonal: self.diagonal + 1,
                ..self
            }
        } else {
            Self {
                straight: self.straight + 1,
                ..self
            }
        }
    }
}

impl Ord for PathCost {
    fn cmp(&self, other: &Self) -> Ordering {
        // sign of (a1 - a2) + (b1 - b2) * sqrt(2)
        let da = i64::from(self.straight) - i64::from(other.straight);
        let db = i64::from(self.diagonal) - i64::from(other.diagonal);
        match (da.signum(), db.signum()) {
            (0, s) | (s, 0) => s.cmp(&0),
            (sa, sb) if sa == sb => sa.cmp(&0),
            (sa, _) => {
                // opposite signs: compare |da| with |db| * sqrt(2) by squares
                let lhs = da * da;
                let rhs = 2 * db * db;
                if sa > 0 {
                    lhs.cmp(&rhs)
                } else {
                    rhs.cmp(&lhs)
                }
            }
        }
    }
}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NEIGHBORS: [(i32, i32); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Walkable neighbours of a cell. Diagonal moves need both adjacent
/// orthogonal cells walkable (no corner cutting).
pub fn neighbors(grid: &NavGrid, idx: usize) -> impl Iterator<Item = (usize, bool)> + '_ {
    let (x, y) = grid.coords(idx);
    NEIGHBORS.iter().filter_map(move |&(dx, dy)| {
        let nx = x as i64 + i64::from(dx);
        let ny = y as i64 + i64::from(dy);
        if nx < 0 || ny < 0 {
            return None;
        }
        let (nx, ny) = (nx as usize, ny as usize);
        if !grid.is_walkable(nx, ny) {
            return None;
        }
        let diag = dx != 0 && dy != 0;
        if diag && !(grid.is_walkable(nx, y) && grid.is_walkable(x, ny)) {
            return None;
        }
        Some((grid.index(nx, ny), diag))
    })
}

/// Single-source costs over the whole grid; `None` marks unreachable cells.
#[derive(Clone, Debug)]
pub struct DistanceField {
    pub source: (usize, usize),
    resolution: f64,
    width: usize,
    cost: Vec<Option<PathCost>>,
}

impl DistanceField {
    pub fn cost(&self, ix: usize, iy: usize) -> Option<PathCost> {
        self.cost[iy * self.width + ix]
    }

    pub fn meters(&self, ix: usize, iy: usize) -> Option<f64> {
        self.cost(ix, iy).map(|c| c.meters(self.resolution))
    }

    pub fn costs(&self) -> &[Option<PathCost>] {
        &self.cost
    }
}

fn dijkstra(grid: &NavGrid, src: usize, target: Option<usize>) -> Vec<Option<PathCost>> {
    let mut cost: Vec<Option<PathCost>> = vec![None; grid.len()];
    let mut done = vec![false; grid.len()];
    let mut heap = BinaryHeap::new();
    cost[src] = Some(PathCost::ZERO);
    heap.push(Reverse((PathCost::ZERO, src)));
    while let Some(Reverse((c, u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if Some(u) == target {
            break;
        }
        for (v, diag) in neighbors(grid, u) {
            if done[v] {
                continue;
            }
            let nc = c.step(diag);
            if cost[v].is_none_or(|old| nc < old) {
                cost[v] = Some(nc);
                heap.push(Reverse((nc, v)));
            }
        }
    }
    cost
}

/// Costs from `source` to every walkable cell.
pub fn distance_field(grid: &NavGrid, source: (usize, usize)) -> Result<DistanceField, NavError> {
    if !grid.is_walkable(source.0, source.1) {
        return Err(NavError::InvalidEndpoint {
            point: grid.cell_center(source.0, source.1),
            max_dist: 0.0,
        });
    }
    Ok(DistanceField {
        source,
        resolution: grid.resolution,
        width: grid.width,
        cost: dijkstra(grid, grid.index(source.0, source.1), None),
    })
}

/// Exact shortest-path cost between two cells, `None` when unreachable.
pub fn geodesic_cost(grid: &NavGrid, a: (usize, usize), b: (usize, usize)) -> Option<PathCost> {
    if !grid.is_walkable(a.0, a.1) || !grid.is_walkable(b.0, b.1) {
        return None;
    }
    let t = grid.index(b.0, b.1);
    dijkstra(grid, grid.index(a.0, a.1), Some(t))[t]
}

/// Geodesic distance in meters between two world points. Endpoints snap to
/// the nearest walkable cell within 0.5 m; `Ok(None)` means unreachable.
pub fn geodesic_distance(grid: &NavGrid, a: [f64; 2], b: [f64; 2]) -> Result<Option<f64>, NavError> {
    let ca = grid.snap(a, SNAP_DISTANCE)?;
    let cb = grid.snap(b, SNAP_DISTANCE)?;
    Ok(geodesic_cost(grid, ca, cb).map(|c| c.meters(grid.resolution)))
}
