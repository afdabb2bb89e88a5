//! Agent capsule against avatar capsules: clearance, step clipping and
//! depenetration.

use nalgebra::{Vector2, Vector3};

use super::NavGrid;
use crate::assets::CapsuleTrack;
use crate::geom::{closest_segment_params, Capsule};
use crate::rig::{sample_capsules, RigError};

pub const DEFAULT_AGENT_HEIGHT: f64 = 1.5;
/// Radius searched when pushing the agent out of an overlapping avatar.
pub const DEPENETRATION_RADIUS: f64 = 2.0;

/// The agent as a vertical capsule standing on the floor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentBody {
    pub position: Vector2<f64>,
    /// Radians, counter-clockwise from +x.
    pub heading: f64,
    pub radius: f64,
    pub height: f64,
}

impl AgentBody {
    pub fn new(position: Vector2<f64>, heading: f64, radius: f64, height: f64) -> Self {
        assert!(radius > 0.0 && height > 2.0 * radius, "agent needs radius > 0 and height > 2 * radius");
        Self {
            position,
            heading,
            radius,
            height,
        }
    }

    pub fn capsule_at(&self, p: &Vector2<f64>) -> Capsule {
        Capsule::new(
            Vector3::new(p.x, p.y, self.radius),
            Vector3::new(p.x, p.y, self.height - self.radius),
            self.radius,
        )
    }

    pub fn capsule(&self) -> Capsule {
        self.capsule_at(&self.position)
    }

    pub fn forward(&self) -> Vector2<f64> {
        Vector2::new(self.heading.cos(), self.heading.sin())
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.position.x, self.position.y]
    }
}

/// Avatar capsules active during the current step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObstacleSet {
    pub capsules: Vec<Capsule>,
}

impl ObstacleSet {
    pub fn new(capsules: Vec<Capsule>) -> Self {
        Self { capsules }
    }

    pub fn len(&self) -> usize {
        self.capsules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.capsules.is_empty()
    }
}

/// Capsule track of one avatar sampled at a clock value.
#[derive(Clone, Copy, Debug)]
pub struct TrackSample<'a> {
    pub track: &'a CapsuleTrack,
    pub fps: f64,
    /// Track-local sample time, already looped or clamped.
    pub time: f64,
    pub enabled: bool,
}

/// Union of all enabled avatars' capsules at their current clocks.
pub fn refresh_obstacles(avatars: &[TrackSample<'_>]) -> Result<ObstacleSet, RigError> {
    let mut capsules = Vec::new();
    for a in avatars.iter().filter(|a| a.enabled) {
        capsules.extend(sample_capsules(a.track, a.time, a.fps)?);
    }
    Ok(ObstacleSet { capsules })
}

fn clearance_at(agent: &AgentBody, p: &Vector2<f64>, obstacles: &[Capsule]) -> f64 {
    let a = agent.capsule_at(p);
    obstacles.iter().map(|c| a.clearance(c)).fold(f64::INFINITY, f64::min)
}

/// Minimum signed clearance between the agent capsule and every obstacle
/// capsule; `+inf` when there are none.
pub fn min_clearance(agent: &AgentBody, obstacles: &ObstacleSet) -> f64 {
    clearance_at(agent, &agent.position, &obstacles.capsules)
}

const ROOT_ITERS: usize = 64;

/// Largest `s` in `[0, 1]` such that the agent keeps nonnegative clearance
/// to `cap` along the whole motion `pos + [0, s] * step`.
///
/// Clearance along a straight translation is convex in `s` (it is the
/// distance from a moving point to a fixed convex set, minus a constant),
/// so the first crossing is found by bracketing the minimum and bisecting.
fn capsule_stop(agent: &AgentBody, pos: &Vector2<f64>, step: &Vector2<f64>, cap: &Capsule) -> f64 {
    let f = |s: f64| agent.capsule_at(&(pos + step * s)).clearance(cap);
    if f(0.0) < 0.0 {
        return 0.0;
    }
    let hi = if f(1.0) < 0.0 {
        1.0
    } else {
        // golden-section search for the minimum of a convex function
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (0.0, 1.0);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..ROOT_ITERS {
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = f(x2);
            }
        }
        let (m, fm) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
        if fm >= 0.0 {
            return 1.0;
        }
        m
    };
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..ROOT_ITERS {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Truncates `desired` so the agent stays on walkable cells and never
/// overlaps an obstacle capsule. No sliding: the motion stops at the first
/// blocking point along the straight step.
///
/// The grid is swept in substeps of at most half a cell; capsule contacts
/// are solved per capsule to full floating-point precision.
pub fn clip_step(agent: &AgentBody, desired: &Vector2<f64>, grid: &NavGrid, obstacles: &ObstacleSet) -> Vector2<f64> {
    let len = desired.norm();
    if len == 0.0 || !len.is_finite() {
        return Vector2::zeros();
    }
    let pos = agent.position;
    let n_sub = (len / (0.5 * grid.resolution)).ceil().max(1.0) as usize;
    let at = |s: f64| pos + desired * s;
    let walk_ok = |s: f64| {
        let p = at(s);
        grid.is_walkable_at([p.x, p.y])
    };

    let mut grid_stop = if walk_ok(0.0) { 1.0 } else { 0.0 };
    if grid_stop > 0.0 {
        for k in 1..=n_sub {
            if !walk_ok(k as f64 / n_sub as f64) {
                grid_stop = (k - 1) as f64 / n_sub as f64;
                break;
            }
        }
    }
    let cap_stop = obstacles
        .capsules
        .iter()
        .map(|c| capsule_stop(agent, &pos, desired, c))
        .fold(1.0, f64::min);
    let mut s = grid_stop.min(cap_stop);
    if s > 0.0 && !walk_ok(s) {
        // between substeps the path may clip a blocked corner cell
        s = (s * n_sub as f64).floor() / n_sub as f64;
    }
    if s >= 1.0 {
        *desired
    } else {
        desired * s
    }
}

/// True when [`clip_step`] would shorten the step by more than 1e-6 m.
pub fn is_step_blocked(agent: &AgentBody, desired: &Vector2<f64>, grid: &NavGrid, obstacles: &ObstacleSet) -> bool {
    clip_step(agent, desired, grid, obstacles).norm() < desired.norm() - 1e-6
}

fn valid_at(agent: &AgentBody, p: &Vector2<f64>, grid: &NavGrid, obstacles: &[Capsule]) -> bool {
    grid.is_walkable_at([p.x, p.y]) && clearance_at(agent, p, obstacles) >= 0.0
}

/// New agent position when avatars have moved into it, or `None` if the
/// current position is already valid (walkable and clear).
///
/// First tries sliding straight away from the deepest contact in half-cell
/// increments; failing that, takes the nearest valid cell center within
/// [`DEPENETRATION_RADIUS`].
pub fn resolve_penetration(agent: &AgentBody, grid: &NavGrid, obstacles: &ObstacleSet) -> Option<Vector2<f64>> {
    let caps = &obstacles.capsules;
    if valid_at(agent, &agent.position, grid, caps) {
        return None;
    }
    let body = agent.capsule();
    let deepest = caps
        .iter()
        .min_by(|a, b| body.clearance(a).total_cmp(&body.clearance(b)));
    if let Some(c) = deepest.filter(|c| body.clearance(c) < 0.0) {
        let (s, t) = closest_segment_params(&body.p0, &body.p1, &c.p0, &c.p1);
        let on_agent = body.p0 + (body.p1 - body.p0) * s;
        let on_cap = c.p0 + (c.p1 - c.p0) * t;
        let away = Vector2::new(on_agent.x - on_cap.x, on_agent.y - on_cap.y);
        if away.norm() > 1e-9 {
            let dir = away.normalize();
            let inc = 0.5 * grid.resolution;
            let n = (DEPENETRATION_RADIUS / inc).ceil() as usize;
            for k in 1..=n {
                let p = agent.position + dir * (k as f64 * inc);
                if !grid.is_walkable_at([p.x, p.y]) {
                    break;
                }
                if valid_at(agent, &p, grid, caps) {
                    return Some(p);
                }
            }
        }
    }
    let r = (DEPENETRATION_RADIUS / grid.resolution).ceil() as i64;
    let (cx, cy) = match grid.cell_of(agent.xy()) {
        Some((x, y)) => (x as i64, y as i64),
        None => (
            ((agent.position.x - grid.origin[0]) / grid.resolution).round() as i64,
            ((agent.position.y - grid.origin[1]) / grid.resolution).round() as i64,
        ),
    };
    let mut best: Option<(f64, Vector2<f64>)> = None;
    for iy in (cy - r).max(0)..=(cy + r).min(grid.height as i64 - 1) {
        for ix in (cx - r).max(0)..=(cx + r).min(grid.width as i64 - 1) {
            let c = grid.cell_center(ix as usize, iy as usize);
            let p = Vector2::new(c[0], c[1]);
            let d = (p - agent.position).norm();
            if d > DEPENETRATION_RADIUS || best.is_some_and(|(bd, _)| d >= bd) {
                continue;
            }
            if valid_at(agent, &p, grid, caps) {
                best = Some((d, p));
            }
        }
    }
    if best.is_none() {
        log::warn!(
            "agent at ({:.3}, {:.3}) overlaps an avatar and no free spot lies within {DEPENETRATION_RADIUS} m",
            agent.position.x,
            agent.position.y
        );
    }
    best.map(|(_, p)| p)
}
