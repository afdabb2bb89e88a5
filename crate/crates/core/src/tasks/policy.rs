//! Scripted policies: a privileged geodesic follower, a seeded random
//! walker, and action replay.

use std::path::Path;

use nalgebra::Vector2;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::episode::Episode;
use super::params::Action;
use super::trace::Trace;
use crate::geom::{wrap_angle, Capsule};
use crate::nav::{clip_step, distance_field, neighbors, DistanceField, NavGrid, ObstacleSet};
use crate::Error;

pub trait Policy {
    fn act(&mut self, episode: &Episode<'_>) -> Result<Action, Error>;
}

/// Follows the geodesic toward the goal, re-planned every step with the
/// current avatar capsules blocked out. Uses privileged state.
#[derive(Clone, Debug)]
pub struct ShortestPathPolicy {
    /// Extra clearance kept around avatar capsules when planning, meters.
    pub margin: f64,
    /// Stop once the geodesic goal distance is at most this.
    pub stop_distance: f64,
    /// Cells followed down the distance field when picking a waypoint.
    pub lookahead_cells: usize,
    wait_left: bool,
}

impl Default for ShortestPathPolicy {
    fn default() -> Self {
        Self {
            margin: 0.1,
            stop_distance: 0.15,
            lookahead_cells: 60,
            wait_left: true,
        }
    }
}

/// Marks cells whose center lies within the inflated 2D footprint of any
/// capsule as blocked.
fn block_capsules(grid: &NavGrid, caps: &[Capsule], inflate: f64) -> Vec<bool> {
    let mut mask = grid.walkable_mask().to_vec();
    let res = grid.resolution;
    for c in caps {
        let r = c.radius + inflate;
        let (a, b) = (Vector2::new(c.p0.x, c.p0.y), Vector2::new(c.p1.x, c.p1.y));
        let lo = a.inf(&b).add_scalar(-r);
        let hi = a.sup(&b).add_scalar(r);
        let ix0 = ((lo.x - grid.origin[0]) / res).floor().max(0.0) as usize;
        let iy0 = ((lo.y - grid.origin[1]) / res).floor().max(0.0) as usize;
        let ix1 = (((hi.x - grid.origin[0]) / res).ceil().max(0.0) as usize).min(grid.width.saturating_sub(1));
        let iy1 = (((hi.y - grid.origin[1]) / res).ceil().max(0.0) as usize).min(grid.height.saturating_sub(1));
        let ab = b - a;
        let len2 = ab.norm_squared();
        for iy in iy0..=iy1 {
            for ix in ix0..=ix1 {
                let q = grid.cell_center(ix, iy);
                let q = Vector2::new(q[0], q[1]);
                let t = if len2 > 0.0 { ((q - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
                if (q - (a + ab * t)).norm() <= r {
                    mask[grid.index(ix, iy)] = false;
                }
            }
        }
    }
    mask
}

fn line_clear(grid: &NavGrid, from: Vector2<f64>, to: Vector2<f64>) -> bool {
    let d = to - from;
    let n = (d.norm() / (0.5 * grid.resolution)).ceil().max(1.0) as usize;
    (0..=n).all(|k| {
        let p = from + d * (k as f64 / n as f64);
        grid.is_walkable_at([p.x, p.y])
    })
}

impl ShortestPathPolicy {
    /// Waypoint a few meters down the field with line of sight from `pos`.
    fn waypoint(&self, grid: &NavGrid, field: &DistanceField, pos: Vector2<f64>) -> Option<Vector2<f64>> {
        let (mut cx, mut cy) = grid.cell_of([pos.x, pos.y])?;
        field.cost(cx, cy)?;
        let mut best = None;
        for _ in 0..self.lookahead_cells {
            let here = field.cost(cx, cy)?;
            let next = neighbors(grid, grid.index(cx, cy))
                .filter_map(|(n, _)| {
                    let (nx, ny) = grid.coords(n);
                    field.cost(nx, ny).map(|c| (c, n))
                })
                .min();
            let Some((c, n)) = next else { break };
            if c >= here {
                break;
            }
            (cx, cy) = grid.coords(n);
            let p = grid.cell_center(cx, cy);
            let p = Vector2::new(p[0], p[1]);
            if !line_clear(grid, pos, p) {
                break;
            }
            best = Some(p);
        }
        best
    }

    fn head_to(&mut self, episode: &Episode<'_>, target: Vector2<f64>, final_point: Vector2<f64>) -> Action {
        let st = episode.state();
        let agent = &st.agent;
        let cfg = episode.config();
        let d = target - agent.position;
        let aim = if d.norm() > 1e-9 { d } else { final_point - agent.position };
        let err = wrap_angle(aim.y.atan2(aim.x) - agent.heading);
        if err.abs() > 0.5 * cfg.actions.turn_angle {
            return if err > 0.0 { Action::TurnLeft } else { Action::TurnRight };
        }
        let desired = agent.forward() * cfg.actions.forward_step;
        let free = clip_step(agent, &desired, episode.grid(), &ObstacleSet::default());
        let with_avatars = clip_step(agent, &desired, episode.grid(), episode.obstacles());
        if with_avatars.norm() < free.norm() - 1e-6 {
            // an avatar is in the way: wait in place
            self.wait_left = !self.wait_left;
            return if self.wait_left { Action::TurnLeft } else { Action::TurnRight };
        }
        Action::MoveForward
    }

    fn plan(&self, episode: &Episode<'_>, goal: Vector2<f64>) -> Result<Option<Vector2<f64>>, Error> {
        let grid = episode.grid();
        let pos = episode.state().agent.position;
        let inflate = episode.state().agent.radius + self.margin;
        let goal_cell = grid.snap([goal.x, goal.y], 2.0)?;
        let mask = block_capsules(grid, &episode.obstacles().capsules, inflate);
        if mask[grid.index(goal_cell.0, goal_cell.1)] {
            if let Ok(dyn_grid) = NavGrid::from_walkable(grid.width, grid.height, grid.resolution, grid.origin, mask) {
                if dyn_grid.is_walkable_at([pos.x, pos.y]) {
                    let f = distance_field(&dyn_grid, goal_cell)?;
                    if let Some(w) = self.waypoint(&dyn_grid, &f, pos) {
                        return Ok(Some(w));
                    }
                }
            }
        }
        let f = match (episode.goal_field(), episode.state().goal) {
            (Some(f), Some(_)) => f.clone(),
            _ => distance_field(grid, goal_cell)?,
        };
        Ok(self.waypoint(grid, &f, pos))
    }
}

impl Policy for ShortestPathPolicy {
    fn act(&mut self, episode: &Episode<'_>) -> Result<Action, Error> {
        let st = episode.state();
        let (goal, facing) = episode.goal_point()?;
        match facing {
            None => {
                if st.d_goal.is_some_and(|d| d <= self.stop_distance) {
                    return Ok(Action::Stop);
                }
                let wp = self.plan(episode, goal)?.unwrap_or(goal);
                Ok(self.head_to(episode, wp, goal))
            }
            Some(facing) => {
                let tp = &episode.config().track;
                let follow = goal - facing * tp.band_center();
                if (follow - st.agent.position).norm() <= 0.2 {
                    // in position: just keep the target centred
                    let d = goal - st.agent.position;
                    let err = wrap_angle(d.y.atan2(d.x) - st.agent.heading);
                    if err.abs() > 0.5 * episode.config().actions.turn_angle {
                        return Ok(if err > 0.0 { Action::TurnLeft } else { Action::TurnRight });
                    }
                    return Ok(Action::Stop);
                }
                let wp = match self.plan(episode, follow) {
                    Ok(w) => w.unwrap_or(follow),
                    Err(_) => goal,
                };
                Ok(self.head_to(episode, wp, follow))
            }
        }
    }
}

/// Uniform-ish random actions from a seeded stream. Weights are
/// `stop 0.02, forward 0.58, left 0.2, right 0.2`.
#[derive(Clone, Debug)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
    dist: WeightedIndex<f64>,
}

impl RandomPolicy {
    pub const WEIGHTS: [f64; 4] = [0.02, 0.58, 0.2, 0.2];

    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Self {
            rng,
            dist: WeightedIndex::new(Self::WEIGHTS).expect("static weights"),
        }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _episode: &Episode<'_>) -> Result<Action, Error> {
        Ok(Action::ALL[self.dist.sample(&mut self.rng)])
    }
}

/// Plays back a fixed action list, then stops.
#[derive(Clone, Debug)]
pub struct ReplayPolicy {
    actions: Vec<Action>,
    next: usize,
}

impl ReplayPolicy {
    pub fn new(actions: Vec<Action>) -> Self {
        Self { actions, next: 0 }
    }

    /// Reads either a trace file or whitespace/line-separated action names.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, Error> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if text.trim_start().starts_with('{') {
            let trace = Trace::from_reader(text.as_bytes())?;
            return Ok(Self::new(trace.actions()));
        }
        let actions = text
            .split_whitespace()
            .map(|tok| tok.parse::<Action>().map_err(Error::Trace))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(actions))
    }
}

impl Policy for ReplayPolicy {
    fn act(&mut self, _episode: &Episode<'_>) -> Result<Action, Error> {
        let a = self.actions.get(self.next).copied().unwrap_or(Action::Stop);
        self.next += 1;
        Ok(a)
    }
}

/// Runs `policy` until the episode ends.
pub fn run_episode(episode: &mut Episode<'_>, policy: &mut dyn Policy) -> Result<(), Error> {
    while !episode.state().done {
        let a = policy.act(episode)?;
        episode.step(a)?;
    }
    Ok(())
}
