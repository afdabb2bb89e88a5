use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::{Action, EpisodeConfig, TaskKind};
use super::rewards::{
    collision_flag, intrusion, pointnav_reward, track_geometry, tracknav_reward, RewardBreakdown, TrackStep,
};
use super::trace::{Pose2, StepRecord, Trace, TraceHeader, TRACE_SCHEMA};
use crate::geom::wrap_angle;
use crate::nav::{
    clip_step, distance_field, geodesic_cost, min_clearance, resolve_penetration, AgentBody, DistanceField, NavGrid,
    ObstacleSet,
};
use crate::render::{Camera, FrameRGBD, Rasterizer};
use crate::world::World;
use crate::Error;

/// Reset gives up after this many rejected samples.
pub const MAX_RESET_DRAWS: usize = 1000;
/// TrackNav starts this close to (and this far from) the target, meters.
pub const TRACK_START_RANGE: (f64, f64) = (1.0, 4.0);

/// What the agent sees after reset or a step.
#[derive(Clone, Debug)]
pub struct Observation {
    pub frame: Option<FrameRGBD>,
    /// Goal (PointNav) or target (TrackNav) in the agent frame as
    /// `(distance, bearing)`; bearing is counter-clockwise from the heading.
    pub goal_polar: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub record: StepRecord,
}

/// Mutable per-episode state.
#[derive(Clone, Debug)]
pub struct EpisodeState {
    pub agent: AgentBody,
    pub goal: Option<[f64; 2]>,
    pub target: Option<usize>,
    pub step_index: usize,
    /// World time in seconds; avatar clocks derive from it.
    pub time: f64,
    pub d_goal: Option<f64>,
    /// Euclidean distance to the goal or target.
    pub goal_dist: f64,
    /// Unit agent-to-target direction (TrackNav).
    pub target_dir: Vector2<f64>,
    pub streak: u32,
    pub done: bool,
    pub success: bool,
    pub path_length: f64,
}

pub struct Episode<'w> {
    world: &'w World,
    grid: Arc<NavGrid>,
    cfg: EpisodeConfig,
    rasterizer: Rasterizer,
    field: Option<DistanceField>,
    obstacles: ObstacleSet,
    state: EpisodeState,
    trace: Trace,
}

fn cell_pos(grid: &NavGrid, c: (usize, usize)) -> Vector2<f64> {
    let p = grid.cell_center(c.0, c.1);
    Vector2::new(p[0], p[1])
}

impl<'w> Episode<'w> {
    /// Samples a start (and goal) deterministically from `seed`.
    pub fn reset(world: &'w World, cfg: &EpisodeConfig, seed: u64, episode: usize) -> Result<Self, Error> {
        if cfg.max_steps == 0 || !(cfg.fps_sim > 0.0) {
            return Err(Error::Contract("max_steps and fps_sim must be positive".into()));
        }
        let grid = world.grid()?.clone();
        let cells: Vec<(usize, usize)> = grid.walkable_cells().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obstacles = world.obstacles_at(0.0)?;
        let radius = world.agent_radius.max(1e-3);
        let body_at = |p: Vector2<f64>| AgentBody::new(p, 0.0, radius, cfg.agent_height);
        let clear = |p: Vector2<f64>| min_clearance(&body_at(p), &obstacles) >= 0.0;

        let mut chosen = None;
        let mut target = None;
        let mut field = None;
        match cfg.task {
            TaskKind::TrackNav => {
                let (idx, avatar) = world
                    .active_avatars()
                    .next()
                    .ok_or_else(|| Error::EpisodeGeneration("tracknav needs an enabled avatar".into()))?;
                let (root, _) = avatar.root_at(0.0)?;
                target = Some(idx);
                for _ in 0..MAX_RESET_DRAWS {
                    let c = cells[rng.gen_range(0..cells.len())];
                    let p = cell_pos(&grid, c);
                    let d = (p - root).norm();
                    if d >= TRACK_START_RANGE.0 && d <= TRACK_START_RANGE.1 && clear(p) {
                        chosen = Some((c, None));
                        break;
                    }
                }
            }
            TaskKind::PointNav | TaskKind::PointNavAvatar => {
                for _ in 0..MAX_RESET_DRAWS {
                    let s = cells[rng.gen_range(0..cells.len())];
                    let g = cells[rng.gen_range(0..cells.len())];
                    if !clear(cell_pos(&grid, s)) {
                        continue;
                    }
                    let Some(cost) = geodesic_cost(&grid, s, g) else { continue };
                    if cost.meters(grid.resolution) >= cfg.min_separation {
                        chosen = Some((s, Some(g)));
                        break;
                    }
                }
            }
        }
        let (start, goal_cell) = chosen.ok_or_else(|| {
            Error::EpisodeGeneration(format!("no valid start/goal after {MAX_RESET_DRAWS} draws"))
        })?;
        let heading = rng.gen_range(-PI..PI);
        let agent = AgentBody::new(cell_pos(&grid, start), heading, radius, cfg.agent_height);

        let goal = goal_cell.map(|g| grid.cell_center(g.0, g.1));
        let mut d_goal = None;
        if let Some(g) = goal_cell {
            let f = distance_field(&grid, g)?;
            d_goal = f.meters(start.0, start.1);
            field = Some(f);
        }
        let header = TraceHeader {
            schema: TRACE_SCHEMA.to_string(),
            task: cfg.task,
            seed,
            episode,
            start: Pose2 {
                x: agent.position.x,
                y: agent.position.y,
                heading,
            },
            goal,
            target,
            shortest_path: d_goal,
            success_distance: cfg.pointnav.success_distance,
            max_steps: cfg.max_steps,
        };
        let mut ep = Self {
            world,
            grid,
            cfg: cfg.clone(),
            rasterizer: Rasterizer::default(),
            field,
            obstacles,
            state: EpisodeState {
                agent,
                goal,
                target,
                step_index: 0,
                time: 0.0,
                d_goal,
                goal_dist: 0.0,
                target_dir: Vector2::x(),
                streak: 0,
                done: false,
                success: false,
                path_length: 0.0,
            },
            trace: Trace {
                header,
                steps: Vec::new(),
            },
        };
        let (p, _) = ep.goal_point()?;
        let to = p - ep.state.agent.position;
        ep.state.goal_dist = to.norm();
        if to.norm() > 0.0 {
            ep.state.target_dir = to / to.norm();
        }
        Ok(ep)
    }

    pub fn world(&self) -> &'w World {
        self.world
    }

    pub fn grid(&self) -> &NavGrid {
        &self.grid
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.cfg
    }

    pub fn state(&self) -> &EpisodeState {
        &self.state
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    /// Capsules at the current world time.
    pub fn obstacles(&self) -> &ObstacleSet {
        &self.obstacles
    }

    /// Static geodesic field toward the PointNav goal.
    pub fn goal_field(&self) -> Option<&DistanceField> {
        self.field.as_ref()
    }

    pub fn set_rasterizer(&mut self, r: Rasterizer) {
        self.rasterizer = r;
    }

    /// Goal position, or the tracked avatar's position and facing.
    pub fn goal_point(&self) -> Result<(Vector2<f64>, Option<Vector2<f64>>), Error> {
        if let Some(g) = self.state.goal {
            return Ok((Vector2::new(g[0], g[1]), None));
        }
        let idx = self.state.target.ok_or_else(|| Error::Contract("episode has neither goal nor target".into()))?;
        let avatar = self
            .world
            .avatars
            .get(idx)
            .ok_or_else(|| Error::Contract(format!("missing target avatar {idx}")))?;
        let (p, f) = avatar.root_at(self.state.time)?;
        Ok((p, Some(f)))
    }

    pub fn camera(&self) -> Result<Camera, Error> {
        let a = &self.state.agent;
        Ok(Camera::agent_mounted(&self.cfg.camera, a.position.x, a.position.y, a.heading)?)
    }

    pub fn observe(&self) -> Result<Observation, Error> {
        let frame = if self.cfg.render {
            Some(self.world.render(&self.rasterizer, &self.camera()?, self.state.time)?)
        } else {
            None
        };
        let (p, _) = self.goal_point()?;
        let d = p - self.state.agent.position;
        Ok(Observation {
            frame,
            goal_polar: [d.norm(), wrap_angle(d.y.atan2(d.x) - self.state.agent.heading)],
        })
    }

    fn d_goal_at(&self, agent: &AgentBody) -> Result<Option<f64>, Error> {
        let Some(field) = &self.field else { return Ok(None) };
        let (ix, iy) = self
            .grid
            .cell_of(agent.xy())
            .ok_or_else(|| Error::InvalidEpisode("agent left the grid".into()))?;
        match field.meters(ix, iy) {
            Some(d) => Ok(Some(d)),
            None => Err(Error::InvalidEpisode(format!(
                "goal unreachable from ({:.3}, {:.3})",
                agent.position.x, agent.position.y
            ))),
        }
    }

    /// Advances avatars one tick, applies `action`, and scores the result.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome, Error> {
        if self.state.done {
            return Err(Error::Contract("step called on a finished episode".into()));
        }
        let cfg = &self.cfg;
        let prev = self.state.clone();
        self.state.time = (prev.step_index + 1) as f64 / cfg.fps_sim;
        self.obstacles = self.world.obstacles_at(self.state.time)?;

        let mut agent = prev.agent;
        if let Some(p) = resolve_penetration(&agent, &self.grid, &self.obstacles) {
            agent.position = p;
        }
        let mut blocked = false;
        match action {
            Action::MoveForward => {
                let desired = agent.forward() * cfg.actions.forward_step;
                let achieved = clip_step(&agent, &desired, &self.grid, &self.obstacles);
                blocked = achieved.norm() < desired.norm() - 1e-6;
                agent.position += achieved;
            }
            Action::TurnLeft => agent.heading = wrap_angle(agent.heading + cfg.actions.turn_angle),
            Action::TurnRight => agent.heading = wrap_angle(agent.heading - cfg.actions.turn_angle),
            Action::Stop => {}
        }
        let displacement = (agent.position - prev.agent.position).norm();
        let c = min_clearance(&agent, &self.obstacles);
        let step_index = prev.step_index + 1;
        self.state.agent = agent;
        self.state.step_index = step_index;
        self.state.path_length += displacement;
        let (goal_p, facing) = self.goal_point()?;
        let to_goal = goal_p - agent.position;
        self.state.goal_dist = to_goal.norm();

        let horizon = step_index >= cfg.max_steps;
        let mut track = false;
        let d_int;
        let eps_col;
        let reward = match cfg.task {
            TaskKind::PointNav | TaskKind::PointNavAvatar => {
                let p = &cfg.pointnav;
                d_int = p.penalty.d_int;
                eps_col = p.penalty.eps_col;
                let d_prev = prev
                    .d_goal
                    .ok_or_else(|| Error::InvalidEpisode("goal unreachable at previous step".into()))?;
                let d_cur = self
                    .d_goal_at(&agent)?
                    .ok_or_else(|| Error::InvalidEpisode("no goal field".into()))?;
                self.state.d_goal = Some(d_cur);
                let success = action == Action::Stop && d_cur <= p.success_distance;
                self.state.success = success;
                self.state.done = action == Action::Stop || horizon;
                let clearance = (cfg.task == TaskKind::PointNavAvatar).then_some(c);
                pointnav_reward(d_prev, d_cur, clearance, success, p)
            }
            TaskKind::TrackNav => {
                let p = &cfg.track;
                d_int = p.penalty.d_int;
                eps_col = p.penalty.eps_col;
                let facing = facing.ok_or_else(|| Error::Contract("tracknav target has no facing".into()))?;
                let g = track_geometry(&agent.position, agent.heading, &goal_p, &facing);
                track = g.tracking(p);
                self.state.streak = if track { prev.streak + 1 } else { 0 };
                if g.dist > 0.0 {
                    self.state.target_dir = to_goal / g.dist;
                }
                self.state.done = horizon;
                tracknav_reward(
                    &TrackStep {
                        geometry: g,
                        prev_dist: prev.goal_dist,
                        clearance: c,
                        displacement: agent.position - prev.agent.position,
                        prev_direction: prev.target_dir,
                        streak: self.state.streak,
                    },
                    p,
                )
            }
        };
        let record = StepRecord {
            step: step_index,
            time: self.state.time,
            action,
            pose: Pose2 {
                x: agent.position.x,
                y: agent.position.y,
                heading: agent.heading,
            },
            displacement,
            blocked,
            clearance: c,
            intrusion: intrusion(c, d_int),
            collision: collision_flag(c, eps_col),
            track,
            d_goal: self.state.d_goal,
            goal_dist: self.state.goal_dist,
            reward,
            done: self.state.done,
            success: self.state.success,
        };
        self.trace.steps.push(record.clone());
        Ok(StepOutcome {
            observation: self.observe()?,
            reward,
            done: self.state.done,
            record,
        })
    }
}
