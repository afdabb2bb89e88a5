use serde::{Deserialize, Serialize};

use crate::assets::CameraDefaults;
use crate::nav::DEFAULT_AGENT_HEIGHT;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    #[serde(rename = "pointnav")]
    PointNav,
    #[serde(rename = "pointnav_avatar")]
    PointNavAvatar,
    #[serde(rename = "tracknav")]
    TrackNav,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::PointNav => "pointnav",
            TaskKind::PointNavAvatar => "pointnav_avatar",
            TaskKind::TrackNav => "tracknav",
        }
    }
}

impl std::str::FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pointnav" => Ok(TaskKind::PointNav),
            "pointnav_avatar" => Ok(TaskKind::PointNavAvatar),
            "tracknav" => Ok(TaskKind::TrackNav),
            other => Err(format!("unknown task '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Stop,
    MoveForward,
    TurnLeft,
    TurnRight,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Stop, Action::MoveForward, Action::TurnLeft, Action::TurnRight];

    pub fn name(self) -> &'static str {
        match self {
            Action::Stop => "stop",
            Action::MoveForward => "move_forward",
            Action::TurnLeft => "turn_left",
            Action::TurnRight => "turn_right",
        }
    }
}

impl std::str::FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown action '{s}'"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionSpace {
    /// Meters per `move_forward`.
    pub forward_step: f64,
    /// Radians per turn.
    pub turn_angle: f64,
}

impl Default for ActionSpace {
    fn default() -> Self {
        Self {
            forward_step: 0.25,
            turn_angle: 10f64.to_radians(),
        }
    }
}

/// Two-stage avatar proximity penalty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvatarPenaltyParams {
    pub d_int: f64,
    pub d_crit: f64,
    pub p1: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub p_col: f64,
    pub p_max: f64,
    pub eps_col: f64,
}

impl Default for AvatarPenaltyParams {
    fn default() -> Self {
        Self {
            d_int: 1.0,
            d_crit: 0.5,
            p1: 0.1,
            alpha1: 2.0,
            alpha2: 4.0,
            p_col: 0.6,
            p_max: 0.6,
            eps_col: 1e-5,
        }
    }
}

impl AvatarPenaltyParams {
    /// Softer penalty used inside the tracking reward.
    pub fn tracking() -> Self {
        Self {
            p1: 0.03,
            alpha1: 2.0,
            alpha2: 3.0,
            p_col: 0.12,
            p_max: 0.12,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointNavRewardParams {
    pub lambda_prog: f64,
    pub lambda_avatar: f64,
    pub r_slack: f64,
    pub r_success: f64,
    pub success_distance: f64,
    pub penalty: AvatarPenaltyParams,
}

impl Default for PointNavRewardParams {
    fn default() -> Self {
        Self {
            lambda_prog: 1.0,
            lambda_avatar: 1.0,
            r_slack: -0.01,
            r_success: 2.5,
            success_distance: 0.2,
            penalty: AvatarPenaltyParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackParams {
    pub d_min: f64,
    pub d_max: f64,
    pub theta_view: f64,
    pub theta_rear: f64,
    pub lambda_app: f64,
    pub r_peak: f64,
    pub eta: f64,
    pub sigma_factor: f64,
    pub b_step: f64,
    pub b_streak: f64,
    pub streak_cap: u32,
    pub p_view: f64,
    pub p_rear: f64,
    pub radial_w: f64,
    pub tangential_w: f64,
    pub penalty: AvatarPenaltyParams,
}

impl Default for TrackParams {
    fn default() -> Self {
        Self {
            d_min: 1.2,
            d_max: 2.5,
            theta_view: 45f64.to_radians(),
            theta_rear: 60f64.to_radians(),
            lambda_app: 0.8,
            r_peak: 0.36,
            eta: 0.58,
            sigma_factor: 0.85,
            b_step: 0.08,
            b_streak: 0.12,
            streak_cap: 50,
            p_view: 0.10,
            p_rear: 0.10,
            radial_w: 0.9,
            tangential_w: 0.45,
            penalty: AvatarPenaltyParams::tracking(),
        }
    }
}

impl TrackParams {
    pub fn band_center(&self) -> f64 {
        0.5 * (self.d_min + self.d_max)
    }
}

/// Everything that shapes an episode besides the world and the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub task: TaskKind,
    pub actions: ActionSpace,
    pub pointnav: PointNavRewardParams,
    pub track: TrackParams,
    pub max_steps: usize,
    /// Avatar clock ticks per second of agent actions.
    pub fps_sim: f64,
    /// Minimum start-goal geodesic distance, meters.
    pub min_separation: f64,
    pub agent_height: f64,
    /// Render an RGB-D observation on reset and after every step.
    pub render: bool,
    pub camera: CameraDefaults,
}

impl EpisodeConfig {
    pub fn new(task: TaskKind) -> Self {
        Self {
            task,
            actions: ActionSpace::default(),
            pointnav: PointNavRewardParams::default(),
            track: TrackParams::default(),
            max_steps: 500,
            fps_sim: 10.0,
            min_separation: 2.0,
            agent_height: DEFAULT_AGENT_HEIGHT,
            render: false,
            camera: CameraDefaults::default(),
        }
    }
}
