//! Navigation tasks: point-goal (optionally avatar-aware) and avatar
//! tracking, with their reward terms, traces and scripted policies.

mod episode;
mod params;
mod policy;
mod rewards;
mod trace;

pub use episode::{Episode, EpisodeState, Observation, StepOutcome, MAX_RESET_DRAWS, TRACK_START_RANGE};
pub use params::{
    Action, ActionSpace, AvatarPenaltyParams, EpisodeConfig, PointNavRewardParams, TaskKind, TrackParams,
};
pub use policy::{run_episode, Policy, RandomPolicy, ReplayPolicy, ShortestPathPolicy};
pub use rewards::{
    avatar_penalty, band_gap, band_reward, collision_flag, intrusion, penalty_magnitude, pointnav_reward,
    track_geometry, track_indicator, tracknav_reward, RewardBreakdown, TrackGeometry, TrackStep,
};
pub use trace::{Pose2, StepRecord, Trace, TraceHeader, TRACE_SCHEMA};
