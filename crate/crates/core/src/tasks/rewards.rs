use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::params::{AvatarPenaltyParams, PointNavRewardParams, TrackParams};

/// Depth of entry into the personal-space zone, saturating at `d_int`.
pub fn intrusion(c: f64, d_int: f64) -> f64 {
    if c >= d_int {
        0.0
    } else if c >= 0.0 {
        d_int - c
    } else {
        d_int
    }
}

/// Unclipped penalty magnitude `P(c)`.
pub fn penalty_magnitude(c: f64, p: &AvatarPenaltyParams) -> f64 {
    if c >= p.d_int {
        0.0
    } else if c >= p.d_crit {
        p.p1 * ((p.d_int - c) / (p.d_int - p.d_crit)).powf(p.alpha1)
    } else {
        p.p1 + (p.p_col - p.p1) * (1.0 - (c.max(0.0) / p.d_crit).powf(p.alpha2))
    }
}

/// `-min(P(c), p_max)`; exactly `0.0` outside personal space.
pub fn avatar_penalty(c: f64, p: &AvatarPenaltyParams) -> f64 {
    let m = penalty_magnitude(c, p).min(p.p_max);
    if m == 0.0 {
        0.0
    } else {
        -m
    }
}

pub fn collision_flag(c: f64, eps_col: f64) -> bool {
    c <= eps_col
}

/// Distance outside the `[d_min, d_max]` band; zero inside.
pub fn band_gap(dist: f64, p: &TrackParams) -> f64 {
    if dist < p.d_min {
        p.d_min - dist
    } else if dist > p.d_max {
        dist - p.d_max
    } else {
        0.0
    }
}

/// Gaussian-shaped bonus inside the band, rescaled so the edges give
/// `r_peak * eta`; zero outside.
pub fn band_reward(dist: f64, p: &TrackParams) -> f64 {
    if !(dist >= p.d_min && dist <= p.d_max) {
        return 0.0;
    }
    let h = 0.5 * (p.d_max - p.d_min);
    let sigma = p.sigma_factor * h;
    let delta = (dist - p.band_center()).abs();
    let w_edge = (-0.5 * (h / sigma).powi(2)).exp();
    let g = (-0.5 * (delta / sigma).powi(2)).exp();
    p.r_peak * (p.eta + (1.0 - p.eta) * (g - w_edge) / (1.0 - w_edge))
}

/// Relative placement of agent and tracked avatar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackGeometry {
    pub dist: f64,
    /// Angle between the agent heading and the agent-to-avatar direction.
    pub view_angle: f64,
    /// Angle between the avatar's backward direction and avatar-to-agent.
    pub rear_angle: f64,
}

fn angle_between(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.dot(b) / (na * nb)).clamp(-1.0, 1.0).acos()
}

pub fn track_geometry(
    agent_pos: &Vector2<f64>,
    agent_heading: f64,
    avatar_pos: &Vector2<f64>,
    avatar_facing: &Vector2<f64>,
) -> TrackGeometry {
    let to_avatar = avatar_pos - agent_pos;
    let heading = Vector2::new(agent_heading.cos(), agent_heading.sin());
    TrackGeometry {
        dist: to_avatar.norm(),
        view_angle: angle_between(&heading, &to_avatar),
        rear_angle: angle_between(&(-avatar_facing), &(-to_avatar)),
    }
}

impl TrackGeometry {
    pub fn in_band(&self, p: &TrackParams) -> bool {
        self.dist >= p.d_min && self.dist <= p.d_max
    }

    pub fn view_ok(&self, p: &TrackParams) -> bool {
        self.view_angle <= p.theta_view
    }

    pub fn rear_ok(&self, p: &TrackParams) -> bool {
        self.rear_angle <= p.theta_rear
    }

    pub fn tracking(&self, p: &TrackParams) -> bool {
        self.in_band(p) && self.view_ok(p) && self.rear_ok(p)
    }
}

/// Band, view-cone and rear-sector conditions all hold.
pub fn track_indicator(
    agent_pos: &Vector2<f64>,
    agent_heading: f64,
    avatar_pos: &Vector2<f64>,
    avatar_facing: &Vector2<f64>,
    p: &TrackParams,
) -> bool {
    track_geometry(agent_pos, agent_heading, avatar_pos, avatar_facing).tracking(p)
}

/// Per-term reward. Terms that do not apply to a task stay zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub progress: f64,
    pub avatar: f64,
    pub slack: f64,
    pub success: f64,
    pub approach: f64,
    pub band: f64,
    pub view: f64,
    pub rear: f64,
    pub radial: f64,
    pub tangential: f64,
    pub track: f64,
    pub streak: f64,
    pub total: f64,
}

impl RewardBreakdown {
    fn summed(mut self) -> Self {
        self.total = self.progress
            + self.avatar
            + self.slack
            + self.success
            + self.approach
            + self.band
            + self.view
            + self.rear
            + self.radial
            + self.tangential
            + self.track
            + self.streak;
        self
    }
}

/// PointNav step reward. Pass `clearance = None` for the plain task (no
/// avatar term); `Some(f64::INFINITY)` gives a zero avatar term.
pub fn pointnav_reward(
    d_prev: f64,
    d_cur: f64,
    clearance: Option<f64>,
    success: bool,
    p: &PointNavRewardParams,
) -> RewardBreakdown {
    RewardBreakdown {
        progress: p.lambda_prog * (d_prev - d_cur),
        avatar: clearance.map_or(0.0, |c| {
            let r = p.lambda_avatar * avatar_penalty(c, &p.penalty);
            if r == 0.0 {
                0.0
            } else {
                r
            }
        }),
        slack: p.r_slack,
        success: if success { p.r_success } else { 0.0 },
        ..Default::default()
    }
    .summed()
}

/// Inputs of one tracking step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackStep {
    pub geometry: TrackGeometry,
    pub prev_dist: f64,
    pub clearance: f64,
    /// Agent displacement during this step.
    pub displacement: Vector2<f64>,
    /// Unit agent-to-target direction before this step.
    pub prev_direction: Vector2<f64>,
    /// Consecutive tracking steps including this one.
    pub streak: u32,
}

pub fn tracknav_reward(s: &TrackStep, p: &TrackParams) -> RewardBreakdown {
    let g = &s.geometry;
    let in_band = g.in_band(p);
    let along = s.displacement.dot(&s.prev_direction);
    let perp = (s.displacement - s.prev_direction * along).norm();
    RewardBreakdown {
        approach: p.lambda_app * (band_gap(s.prev_dist, p) - band_gap(g.dist, p)),
        band: band_reward(g.dist, p),
        avatar: avatar_penalty(s.clearance, &p.penalty),
        view: if in_band && !g.view_ok(p) { -p.p_view } else { 0.0 },
        rear: if in_band && !g.rear_ok(p) { -p.p_rear } else { 0.0 },
        radial: p.radial_w * (s.prev_dist - g.dist),
        tangential: -p.tangential_w * perp,
        track: if g.tracking(p) { p.b_step } else { 0.0 },
        streak: p.b_streak * f64::from(s.streak.min(p.streak_cap)) / f64::from(p.streak_cap),
        ..Default::default()
    }
    .summed()
}
