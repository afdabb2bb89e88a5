//! Navigation layer: an eroded walkability grid with exact geodesic
//! distances, plus avatar capsules as dynamic obstacles for the agent.

mod collide;
mod geodesic;
mod grid;

pub use collide::{
    clip_step, is_step_blocked, min_clearance, refresh_obstacles, resolve_penetration, AgentBody, ObstacleSet,
    TrackSample, DEFAULT_AGENT_HEIGHT, DEPENETRATION_RADIUS,
};
pub use geodesic::{
    distance_field, geodesic_cost, geodesic_distance, neighbors, DistanceField, PathCost, SNAP_DISTANCE,
};
pub use grid::{build_navgrid, erosion_cells, NavGrid, OccupancyMap};

#[derive(Debug, thiserror::Error)]
pub enum NavError {
    #[error("navgrid build failed: {0}")]
    Build(String),
    #[error("no walkable cell within {max_dist} m of ({:.3}, {:.3})", point[0], point[1])]
    InvalidEndpoint { point: [f64; 2], max_dist: f64 },
}
