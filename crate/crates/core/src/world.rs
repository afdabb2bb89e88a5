//! Loaded scene: static gaussians, walkability grid and animated avatars.

use std::path::Path;
use std::sync::Arc;

use nalgebra::Vector2;

use crate::assets::{
    load_avatar_bundle, load_gaussian_ply, load_scene_config, AvatarBundle, CameraDefaults, GaussianCloud,
    SceneConfig,
};
use crate::nav::{build_navgrid, refresh_obstacles, NavGrid, ObstacleSet, OccupancyMap, TrackSample};
use crate::render::{render_observation_with, Camera, FrameRGBD, Rasterizer};
use crate::rig::{lbs_deform, sample_capsules, sample_pose, CapsuleSet, JointPose};
use crate::Error;

/// One avatar placed in the world with its own clock offset.
#[derive(Clone, Debug)]
pub struct AvatarInstance {
    pub bundle: Arc<AvatarBundle>,
    /// Seconds added to world time before sampling.
    pub start_offset: f64,
    pub enabled: bool,
    /// Wrap the clock at the trajectory duration instead of clamping.
    pub looped: bool,
}

impl AvatarInstance {
    pub fn new(bundle: Arc<AvatarBundle>) -> Self {
        Self {
            bundle,
            start_offset: 0.0,
            enabled: true,
            looped: true,
        }
    }

    /// Trajectory-local time for world time `t`.
    pub fn local_time(&self, t: f64) -> f64 {
        let x = (t + self.start_offset).max(0.0);
        if self.looped {
            x.rem_euclid(self.bundle.duration())
        } else {
            x
        }
    }

    pub fn pose_at(&self, t: f64) -> Result<JointPose, Error> {
        Ok(sample_pose(&self.bundle.trajectory, self.local_time(t))?)
    }

    pub fn capsules_at(&self, t: f64) -> Result<CapsuleSet, Error> {
        Ok(sample_capsules(&self.bundle.capsule_track, self.local_time(t), self.bundle.fps())?)
    }

    pub fn cloud_at(&self, t: f64) -> Result<GaussianCloud, Error> {
        Ok(lbs_deform(&self.bundle, &self.pose_at(t)?)?)
    }

    /// Ground-plane root position and unit facing direction (model +x).
    pub fn root_at(&self, t: f64) -> Result<(Vector2<f64>, Vector2<f64>), Error> {
        let root = self.pose_at(t)?.root;
        let p = root.translation.vector;
        let f = root.rotation * nalgebra::Vector3::x();
        let facing = Vector2::new(f.x, f.y);
        let n = facing.norm();
        let facing = if n > 1e-12 { facing / n } else { Vector2::x() };
        Ok((Vector2::new(p.x, p.y), facing))
    }
}

#[derive(Clone, Debug)]
pub struct World {
    pub scene: Arc<GaussianCloud>,
    pub background: [f32; 3],
    pub grid: Option<Arc<NavGrid>>,
    pub agent_radius: f64,
    pub avatars: Vec<AvatarInstance>,
    pub camera: CameraDefaults,
}

impl World {
    pub fn load(config: impl AsRef<Path>) -> Result<Self, Error> {
        Self::from_config(&load_scene_config(config)?)
    }

    pub fn from_config(cfg: &SceneConfig) -> Result<Self, Error> {
        let scene = match &cfg.scene_ply {
            Some(p) => load_gaussian_ply(p)?,
            None => GaussianCloud::new(0),
        };
        let (grid, agent_radius) = match &cfg.navgrid {
            Some(n) => {
                let map = OccupancyMap::from_config(n)?;
                (Some(Arc::new(build_navgrid(&map, n.agent_radius())?)), n.agent_radius())
            }
            None => (None, crate::assets::DEFAULT_AGENT_RADIUS),
        };
        let mut avatars = Vec::with_capacity(cfg.avatars.len());
        for entry in &cfg.avatars {
            avatars.push(AvatarInstance {
                bundle: Arc::new(load_avatar_bundle(&entry.bundle)?),
                start_offset: entry.start_offset,
                enabled: entry.enabled,
                looped: entry.looped,
            });
        }
        Ok(Self {
            scene: Arc::new(scene),
            background: cfg.background,
            grid,
            agent_radius,
            avatars,
            camera: cfg.camera,
        })
    }

    pub fn grid(&self) -> Result<&Arc<NavGrid>, Error> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::Contract("scene has no navgrid".into()))
    }

    pub fn active_avatars(&self) -> impl Iterator<Item = (usize, &AvatarInstance)> {
        self.avatars.iter().enumerate().filter(|(_, a)| a.enabled)
    }

    /// Capsules of every enabled avatar at world time `t`.
    pub fn obstacles_at(&self, t: f64) -> Result<ObstacleSet, Error> {
        let samples: Vec<TrackSample<'_>> = self
            .avatars
            .iter()
            .map(|a| TrackSample {
                track: &a.bundle.capsule_track,
                fps: a.bundle.fps(),
                time: a.local_time(t),
                enabled: a.enabled,
            })
            .collect();
        Ok(refresh_obstacles(&samples)?)
    }

    /// Deformed world-space clouds of every enabled avatar.
    pub fn avatar_clouds_at(&self, t: f64) -> Result<Vec<GaussianCloud>, Error> {
        self.active_avatars().map(|(_, a)| a.cloud_at(t)).collect()
    }

    pub fn render(&self, rasterizer: &Rasterizer, camera: &Camera, t: f64) -> Result<FrameRGBD, Error> {
        let avatars = self.avatar_clouds_at(t)?;
        Ok(render_observation_with(rasterizer, &self.scene, &avatars, camera, self.background)?)
    }
}
