//! Scene description: a JSON document naming the scene PLY, the navigation
//! grid source, the avatars and the default sensor intrinsics.
//!
//! ```json
//! {
//!   "scene_ply": "scene.ply",
//!   "background": [1, 1, 1],
//!   "navgrid": { "image": "occupancy.png", "agent_radius": 0.18 },
//!   "avatars": [ { "bundle": "avatars/a0", "start_offset": 0.0, "enabled": true, "loop": true } ],
//!   "camera": { "width": 256, "height": 256, "hfov_deg": 90 }
//! }
//! ```
//!
//! Relative paths resolve against the config file's directory. Unknown keys
//! are reported as warnings, never errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{io_err, AssetError};

pub const DEFAULT_AGENT_RADIUS: f64 = 0.18;
pub const DEFAULT_RESOLUTION: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub enum NavGridConfig {
    /// 8-bit grayscale PNG (>= 128 is free) with a `{resolution, origin}`
    /// JSON sidecar.
    Image {
        png: PathBuf,
        resolution: f64,
        origin: [f64; 2],
        agent_radius: f64,
    },
    /// Rectangular free area with axis-aligned blocked rectangles
    /// `[x0, y0, x1, y1]` in meters.
    Procedural {
        width: usize,
        height: usize,
        resolution: f64,
        origin: [f64; 2],
        obstacles: Vec<[f64; 4]>,
        agent_radius: f64,
    },
}

impl NavGridConfig {
    pub fn agent_radius(&self) -> f64 {
        match self {
            NavGridConfig::Image { agent_radius, .. } | NavGridConfig::Procedural { agent_radius, .. } => {
                *agent_radius
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AvatarEntry {
    pub bundle: PathBuf,
    pub start_offset: f64,
    pub enabled: bool,
    pub looped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraDefaults {
    pub width: usize,
    pub height: usize,
    pub hfov_deg: f64,
    pub fx: Option<f64>,
    pub fy: Option<f64>,
    pub cx: Option<f64>,
    pub cy: Option<f64>,
    pub near: f64,
    pub far: f64,
    /// Sensor height above the floor when mounted on the agent.
    pub mount_height: f64,
}

impl Default for CameraDefaults {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            hfov_deg: 90.0,
            fx: None,
            fy: None,
            cx: None,
            cy: None,
            near: 0.05,
            far: 20.0,
            mount_height: 1.25,
        }
    }
}

impl CameraDefaults {
    pub fn with_size(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    /// `(fx, fy, cx, cy)`; focal lengths derive from the horizontal FOV when
    /// not given explicitly.
    pub fn intrinsics(&self) -> (f64, f64, f64, f64) {
        let f = (self.width as f64 / 2.0) / (self.hfov_deg.to_radians() / 2.0).tan();
        let fx = self.fx.unwrap_or(f);
        let fy = self.fy.unwrap_or(fx);
        (
            fx,
            fy,
            self.cx.unwrap_or(self.width as f64 / 2.0),
            self.cy.unwrap_or(self.height as f64 / 2.0),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneConfig {
    pub source: Option<PathBuf>,
    pub scene_ply: Option<PathBuf>,
    pub background: [f32; 3],
    pub navgrid: Option<NavGridConfig>,
    pub avatars: Vec<AvatarEntry>,
    pub camera: CameraDefaults,
    pub warnings: Vec<String>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            source: None,
            scene_ply: None,
            background: [1.0; 3],
            navgrid: None,
            avatars: Vec::new(),
            camera: CameraDefaults::default(),
            warnings: Vec::new(),
        }
    }
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], ctx: &str, warnings: &mut Vec<String>) {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            warnings.push(format!("unknown key '{key}' in {ctx}"));
        }
    }
}

fn as_object<'a>(v: &'a Value, ctx: &str) -> Result<&'a Map<String, Value>, AssetError> {
    v.as_object()
        .ok_or_else(|| AssetError::Schema(format!("{ctx} must be a JSON object")))
}

fn get_f64(obj: &Map<String, Value>, key: &str, ctx: &str) -> Result<Option<f64>, AssetError> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| AssetError::Schema(format!("{ctx}.{key} must be a number"))),
    }
}

fn get_pair(obj: &Map<String, Value>, key: &str, ctx: &str) -> Result<Option<[f64; 2]>, AssetError> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => serde_json::from_value::<[f64; 2]>(v.clone())
            .map(Some)
            .map_err(|_| AssetError::Schema(format!("{ctx}.{key} must be [x, y]"))),
    }
}

fn get_path(obj: &Map<String, Value>, key: &str, ctx: &str, base: &Path) -> Result<Option<PathBuf>, AssetError> {
    match obj.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => {
            let p = base.join(s);
            if !p.exists() {
                return Err(AssetError::Schema(format!(
                    "{ctx}.{key} references missing path {}",
                    p.display()
                )));
            }
            Ok(Some(std::path::absolute(&p).unwrap_or(p)))
        }
        Some(_) => Err(AssetError::Schema(format!("{ctx}.{key} must be a string path"))),
    }
}

fn parse_navgrid(v: &Value, base: &Path, warnings: &mut Vec<String>) -> Result<NavGridConfig, AssetError> {
    let obj = as_object(v, "navgrid")?;
    check_keys(obj, &["image", "sidecar", "procedural", "agent_radius"], "navgrid", warnings);
    let agent_radius = get_f64(obj, "agent_radius", "navgrid")?.unwrap_or(DEFAULT_AGENT_RADIUS);
    if !(agent_radius >= 0.0) {
        return Err(AssetError::Schema("navgrid.agent_radius must be >= 0".into()));
    }
    if let Some(png) = get_path(obj, "image", "navgrid", base)? {
        let sidecar = match get_path(obj, "sidecar", "navgrid", base)? {
            Some(p) => p,
            None => {
                let p = png.with_extension("json");
                if !p.exists() {
                    return Err(AssetError::Schema(format!(
                        "navgrid image {} has no sidecar {}",
                        png.display(),
                        p.display()
                    )));
                }
                p
            }
        };
        let text = std::fs::read_to_string(&sidecar).map_err(io_err(&sidecar))?;
        let side: Value = serde_json::from_str(&text).map_err(|source| AssetError::Json {
            path: sidecar.clone(),
            source,
        })?;
        let side = as_object(&side, "navgrid sidecar")?;
        check_keys(side, &["resolution", "origin"], "navgrid sidecar", warnings);
        let resolution = get_f64(side, "resolution", "sidecar")?
            .ok_or_else(|| AssetError::Schema("navgrid sidecar missing 'resolution'".into()))?;
        let origin = get_pair(side, "origin", "sidecar")?.unwrap_or([0.0, 0.0]);
        if !(resolution > 0.0) {
            return Err(AssetError::Schema("navgrid resolution must be positive".into()));
        }
        return Ok(NavGridConfig::Image {
            png,
            resolution,
            origin,
            agent_radius,
        });
    }
    if let Some(p) = obj.get("procedural") {
        let p = as_object(p, "navgrid.procedural")?;
        check_keys(
            p,
            &["width", "height", "resolution", "origin", "obstacles"],
            "navgrid.procedural",
            warnings,
        );
        let dim = |key: &str| -> Result<usize, AssetError> {
            p.get(key)
                .and_then(Value::as_u64)
                .map(|v| v as usize)
                .ok_or_else(|| AssetError::Schema(format!("navgrid.procedural missing integer '{key}'")))
        };
        let resolution = get_f64(p, "resolution", "navgrid.procedural")?.unwrap_or(DEFAULT_RESOLUTION);
        if !(resolution > 0.0) {
            return Err(AssetError::Schema("navgrid resolution must be positive".into()));
        }
        let obstacles = match p.get("obstacles") {
            None => Vec::new(),
            Some(v) => serde_json::from_value::<Vec<[f64; 4]>>(v.clone()).map_err(|_| {
                AssetError::Schema("navgrid.procedural.obstacles must be a list of [x0, y0, x1, y1]".into())
            })?,
        };
        return Ok(NavGridConfig::Procedural {
            width: dim("width")?,
            height: dim("height")?,
            resolution,
            origin: get_pair(p, "origin", "navgrid.procedural")?.unwrap_or([0.0, 0.0]),
            obstacles,
            agent_radius,
        });
    }
    Err(AssetError::Schema(
        "navgrid requires either 'image' or 'procedural'".into(),
    ))
}

fn parse_avatar(v: &Value, idx: usize, base: &Path, warnings: &mut Vec<String>) -> Result<AvatarEntry, AssetError> {
    let ctx = format!("avatars[{idx}]");
    let obj = as_object(v, &ctx)?;
    check_keys(obj, &["bundle", "start_offset", "enabled", "loop"], &ctx, warnings);
    let bundle = get_path(obj, "bundle", &ctx, base)?
        .ok_or_else(|| AssetError::Schema(format!("{ctx} missing required key 'bundle'")))?;
    let flag = |key: &str, default: bool| -> Result<bool, AssetError> {
        match obj.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_bool()
                .ok_or_else(|| AssetError::Schema(format!("{ctx}.{key} must be a boolean"))),
        }
    };
    let start_offset = get_f64(obj, "start_offset", &ctx)?.unwrap_or(0.0);
    if !(start_offset >= 0.0) {
        return Err(AssetError::Schema(format!("{ctx}.start_offset must be >= 0")));
    }
    Ok(AvatarEntry {
        bundle,
        start_offset,
        enabled: flag("enabled", true)?,
        looped: flag("loop", true)?,
    })
}

/// Parses a scene config from a JSON value; `base` resolves relative paths.
pub fn parse_scene_config(doc: &Value, base: &Path) -> Result<SceneConfig, AssetError> {
    let obj = as_object(doc, "scene config")?;
    let mut warnings = Vec::new();
    check_keys(
        obj,
        &["scene_ply", "background", "navgrid", "avatars", "camera"],
        "scene config",
        &mut warnings,
    );

    let scene_ply = get_path(obj, "scene_ply", "config", base)?;
    let background = match obj.get("background") {
        None => [1.0; 3],
        Some(v) => {
            let bg = serde_json::from_value::<[f32; 3]>(v.clone())
                .map_err(|_| AssetError::Schema("background must be [r, g, b]".into()))?;
            if bg.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(AssetError::Schema("background components must lie in [0, 1]".into()));
            }
            bg
        }
    };
    let navgrid = obj
        .get("navgrid")
        .map(|v| parse_navgrid(v, base, &mut warnings))
        .transpose()?;
    if scene_ply.is_none() && navgrid.is_none() {
        return Err(AssetError::Schema(
            "config requires at least one of 'scene_ply' or 'navgrid'".into(),
        ));
    }
    let avatars = match obj.get("avatars") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, v)| parse_avatar(v, i, base, &mut warnings))
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(AssetError::Schema("avatars must be a list".into())),
    };
    let camera = match obj.get("camera") {
        None => CameraDefaults::default(),
        Some(v) => {
            let cam = as_object(v, "camera")?;
            check_keys(
                cam,
                &["width", "height", "hfov_deg", "fx", "fy", "cx", "cy", "near", "far", "mount_height"],
                "camera",
                &mut warnings,
            );
            let c: CameraDefaults = serde_json::from_value(v.clone())
                .map_err(|e| AssetError::Schema(format!("camera: {e}")))?;
            if c.width == 0 || c.height == 0 || !(c.near > 0.0 && c.near < c.far) {
                return Err(AssetError::Schema(
                    "camera requires width, height >= 1 and 0 < near < far".into(),
                ));
            }
            c
        }
    };

    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(SceneConfig {
        source: None,
        scene_ply,
        background,
        navgrid,
        avatars,
        camera,
        warnings,
    })
}

/// Loads a scene config file and resolves every referenced path.
pub fn load_scene_config(path: impl AsRef<Path>) -> Result<SceneConfig, AssetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let doc: Value = serde_json::from_str(&text).map_err(|source| AssetError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut cfg = parse_scene_config(&doc, base)?;
    cfg.source = Some(std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf()));
    Ok(cfg)
}
