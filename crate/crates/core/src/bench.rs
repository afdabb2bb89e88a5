//! Throughput and memory scaling of the renderer versus scene size and
//! avatar count.
//!
//! Peak memory comes from [`TrackingAllocator`] when the binary installs it
//! as the global allocator; otherwise the harness falls back to summing the
//! bytes held by assets and frame buffers.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assets::{AvatarBundle, CameraDefaults, GaussianCloud};
use crate::render::{look_along, render_observation_with, Camera, Rasterizer};
use crate::rig::lbs_deform;
use crate::synth::{random_cloud, walking_humanoid};
use crate::Error;

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
static ACTIVE: AtomicBool = AtomicBool::new(false);

/// System allocator wrapper that records current and peak heap bytes.
pub struct TrackingAllocator;

unsafe impl GlobalAlloc for TrackingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            record_alloc(layout.size());
        }
        p
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc_zeroed(layout);
        if !p.is_null() {
            record_alloc(layout.size());
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = System.realloc(ptr, layout, new_size);
        if !p.is_null() {
            CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
            record_alloc(new_size);
        }
        p
    }
}

#[inline]
fn record_alloc(size: usize) {
    let now = CURRENT.fetch_add(size, Ordering::Relaxed) + size;
    PEAK.fetch_max(now, Ordering::Relaxed);
    if !ACTIVE.load(Ordering::Relaxed) {
        ACTIVE.store(true, Ordering::Relaxed);
    }
}

/// Whether [`TrackingAllocator`] is the global allocator of this process.
pub fn tracking_active() -> bool {
    ACTIVE.load(Ordering::Relaxed)
}

pub fn current_bytes() -> usize {
    CURRENT.load(Ordering::Relaxed)
}

pub fn peak_bytes() -> usize {
    PEAK.load(Ordering::Relaxed)
}

/// Restarts peak tracking from the current level.
pub fn reset_peak() {
    PEAK.store(CURRENT.load(Ordering::Relaxed), Ordering::Relaxed);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub gaussian_counts: Vec<usize>,
    pub avatar_counts: Vec<usize>,
    /// Scene size used for the avatar sweep.
    pub avatar_scene_gaussians: usize,
    pub gaussians_per_avatar: usize,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub warmup: usize,
    pub sh_degree: u8,
    pub seed: u64,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            gaussian_counts: vec![10_000, 50_000, 100_000, 500_000],
            avatar_counts: vec![0, 1, 2, 5],
            avatar_scene_gaussians: 100_000,
            gaussians_per_avatar: 20_000,
            width: 256,
            height: 256,
            frames: 10,
            warmup: 2,
            sh_degree: 3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub config: String,
    pub n_gaussians: usize,
    pub n_avatars: usize,
    pub fps: f64,
    pub peak_bytes: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// True when peak bytes come from the tracking allocator.
    pub allocator_tracked: bool,
}

impl BenchReport {
    pub const CSV_HEADER: &'static str = "config,n_gaussians,n_avatars,fps,peak_bytes";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{:.3},{}\n", r.config, r.n_gaussians, r.n_avatars, r.fps, r.peak_bytes));
        }
        s
    }

    /// Rows of one sweep (`"scene"` or `"avatars"`), in sweep order.
    pub fn sweep(&self, prefix: &str) -> Vec<&BenchRow> {
        self.rows.iter().filter(|r| r.config.starts_with(prefix)).collect()
    }
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn linear_r2(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    if sxx == 0.0 {
        return 0.0;
    }
    sxy * sxy / (sxx * syy)
}

/// True when each value is at most `(1 + margin)` times its predecessor.
pub fn nonincreasing_within(values: &[f64], margin: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + margin))
}

fn bench_camera(spec: &BenchSpec) -> Result<Camera, Error> {
    let d = CameraDefaults::default().with_size(spec.width, spec.height);
    Ok(Camera::from_defaults(&d, look_along(&Vector3::new(0.0, 0.0, 1.2), &Vector3::x()))?)
}

fn scene_cloud(n: usize, spec: &BenchSpec, salt: u64) -> GaussianCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ salt);
    random_cloud(n, spec.sh_degree, [1.5, -6.0, -1.0], [14.0, 6.0, 3.5], (0.01, 0.06), &mut rng)
}

fn frame_bytes(spec: &BenchSpec) -> usize {
    // color, alpha, depth for the scene frame and the avatar layer
    2 * spec.width * spec.height * (12 + 4 + 4)
}

/// Renders `frames` observations and returns `(fps, accounted_bytes)`.
fn measure(
    spec: &BenchSpec,
    rasterizer: &Rasterizer,
    scene: &GaussianCloud,
    avatars: &[(Arc<AvatarBundle>, Isometry3<f64>)],
    camera: &Camera,
) -> Result<(f64, usize), Error> {
    let mut accounted = scene.payload_bytes() + frame_bytes(spec);
    let run = |frame: usize| -> Result<usize, Error> {
        let t = frame as f64 / 30.0;
        let mut clouds = Vec::with_capacity(avatars.len());
        for (b, place) in avatars {
            let mut pose = crate::rig::sample_pose(&b.trajectory, t % b.duration())?;
            pose.root = place * pose.root;
            clouds.push(lbs_deform(b, &pose)?);
        }
        let bytes: usize = clouds.iter().map(|c| 2 * c.payload_bytes()).sum();
        let _frame = render_observation_with(rasterizer, scene, &clouds, camera, [1.0; 3])?;
        Ok(bytes)
    };
    for f in 0..spec.warmup {
        run(f)?;
    }
    let start = Instant::now();
    for f in 0..spec.frames {
        let b = run(spec.warmup + f)?;
        accounted = accounted.max(scene.payload_bytes() + frame_bytes(spec) + b);
    }
    let secs = start.elapsed().as_secs_f64().max(1e-9);
    accounted += avatars.iter().map(|(b, _)| b.payload_bytes()).sum::<usize>();
    Ok((spec.frames as f64 / secs, accounted))
}

fn run_config(
    spec: &BenchSpec,
    rasterizer: &Rasterizer,
    config: String,
    n_scene: usize,
    n_avatars: usize,
    salt: u64,
) -> Result<BenchRow, Error> {
    let camera = bench_camera(spec)?;
    let tracked = tracking_active();
    let baseline = current_bytes();
    reset_peak();
    let (fps, accounted, total) = {
        let scene = scene_cloud(n_scene, spec, salt);
        let mut avatars = Vec::with_capacity(n_avatars);
        for i in 0..n_avatars {
            let b = walking_humanoid(
                &[[0.0, 0.0], [1.5, 0.0], [0.0, 0.0]],
                1.0,
                spec.gaussians_per_avatar,
                spec.sh_degree,
                spec.seed + 1000 + i as u64,
            )?;
            // spread avatars across the view, 3-6 m ahead
            let lateral = (i as f64 - (n_avatars as f64 - 1.0) / 2.0) * 1.1;
            let place = Isometry3::from_parts(
                Translation3::new(3.0 + (i % 3) as f64, lateral, 0.0),
                UnitQuaternion::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2),
            );
            avatars.push((Arc::new(b), place));
        }
        let total = n_scene + avatars.iter().map(|(b, _)| b.canonical.len()).sum::<usize>();
        let (fps, accounted) = measure(spec, rasterizer, &scene, &avatars, &camera)?;
        (fps, accounted, total)
    };
    let peak = if tracked {
        peak_bytes().saturating_sub(baseline)
    } else {
        accounted
    };
    log::info!("{config}: {total} gaussians, {n_avatars} avatars, {fps:.2} fps, {peak} bytes");
    Ok(BenchRow {
        config,
        n_gaussians: total,
        n_avatars,
        fps,
        peak_bytes: peak,
    })
}

/// Runs the gaussian-count sweep (no avatars) and then the avatar sweep on a
/// fixed scene, one configuration at a time.
pub fn run_benchmark(spec: &BenchSpec, rasterizer: &Rasterizer) -> Result<BenchReport, Error> {
    if spec.gaussian_counts.is_empty() && spec.avatar_counts.is_empty() {
        return Err(Error::Contract("benchmark needs at least one sweep point".into()));
    }
    if spec.frames == 0 {
        return Err(Error::Contract("benchmark needs at least one timed frame".into()));
    }
    let mut report = BenchReport {
        rows: Vec::new(),
        allocator_tracked: tracking_active(),
    };
    for &n in &spec.gaussian_counts {
        report.rows.push(run_config(spec, rasterizer, format!("scene_{n}"), n, 0, 1)?);
    }
    for &k in &spec.avatar_counts {
        report
            .rows
            .push(run_config(spec, rasterizer, format!("avatars_{k}"), spec.avatar_scene_gaussians, k, 2)?);
    }
    report.allocator_tracked = tracking_active();
    Ok(report)
}
