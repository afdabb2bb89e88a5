use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use splatnav::assets::{load_avatar_parts, write_capsule_blob};
use splatnav::bench::{run_benchmark, BenchSpec, TrackingAllocator};
use splatnav::metrics::{aggregate, episode_metrics, EpisodeMetrics};
use splatnav::render::{Camera, Rasterizer};
use splatnav::rig::bake_capsules;
use splatnav::tasks::{
    run_episode, Episode, EpisodeConfig, Policy, RandomPolicy, ReplayPolicy, ShortestPathPolicy, TaskKind, Trace,
};
use splatnav::World;

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

#[derive(Parser, Debug)]
#[command(name = "splatnav", version, about = "Gaussian-splat navigation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render an RGB-D still of the scene and avatars at time t.
    Render(RenderArgs),
    /// Run scripted-policy episodes and write traces plus metrics.
    Episode(EpisodeArgs),
    /// Recompute an avatar bundle's capsule track from its trajectory.
    Bake(BakeArgs),
    /// Load a scene config or avatar bundle and report problems.
    Validate(ValidateArgs),
    /// Recompute metrics from trace files.
    Score(ScoreArgs),
    /// Measure FPS and peak memory across scene sizes and avatar counts.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct Size {
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Agent-mounted camera pose as `x,y,heading_deg`; defaults to the
    /// navgrid center facing +x.
    #[arg(long, value_parser = parse_pose)]
    pose: Option<[f64; 3]>,
    #[arg(long, default_value_t = 0.0)]
    time: f64,
    /// Output PNG; depth goes to `<stem>.depth.f32` with a JSON sidecar.
    #[arg(long)]
    out: PathBuf,
    /// Also write depth as PFM.
    #[arg(long)]
    pfm: bool,
    #[command(flatten)]
    size: Size,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum PolicyKind {
    ShortestPath,
    Random,
    Replay,
}

#[derive(Args, Debug)]
struct EpisodeArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value = "pointnav")]
    task: TaskKind,
    #[arg(long, value_enum, default_value_t = PolicyKind::ShortestPath)]
    policy: PolicyKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    episodes: usize,
    #[arg(long)]
    out: PathBuf,
    /// Write an RGB-D observation per step under `episode_NNN/`.
    #[arg(long)]
    dump_frames: bool,
    #[command(flatten)]
    size: Size,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Action file (tokens or a trace) for the replay policy.
    #[arg(long)]
    actions: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BakeArgs {
    /// Avatar bundle directory.
    #[arg(long)]
    bundle: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, required_unless_present = "bundle")]
    scene: Option<PathBuf>,
    #[arg(long)]
    bundle: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Trace files or directories of `*.jsonl` traces.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    /// Per-episode metrics CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [10_000, 50_000, 100_000, 500_000])]
    gaussians: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0, 1, 2, 5])]
    avatars: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    frames: usize,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    size: Size,
}

fn parse_pose(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|_| "expected x,y,heading_deg".to_string())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_render(args: &RenderArgs) -> Result<()> {
    let world = World::load(&args.scene)?;
    let pose = match args.pose {
        Some(p) => p,
        None => match &world.grid {
            Some(g) => {
                let c = g.cell_center(g.width / 2, g.height / 2);
                [c[0], c[1], 0.0]
            }
            None => [0.0; 3],
        },
    };
    let defaults = world.camera.with_size(args.size.width, args.size.height);
    let camera = Camera::agent_mounted(&defaults, pose[0], pose[1], pose[2].to_radians())?;
    let frame = world.render(&Rasterizer::default(), &camera, args.time)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
    }
    frame.write_png(&args.out)?;
    frame.write_depth_f32(sibling(&args.out, ".depth.f32"))?;
    if args.pfm {
        frame.write_depth_pfm(sibling(&args.out, ".depth.pfm"))?;
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn make_policy(args: &EpisodeArgs, seed: u64) -> Result<Box<dyn Policy>> {
    Ok(match args.policy {
        PolicyKind::ShortestPath => Box::new(ShortestPathPolicy::default()),
        PolicyKind::Random => Box::new(RandomPolicy::new(seed)),
        PolicyKind::Replay => {
            let path = args.actions.as_ref().context("--policy replay needs --actions FILE")?;
            Box::new(ReplayPolicy::from_file(path)?)
        }
    })
}

fn cmd_episode(args: &EpisodeArgs) -> Result<()> {
    let world = World::load(&args.scene)?;
    let mut cfg = EpisodeConfig::new(args.task);
    cfg.camera = world.camera.with_size(args.size.width, args.size.height);
    cfg.render = args.dump_frames;
    if let Some(m) = args.max_steps {
        cfg.max_steps = m;
    }
    fs::create_dir_all(&args.out).with_context(|| args.out.display().to_string())?;
    let mut rows = Vec::with_capacity(args.episodes);
    for i in 0..args.episodes {
        let seed = args.seed + i as u64;
        let mut episode = Episode::reset(&world, &cfg, seed, i)?;
        let mut policy = make_policy(args, seed)?;
        if args.dump_frames {
            let dir = args.out.join(format!("episode_{i:03}"));
            fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
            let mut k = 0usize;
            let mut dump = |frame: Option<&splatnav::FrameRGBD>| -> Result<()> {
                if let Some(f) = frame {
                    f.write_png(dir.join(format!("frame_{k:04}.png")))?;
                    f.write_depth_f32(dir.join(format!("frame_{k:04}.depth.f32")))?;
                }
                k += 1;
                Ok(())
            };
            dump(episode.observe()?.frame.as_ref())?;
            while !episode.state().done {
                let a = policy.act(&episode)?;
                let out = episode.step(a)?;
                dump(out.observation.frame.as_ref())?;
            }
        } else {
            run_episode(&mut episode, policy.as_mut())?;
        }
        let trace = episode.into_trace();
        trace.write_jsonl(args.out.join(format!("episode_{i:03}.jsonl")))?;
        let m = episode_metrics(&trace, args.task)?;
        log::info!("episode {i}: success={} spl={:.3} steps={}", m.success, m.spl, m.steps);
        rows.push(m);
    }
    write_metrics_csv(&args.out.join("metrics.csv"), &rows)?;
    println!("{}", aggregate(&rows)?);
    Ok(())
}

fn write_metrics_csv(path: &Path, rows: &[EpisodeMetrics]) -> Result<()> {
    let mut s = format!("episode,{}\n", EpisodeMetrics::CSV_HEADER);
    for (i, m) in rows.iter().enumerate() {
        s.push_str(&format!("{i},{}\n", m.csv_row()));
    }
    fs::write(path, s).with_context(|| path.display().to_string())
}

fn cmd_bake(args: &BakeArgs) -> Result<()> {
    let parts = load_avatar_parts(&args.bundle)?;
    let track = bake_capsules(&parts.skeleton, &parts.inv_bind, &parts.trajectory)?;
    if track.n_capsules() != parts.manifest.n_capsules {
        bail!(
            "baked {} capsules per frame but the manifest declares {}",
            track.n_capsules(),
            parts.manifest.n_capsules
        );
    }
    let path = args.bundle.join("capsules.f32");
    write_capsule_blob(&path, &track)?;
    println!("wrote {} ({} frames x {} capsules)", path.display(), track.n_frames(), track.n_capsules());
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<()> {
    if let Some(scene) = &args.scene {
        let world = World::load(scene)?;
        println!("scene: {} gaussians, SH degree {}", world.scene.len(), world.scene.sh_degree());
        if let Some(g) = &world.grid {
            println!(
                "navgrid: {}x{} cells at {} m, {} walkable",
                g.width,
                g.height,
                g.resolution,
                g.walkable_count()
            );
        }
        for (i, a) in world.avatars.iter().enumerate() {
            println!(
                "avatar {i}: {} gaussians, {} joints, {:.2} s{}",
                a.bundle.canonical.len(),
                a.bundle.n_joints(),
                a.bundle.duration(),
                if a.enabled { "" } else { " (disabled)" }
            );
        }
    }
    if let Some(dir) = &args.bundle {
        let parts = load_avatar_parts(dir)?;
        println!(
            "bundle: {} gaussians, {} joints, {} frames, capsules {}",
            parts.canonical.len(),
            parts.skeleton.len(),
            parts.trajectory.frames.len(),
            if parts.capsule_track.is_some() { "baked" } else { "missing" }
        );
    }
    println!("ok");
    Ok(())
}

fn collect_traces(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| p.display().to_string())?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        bail!("no trace files found");
    }
    Ok(out)
}

fn cmd_score(args: &ScoreArgs) -> Result<()> {
    let mut rows = Vec::new();
    for path in collect_traces(&args.traces)? {
        let trace = Trace::read_jsonl(&path)?;
        rows.push(episode_metrics(&trace, trace.header.task).with_context(|| path.display().to_string())?);
    }
    if let Some(out) = &args.out {
        write_metrics_csv(out, &rows)?;
    }
    println!("{}", aggregate(&rows)?);
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let spec = BenchSpec {
        gaussian_counts: args.gaussians.clone(),
        avatar_counts: args.avatars.clone(),
        width: args.size.width,
        height: args.size.height,
        frames: args.frames,
        warmup: args.warmup,
        seed: args.seed,
        ..BenchSpec::default()
    };
    let report = run_benchmark(&spec, &Rasterizer::default())?;
    fs::write(&args.out, report.to_csv()).with_context(|| args.out.display().to_string())?;
    print!("{}", report.to_csv());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Render(a) => cmd_render(a),
        Command::Episode(a) => cmd_episode(a),
        Command::Bake(a) => cmd_bake(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Score(a) => cmd_score(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
