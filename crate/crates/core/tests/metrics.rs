use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splatnav::metrics::{aggregate, episode_metrics, rising_edges, spl, EpisodeMetrics};
use splatnav::tasks::{Action, Pose2, RewardBreakdown, StepRecord, TaskKind, Trace, TraceHeader, TRACE_SCHEMA};

struct Row {
    moved: f64,
    collision: bool,
    intrusion: f64,
    track: bool,
}

fn row(moved: f64, collision: bool) -> Row {
    Row {
        moved,
        collision,
        intrusion: 0.0,
        track: false,
    }
}

fn trace(task: TaskKind, shortest: f64, rows: &[Row], success: bool, final_dist: f64) -> Trace {
    let pose = Pose2 {
        x: 0.0,
        y: 0.0,
        heading: 0.0,
    };
    let steps = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let last = i + 1 == rows.len();
            StepRecord {
                step: i,
                time: i as f64 * 0.1,
                action: if last { Action::Stop } else { Action::MoveForward },
                pose,
                displacement: r.moved,
                blocked: false,
                clearance: if r.collision { 0.0 } else { f64::INFINITY },
                intrusion: r.intrusion,
                collision: r.collision,
                track: r.track,
                d_goal: Some(final_dist),
                goal_dist: final_dist,
                reward: RewardBreakdown::default(),
                done: last,
                success: last && success,
            }
        })
        .collect();
    Trace {
        header: TraceHeader {
            schema: TRACE_SCHEMA.into(),
            task,
            seed: 0,
            episode: 0,
            start: pose,
            goal: Some([1.0, 0.0]),
            target: None,
            shortest_path: Some(shortest),
            success_distance: 0.2,
            max_steps: 500,
        },
        steps,
    }
}

#[test]
fn spl_examples() {
    assert_eq!(spl(false, 3.0, 3.0), 0.0);
    assert_eq!(spl(true, 3.0, 3.0), 1.0);
    assert_eq!(spl(true, 8.0, 4.0), 0.5);
    // shorter than the geodesic (e.g. a snapped goal) caps at 1
    assert_eq!(spl(true, 2.0, 4.0), 1.0);
}

#[test]
fn collision_rate_and_count() {
    let flags = [false, true, true, false, true];
    let rows: Vec<Row> = flags.iter().map(|&c| row(0.25, c)).collect();
    let m = episode_metrics(&trace(TaskKind::PointNav, 1.0, &rows, true, 0.1), TaskKind::PointNav).unwrap();
    assert!((m.cr - 0.6).abs() < 1e-12);
    assert_eq!(m.cc, 2);
    assert_eq!(rising_edges([true, true, false, true]), 2);
    assert_eq!(rising_edges(Vec::<bool>::new()), 0);
    assert!((m.path_length - 1.25).abs() < 1e-12);
    assert!((m.spl - 0.8).abs() < 1e-12);
    assert_eq!(m.steps, 5);
}

#[test]
fn intrusion_and_tracking_rates() {
    let rows: Vec<Row> = [(0.0, false), (0.5, true), (1.0, true), (0.25, false)]
        .iter()
        .map(|&(i, t)| Row {
            intrusion: i,
            track: t,
            ..row(0.1, false)
        })
        .collect();
    let m = episode_metrics(&trace(TaskKind::TrackNav, 0.0, &rows, true, 1.9), TaskKind::TrackNav).unwrap();
    assert!((m.psi - 0.4375).abs() < 1e-12);
    assert!((m.tr - 0.5).abs() < 1e-12);
    // TrackNav has no success notion
    assert!(!m.success);
    assert_eq!(m.spl, 0.0);
    assert_eq!(m.dtg, 1.9);
}

#[test]
fn failed_episode_scores_zero_spl() {
    let rows: Vec<Row> = (0..4).map(|_| row(0.25, false)).collect();
    let m = episode_metrics(&trace(TaskKind::PointNav, 1.0, &rows, false, 2.0), TaskKind::PointNav).unwrap();
    assert!(!m.success);
    assert_eq!(m.spl, 0.0);
    assert_eq!(m.dtg, 2.0);
    assert_eq!(m.cr, 0.0);
    assert_eq!(m.cc, 0);
}

#[test]
fn aggregate_means() {
    let a = EpisodeMetrics {
        success: true,
        spl: 1.0,
        dtg: 0.1,
        cr: 0.0,
        psi: 0.2,
        tr: 0.0,
        cc: 0,
        path_length: 2.0,
        shortest_path: 2.0,
        steps: 9,
    };
    let b = EpisodeMetrics {
        success: false,
        spl: 0.0,
        dtg: 3.1,
        cr: 0.5,
        cc: 3,
        ..a
    };
    let s = aggregate(&[a, b]).unwrap();
    assert_eq!(s.episodes, 2);
    assert_eq!(s.sr, 0.5);
    assert_eq!(s.spl, 0.5);
    assert!((s.dtg - 1.6).abs() < 1e-12);
    assert_eq!(s.cc, 1.5);
    let one = aggregate(&[a]).unwrap();
    assert_eq!((one.sr, one.spl, one.cr), (1.0, 1.0, 0.0));
    assert!(aggregate(&[]).is_err());
    assert!(episode_metrics(&trace(TaskKind::PointNav, 1.0, &[], false, 1.0), TaskKind::PointNav).is_err());
}

#[test]
fn metrics_survive_jsonl_round_trip() {
    let rows: Vec<Row> = [0.25, 0.0, 0.25, 0.1].iter().map(|&d| row(d, d == 0.0)).collect();
    let t = trace(TaskKind::PointNavAvatar, 0.55, &rows, true, 0.15);
    let back = Trace::from_reader(t.to_jsonl().as_bytes()).unwrap();
    assert_eq!(
        episode_metrics(&t, TaskKind::PointNavAvatar).unwrap(),
        episode_metrics(&back, TaskKind::PointNavAvatar).unwrap()
    );
}

#[test]
fn spl_never_exceeds_success() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut records = Vec::new();
    for _ in 0..1000 {
        let n = rng.gen_range(1..40);
        let rows: Vec<Row> = (0..n).map(|_| row(rng.gen_range(0.0..0.25), rng.gen_bool(0.2))).collect();
        let t = trace(TaskKind::PointNav, rng.gen_range(0.0..8.0), &rows, rng.gen_bool(0.5), rng.gen_range(0.0..5.0));
        let m = episode_metrics(&t, TaskKind::PointNav).unwrap();
        assert!(m.spl <= f64::from(u8::from(m.success)));
        assert!((0.0..=1.0).contains(&m.spl));
        records.push(m);
    }
    let s = aggregate(&records).unwrap();
    assert!(s.spl <= s.sr);
}
