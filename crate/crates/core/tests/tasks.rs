use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splatnav::nav::geodesic_distance;
use splatnav::synth::RoomSpec;
use splatnav::tasks::{
    avatar_penalty, band_reward, collision_flag, intrusion, pointnav_reward, run_episode, track_geometry,
    track_indicator, tracknav_reward, Action, AvatarPenaltyParams, Episode, EpisodeConfig, PointNavRewardParams,
    RandomPolicy, ReplayPolicy, ShortestPathPolicy, TaskKind, Trace, TrackParams, TrackStep,
};
use splatnav::World;

const EPS: f64 = 1e-9;

#[test]
fn intrusion_branches() {
    assert_eq!(intrusion(1.5, 1.0), 0.0);
    assert_eq!(intrusion(1.0, 1.0), 0.0);
    assert_eq!(intrusion(0.4, 1.0), 0.6);
    assert_eq!(intrusion(-0.3, 1.0), 1.0);
    assert_eq!(intrusion(f64::INFINITY, 1.0), 0.0);
}

#[test]
fn avatar_penalty_values() {
    let p = AvatarPenaltyParams::default();
    // independently evaluated piecewise formula
    for (c, want) in [(1.0, 0.0), (0.75, -0.025), (0.5, -0.1), (0.25, -0.56875), (0.0, -0.6), (-0.2, -0.6)] {
        assert!((avatar_penalty(c, &p) - want).abs() <= EPS, "c={c}");
    }
    assert_eq!(avatar_penalty(f64::INFINITY, &p), 0.0);
    // monotone and bounded
    let mut prev = avatar_penalty(-1.0, &p);
    for k in 0..=2000 {
        let c = -1.0 + 2.5 * k as f64 / 2000.0;
        let v = avatar_penalty(c, &p);
        assert!(v >= prev - 1e-15 && v >= -p.p_max && v <= 0.0);
        prev = v;
    }
}

#[test]
fn avatar_penalty_is_continuous_at_d_crit() {
    let p = AvatarPenaltyParams::default();
    let at = avatar_penalty(p.d_crit, &p);
    // third-branch limit from below
    let below = -(p.p1 + (p.p_col - p.p1) * (1.0 - 1f64.powf(p.alpha2)));
    assert!((at - below).abs() <= EPS);
    for eps in [1e-10, 1e-12] {
        assert!((avatar_penalty(p.d_crit - eps, &p) - avatar_penalty(p.d_crit + eps, &p)).abs() <= EPS);
    }
}

#[test]
fn collision_tolerance() {
    assert!(!collision_flag(0.5, 1e-5));
    assert!(collision_flag(0.0, 1e-5));
    assert!(collision_flag(2e-6, 1e-5));
    assert!(collision_flag(-0.1, 1e-5));
}

#[test]
fn pointnav_reward_examples() {
    let p = PointNavRewardParams::default();
    let r = pointnav_reward(5.0, 4.75, Some(f64::INFINITY), false, &p);
    assert!((r.total - (0.25 + p.r_slack)).abs() <= EPS);
    assert_eq!(r.avatar, 0.0);
    let r = pointnav_reward(3.0, 3.0, Some(0.75), false, &p);
    assert!((r.total - (-0.025 + p.r_slack)).abs() <= EPS);
    let r = pointnav_reward(0.3, 0.1, None, true, &p);
    assert_eq!(r.success, p.r_success);
    assert!((r.total - (0.2 + p.r_slack + p.r_success)).abs() <= EPS);
}

#[test]
fn band_reward_values() {
    let p = TrackParams::default();
    assert!((band_reward(1.85, &p) - 0.36).abs() <= 1e-6);
    assert!((band_reward(2.5, &p) - 0.2088).abs() <= 1e-6);
    assert!((band_reward(1.2, &p) - 0.2088).abs() <= 1e-6);
    assert_eq!(band_reward(3.0, &p), 0.0);
    assert_eq!(band_reward(1.0, &p), 0.0);
    for k in 0..=100 {
        let d = 1.2 + 1.3 * k as f64 / 100.0;
        let v = band_reward(d, &p);
        assert!(v >= 0.0 && v <= p.r_peak + 1e-15);
    }
}

#[test]
fn track_indicator_examples() {
    let p = TrackParams::default();
    let avatar = Vector2::new(0.0, 0.0);
    let facing = Vector2::new(1.0, 0.0);
    // behind, looking at the avatar's back
    assert!(track_indicator(&Vector2::new(-1.8, 0.0), 0.0, &avatar, &facing, &p));
    assert!(!track_indicator(&Vector2::new(-3.0, 0.0), 0.0, &avatar, &facing, &p));
    // in front, facing the avatar
    assert!(!track_indicator(&Vector2::new(1.8, 0.0), std::f64::consts::PI, &avatar, &facing, &p));
}

#[test]
fn track_indicator_matches_brute_force() {
    let p = TrackParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5000 {
        let agent = Vector2::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        let heading: f64 = rng.gen_range(-4.0..4.0);
        let avatar = Vector2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let yaw: f64 = rng.gen_range(-4.0..4.0);
        let facing = Vector2::new(yaw.cos(), yaw.sin());
        let to = avatar - agent;
        let d = to.norm();
        let ang = |a: Vector2<f64>, b: Vector2<f64>| {
            let x = a.x * b.x + a.y * b.y;
            let y = a.x * b.y - a.y * b.x;
            y.atan2(x).abs()
        };
        let view = ang(Vector2::new(heading.cos(), heading.sin()), to);
        let rear = ang(-facing, -to);
        let want = (1.2..=2.5).contains(&d) && view <= p.theta_view + 1e-12 && rear <= p.theta_rear + 1e-12;
        let near_edge = (view - p.theta_view).abs() < 1e-9 || (rear - p.theta_rear).abs() < 1e-9;
        if !near_edge {
            assert_eq!(track_indicator(&agent, heading, &avatar, &facing, &p), want);
        }
    }
}

fn step_at(dist: f64, prev: f64, displacement: Vector2<f64>, streak: u32) -> TrackStep {
    let avatar = Vector2::new(0.0, 0.0);
    let agent = Vector2::new(-dist, 0.0);
    TrackStep {
        geometry: track_geometry(&agent, 0.0, &avatar, &Vector2::new(1.0, 0.0)),
        prev_dist: prev,
        clearance: f64::INFINITY,
        displacement,
        prev_direction: Vector2::new(1.0, 0.0),
        streak,
    }
}

#[test]
fn tracknav_reward_examples() {
    let p = TrackParams::default();
    let r = tracknav_reward(&step_at(1.85, 1.85, Vector2::zeros(), 60), &p);
    assert!((r.band - 0.36).abs() <= 1e-9);
    assert!((r.track - 0.08).abs() <= 1e-12);
    assert!((r.streak - 0.12).abs() <= 1e-12);
    assert!((r.total - (0.36 + 0.08 + 0.12)).abs() <= 1e-9);

    // e shrinks 2.0 -> 1.5 outside the band (distance 4.5 -> 4.0)
    let r = tracknav_reward(&step_at(4.0, 4.5, Vector2::new(0.5, 0.0), 0), &p);
    assert!((r.approach - 0.4).abs() <= 1e-9);

    let r = tracknav_reward(&step_at(1.85, 1.85, Vector2::new(0.0, 0.25), 0), &p);
    assert!((r.tangential + 0.1125).abs() <= 1e-12);
    assert_eq!(r.radial, 0.0);
}

fn empty_room(size: f64) -> World {
    RoomSpec {
        size: [size, size],
        ..RoomSpec::default()
    }
    .world(false, Vec::new())
    .unwrap()
}

#[test]
fn reset_is_seeded() {
    let world = empty_room(6.4);
    let cfg = EpisodeConfig::new(TaskKind::PointNav);
    let a = Episode::reset(&world, &cfg, 5, 0).unwrap();
    let b = Episode::reset(&world, &cfg, 5, 0).unwrap();
    assert_eq!(a.trace().header, b.trace().header);
    let mut distinct = 0;
    for s in 0..50u64 {
        let e = Episode::reset(&world, &cfg, s, 0).unwrap();
        let f = Episode::reset(&world, &cfg, s + 1, 0).unwrap();
        if e.trace().header.start != f.trace().header.start || e.trace().header.goal != f.trace().header.goal {
            distinct += 1;
        }
        let h = &e.trace().header;
        let d = geodesic_distance(e.grid(), [h.start.x, h.start.y], h.goal.unwrap()).unwrap().unwrap();
        assert!(d >= cfg.min_separation);
        assert_eq!(h.shortest_path, Some(d));
    }
    assert_eq!(distinct, 50);
}

#[test]
fn stop_semantics_and_horizon() {
    let world = empty_room(6.0);
    let mut cfg = EpisodeConfig::new(TaskKind::PointNav);

    let mut ep = Episode::reset(&world, &cfg, 1, 0).unwrap();
    let out = ep.step(Action::Stop).unwrap();
    assert!(out.done && !out.record.success);
    assert!(ep.step(Action::MoveForward).is_err());

    let mut ep = Episode::reset(&world, &cfg, 1, 0).unwrap();
    run_episode(&mut ep, &mut ShortestPathPolicy::default()).unwrap();
    let last = ep.trace().steps.last().unwrap();
    assert_eq!(last.action, Action::Stop);
    assert!(last.success && last.d_goal.unwrap() <= 0.2);
    assert_eq!(last.reward.success, cfg.pointnav.r_success);
    assert_eq!(ep.trace().steps.iter().filter(|s| s.reward.success != 0.0).count(), 1);

    cfg.max_steps = 3;
    let mut ep = Episode::reset(&world, &cfg, 2, 0).unwrap();
    let mut steps = 0;
    while !ep.state().done {
        ep.step(Action::TurnLeft).unwrap();
        steps += 1;
    }
    assert_eq!(steps, 3);
    assert!(!ep.state().success);
}

#[test]
fn traces_are_deterministic_and_round_trip() {
    let world = empty_room(6.0);
    let cfg = EpisodeConfig::new(TaskKind::PointNav);
    let run = |seed| {
        let mut ep = Episode::reset(&world, &cfg, seed, 0).unwrap();
        run_episode(&mut ep, &mut RandomPolicy::new(seed)).unwrap();
        ep.into_trace()
    };
    let a = run(4);
    assert_eq!(a.to_jsonl(), run(4).to_jsonl());
    let back = Trace::from_reader(a.to_jsonl().as_bytes()).unwrap();
    assert_eq!(back, a);

    // replaying the actions reproduces the trace
    let mut ep = Episode::reset(&world, &cfg, 4, 0).unwrap();
    run_episode(&mut ep, &mut ReplayPolicy::new(a.actions())).unwrap();
    assert_eq!(ep.into_trace().to_jsonl(), a.to_jsonl());
}

#[test]
fn avatar_aware_reward_reduces_without_avatars() {
    let world = empty_room(6.0);
    let plain = EpisodeConfig::new(TaskKind::PointNav);
    let aware = EpisodeConfig::new(TaskKind::PointNavAvatar);
    for seed in 0..5 {
        let mut a = Episode::reset(&world, &plain, seed, 0).unwrap();
        let mut b = Episode::reset(&world, &aware, seed, 0).unwrap();
        run_episode(&mut a, &mut RandomPolicy::new(seed)).unwrap();
        run_episode(&mut b, &mut RandomPolicy::new(seed)).unwrap();
        let (ta, tb) = (a.into_trace(), b.into_trace());
        assert_eq!(ta.steps.len(), tb.steps.len());
        for (x, y) in ta.steps.iter().zip(&tb.steps) {
            assert_eq!(x.reward, y.reward);
        }
    }
}

#[test]
fn tracknav_needs_an_avatar() {
    let world = empty_room(6.0);
    assert!(Episode::reset(&world, &EpisodeConfig::new(TaskKind::TrackNav), 0, 0).is_err());
}
