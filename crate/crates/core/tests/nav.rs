use std::cmp::Ordering;

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splatnav::assets::CapsuleTrack;
use splatnav::geom::Capsule;
use splatnav::nav::{
    build_navgrid, clip_step, distance_field, geodesic_distance, is_step_blocked, min_clearance, refresh_obstacles,
    resolve_penetration, AgentBody, NavGrid, ObstacleSet, OccupancyMap, TrackSample,
};

fn free_grid(w: usize, h: usize, res: f64) -> NavGrid {
    build_navgrid(&OccupancyMap::all_free(w, h, res, [0.0, 0.0]), 0.0).unwrap()
}

fn post(x: f64, y: f64, r: f64) -> Capsule {
    Capsule::new(Vector3::new(x, y, 0.0), Vector3::new(x, y, 1.7), r)
}

#[test]
fn erosion_examples() {
    let g = free_grid(10, 10, 1.0);
    assert_eq!(g.walkable_count(), 100);

    let mut map = OccupancyMap::all_free(12, 12, 1.0, [0.0, 0.0]);
    for ix in 0..12 {
        map.free[6 * 12 + ix] = false;
    }
    let g = build_navgrid(&map, 1.0).unwrap();
    for ix in 1..=10 {
        for iy in [5, 6, 7] {
            assert!(!g.is_walkable(ix, iy), "({ix},{iy})");
        }
        for iy in [1, 2, 3, 4, 8, 9, 10] {
            assert!(g.is_walkable(ix, iy), "({ix},{iy})");
        }
    }
    let blocked = OccupancyMap {
        free: vec![false; 25],
        ..OccupancyMap::all_free(5, 5, 1.0, [0.0, 0.0])
    };
    assert!(build_navgrid(&blocked, 0.0).is_err());
}

#[test]
fn geodesic_examples() {
    let g = free_grid(10, 10, 1.0);
    assert_eq!(geodesic_distance(&g, [0.0, 0.0], [3.0, 0.0]).unwrap(), Some(3.0));

    // island: a walled-off cell
    let mut map = OccupancyMap::all_free(9, 9, 1.0, [0.0, 0.0]);
    for (x, y) in [(6, 6), (7, 6), (8, 6), (6, 7), (6, 8)] {
        map.free[y * 9 + x] = false;
    }
    let g = build_navgrid(&map, 0.0).unwrap();
    assert_eq!(geodesic_distance(&g, [0.0, 0.0], [8.0, 8.0]).unwrap(), None);
    assert!(geodesic_distance(&g, [0.0, 0.0], [6.0, 6.0]).is_err());
}

/// `a + b*sqrt(2)` compared exactly.
fn cmp_cost(x: (i64, i64), y: (i64, i64)) -> Ordering {
    let (da, db) = (x.0 - y.0, x.1 - y.1);
    let lhs = da.signum() * da * da;
    let rhs = -db.signum() * 2 * db * db;
    lhs.cmp(&rhs)
}

/// Bellman-Ford relaxation until a fixed point.
fn oracle(w: usize, h: usize, free: &[bool], src: (usize, usize)) -> Vec<Option<(i64, i64)>> {
    let mut d: Vec<Option<(i64, i64)>> = vec![None; w * h];
    d[src.1 * w + src.0] = Some((0, 0));
    let ok = |x: i64, y: i64| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && free[y as usize * w + x as usize];
    loop {
        let mut changed = false;
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let Some(c) = d[y as usize * w + x as usize] else { continue };
                for dx in -1..=1i64 {
                    for dy in -1..=1i64 {
                        if (dx, dy) == (0, 0) || !ok(x + dx, y + dy) {
                            continue;
                        }
                        let diag = dx != 0 && dy != 0;
                        if diag && !(ok(x + dx, y) && ok(x, y + dy)) {
                            continue;
                        }
                        let n = if diag { (c.0, c.1 + 1) } else { (c.0 + 1, c.1) };
                        let slot = &mut d[(y + dy) as usize * w + (x + dx) as usize];
                        if slot.is_none_or(|old| cmp_cost(n, old) == Ordering::Less) {
                            *slot = Some(n);
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return d;
        }
    }
}

#[test]
fn dijkstra_equals_bellman_ford() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..25 {
        let (w, h) = (rng.gen_range(4..40), rng.gen_range(4..40));
        let density = rng.gen_range(0.0..0.35);
        let mut free: Vec<bool> = (0..w * h).map(|_| !rng.gen_bool(density)).collect();
        free[0] = true;
        let g = NavGrid::from_walkable(w, h, 0.1, [0.0, 0.0], free.clone()).unwrap();
        let field = distance_field(&g, (0, 0)).unwrap();
        let want = oracle(w, h, &free, (0, 0));
        for iy in 0..h {
            for ix in 0..w {
                let got = field.cost(ix, iy).map(|c| (i64::from(c.straight), i64::from(c.diagonal)));
                assert_eq!(got, want[iy * w + ix], "trial {trial} cell ({ix},{iy})");
            }
        }
    }
}

#[test]
fn u_shaped_wall_detour() {
    let (w, h) = (20, 20);
    let mut map = OccupancyMap::all_free(w, h, 0.5, [0.0, 0.0]);
    for i in 4..16 {
        map.free[15 * w + i] = false;
        map.free[i * w + 4] = false;
        map.free[i * w + 15] = false;
    }
    let g = build_navgrid(&map, 0.0).unwrap();
    let field = distance_field(&g, (10, 10)).unwrap();
    let want = oracle(w, h, &map.free, (10, 10));
    let got = field.cost(10, 18).unwrap();
    assert_eq!(Some((i64::from(got.straight), i64::from(got.diagonal))), want[18 * w + 10]);
    let d = geodesic_distance(&g, [5.0, 5.0], [5.0, 9.0]).unwrap().unwrap();
    assert!(d > 4.0 + 1.0, "must detour, got {d}");
}

#[test]
fn clearance_examples() {
    let agent = AgentBody::new(Vector2::zeros(), 0.0, 0.2, 1.5);
    assert_eq!(min_clearance(&agent, &ObstacleSet::default()), f64::INFINITY);
    let obs = ObstacleSet::new(vec![post(1.0, 0.0, 0.3)]);
    assert!((min_clearance(&agent, &obs) - 0.5).abs() < 1e-12);
    let crossing = Capsule::new(Vector3::new(-1.0, 0.0, 0.8), Vector3::new(1.0, 0.0, 0.8), 0.3);
    assert!((min_clearance(&agent, &ObstacleSet::new(vec![crossing])) + 0.5).abs() < 1e-12);
}

#[test]
fn clip_step_examples() {
    let grid = free_grid(200, 200, 0.05);
    let agent = AgentBody::new(Vector2::new(2.0, 5.0), 0.0, 0.2, 1.5);
    let free = ObstacleSet::default();
    let step = Vector2::new(1.0, 0.0);
    assert_eq!(clip_step(&agent, &step, &grid, &free), step);
    assert!(!is_step_blocked(&agent, &step, &grid, &free));

    // 0.5 m gap between the agent and a post straight ahead
    let obs = ObstacleSet::new(vec![post(2.0 + 0.2 + 0.5 + 0.3, 5.0, 0.3)]);
    let got = clip_step(&agent, &step, &grid, &obs);
    assert!((got.x - 0.5).abs() < 1e-6 && got.y == 0.0, "{got:?}");
    let moved = AgentBody::new(agent.position + got, 0.0, 0.2, 1.5);
    let c = min_clearance(&moved, &obs);
    assert!((0.0..=1e-3).contains(&c), "{c}");
    assert!(is_step_blocked(&agent, &step, &grid, &obs));

    // already touching
    let touching = ObstacleSet::new(vec![post(2.0 + 0.5, 5.0, 0.3)]);
    assert!(clip_step(&agent, &step, &grid, &touching).norm() < 1e-6);

    // off the grid
    let edge = AgentBody::new(Vector2::new(9.8, 5.0), 0.0, 0.2, 1.5);
    assert!(is_step_blocked(&edge, &step, &grid, &free));
}

#[test]
fn clip_step_never_penetrates() {
    let grid = free_grid(120, 120, 0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        let caps: Vec<Capsule> = (0..rng.gen_range(1..6))
            .map(|_| {
                let a = Vector3::new(rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0), rng.gen_range(0.0..1.8));
                let b = a + Vector3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
                Capsule::new(a, b, rng.gen_range(0.03..0.3))
            })
            .collect();
        let obs = ObstacleSet::new(caps);
        let p = Vector2::new(rng.gen_range(0.5..5.5), rng.gen_range(0.5..5.5));
        let agent = AgentBody::new(p, 0.0, 0.18, 1.5);
        if min_clearance(&agent, &obs) < 0.0 {
            continue;
        }
        let dir = rng.gen_range(-3.2..3.2f64);
        let step = Vector2::new(dir.cos(), dir.sin()) * rng.gen_range(0.0..1.5);
        let got = clip_step(&agent, &step, &grid, &obs);
        let after = AgentBody::new(p + got, 0.0, 0.18, 1.5);
        assert!(min_clearance(&after, &obs) >= -1e-6);
        assert!(grid.is_walkable_at(after.xy()));
        assert!(got.norm() <= step.norm() + 1e-12);
    }
}

#[test]
fn refresh_obstacles_counts() {
    let track = CapsuleTrack {
        frames: vec![vec![post(0.0, 0.0, 0.1); 14]; 3],
    };
    assert!(refresh_obstacles(&[]).unwrap().is_empty());
    let sample = |enabled| TrackSample {
        track: &track,
        fps: 30.0,
        time: 0.02,
        enabled,
    };
    assert_eq!(refresh_obstacles(&[sample(true), sample(true), sample(true)]).unwrap().len(), 42);
    assert_eq!(refresh_obstacles(&[sample(true), sample(false), sample(true)]).unwrap().len(), 28);
}

#[test]
fn depenetration_moves_to_valid_spot() {
    let grid = free_grid(100, 100, 0.05);
    let agent = AgentBody::new(Vector2::new(2.5, 2.5), 0.0, 0.2, 1.5);
    assert_eq!(resolve_penetration(&agent, &grid, &ObstacleSet::default()), None);
    let obs = ObstacleSet::new(vec![post(2.6, 2.5, 0.3)]);
    let p = resolve_penetration(&agent, &grid, &obs).unwrap();
    let moved = AgentBody::new(p, 0.0, 0.2, 1.5);
    assert!(min_clearance(&moved, &obs) >= 0.0);
    assert!(grid.is_walkable_at(moved.xy()));
    assert!(p.x < 2.5);
}
