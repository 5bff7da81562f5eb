mod common;

use std::time::Instant;

use common::{dijkstra8, random_blocked};
use objnav::costfield::fmm_distance;
use objnav::grid::Grid;
use objnav::world::{generate_world, WorldGenParams};
use proptest::prelude::*;

/// Largest relative gap between FMM and Dijkstra over mutually reachable cells.
fn worst_gap(blocked: &Grid<bool>, seeds: &[usize]) -> f64 {
    let f = fmm_distance(blocked, seeds, 0.05).unwrap();
    let d = dijkstra8(blocked, seeds, 0.05);
    let mut worst = 0.0f64;
    for i in 0..f.len() {
        assert_eq!(f[i].is_finite(), d[i].is_finite(), "reachability differs at {i}");
        if d[i].is_finite() && d[i] > 0.0 {
            worst = worst.max((f[i] - d[i]).abs() / d[i]);
        }
    }
    worst
}

#[test]
fn fmm_tracks_dijkstra_on_procedural_worlds() {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let w = generate_world(seed, &WorldGenParams::small()).unwrap();
        let blocked = w.occupancy();
        let free: Vec<usize> = (0..blocked.len()).filter(|&i| !blocked[i]).collect();
        let seeds = [free[(seed as usize * 7919) % free.len()]];
        worst = worst.max(worst_gap(&blocked, &seeds));
    }
    assert!(worst <= 0.10, "worst relative gap {worst}");
    assert!(t.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn fmm_tracks_dijkstra_on_cluttered_maps() {
    for seed in 0..40 {
        let mut blocked = random_blocked(64, 64, 0.25, seed);
        let s = blocked.index(32, 32);
        blocked[s] = false;
        assert!(worst_gap(&blocked, &[s]) <= 0.10);
    }
}

#[test]
fn multi_seed_field_is_min_over_seeds() {
    let blocked = random_blocked(48, 48, 0.15, 9);
    let seeds: Vec<usize> = [(3, 3), (40, 10), (20, 44)]
        .iter()
        .map(|&(x, y)| blocked.index(x, y))
        .filter(|&i| !blocked[i])
        .collect();
    let joint = fmm_distance(&blocked, &seeds, 1.0).unwrap();
    let singles: Vec<Grid<f64>> = seeds.iter().map(|&s| fmm_distance(&blocked, &[s], 1.0).unwrap()).collect();
    for i in 0..joint.len() {
        let m = singles.iter().map(|g| g[i]).fold(f64::INFINITY, f64::min);
        if m.is_finite() {
            // Fronts from different seeds interact where they meet.
            assert!(joint[i] <= m + 1e-9 && joint[i] >= 0.9 * m, "{i}: {} vs {m}", joint[i]);
        } else {
            assert!(joint[i].is_infinite());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adding_an_obstacle_never_lowers_cost(seed in 0u64..10_000, ox in 0usize..32, oy in 0usize..32) {
        let mut blocked = random_blocked(32, 32, 0.15, seed);
        let s = blocked.index(16, 16);
        blocked[s] = false;
        prop_assume!((ox, oy) != (16, 16));
        let before = fmm_distance(&blocked, &[s], 1.0).unwrap();
        blocked.set(ox, oy, true);
        let after = fmm_distance(&blocked, &[s], 1.0).unwrap();
        for i in 0..before.len() {
            if !blocked[i] {
                prop_assert!(after[i] >= before[i] - 1e-9, "cell {} dropped {} -> {}", i, before[i], after[i]);
            }
        }
    }

    #[test]
    fn triangle_inequality_with_discretization_slack(seed in 0u64..10_000, a in 0usize..1024, b in 0usize..1024, c in 0usize..1024) {
        let blocked = random_blocked(32, 32, 0.1, seed);
        prop_assume!(!blocked[a] && !blocked[b] && !blocked[c]);
        let res = 0.05;
        let from_a = fmm_distance(&blocked, &[a], res).unwrap();
        let from_b = fmm_distance(&blocked, &[b], res).unwrap();
        prop_assume!(from_a[b].is_finite() && from_b[c].is_finite());
        prop_assert!(from_a[c] <= from_a[b] + from_b[c] + 2.0 * res);
    }

    #[test]
    fn fmm_is_pure(seed in 0u64..10_000) {
        let blocked = random_blocked(24, 24, 0.2, seed);
        let s = (0..blocked.len()).find(|&i| !blocked[i]).unwrap();
        let a = fmm_distance(&blocked, &[s], 0.05).unwrap();
        let b = fmm_distance(&blocked, &[s], 0.05).unwrap();
        prop_assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
