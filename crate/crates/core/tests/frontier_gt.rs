mod common;

use common::{dijkstra8, XorShift};
use objnav::grid::Grid;
use objnav::mapping::{SemanticMapStack, EXPLORED, LOCAL_SIZE, OBSTACLE};
use objnav::predictor::{frontier_cells, partial_fmm_predict, FrontierConfig, GtOracle};
use objnav::world::{
    generate_world, raycast_observe, AgentState, SensorParams, TargetCategory, WorldGenParams, DEFAULT_INFLATION,
};

const N: usize = 30;
const RES: f64 = 0.05;

// A 10x10 explored patch at cells 10..20 with a wall stub and a sealed pocket.
fn hand_map() -> SemanticMapStack {
    let mut m = SemanticMapStack::empty(N, (0, 0), RES);
    for y in 10..20 {
        for x in 10..20 {
            m.set(EXPLORED, x, y, 1.0);
        }
    }
    let walls = [(13, 12), (13, 13), (13, 14), (13, 15), (14, 15), (15, 15)];
    let pocket_ring = [(16, 11), (17, 11), (18, 11), (16, 12), (18, 12), (16, 13), (17, 13), (18, 13)];
    for &(x, y) in walls.iter().chain(&pocket_ring) {
        m.set(OBSTACLE, x, y, 1.0);
    }
    m
}

fn brute_frontier(explored: &Grid<bool>, obstacle: &Grid<bool>, reach: i64) -> Vec<usize> {
    let open = |x: i64, y: i64| {
        (-1..=1).all(|dy| (-1..=1).all(|dx| explored.try_get(x + dx, y + dy) == Some(&false)))
    };
    let mut out = Vec::new();
    for i in 0..explored.len() {
        let (x, y) = explored.coords(i);
        let (x, y) = (x as i64, y as i64);
        if explored[i]
            && !obstacle[i]
            && (-reach..=reach).any(|dy| (-reach..=reach).any(|dx| open(x + dx, y + dy)))
        {
            out.push(i);
        }
    }
    out
}

#[test]
fn frontier_matches_brute_force_enumeration() {
    let m = hand_map();
    let (explored, obstacle) = (m.explored_grid(), m.obstacle_grid());
    for reach in 0..4 {
        assert_eq!(frontier_cells(&explored, &obstacle, reach), brute_frontier(&explored, &obstacle, reach as i64));
    }
    assert!(!frontier_cells(&explored, &obstacle, 2).is_empty());
}

#[test]
fn frontier_field_matches_dijkstra_and_leaves_the_pocket_unreachable() {
    let m = hand_map();
    let cfg = FrontierConfig {
        inflation: 0.0,
        exclude_radius: 0.0,
        ..Default::default()
    };
    let pose = AgentState::at(15.5 * RES, 17.5 * RES, 0.0);
    let r = partial_fmm_predict(&m, TargetCategory::Bed, &pose, &cfg).unwrap();
    assert_eq!(r.nav.shape(), (LOCAL_SIZE, LOCAL_SIZE));

    let (explored, obstacle) = (m.explored_grid(), m.obstacle_grid());
    let seeds = brute_frontier(&explored, &obstacle, cfg.reach as i64);
    let blocked = Grid::from_fn(N, N, |x, y| *obstacle.get(x, y) || !explored.get(x, y));
    let oracle = dijkstra8(&blocked, &seeds, RES);
    let max = oracle.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max);

    // The agent sits on cell (15, 17), the centre of the local window.
    let (ox, oy) = (LOCAL_SIZE as i64 / 2 - 15, LOCAL_SIZE as i64 / 2 - 17);
    for ly in 0..LOCAL_SIZE {
        for lx in 0..LOCAL_SIZE {
            let nav = *r.nav.get(lx, ly);
            let (gx, gy) = (lx as i64 - ox, ly as i64 - oy);
            let want = oracle.try_get(gx, gy).copied().unwrap_or(f64::INFINITY);
            if !want.is_finite() {
                assert_eq!(nav, 1.0, "unreachable cell ({gx}, {gy}) got {nav}");
                continue;
            }
            let want = want / max;
            if want == 0.0 {
                assert_eq!(nav, 0.0);
            } else {
                // 10% plus the first-order corner error of at most (1 - 1/sqrt 2) cells,
                // on both fields and on the normalizing maximum.
                let slack = 0.1 * want + 2.0 * (1.0 - std::f64::consts::FRAC_1_SQRT_2) * RES / max;
                assert!((nav - want).abs() <= slack, "({gx}, {gy}): {nav} vs {want}");
            }
        }
    }
    // The sealed pocket.
    assert_eq!(*r.nav.get((17 + ox) as usize, (12 + oy) as usize), 1.0);
}

#[test]
fn frontier_costs_stay_inside_explored_free_space() {
    let w = generate_world(6, &WorldGenParams::default()).unwrap();
    let mut rng = XorShift::new(6);
    let free: Vec<usize> = (0..w.cells().len()).filter(|&i| w.cells()[i].is_free()).collect();
    for _ in 0..5 {
        let (cx, cy) = w.cells().coords(free[rng.below(free.len())]);
        let pose = AgentState::at((cx as f64 + 0.5) * RES, (cy as f64 + 0.5) * RES, 0.0);
        let mut global = SemanticMapStack::global_at(&pose, RES);
        for k in 0..4 {
            let look = AgentState::at(pose.x, pose.y, k as f64 * std::f64::consts::FRAC_PI_2);
            global.integrate_observation(&raycast_observe(&w, &look, &SensorParams::default()).unwrap());
        }
        let r = partial_fmm_predict(&global, TargetCategory::Plant, &pose, &FrontierConfig::default()).unwrap();
        let local = global.extract_local(&pose);
        for ly in 0..LOCAL_SIZE {
            for lx in 0..LOCAL_SIZE {
                let nav = *r.nav.get(lx, ly);
                assert!((0.0..=1.0).contains(&nav));
                if nav < 1.0 {
                    assert_eq!(local.get(EXPLORED, lx, ly), 1.0);
                    assert!(local.get(OBSTACLE, lx, ly) < 0.5 || nav == 0.0);
                }
            }
        }
        assert!(r.nav.iter().any(|&v| v < 1.0));
    }
}

#[test]
fn gt_field_descends_to_the_goal_everywhere() {
    let w = generate_world(3, &WorldGenParams::default()).unwrap();
    let target = TargetCategory::ALL
        .into_iter()
        .find(|t| !w.cells_of(t.class()).is_empty())
        .unwrap();
    let gt = GtOracle::new(&w, target, DEFAULT_INFLATION).unwrap();
    let d = gt.distance();
    let finite: Vec<usize> = (0..d.len()).filter(|&i| d[i].is_finite()).collect();
    let goal = w.cells_of(target.class());
    let mut rng = XorShift::new(3);
    for _ in 0..40 {
        let (mut x, mut y) = d.coords(finite[rng.below(finite.len())]);
        let mut steps = 0;
        while *d.get(x, y) > 0.0 {
            let here = *d.get(x, y);
            let (nx, ny, nd) = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .filter_map(|(dx, dy)| {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    d.try_get(nx, ny).map(|&v| (nx as usize, ny as usize, v))
                })
                .min_by(|a, b| a.2.total_cmp(&b.2))
                .unwrap();
            assert!(nd < here, "stuck at ({x}, {y})");
            (x, y) = (nx, ny);
            steps += 1;
            assert!(steps < d.len());
        }
        assert!(goal.contains(&d.index(x, y)));
    }
    let pose = AgentState::at(5.0, 5.0, 0.3);
    assert_eq!(gt.predict_at(&pose).nav, gt.predict_at(&pose).nav);
}
