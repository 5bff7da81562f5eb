mod common;

use std::path::Path;
use std::process::Command;

use common::dijkstra8;
use objnav::grid::Grid;
use objnav::harness::{
    episodes_csv, field_at, run_episode, run_suite, target_distance_field, AgentKind, AgentSpec, RunConfig,
    SuiteConfig, SuiteReport,
};
use objnav::world::{
    AgentState, CellClass, EpisodeConfig, SemanticClass, TargetCategory, WorldGenParams, WorldGrid, SUCCESS_DISTANCE,
};
use objnav::Error;

const RES: f64 = 0.05;

// A walled 60x60 room with a bed in the far corner and an optional wall
// across the middle, open only at its left end.
fn room(divider: bool) -> WorldGrid {
    let n = 60;
    let cells = Grid::from_fn(n, n, |x, y| {
        if x == 0 || y == 0 || x == n - 1 || y == n - 1 {
            CellClass::Obstacle
        } else if (44..54).contains(&x) && (46..54).contains(&y) {
            CellClass::Object(SemanticClass::Bed)
        } else if divider && y == 30 && x > 10 {
            CellClass::Obstacle
        } else {
            CellClass::Free
        }
    });
    WorldGrid::new(cells, RES, 99)
}

#[test]
fn gt_agent_reaches_a_bed_two_meters_away() {
    let w = room(false);
    let ep = EpisodeConfig::new(99, AgentState::at(0.6, 0.6, 0.0), TargetCategory::Bed);
    let r = run_episode(&w, &ep, 0, &AgentSpec::new(AgentKind::Gt), &RunConfig::default(), 1).unwrap();
    assert!(r.success, "{r:?}");
    assert!(r.declared_done && r.failure.is_none());
    assert!(r.final_distance <= SUCCESS_DISTANCE);
    assert!(r.path_length >= r.shortest_length);
    assert!(r.spl_term() > 0.5 && r.spl_term() <= 1.0);
}

#[test]
fn final_distance_is_geodesic_around_walls() {
    let w = room(true);
    let start = AgentState::at(2.5, 0.6, 0.0);
    let mut ep = EpisodeConfig::new(99, start, TargetCategory::Bed);
    ep.max_steps = 0;
    let r = run_episode(&w, &ep, 0, &AgentSpec::new(AgentKind::Random), &RunConfig::default(), 1).unwrap();
    assert!(!r.success && r.steps == 0);

    let goal = w.cells_of(SemanticClass::Bed);
    let mut blocked = w.occupancy();
    for &g in &goal {
        blocked[g] = false;
    }
    let oracle = dijkstra8(&blocked, &goal, RES);
    let (cx, cy) = w.cell_of(start.x, start.y);
    let want = *oracle.get(cx as usize, cy as usize);
    assert!((r.final_distance - want).abs() <= 0.1 * want, "{} vs {want}", r.final_distance);

    let euclid = goal
        .iter()
        .map(|&g| {
            let (gx, gy) = w.cells().coords(g);
            let (x, y) = w.cell_center(gx, gy);
            (x - start.x).hypot(y - start.y)
        })
        .fold(f64::INFINITY, f64::min);
    assert!(r.final_distance > 2.0 * euclid, "{} vs {euclid}", r.final_distance);
    assert_eq!(r.dts, (r.final_distance - SUCCESS_DISTANCE).max(0.0));

    let field = target_distance_field(&w, TargetCategory::Bed).unwrap();
    assert_eq!(field_at(&field, &w, start.x, start.y), r.final_distance);
}

#[test]
fn missing_target_or_bad_start_is_a_setup_error() {
    let w = room(false);
    let ep = EpisodeConfig::new(99, AgentState::at(0.6, 0.6, 0.0), TargetCategory::Sink);
    let spec = AgentSpec::new(AgentKind::Gt);
    assert!(matches!(run_episode(&w, &ep, 0, &spec, &RunConfig::default(), 1), Err(Error::UnreachableGoal)));
    let ep = EpisodeConfig::new(99, AgentState::at(0.01, 0.01, 0.0), TargetCategory::Bed);
    assert!(matches!(
        run_episode(&w, &ep, 0, &spec, &RunConfig::default(), 1),
        Err(Error::InsideObstacle { .. })
    ));
}

fn small_suite(worlds: u64, episodes: usize) -> SuiteConfig {
    SuiteConfig {
        world_seeds: (1..=worlds).collect(),
        episodes_per_world: episodes,
        ..SuiteConfig::default()
    }
}

fn check_results(report: &SuiteReport, results: &[objnav::harness::EpisodeResult]) {
    assert!(report.spl <= report.sr + 1e-12);
    for r in results {
        assert!(r.spl_term() <= if r.success { 1.0 } else { 0.0 });
        let walked: f64 = r.trajectory.windows(2).map(|p| (p[1].0 - p[0].0).hypot(p[1].1 - p[0].1)).sum();
        assert!((walked - r.path_length).abs() <= 1e-9);
        assert_eq!(r.trajectory.len(), r.steps + 1);
        assert_eq!(r.dts, (r.final_distance - SUCCESS_DISTANCE).max(0.0));
    }
    let again = SuiteReport::from_results(&report.agent, results, report.config.clone()).unwrap();
    assert_eq!(&again, report);
}

#[test]
fn agents_are_ordered_on_a_small_suite() {
    let cfg = small_suite(2, 10);
    let run = |k| run_suite(&cfg, &AgentSpec::new(k)).unwrap();
    let (gt, gt_res) = run(AgentKind::Gt);
    let (fr, fr_res) = run(AgentKind::Frontier);
    let (rnd, rnd_res) = run(AgentKind::Random);
    check_results(&gt, &gt_res);
    check_results(&fr, &fr_res);
    check_results(&rnd, &rnd_res);
    assert!(gt.sr >= fr.sr, "gt {} frontier {}", gt.sr, fr.sr);
    assert!(gt.sr > rnd.sr, "gt {} random {}", gt.sr, rnd.sr);
    assert_eq!(gt.episodes, 20);
    // Same worlds, starts and targets for every agent.
    for (a, b) in gt_res.iter().zip(&rnd_res) {
        assert_eq!((a.world_seed, a.episode, a.target, a.start), (b.world_seed, b.episode, b.target, b.start));
    }
}

#[test]
fn reruns_produce_identical_csv() {
    let cfg = small_suite(1, 4);
    for k in [AgentKind::Gt, AgentKind::Frontier] {
        let (_, a) = run_suite(&cfg, &AgentSpec::new(k)).unwrap();
        let (_, b) = run_suite(&cfg, &AgentSpec::new(k)).unwrap();
        assert_eq!(episodes_csv(&a).unwrap(), episodes_csv(&b).unwrap());
    }
}

#[test]
fn degenerate_suites_are_rejected() {
    let spec = AgentSpec::new(AgentKind::Random);
    let mut cfg = small_suite(1, 1);
    cfg.world_seeds.clear();
    assert!(matches!(run_suite(&cfg, &spec), Err(Error::Empty(_))));
    let mut cfg = small_suite(1, 0);
    assert!(matches!(run_suite(&cfg, &spec), Err(Error::Empty(_))));
    cfg.episodes_per_world = 1;
    cfg.world_seeds = vec![3, 4, 3];
    assert!(matches!(run_suite(&cfg, &spec), Err(Error::DuplicateSeed(3))));
    assert!(SuiteReport::from_results("x", &[], serde_json::Value::Null).is_err());
}

fn objnav(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_objnav")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "objnav {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cli_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let world = d.join("world.json");
    objnav(&["gen-world", "--seed", "2", "--out", s(&world)]);
    let w = WorldGrid::load(&world).unwrap();
    assert_eq!(w.seed(), 2);
    assert_eq!((w.width(), w.height()), (WorldGenParams::default().width, WorldGenParams::default().height));

    let result = d.join("run.json");
    let png = d.join("run.png");
    let line = objnav(&[
        "run", "--world", s(&world), "--agent", "gt", "--max-steps", "40", "--out", s(&result), "--render", s(&png),
    ]);
    assert!(line.starts_with("agent=gt"));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    assert!(r["steps"].as_u64().unwrap() <= 40);
    assert!(std::fs::metadata(&png).unwrap().len() > 0);

    let suite = d.join("suite.json");
    std::fs::write(&suite, r#"{"world_seeds": [1], "episodes_per_world": 2, "max_steps": 30}"#).unwrap();
    let nav = d.join("nav");
    objnav(&["eval-nav", "--agent", "random", "--suite", s(&suite), "--out", s(&nav), "--render"]);
    let csv = std::fs::read_to_string(nav.join("episodes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(nav.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["episodes"], 2);
    assert!(std::fs::read_dir(nav.join("renders")).unwrap().count() == 2);

    let data = d.join("data");
    objnav(&[
        "collect", "--split", "val", "--seeds", "201", "--episodes-per-world", "1", "--max-steps", "40", "--out", s(&data),
    ]);
    let split = data.join("val");
    assert!(split.join("manifest.json").exists());
    let scores = d.join("scores.csv");
    objnav(&["eval-pred", "--data", s(&split), "--predictor", "labels", "--out", s(&scores)]);
    let rows = std::fs::read_to_string(&scores).unwrap();
    assert!(rows.lines().count() >= 2, "{rows}");
}
