use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::{mix_seed, run_episode, target_distance_field, AgentSpec, EpisodeResult, RunConfig};
use super::render::render_episode;
use crate::costfield::goal_distance;
use crate::error::{Error, Result};
use crate::world::{
    generate_world, inflation_cells, AgentState, EpisodeConfig, TargetCategory, WorldGenParams, WorldGrid,
    DEFAULT_DT, DEFAULT_MAX_STEPS, SUCCESS_DISTANCE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub world_seeds: Vec<u64>,
    pub episodes_per_world: usize,
    pub world: WorldGenParams,
    pub run: RunConfig,
    pub max_steps: usize,
    /// Starts closer than this (geodesic, meters) to the target are resampled.
    pub min_start_distance: f64,
    /// Salt for episode sampling and control noise.
    pub seed: u64,
    pub render: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            world_seeds: (1..=8).collect(),
            episodes_per_world: 40,
            world: WorldGenParams::default(),
            run: RunConfig::default(),
            max_steps: DEFAULT_MAX_STEPS,
            min_start_distance: 1.5,
            seed: 0,
            render: false,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.world_seeds.is_empty() || self.episodes_per_world == 0 {
            return Err(Error::Empty("suite has no episodes".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &s in &self.world_seeds {
            if !seen.insert(s) {
                return Err(Error::DuplicateSeed(s));
            }
        }
        Ok(())
    }
}

/// Samples `count` episodes in `world`: a random target present in the world
/// and a random start from which the robot can reach it.
pub fn sample_episodes(
    world: &WorldGrid,
    count: usize,
    seed: u64,
    max_steps: usize,
    min_start_distance: f64,
    inflation: f64,
) -> Result<Vec<EpisodeConfig>> {
    sample_from(world, &TargetCategory::ALL, count, seed, max_steps, min_start_distance, inflation)
}

/// `sample_episodes` restricted to one target category.
pub fn sample_target_episodes(
    world: &WorldGrid,
    target: TargetCategory,
    count: usize,
    seed: u64,
    max_steps: usize,
    min_start_distance: f64,
    inflation: f64,
) -> Result<Vec<EpisodeConfig>> {
    sample_from(world, &[target], count, seed, max_steps, min_start_distance, inflation)
}

fn sample_from(
    world: &WorldGrid,
    targets: &[TargetCategory],
    count: usize,
    seed: u64,
    max_steps: usize,
    min_start_distance: f64,
    inflation: f64,
) -> Result<Vec<EpisodeConfig>> {
    let res = world.resolution();
    let occ = world.occupancy();
    let blocked = world.inflated_occupancy(inflation);
    let r = inflation_cells(inflation, res);
    // (target, candidate start cells)
    let mut options: Vec<(TargetCategory, Vec<usize>)> = Vec::new();
    for &t in targets {
        let goal = world.cells_of(t.class());
        if goal.is_empty() {
            continue;
        }
        let truth = target_distance_field(world, t)?;
        let Ok(robot) = goal_distance(&occ, &goal, r, res) else {
            continue;
        };
        let starts: Vec<usize> = (0..occ.len())
            .filter(|&i| !blocked[i] && robot[i].is_finite() && truth[i] > min_start_distance)
            .collect();
        if !starts.is_empty() {
            options.push((t, starts));
        }
    }
    if options.is_empty() {
        return Err(Error::UnreachableGoal);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(world.seed(), seed));
    Ok((0..count)
        .map(|_| {
            let (target, starts) = &options[rng.random_range(0..options.len())];
            let cell = starts[rng.random_range(0..starts.len())];
            let (cx, cy) = occ.coords(cell);
            let (x, y) = world.cell_center(cx, cy);
            let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            EpisodeConfig {
                world_seed: world.seed(),
                start: AgentState::at(x, y, theta),
                target: *target,
                max_steps,
                dt: DEFAULT_DT,
                success_distance: SUCCESS_DISTANCE,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TargetSummary {
    pub episodes: usize,
    pub sr: f64,
    pub spl: f64,
    pub dts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub agent: String,
    pub episodes: usize,
    pub failures: usize,
    pub sr: f64,
    pub spl: f64,
    pub dts: f64,
    pub time_steps: f64,
    pub time_seconds: f64,
    pub acc_linear: f64,
    pub acc_angular: f64,
    pub jerk_linear: f64,
    pub jerk_angular: f64,
    pub per_target: BTreeMap<String, TargetSummary>,
    pub config: serde_json::Value,
}

impl SuiteReport {
    pub fn from_results(agent: &str, results: &[EpisodeResult], config: serde_json::Value) -> Result<Self> {
        if results.is_empty() {
            return Err(Error::Empty("episode results".into()));
        }
        let n = results.len() as f64;
        let mean = |f: &dyn Fn(&EpisodeResult) -> f64| results.iter().map(f).sum::<f64>() / n;
        let mut per_target = BTreeMap::new();
        for t in TargetCategory::ALL {
            let sub: Vec<&EpisodeResult> = results.iter().filter(|r| r.target == t).collect();
            if sub.is_empty() {
                continue;
            }
            let m = sub.len() as f64;
            per_target.insert(
                t.name().to_string(),
                TargetSummary {
                    episodes: sub.len(),
                    sr: sub.iter().filter(|r| r.success).count() as f64 / m,
                    spl: sub.iter().map(|r| r.spl_term()).sum::<f64>() / m,
                    dts: sub.iter().map(|r| r.dts).sum::<f64>() / m,
                },
            );
        }
        Ok(Self {
            agent: agent.to_string(),
            episodes: results.len(),
            failures: results.iter().filter(|r| r.failure.is_some()).count(),
            sr: mean(&|r| if r.success { 1.0 } else { 0.0 }),
            spl: mean(&|r| r.spl_term()),
            dts: mean(&|r| r.dts),
            time_steps: mean(&|r| r.steps as f64),
            time_seconds: mean(&|r| r.time_seconds()),
            acc_linear: mean(&|r| r.smoothness().acc_linear),
            acc_angular: mean(&|r| r.smoothness().acc_angular),
            jerk_linear: mean(&|r| r.smoothness().jerk_linear),
            jerk_angular: mean(&|r| r.smoothness().jerk_angular),
            per_target,
            config,
        })
    }
}

/// Generates the suite's worlds and episodes, in order.
pub fn suite_episodes(cfg: &SuiteConfig) -> Result<Vec<(WorldGrid, Vec<EpisodeConfig>)>> {
    cfg.validate()?;
    cfg.world_seeds
        .iter()
        .map(|&s| {
            let w = generate_world(s, &cfg.world)?;
            let eps = sample_episodes(
                &w,
                cfg.episodes_per_world,
                cfg.seed,
                cfg.max_steps,
                cfg.min_start_distance,
                cfg.run.inflation,
            )?;
            Ok((w, eps))
        })
        .collect()
}

/// Runs every episode of the suite with one agent. Episodes that fail to set
/// up are recorded as failures and the suite continues.
pub fn run_suite(cfg: &SuiteConfig, agent: &AgentSpec) -> Result<(SuiteReport, Vec<EpisodeResult>)> {
    let worlds = suite_episodes(cfg)?;
    let jobs: Vec<(&WorldGrid, &EpisodeConfig, u64)> = worlds
        .iter()
        .flat_map(|(w, eps)| eps.iter().enumerate().map(move |(i, e)| (w, e, i as u64)))
        .collect();
    let results: Vec<EpisodeResult> = jobs
        .par_iter()
        .map(|&(w, e, i)| {
            let seed = mix_seed(mix_seed(cfg.seed, w.seed()), i);
            run_episode(w, e, i, agent, &cfg.run, seed).unwrap_or_else(|err| setup_failure(agent, e, i, err))
        })
        .collect();
    let config = serde_json::json!({ "suite": cfg, "agent": agent });
    let report = SuiteReport::from_results(agent.kind.name(), &results, config)?;
    Ok((report, results))
}

fn setup_failure(agent: &AgentSpec, e: &EpisodeConfig, id: u64, err: Error) -> EpisodeResult {
    EpisodeResult {
        agent: agent.kind.name().to_string(),
        world_seed: e.world_seed,
        episode: id,
        target: e.target,
        start: e.start,
        final_pose: e.start,
        success: false,
        declared_done: false,
        steps: 0,
        dt: e.dt,
        path_length: 0.0,
        shortest_length: 0.0,
        final_distance: f64::INFINITY,
        dts: f64::INFINITY,
        controls: Vec::new(),
        trajectory: Vec::new(),
        failure: Some(err.to_string()),
        wall_time: Default::default(),
    }
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    agent: &'a str,
    world_seed: u64,
    episode: u64,
    target: &'a str,
    start_x: String,
    start_y: String,
    start_theta: String,
    success: bool,
    declared_done: bool,
    steps: usize,
    time_s: String,
    path_length: String,
    shortest_length: String,
    spl: String,
    final_distance: String,
    dts: String,
    acc_linear: String,
    acc_angular: String,
    jerk_linear: String,
    jerk_angular: String,
    failure: &'a str,
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

/// CSV with one row per episode.
pub fn episodes_csv(results: &[EpisodeResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in results {
        let s = r.smoothness();
        w.serialize(CsvRow {
            agent: &r.agent,
            world_seed: r.world_seed,
            episode: r.episode,
            target: r.target.name(),
            start_x: f6(r.start.x),
            start_y: f6(r.start.y),
            start_theta: f6(r.start.theta),
            success: r.success,
            declared_done: r.declared_done,
            steps: r.steps,
            time_s: f6(r.time_seconds()),
            path_length: f6(r.path_length),
            shortest_length: f6(r.shortest_length),
            spl: f6(r.spl_term()),
            final_distance: f6(r.final_distance),
            dts: f6(r.dts),
            acc_linear: f6(s.acc_linear),
            acc_angular: f6(s.acc_angular),
            jerk_linear: f6(s.jerk_linear),
            jerk_angular: f6(s.jerk_angular),
            failure: r.failure.as_deref().unwrap_or(""),
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Writes `summary.json`, `episodes.csv` and, when `worlds` is given,
/// `renders/*.png` into `dir`.
pub fn write_report(
    dir: &Path,
    report: &SuiteReport,
    results: &[EpisodeResult],
    worlds: Option<&[WorldGrid]>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(report)?)?;
    fs::write(dir.join("episodes.csv"), episodes_csv(results)?)?;
    if let Some(worlds) = worlds {
        let rdir = dir.join("renders");
        fs::create_dir_all(&rdir)?;
        for r in results {
            if let Some(w) = worlds.iter().find(|w| w.seed() == r.world_seed) {
                let img = render_episode(w, r);
                img.save(rdir.join(format!("{}_w{}_e{:03}.png", r.agent, r.world_seed, r.episode)))?;
            }
        }
    }
    Ok(())
}
