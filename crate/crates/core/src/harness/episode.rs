use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::metrics::{dts, smoothness, spl_term, Smoothness};
use crate::controller::{
    goal_reacher_update, mpc_step, ControlSequence, GoalReacherConfig, GoalStatus, MpcConfig, RandomPolicy,
};
use crate::costfield::{goal_distance, DEFAULT_THETA_OCC};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::mapping::SemanticMapStack;
use crate::predictor::{
    CostMapProvider, Endpoint, FrontierConfig, FrontierPredictor, GtOracle, PredictionContext, RemotePredictor,
    DEFAULT_TIMEOUT,
};
use crate::world::{
    inflation_cells, raycast_observe, step_dynamics, AgentState, Control, EpisodeConfig, Observation,
    SensorParams, TargetCategory, WorldGrid, DEFAULT_INFLATION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    /// Ground-truth cost map.
    Gt,
    /// Frontier exploration over the built map.
    Frontier,
    /// Uniform random controls until the target is mapped.
    Random,
    /// Out-of-process predictor.
    Remote,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Gt => "gt",
            AgentKind::Frontier => "frontier",
            AgentKind::Random => "random",
            AgentKind::Remote => "remote",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gt" => Ok(AgentKind::Gt),
            "frontier" => Ok(AgentKind::Frontier),
            "random" => Ok(AgentKind::Random),
            "remote" => Ok(AgentKind::Remote),
            _ => Err(Error::InvalidParam(format!("unknown agent `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub kind: AgentKind,
    /// Required for `Remote`: `host:port` or `cmd:program args`.
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    DEFAULT_TIMEOUT.as_millis() as u64
}

impl AgentSpec {
    pub fn new(kind: AgentKind) -> Self {
        Self {
            kind,
            endpoint: None,
            timeout_ms: default_timeout_ms(),
        }
    }

    pub fn remote(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: Some(endpoint.into()),
            ..Self::new(AgentKind::Remote)
        }
    }
}

/// Everything that shapes an episode besides the world and the episode itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub mpc: MpcConfig,
    pub goal: GoalReacherConfig,
    pub sensor: SensorParams,
    pub frontier: FrontierConfig,
    pub theta_occ: f64,
    /// Obstacle inflation in meters for control and collisions.
    pub inflation: f64,
    /// Keep the pose history in the result.
    pub record_trajectory: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mpc: MpcConfig::default(),
            goal: GoalReacherConfig::default(),
            sensor: SensorParams::default(),
            frontier: FrontierConfig::default(),
            theta_occ: DEFAULT_THETA_OCC,
            inflation: DEFAULT_INFLATION,
            record_trajectory: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub agent: String,
    pub world_seed: u64,
    pub episode: u64,
    pub target: TargetCategory,
    pub start: AgentState,
    pub final_pose: AgentState,
    pub success: bool,
    pub declared_done: bool,
    pub steps: usize,
    pub dt: f64,
    /// Meters travelled.
    pub path_length: f64,
    /// Geodesic length from the start to the success boundary.
    pub shortest_length: f64,
    /// Geodesic distance from the final pose to the nearest target cell.
    pub final_distance: f64,
    pub dts: f64,
    pub controls: Vec<Control>,
    pub trajectory: Vec<(f64, f64)>,
    pub failure: Option<String>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl EpisodeResult {
    pub fn spl_term(&self) -> f64 {
        spl_term(self.success, self.shortest_length, self.path_length)
    }

    pub fn smoothness(&self) -> Smoothness {
        smoothness(&self.controls, self.dt)
    }

    pub fn time_seconds(&self) -> f64 {
        self.steps as f64 * self.dt
    }
}

/// What an observer sees at each control step, before the control is chosen.
pub struct StepView<'a> {
    pub step: usize,
    pub pose: AgentState,
    pub global: &'a SemanticMapStack,
    pub local: &'a SemanticMapStack,
    pub observation: &'a Observation,
}

/// Geodesic distance in meters to the nearest cell of `target` over the true,
/// uninflated occupancy.
pub fn target_distance_field(world: &WorldGrid, target: TargetCategory) -> Result<Grid<f64>> {
    let goal = world.cells_of(target.class());
    if goal.is_empty() {
        return Err(Error::UnreachableGoal);
    }
    goal_distance(&world.occupancy(), &goal, 0, world.resolution())
}

pub fn field_at(field: &Grid<f64>, world: &WorldGrid, x: f64, y: f64) -> f64 {
    let (cx, cy) = world.cell_of(x, y);
    field.try_get(cx, cy).copied().unwrap_or(f64::INFINITY)
}

/// Deterministic 64-bit mix of two values.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn make_provider(
    spec: &AgentSpec,
    world: &WorldGrid,
    target: TargetCategory,
    cfg: &RunConfig,
) -> Result<Option<Box<dyn CostMapProvider>>> {
    Ok(match spec.kind {
        AgentKind::Gt => Some(Box::new(GtOracle::new(world, target, cfg.inflation)?)),
        AgentKind::Frontier => Some(Box::new(FrontierPredictor::new(cfg.frontier))),
        AgentKind::Random => None,
        AgentKind::Remote => {
            let ep = spec
                .endpoint
                .as_deref()
                .ok_or_else(|| Error::InvalidParam("remote agent needs an endpoint".into()))?;
            let mut r = RemotePredictor::with_timeout(ep.parse::<Endpoint>()?, Duration::from_millis(spec.timeout_ms));
            r.connect()?;
            Some(Box::new(r))
        }
    })
}

pub fn run_episode(
    world: &WorldGrid,
    episode: &EpisodeConfig,
    episode_id: u64,
    agent: &AgentSpec,
    cfg: &RunConfig,
    seed: u64,
) -> Result<EpisodeResult> {
    run_episode_observed(world, episode, episode_id, agent, cfg, seed, &mut |_| Ok(()))
}

/// Runs one episode, calling `observer` at every control step. Setup errors
/// (missing target, bad start) are returned; failures during the episode are
/// recorded in the result.
pub fn run_episode_observed(
    world: &WorldGrid,
    episode: &EpisodeConfig,
    episode_id: u64,
    agent: &AgentSpec,
    cfg: &RunConfig,
    seed: u64,
    observer: &mut dyn FnMut(&StepView<'_>) -> Result<()>,
) -> Result<EpisodeResult> {
    let clock = Instant::now();
    let res = world.resolution();
    let truth = target_distance_field(world, episode.target)?;
    let blocked = world.inflated_occupancy(cfg.inflation);
    let (sx, sy) = world.cell_of(episode.start.x, episode.start.y);
    if blocked.try_get(sx, sy).copied().unwrap_or(true) {
        return Err(Error::InsideObstacle {
            x: episode.start.x,
            y: episode.start.y,
        });
    }
    let mut mpc = cfg.mpc;
    mpc.dt = episode.dt;
    let goal_cfg = GoalReacherConfig {
        inflation: cfg.inflation,
        ..cfg.goal
    };
    let infl = inflation_cells(cfg.inflation, res);

    let mut provider = make_provider(agent, world, episode.target, cfg)?;
    let mut random = RandomPolicy::new(mix_seed(seed, 0x5EED), mpc.limits);
    let mut seq = ControlSequence::zeros(mpc.horizon);
    let mut global = SemanticMapStack::global_at(&episode.start, res);
    let mut state = episode.start;
    let mut controls = Vec::new();
    let mut trajectory = vec![(state.x, state.y)];
    let mut path_length = 0.0;
    let mut declared_done = false;
    let mut failure = None;

    for t in 0..episode.max_steps {
        let obs = match raycast_observe(world, &state, &cfg.sensor) {
            Ok(o) => o,
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        };
        global.integrate_observation(&obs);
        let local = global.extract_local(&state);
        let status = goal_reacher_update(&local, episode.target, &state, &goal_cfg);
        if status.is_done() {
            declared_done = true;
            break;
        }
        let view = StepView {
            step: t,
            pose: state,
            global: &global,
            local: &local,
            observation: &obs,
        };
        if let Err(e) = observer(&view) {
            failure = Some(e.to_string());
            break;
        }
        let step_seed = mix_seed(seed, t as u64 + 1);
        let cmap = match status {
            GoalStatus::Active(c) => Some(*c),
            _ => match provider.as_mut() {
                Some(p) => {
                    let ctx = PredictionContext {
                        episode: episode_id,
                        step: t as u64,
                        target: episode.target,
                        pose: state,
                        global: &global,
                        local: &local,
                        observation: &obs,
                    };
                    match p
                        .predict(&ctx)
                        .and_then(|r| r.to_costmap(&local, cfg.theta_occ, infl))
                    {
                        Ok(c) => Some(c),
                        Err(e) => {
                            failure = Some(format!("{} provider: {e}", p.name()));
                            break;
                        }
                    }
                }
                None => None,
            },
        };
        let u = match cmap {
            Some(c) => match mpc_step(&state, &seq, &c, &mpc, step_seed) {
                Ok((u, next)) => {
                    seq = next;
                    u
                }
                Err(e) => {
                    failure = Some(format!("controller: {e}"));
                    break;
                }
            },
            None => random.next_control(),
        };
        let next = step_dynamics(&state, u, episode.dt, &blocked, res);
        path_length += (next.x - state.x).hypot(next.y - state.y);
        state = next;
        controls.push(u);
        if cfg.record_trajectory {
            trajectory.push((state.x, state.y));
        }
    }

    let final_distance = field_at(&truth, world, state.x, state.y);
    let start_distance = field_at(&truth, world, episode.start.x, episode.start.y);
    let success = declared_done && final_distance <= episode.success_distance;
    if !cfg.record_trajectory {
        trajectory.clear();
    }
    Ok(EpisodeResult {
        agent: agent.kind.name().to_string(),
        world_seed: episode.world_seed,
        episode: episode_id,
        target: episode.target,
        start: episode.start,
        final_pose: state,
        success,
        declared_done,
        steps: controls.len(),
        dt: episode.dt,
        path_length,
        shortest_length: dts(start_distance, episode.success_distance),
        final_distance,
        dts: dts(final_distance, episode.success_distance),
        controls,
        trajectory,
        failure,
        wall_time: clock.elapsed(),
    })
}
