//! Cost-map providers. Every provider turns the agent's current map (and, for
//! the oracle, the true world) into a normalized navigation cost and an
//! occupancy probability over the local window.

mod echo;
mod frontier;
mod gt;
pub mod protocol;
mod remote;

pub use echo::{serve_echo, spawn_tcp_echo, EchoMode};
pub use frontier::{frontier_cells, partial_fmm_predict, FrontierConfig, FrontierPredictor};
pub use gt::{gt_oracle_predict, GtOracle};
pub use remote::{build_request, Endpoint, RemotePredictor, DEFAULT_TIMEOUT};

use std::time::Duration;

use crate::costfield::{check_shape, CostMap};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::mapping::{orientation_bin, SemanticMapStack, LOCAL_SIZE};
use crate::world::{AgentState, Observation, TargetCategory};

/// Everything a provider may look at for one query.
#[derive(Debug, Clone, Copy)]
pub struct PredictionContext<'a> {
    pub episode: u64,
    pub step: u64,
    pub target: TargetCategory,
    pub pose: AgentState,
    /// Full-resolution global map.
    pub global: &'a SemanticMapStack,
    /// Local window centered on the agent.
    pub local: &'a SemanticMapStack,
    pub observation: &'a Observation,
}

impl PredictionContext<'_> {
    pub fn orientation_bin(&self) -> u8 {
        orientation_bin(self.pose.theta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResponse {
    /// Normalized navigation cost in `[0, 1]`.
    pub nav: Grid<f64>,
    /// Occupancy probability in `[0, 1]`.
    pub occ: Grid<f64>,
    pub latency: Duration,
}

impl PredictionResponse {
    /// Checks shape, finiteness and range.
    pub fn validate(&self) -> Result<()> {
        check_shape(&self.nav, &self.occ)?;
        if self.nav.shape() != (LOCAL_SIZE, LOCAL_SIZE) {
            return Err(Error::ShapeMismatch {
                expected: vec![LOCAL_SIZE, LOCAL_SIZE],
                actual: vec![self.nav.height(), self.nav.width()],
            });
        }
        for (name, g) in [("nav", &self.nav), ("occ", &self.occ)] {
            if let Some(i) = g.iter().position(|v| !(0.0..=1.0).contains(v)) {
                let (x, y) = g.coords(i);
                return Err(Error::Protocol(format!("{name}[{y}][{x}] = {} outside [0, 1]", g[i])));
            }
        }
        Ok(())
    }

    /// Fused cost map over `local`'s footprint.
    pub fn to_costmap(&self, local: &SemanticMapStack, theta_occ: f64, inflation_cells: usize) -> Result<CostMap> {
        CostMap::from_prediction(
            self.nav.clone(),
            self.occ.clone(),
            theta_occ,
            inflation_cells,
            local.origin(),
            local.resolution(),
        )
    }
}

pub trait CostMapProvider {
    fn name(&self) -> &str;
    fn predict(&mut self, ctx: &PredictionContext<'_>) -> Result<PredictionResponse>;
}

/// World cell of the local window's corner for an agent at `pose`.
pub fn local_origin_cell(pose: &AgentState, resolution: f64) -> (i64, i64) {
    let half = (LOCAL_SIZE / 2) as i64;
    (
        (pose.x / resolution).floor() as i64 - half,
        (pose.y / resolution).floor() as i64 - half,
    )
}

/// Navigation cost of the local window: every cell costs 1.
pub(crate) fn max_cost_response(occ: Grid<f64>) -> PredictionResponse {
    PredictionResponse {
        nav: Grid::filled(occ.width(), occ.height(), 1.0),
        occ,
        latency: Duration::ZERO,
    }
}

pub(crate) fn obstacle_probability(local: &SemanticMapStack) -> Grid<f64> {
    let n = local.size();
    let ch = local.channel(crate::mapping::OBSTACLE);
    Grid::from_fn(n, n, |x, y| ch[y * n + x] as f64)
}
