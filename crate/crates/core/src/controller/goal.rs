use serde::{Deserialize, Serialize};

use crate::costfield::{goal_distance, normalize_costs, CostMap, DEFAULT_THETA_OCC};
use crate::error::Error;
use crate::mapping::{goal_mask, SemanticMapStack, DEFAULT_MIN_REGION};
use crate::world::{inflation_cells, AgentState, TargetCategory, DEFAULT_INFLATION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GoalReacherConfig {
    /// Done threshold on the normalized goal cost.
    pub theta_cost: f64,
    /// Meters that a goal cost of 1.0 stands for in the done test.
    pub cost_scale: f64,
    pub min_region: usize,
    /// Obstacle inflation in meters.
    pub inflation: f64,
}

impl Default for GoalReacherConfig {
    fn default() -> Self {
        Self {
            theta_cost: 0.2,
            cost_scale: 4.75,
            min_region: DEFAULT_MIN_REGION,
            inflation: DEFAULT_INFLATION,
        }
    }
}

impl GoalReacherConfig {
    /// Geodesic distance to the goal below which the agent declares done.
    pub fn done_distance(&self) -> f64 {
        self.theta_cost * self.cost_scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GoalStatus {
    /// Target not seen, or not reachable through the mapped space.
    Inactive,
    /// Target seen; steer with this cost map.
    Active(Box<CostMap>),
    Done,
}

impl GoalStatus {
    pub fn is_done(&self) -> bool {
        matches!(self, GoalStatus::Done)
    }
}

/// Runs the goal reacher on a local map window centered on the agent.
/// Unexplored cells count as traversable.
pub fn goal_reacher_update(
    local: &SemanticMapStack,
    target: TargetCategory,
    state: &AgentState,
    cfg: &GoalReacherConfig,
) -> GoalStatus {
    let mask = goal_mask(local, target, cfg.min_region);
    if mask.is_empty() {
        return GoalStatus::Inactive;
    }
    let occupied = local.obstacle_grid();
    let res = local.resolution();
    let dist = match goal_distance(&occupied, &mask.cells(), inflation_cells(cfg.inflation, res), res) {
        Ok(d) => d,
        Err(Error::UnreachableGoal) | Err(Error::Empty(_)) => return GoalStatus::Inactive,
        Err(e) => {
            log::warn!("goal reacher: {e}");
            return GoalStatus::Inactive;
        }
    };
    let (ax, ay) = local.cell_of_pose(state);
    let here = dist.try_get(ax, ay).copied().unwrap_or(f64::INFINITY);
    if !here.is_finite() {
        return GoalStatus::Inactive;
    }
    if here <= cfg.done_distance() {
        return GoalStatus::Done;
    }
    let occ = occupied.map(|&o| if o { 1.0 } else { 0.0 });
    match CostMap::from_prediction(
        normalize_costs(&dist),
        occ,
        DEFAULT_THETA_OCC,
        inflation_cells(cfg.inflation, res),
        local.origin(),
        res,
    ) {
        Ok(m) => GoalStatus::Active(Box::new(m)),
        Err(_) => GoalStatus::Inactive,
    }
}
