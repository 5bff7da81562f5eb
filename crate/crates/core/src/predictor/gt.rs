use std::time::Instant;

use super::{local_origin_cell, CostMapProvider, PredictionContext, PredictionResponse};
use crate::costfield::{crop, goal_distance, normalize_costs};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::mapping::LOCAL_SIZE;
use crate::world::{inflation_cells, AgentState, TargetCategory, WorldGrid};

/// Privileged provider that reads the true world. The geodesic field to the
/// target is solved once over the whole world and cropped per query.
#[derive(Debug, Clone)]
pub struct GtOracle {
    distance: Grid<f64>,
    occupancy: Grid<f64>,
    resolution: f64,
}

impl GtOracle {
    /// Errors with `UnreachableGoal` when the world has no instance of `target`.
    pub fn new(world: &WorldGrid, target: TargetCategory, inflation: f64) -> Result<Self> {
        let goal = world.cells_of(target.class());
        if goal.is_empty() {
            return Err(Error::UnreachableGoal);
        }
        let occ = world.occupancy();
        let distance = goal_distance(&occ, &goal, inflation_cells(inflation, world.resolution()), world.resolution())?;
        Ok(Self {
            distance,
            occupancy: occ.map(|&o| if o { 1.0 } else { 0.0 }),
            resolution: world.resolution(),
        })
    }

    /// Geodesic distance field in meters over the whole world.
    pub fn distance(&self) -> &Grid<f64> {
        &self.distance
    }

    pub fn predict_at(&self, pose: &AgentState) -> PredictionResponse {
        let start = Instant::now();
        let (x0, y0) = local_origin_cell(pose, self.resolution);
        let dist = crop(&self.distance, x0, y0, LOCAL_SIZE, LOCAL_SIZE, f64::INFINITY);
        PredictionResponse {
            nav: normalize_costs(&dist),
            occ: crop(&self.occupancy, x0, y0, LOCAL_SIZE, LOCAL_SIZE, 1.0),
            latency: start.elapsed(),
        }
    }
}

impl CostMapProvider for GtOracle {
    fn name(&self) -> &str {
        "gt"
    }

    fn predict(&mut self, ctx: &PredictionContext<'_>) -> Result<PredictionResponse> {
        Ok(self.predict_at(&ctx.pose))
    }
}

/// One-shot oracle query.
pub fn gt_oracle_predict(
    world: &WorldGrid,
    target: TargetCategory,
    pose: &AgentState,
    inflation: f64,
) -> Result<PredictionResponse> {
    Ok(GtOracle::new(world, target, inflation)?.predict_at(pose))
}
