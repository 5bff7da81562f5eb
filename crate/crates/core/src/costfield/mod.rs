//! Geodesic cost maps, their fusion with occupancy, the cost-map training
//! losses and the prediction-quality metrics.

mod fmm;
mod loss;
mod metrics;

pub use fmm::fmm_distance;
pub use loss::{
    costmap_loss, gradient_direction_loss, gradient_field, occupancy_loss, total_loss, GradientField,
    LossBreakdown, LossWeights,
};
pub use metrics::{action_prediction_accuracy, occupancy_metrics, Neighborhood, OccupancyMetrics};

use crate::error::{Error, Result};
use crate::grid::{dilate, Grid};

pub const DEFAULT_THETA_OCC: f64 = 0.5;
/// Cost of occupied or off-map cells on the normalized scale.
pub const OBSTACLE_COST: f64 = 1.0;

/// Navigation cost, occupancy probability and their fusion over one window.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMap {
    /// Navigation cost; `inf` marks unreachable cells when not normalized.
    pub nav: Grid<f64>,
    /// Occupancy probability in `[0, 1]`.
    pub occ: Grid<f64>,
    /// `nav` with the thresholded occupancy mask overlaid at `obstacle_cost`.
    pub fused: Grid<f64>,
    /// Cells a rollout may not enter without being written off.
    pub blocked: Grid<bool>,
    pub normalized: bool,
    /// World coordinates of the corner of cell (0, 0).
    pub origin: (f64, f64),
    pub resolution: f64,
    pub obstacle_cost: f64,
}

impl CostMap {
    /// Fuses `nav` (already normalized) with `occ`, dilating the thresholded
    /// occupancy by `inflation_cells` before overlaying it.
    pub fn from_prediction(
        nav: Grid<f64>,
        occ: Grid<f64>,
        theta_occ: f64,
        inflation_cells: usize,
        origin: (f64, f64),
        resolution: f64,
    ) -> Result<Self> {
        check_shape(&nav, &occ)?;
        let mask = dilate(&occ.map(|&p| p >= theta_occ), inflation_cells);
        let fused = Grid::from_fn(nav.width(), nav.height(), |x, y| {
            if *mask.get(x, y) {
                OBSTACLE_COST
            } else {
                *nav.get(x, y)
            }
        });
        Ok(Self {
            nav,
            occ,
            fused,
            blocked: mask,
            normalized: true,
            origin,
            resolution,
            obstacle_cost: OBSTACLE_COST,
        })
    }

    pub fn width(&self) -> usize {
        self.fused.width()
    }

    pub fn height(&self) -> usize {
        self.fused.height()
    }

    /// Cell under world point `(x, y)`.
    #[inline]
    pub fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        (
            floor_i64((x - self.origin.0) / self.resolution),
            floor_i64((y - self.origin.1) / self.resolution),
        )
    }

    /// Fused cost at a world point; off-map points cost `obstacle_cost`.
    #[inline]
    pub fn cost_at(&self, x: f64, y: f64) -> f64 {
        let (cx, cy) = self.cell_of(x, y);
        match self.fused.try_get(cx, cy) {
            Some(&c) if c.is_finite() => c,
            _ => self.obstacle_cost,
        }
    }

    /// Whether world point `(x, y)` lies on a blocked cell. Off-map points
    /// are not blocked.
    #[inline]
    pub fn blocked_at(&self, x: f64, y: f64) -> bool {
        let (cx, cy) = self.cell_of(x, y);
        self.blocked.try_get(cx, cy).copied().unwrap_or(false)
    }

    /// Uniform map, handy for tests and degenerate predictors.
    pub fn uniform(width: usize, height: usize, value: f64, origin: (f64, f64), resolution: f64) -> Self {
        let nav = Grid::filled(width, height, value);
        Self {
            occ: Grid::filled(width, height, 0.0),
            fused: nav.clone(),
            blocked: Grid::filled(width, height, false),
            nav,
            normalized: true,
            origin,
            resolution,
            obstacle_cost: OBSTACLE_COST,
        }
    }
}

// `f64::floor` is a libm call on baseline x86-64.
#[inline]
fn floor_i64(v: f64) -> i64 {
    let i = v as i64;
    if (i as f64) > v {
        i - 1
    } else {
        i
    }
}

pub(crate) fn check_shape<A, B>(a: &Grid<A>, b: &Grid<B>) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            expected: vec![a.height(), a.width()],
            actual: vec![b.height(), b.width()],
        })
    }
}

/// `1.0` where `occ_pred >= theta_occ`, otherwise the navigation cost.
pub fn fuse_costmap(occ_pred: &Grid<f64>, nav_pred: &Grid<f64>, theta_occ: f64) -> Result<Grid<f64>> {
    check_shape(occ_pred, nav_pred)?;
    Ok(Grid::from_fn(nav_pred.width(), nav_pred.height(), |x, y| {
        if *occ_pred.get(x, y) >= theta_occ {
            OBSTACLE_COST
        } else {
            *nav_pred.get(x, y)
        }
    }))
}

/// Scales finite costs by the largest finite cost; unreachable cells map to 1.
pub fn normalize_costs(dist: &Grid<f64>) -> Grid<f64> {
    let max = dist
        .iter()
        .copied()
        .filter(|c| c.is_finite())
        .fold(0.0f64, f64::max);
    dist.map(|&c| {
        if !c.is_finite() {
            1.0
        } else if max > 0.0 {
            c / max
        } else {
            0.0
        }
    })
}

/// Geodesic distance to `goal` cells with every other obstacle dilated by
/// `inflation_cells`. Goal cells act as free seeds even when occupied.
pub fn goal_distance(
    occupied: &Grid<bool>,
    goal: &[usize],
    inflation_cells: usize,
    resolution: f64,
) -> Result<Grid<f64>> {
    let mut others = occupied.clone();
    for &g in goal {
        if g < others.len() {
            others[g] = false;
        }
    }
    let mut blocked = dilate(&others, inflation_cells);
    for &g in goal {
        if g < blocked.len() {
            blocked[g] = false;
        }
    }
    fmm_distance(&blocked, goal, resolution)
}

/// Copies the `width x height` window whose cell (0, 0) is source cell
/// `(x0, y0)`; cells outside the source take `fill`.
pub fn crop<T: Clone>(src: &Grid<T>, x0: i64, y0: i64, width: usize, height: usize, fill: T) -> Grid<T> {
    Grid::from_fn(width, height, |x, y| {
        src.try_get(x0 + x as i64, y0 + y as i64)
            .cloned()
            .unwrap_or_else(|| fill.clone())
    })
}
