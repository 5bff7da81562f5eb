use serde::{Deserialize, Serialize};

use super::check_shape;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Candidate moves for the local-policy agreement metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Neighborhood {
    /// Stay plus the four axis moves.
    Five,
    /// Stay plus all eight moves.
    Nine,
}

// Tie order: self, E, N, W, S, NE, NW, SW, SE. North is +y.
const ACTIONS: [(i64, i64); 9] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (-1, 0),
    (0, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
    (1, -1),
];

impl Neighborhood {
    fn actions(self) -> &'static [(i64, i64)] {
        match self {
            Neighborhood::Five => &ACTIONS[..5],
            Neighborhood::Nine => &ACTIONS[..],
        }
    }
}

fn best_action(cost: &Grid<f64>, x: usize, y: usize, actions: &[(i64, i64)]) -> usize {
    let mut best = 0;
    let mut best_cost = f64::INFINITY;
    for (k, &(dx, dy)) in actions.iter().enumerate() {
        let c = match cost.try_get(x as i64 + dx, y as i64 + dy) {
            Some(&c) if !c.is_nan() => c,
            _ => continue,
        };
        if c < best_cost {
            best = k;
            best_cost = c;
        }
    }
    best
}

/// Percentage of navigable cells whose cost-minimizing move agrees between
/// the two maps. Cells off the map are never chosen.
pub fn action_prediction_accuracy(
    gt: &Grid<f64>,
    pred: &Grid<f64>,
    navigable: &Grid<bool>,
    nbhd: Neighborhood,
) -> Result<f64> {
    check_shape(gt, pred)?;
    check_shape(gt, navigable)?;
    let actions = nbhd.actions();
    let mut total = 0usize;
    let mut correct = 0usize;
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            if !navigable.get(x, y) {
                continue;
            }
            total += 1;
            if best_action(gt, x, y, actions) == best_action(pred, x, y, actions) {
                correct += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::Empty("navigable cells".into()));
    }
    Ok(100.0 * correct as f64 / total as f64)
}

/// Scores for the {occupied, free} segmentation, all in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupancyMetrics {
    pub mpa: f64,
    pub mf1: f64,
    pub miou: f64,
    /// Indexed `[occupied, free]`.
    pub f1: [f64; 2],
    pub iou: [f64; 2],
    pub accuracy: [f64; 2],
}

/// Per-class F1, IoU and pixel accuracy for occupied (`true`) and free
/// (`false`) cells, macro-averaged. A class absent from both grids scores 100.
pub fn occupancy_metrics(gt: &Grid<bool>, pred: &Grid<bool>) -> Result<OccupancyMetrics> {
    check_shape(gt, pred)?;
    let mut f1 = [0.0; 2];
    let mut iou = [0.0; 2];
    let mut accuracy = [0.0; 2];
    for (k, class) in [true, false].into_iter().enumerate() {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (&g, &p) in gt.iter().zip(pred.iter()) {
            match (g == class, p == class) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        if tp + fp + fn_ == 0 {
            f1[k] = 1.0;
            iou[k] = 1.0;
            accuracy[k] = 1.0;
            continue;
        }
        f1[k] = 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
        iou[k] = tp as f64 / (tp + fp + fn_) as f64;
        accuracy[k] = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    }
    let pct = |a: [f64; 2]| a.map(|v| 100.0 * v);
    let (f1, iou, accuracy) = (pct(f1), pct(iou), pct(accuracy));
    Ok(OccupancyMetrics {
        mpa: (accuracy[0] + accuracy[1]) / 2.0,
        mf1: (f1[0] + f1[1]) / 2.0,
        miou: (iou[0] + iou[1]) / 2.0,
        f1,
        iou,
        accuracy,
    })
}
