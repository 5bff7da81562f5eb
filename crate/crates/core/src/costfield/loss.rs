use serde::{Deserialize, Serialize};

use super::check_shape;
use crate::error::{Error, Result};
use crate::grid::Grid;

const PROB_EPS: f64 = 1e-7;
const GRAD_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub occ: f64,
    pub cost: f64,
    pub dir: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            occ: 1.0,
            cost: 1.5,
            dir: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub occ: f64,
    pub cost: f64,
    pub dir: f64,
}

impl LossBreakdown {
    pub fn total(&self, w: &LossWeights) -> f64 {
        w.occ * self.occ + w.cost * self.cost + w.dir * self.dir
    }
}

/// Mean binary cross entropy over all cells; predictions are clamped to
/// `[1e-7, 1 - 1e-7]`.
pub fn occupancy_loss(gt: &Grid<f64>, pred: &Grid<f64>) -> Result<f64> {
    check_shape(gt, pred)?;
    let sum: f64 = gt
        .iter()
        .zip(pred.iter())
        .map(|(&c, &p)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            -(c * p.ln() + (1.0 - c) * (1.0 - p).ln())
        })
        .sum();
    Ok(sum / gt.len() as f64)
}

/// L1 navigation-cost error on free cells, averaged over *all* cells.
pub fn costmap_loss(gt_nav: &Grid<f64>, pred_nav: &Grid<f64>, gt_occ: &Grid<f64>) -> Result<f64> {
    check_shape(gt_nav, pred_nav)?;
    check_shape(gt_nav, gt_occ)?;
    let mut sum = 0.0;
    for i in 0..gt_nav.len() {
        let free = 1.0 - gt_occ[i];
        if free > 0.0 {
            sum += (gt_nav[i] - pred_nav[i]).abs() * free;
        }
    }
    Ok(sum / gt_nav.len() as f64)
}

/// Per-cell finite-difference gradient with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub gx: Grid<f64>,
    pub gy: Grid<f64>,
    pub valid: Grid<bool>,
}

/// Central differences along x (columns) and y (rows), one-sided at the map
/// border. A cell is invalid when it or any cell of its stencil is occupied
/// (`occ >= 0.5`) or non-finite.
pub fn gradient_field(field: &Grid<f64>, occ: &Grid<f64>) -> Result<GradientField> {
    check_shape(field, occ)?;
    let (w, h) = (field.width(), field.height());
    let usable = |x: usize, y: usize| *occ.get(x, y) < 0.5 && field.get(x, y).is_finite();
    let mut gx = Grid::filled(w, h, 0.0);
    let mut gy = Grid::filled(w, h, 0.0);
    let mut valid = Grid::filled(w, h, false);
    // Derivative along one axis given the stencil endpoints and spacing.
    let diff = |lo: (usize, usize), hi: (usize, usize), span: f64| -> Option<f64> {
        (usable(lo.0, lo.1) && usable(hi.0, hi.1)).then(|| (field.get(hi.0, hi.1) - field.get(lo.0, lo.1)) / span)
    };
    for y in 0..h {
        for x in 0..w {
            if !usable(x, y) || w < 2 || h < 2 {
                continue;
            }
            let dx = match (x > 0, x + 1 < w) {
                (true, true) => diff((x - 1, y), (x + 1, y), 2.0),
                (false, true) => diff((x, y), (x + 1, y), 1.0),
                (true, false) => diff((x - 1, y), (x, y), 1.0),
                (false, false) => None,
            };
            let dy = match (y > 0, y + 1 < h) {
                (true, true) => diff((x, y - 1), (x, y + 1), 2.0),
                (false, true) => diff((x, y), (x, y + 1), 1.0),
                (true, false) => diff((x, y - 1), (x, y), 1.0),
                (false, false) => None,
            };
            if let (Some(dx), Some(dy)) = (dx, dy) {
                gx.set(x, y, dx);
                gy.set(x, y, dy);
                valid.set(x, y, true);
            }
        }
    }
    Ok(GradientField { gx, gy, valid })
}

/// Mean of `1 - cos(angle(g, g_hat))` over free cells, normalized by the full
/// cell count. Cells where either gradient is invalid or shorter than 1e-8
/// contribute zero.
pub fn gradient_direction_loss(gt_nav: &Grid<f64>, pred_nav: &Grid<f64>, gt_occ: &Grid<f64>) -> Result<f64> {
    check_shape(gt_nav, pred_nav)?;
    check_shape(gt_nav, gt_occ)?;
    if gt_nav.width() < 3 || gt_nav.height() < 3 {
        return Err(Error::InvalidParam("gradient loss needs at least a 3x3 grid".into()));
    }
    let g = gradient_field(gt_nav, gt_occ)?;
    let p = gradient_field(pred_nav, gt_occ)?;
    let mut sum = 0.0;
    for i in 0..gt_nav.len() {
        if !(g.valid[i] && p.valid[i]) {
            continue;
        }
        let (ax, ay, bx, by) = (g.gx[i], g.gy[i], p.gx[i], p.gy[i]);
        let (na, nb) = (ax.hypot(ay), bx.hypot(by));
        if na < GRAD_EPS || nb < GRAD_EPS {
            continue;
        }
        let cos = ((ax * bx + ay * by) / (na * nb)).clamp(-1.0, 1.0);
        sum += (1.0 - cos) * (1.0 - gt_occ[i]);
    }
    Ok(sum / gt_nav.len() as f64)
}

/// All three loss terms for one sample.
pub fn total_loss(
    gt_nav: &Grid<f64>,
    gt_occ: &Grid<f64>,
    pred_nav: &Grid<f64>,
    pred_occ: &Grid<f64>,
) -> Result<LossBreakdown> {
    Ok(LossBreakdown {
        occ: occupancy_loss(gt_occ, pred_occ)?,
        cost: costmap_loss(gt_nav, pred_nav, gt_occ)?,
        dir: gradient_direction_loss(gt_nav, pred_nav, gt_occ)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn g(w: usize, h: usize, v: Vec<f64>) -> Grid<f64> {
        Grid::from_vec(w, h, v).unwrap()
    }

    #[test]
    fn bce_cases() {
        let gt = g(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        assert!(occupancy_loss(&gt, &gt).unwrap() <= 1.2e-6);
        let half = Grid::filled(2, 2, 0.5);
        assert!((occupancy_loss(&gt, &half).unwrap() - LN_2).abs() < 1e-12);
        let one = g(1, 1, vec![1.0]);
        let quarter = g(1, 1, vec![0.25]);
        assert!((occupancy_loss(&one, &quarter).unwrap() - 1.386294).abs() < 1e-6);
        assert!(occupancy_loss(&one, &half).is_err());
    }

    #[test]
    fn l1_cases() {
        let free = Grid::filled(2, 2, 0.0);
        let gt = g(2, 2, vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(costmap_loss(&gt, &gt, &free).unwrap(), 0.0);
        let shifted = gt.map(|v| v + 0.1);
        assert!((costmap_loss(&gt, &shifted, &free).unwrap() - 0.1).abs() < 1e-9);

        let occ = g(2, 2, vec![1.0, 0.0, 1.0, 0.0]);
        let gt = g(2, 2, vec![f64::INFINITY, 0.5, f64::INFINITY, 0.5]);
        let pred = g(2, 2, vec![0.0, 0.7, 0.9, 0.9]);
        assert!((costmap_loss(&gt, &pred, &occ).unwrap() - 0.15).abs() < 1e-9);
    }

    #[test]
    fn gradient_validity_near_obstacles() {
        let f = Grid::from_fn(5, 5, |x, _| x as f64);
        let mut occ = Grid::filled(5, 5, 0.0);
        occ.set(2, 2, 1.0);
        let gf = gradient_field(&f, &occ).unwrap();
        assert!(!gf.valid.get(2, 2));
        assert!(!gf.valid.get(1, 2) && !gf.valid.get(3, 2) && !gf.valid.get(2, 1));
        assert!(*gf.valid.get(0, 0) && *gf.valid.get(4, 4));
        assert_eq!(*gf.gx.get(0, 0), 1.0);
        assert_eq!(*gf.gx.get(2, 0), 1.0);
    }

    #[test]
    fn direction_cases() {
        let free = Grid::filled(3, 3, 0.0);
        let gt = Grid::from_fn(3, 3, |x, _| x as f64);
        assert_eq!(gradient_direction_loss(&gt, &gt, &free).unwrap(), 0.0);
        let neg = gt.map(|v| -v);
        assert!((gradient_direction_loss(&gt, &neg, &free).unwrap() - 2.0).abs() < 1e-12);
        // Orthogonal: every one of the 9 valid cells contributes (1 - 0) / 9.
        let ortho = Grid::from_fn(3, 3, |_, y| y as f64);
        assert!((gradient_direction_loss(&gt, &ortho, &free).unwrap() - 1.0).abs() < 1e-12);
        let mut single = Grid::filled(3, 3, 1.0);
        single.set(1, 1, 0.0);
        let only_center = gradient_direction_loss(&gt, &ortho, &single).unwrap();
        assert!((only_center - 1.0 / 9.0).abs() < 1e-12 || only_center == 0.0);
    }

    #[test]
    fn total_is_weighted_sum() {
        let b = LossBreakdown {
            occ: 0.2,
            cost: 0.1,
            dir: 0.3,
        };
        assert!((b.total(&LossWeights::default()) - 0.65).abs() < 1e-12);
        let proj = LossWeights {
            occ: 0.0,
            cost: 1.0,
            dir: 0.0,
        };
        assert_eq!(b.total(&proj), 0.1);
        assert_eq!(LossBreakdown::default().total(&LossWeights::default()), 0.0);
    }
}
