use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::Control;

/// Success weighted by normalized inverse path length, averaged.
/// Each item is `(success, shortest, path)`.
pub fn spl(items: &[(bool, f64, f64)]) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::Empty("episode results".into()));
    }
    let sum: f64 = items.iter().map(|&(s, l, p)| spl_term(s, l, p)).sum();
    Ok(sum / items.len() as f64)
}

pub fn spl_term(success: bool, shortest: f64, path: f64) -> f64 {
    if !success {
        return 0.0;
    }
    let denom = path.max(shortest);
    if denom <= 0.0 {
        1.0
    } else {
        shortest / denom
    }
}

/// Distance left to the success boundary.
pub fn dts(geodesic: f64, success_distance: f64) -> f64 {
    (geodesic - success_distance).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Smoothness {
    pub acc_linear: f64,
    pub acc_angular: f64,
    pub jerk_linear: f64,
    pub jerk_angular: f64,
}

/// Mean absolute first and second differences of the velocity history.
pub fn smoothness(history: &[Control], dt: f64) -> Smoothness {
    let v: Vec<f64> = history.iter().map(|u| u.v).collect();
    let w: Vec<f64> = history.iter().map(|u| u.omega).collect();
    Smoothness {
        acc_linear: mean_abs_diff(&v, 1) / dt,
        acc_angular: mean_abs_diff(&w, 1) / dt,
        jerk_linear: mean_abs_diff(&v, 2) / (dt * dt),
        jerk_angular: mean_abs_diff(&w, 2) / (dt * dt),
    }
}

fn mean_abs_diff(x: &[f64], order: usize) -> f64 {
    let mut d = x.to_vec();
    for _ in 0..order {
        d = d.windows(2).map(|p| p[1] - p[0]).collect();
    }
    if d.is_empty() {
        0.0
    } else {
        d.iter().map(|v| v.abs()).sum::<f64>() / d.len() as f64
    }
}
