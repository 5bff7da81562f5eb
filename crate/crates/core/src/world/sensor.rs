use serde::{Deserialize, Serialize};

use super::{AgentState, CellClass, WorldGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorParams {
    /// Field of view in radians.
    pub fov: f64,
    pub ray_count: usize,
    /// Meters.
    pub max_range: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            fov: 90f64.to_radians(),
            ray_count: 120,
            max_range: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    /// World-frame direction.
    pub angle: f64,
    /// Distance to the first non-free cell, or `max_range` when nothing was hit.
    pub hit_distance: f64,
    pub hit_class: Option<CellClass>,
    pub hit_cell: Option<(usize, usize)>,
    /// Free cells traversed before the hit, in order.
    pub swept: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub pose: AgentState,
    pub max_range: f64,
    pub rays: Vec<Ray>,
}

impl Observation {
    pub fn depths(&self) -> Vec<f32> {
        self.rays.iter().map(|r| r.hit_distance as f32).collect()
    }

    /// Hit class ids per ray, 0 when the ray hit nothing.
    pub fn classes(&self) -> Vec<i32> {
        self.rays
            .iter()
            .map(|r| r.hit_class.map_or(0, |c| c.id() as i32))
            .collect()
    }
}

/// Casts `ray_count` rays across the field of view with a DDA grid walk.
/// Cells outside the world are treated as empty space.
pub fn raycast_observe(w: &WorldGrid, s: &AgentState, sp: &SensorParams) -> Result<Observation> {
    let (cx, cy) = w.cell_of(s.x, s.y);
    match w.class_at(cx, cy) {
        Some(CellClass::Free) => {}
        _ => return Err(Error::InsideObstacle { x: s.x, y: s.y }),
    }
    let n = sp.ray_count.max(1);
    let rays = (0..n)
        .map(|i| {
            let angle = if n == 1 {
                s.theta
            } else {
                s.theta - sp.fov / 2.0 + sp.fov * i as f64 / (n - 1) as f64
            };
            cast(w, s.x, s.y, angle, sp.max_range)
        })
        .collect();
    Ok(Observation {
        pose: *s,
        max_range: sp.max_range,
        rays,
    })
}

fn cast(w: &WorldGrid, x0: f64, y0: f64, angle: f64, max_range: f64) -> Ray {
    let res = w.resolution();
    let (dy, dx) = angle.sin_cos();
    let (mut cx, mut cy) = w.cell_of(x0, y0);
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    // Ray parameter (meters) at the next vertical / horizontal cell boundary.
    let boundary = |c: i64, step: i64, origin: f64, d: f64| -> (f64, f64) {
        if d.abs() < 1e-12 {
            return (f64::INFINITY, f64::INFINITY);
        }
        let edge = if step > 0 { (c + 1) as f64 * res } else { c as f64 * res };
        ((edge - origin) / d, res / d.abs())
    };
    let (mut t_max_x, t_delta_x) = boundary(cx, step_x, x0, dx);
    let (mut t_max_y, t_delta_y) = boundary(cy, step_y, y0, dy);

    let mut swept = Vec::new();
    let in_world = |x: i64, y: i64| w.class_at(x, y);
    if in_world(cx, cy).is_some() {
        swept.push((cx as usize, cy as usize));
    }
    loop {
        let t_entry = if t_max_x < t_max_y {
            cx += step_x;
            let t = t_max_x;
            t_max_x += t_delta_x;
            t
        } else {
            cy += step_y;
            let t = t_max_y;
            t_max_y += t_delta_y;
            t
        };
        if t_entry > max_range {
            break;
        }
        match in_world(cx, cy) {
            Some(CellClass::Free) => swept.push((cx as usize, cy as usize)),
            Some(class) => {
                return Ray {
                    angle,
                    hit_distance: t_entry.max(f64::MIN_POSITIVE),
                    hit_class: Some(class),
                    hit_cell: Some((cx as usize, cy as usize)),
                    swept,
                }
            }
            None => {}
        }
    }
    Ray {
        angle,
        hit_distance: max_range,
        hit_class: None,
        hit_cell: None,
        swept,
    }
}
