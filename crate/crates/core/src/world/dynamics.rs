use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::grid::Grid;

/// Pose and current velocity of the differential-drive robot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    /// Heading in `[-pi, pi)`.
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
}

impl AgentState {
    pub fn at(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
            v: 0.0,
            omega: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Control {
    pub v: f64,
    pub omega: f64,
}

impl Control {
    pub const ZERO: Control = Control { v: 0.0, omega: 0.0 };

    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityLimits {
    pub v_min: f64,
    pub v_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl Default for VelocityLimits {
    fn default() -> Self {
        Self {
            v_min: 0.0,
            v_max: 1.0,
            omega_min: -1.0,
            omega_max: 1.0,
        }
    }
}

impl VelocityLimits {
    pub fn clamp(&self, u: Control) -> Control {
        Control {
            v: u.v.clamp(self.v_min, self.v_max),
            omega: u.omega.clamp(self.omega_min, self.omega_max),
        }
    }

    pub fn contains(&self, u: Control) -> bool {
        (self.v_min..=self.v_max).contains(&u.v) && (self.omega_min..=self.omega_max).contains(&u.omega)
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let a = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if a >= PI {
        -PI
    } else {
        a
    }
}

/// Exact constant-velocity unicycle integration over `dt`, ignoring obstacles.
pub fn integrate(s: &AgentState, u: Control, dt: f64) -> AgentState {
    let (sin0, cos0) = s.theta.sin_cos();
    let (x, y, theta) = if u.omega.abs() < 1e-9 {
        (
            s.x + u.v * cos0 * dt,
            s.y + u.v * sin0 * dt,
            s.theta + u.omega * dt,
        )
    } else {
        let theta1 = s.theta + u.omega * dt;
        let (sin1, cos1) = theta1.sin_cos();
        let r = u.v / u.omega;
        (s.x + r * (sin1 - sin0), s.y - r * (cos1 - cos0), theta1)
    };
    AgentState {
        x,
        y,
        theta: normalize_angle(theta),
        v: u.v,
        omega: u.omega,
    }
}

/// Advances the robot by `dt`; motion stops at the last collision-free point of
/// the arc and `v` is zeroed when `blocked` (cells of size `resolution`) is hit.
/// Cells outside the grid count as blocked.
pub fn step_dynamics(
    s: &AgentState,
    u: Control,
    dt: f64,
    blocked: &Grid<bool>,
    resolution: f64,
) -> AgentState {
    let next = integrate(s, u, dt);
    let travel = u.v.abs() * dt;
    if travel == 0.0 {
        return next;
    }
    let is_blocked = |x: f64, y: f64| {
        let cx = (x / resolution).floor() as i64;
        let cy = (y / resolution).floor() as i64;
        blocked.try_get(cx, cy).copied().unwrap_or(true)
    };
    let substeps = ((travel / (resolution * 0.25)).ceil() as usize).max(1);
    let mut last_free = (s.x, s.y);
    for i in 1..=substeps {
        let p = integrate(s, u, dt * i as f64 / substeps as f64);
        if is_blocked(p.x, p.y) {
            return AgentState {
                x: last_free.0,
                y: last_free.1,
                theta: next.theta,
                v: 0.0,
                omega: u.omega,
            };
        }
        last_free = (p.x, p.y);
    }
    next
}
