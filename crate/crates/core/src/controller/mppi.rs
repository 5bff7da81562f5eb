use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costfield::CostMap;
use crate::error::{Error, Result};
use crate::world::{integrate, AgentState, Control, VelocityLimits, DEFAULT_DT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpcConfig {
    pub horizon: usize,
    pub samples: usize,
    pub sigma: f64,
    pub mu: f64,
    /// Softmin temperature.
    pub lambda: f64,
    pub q_v: f64,
    pub q_omega: f64,
    pub dt: f64,
    pub limits: VelocityLimits,
    /// Also roll out a fixed set of turn-then-drive sequences each step.
    pub primitives: bool,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            horizon: 50,
            samples: 256,
            sigma: 0.35,
            mu: 0.0,
            lambda: 0.5,
            q_v: 0.1,
            q_omega: 0.05,
            dt: DEFAULT_DT,
            limits: VelocityLimits::default(),
            primitives: true,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParam(m.into()));
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        if self.samples == 0 {
            return bad("sample count must be at least 1");
        }
        if !(self.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        if !(self.lambda > 0.0) {
            return bad("lambda must be positive");
        }
        if !(self.q_v >= 0.0 && self.q_omega >= 0.0) {
            return bad("control-effort weights must be non-negative");
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        Ok(())
    }

    #[inline]
    pub fn effort(&self, u: Control) -> f64 {
        self.q_v * u.v * u.v + self.q_omega * u.omega * u.omega
    }
}

/// Noise batch laid out `[sample][step]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbations {
    pub samples: usize,
    pub horizon: usize,
    pub data: Vec<Control>,
}

impl Perturbations {
    pub fn zeros(samples: usize, horizon: usize) -> Self {
        Self {
            samples,
            horizon,
            data: vec![Control::ZERO; samples * horizon],
        }
    }

    #[inline]
    pub fn get(&self, k: usize, t: usize) -> Control {
        self.data[k * self.horizon + t]
    }

    #[inline]
    pub fn set(&mut self, k: usize, t: usize, e: Control) {
        self.data[k * self.horizon + t] = e;
    }

    pub fn sample(&self, k: usize) -> &[Control] {
        &self.data[k * self.horizon..(k + 1) * self.horizon]
    }
}

/// Nominal control sequence plus the diagnostics of its last update.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSequence {
    pub controls: Vec<Control>,
    pub costs: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ControlSequence {
    pub fn zeros(horizon: usize) -> Self {
        Self::from_controls(vec![Control::ZERO; horizon])
    }

    pub fn from_controls(controls: Vec<Control>) -> Self {
        Self {
            controls,
            costs: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    /// Drops the executed first control and repeats the last one.
    pub fn shift(&mut self) {
        if self.controls.len() > 1 {
            self.controls.rotate_left(1);
            let n = self.controls.len();
            self.controls[n - 1] = self.controls[n - 2];
        }
    }
}

/// `samples x horizon` Gaussian draws, velocity then yaw rate per step.
pub fn sample_perturbations(cfg: &MpcConfig, seed: u64) -> Result<Perturbations> {
    let normal = Normal::new(cfg.mu, cfg.sigma).map_err(|e| Error::InvalidParam(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..cfg.samples * cfg.horizon)
        .map(|_| {
            let v = normal.sample(&mut rng);
            let omega = normal.sample(&mut rng);
            Control { v, omega }
        })
        .collect();
    Ok(Perturbations {
        samples: cfg.samples,
        horizon: cfg.horizon,
        data,
    })
}

/// Poses after each control, obstacles ignored.
pub fn rollout(s0: &AgentState, controls: &[Control], dt: f64) -> Vec<AgentState> {
    let mut s = *s0;
    controls
        .iter()
        .map(|&u| {
            s = integrate(&s, u, dt);
            s
        })
        .collect()
}

/// Sum of the map cost at every pose plus the quadratic control effort.
/// A rollout that moves from a free cell onto a blocked one has crashed: every
/// pose from there on is priced at the obstacle cost. Segments between poses
/// are checked at half-cell spacing so thin obstacles are not skipped.
pub fn trajectory_cost(poses: &[AgentState], controls: &[Control], cmap: &CostMap, cfg: &MpcConfig) -> f64 {
    priced_cost(None, poses, controls, cmap, cfg)
}

fn priced_cost(
    start: Option<&AgentState>,
    poses: &[AgentState],
    controls: &[Control],
    cmap: &CostMap,
    cfg: &MpcConfig,
) -> f64 {
    let mut pricer = Pricer::new(start, cmap);
    poses
        .iter()
        .zip(controls)
        .map(|(p, &u)| pricer.price(p.x, p.y) + cfg.effort(u))
        .sum()
}

/// Unicycle integration that carries the heading's sine and cosine from one
/// step to the next. Matches `integrate` up to rounding.
struct Arc {
    x: f64,
    y: f64,
    theta: f64,
    sin: f64,
    cos: f64,
}

impl Arc {
    fn new(s: &AgentState) -> Self {
        let (sin, cos) = s.theta.sin_cos();
        Self {
            x: s.x,
            y: s.y,
            theta: s.theta,
            sin,
            cos,
        }
    }

    #[inline]
    fn advance(&mut self, u: Control, dt: f64) -> (f64, f64) {
        if u.omega.abs() < 1e-9 {
            self.x += u.v * self.cos * dt;
            self.y += u.v * self.sin * dt;
            if u.omega != 0.0 {
                self.theta += u.omega * dt;
                (self.sin, self.cos) = self.theta.sin_cos();
            }
        } else {
            self.theta += u.omega * dt;
            let (sin1, cos1) = self.theta.sin_cos();
            let r = u.v / u.omega;
            self.x += r * (sin1 - self.sin);
            self.y -= r * (cos1 - self.cos);
            (self.sin, self.cos) = (sin1, cos1);
        }
        (self.x, self.y)
    }
}

/// Walks a rollout pose by pose, tracking whether it has crashed.
struct Pricer<'a> {
    cmap: &'a CostMap,
    seen_free: bool,
    crashed: bool,
    prev: Option<(f64, f64)>,
    step: f64,
}

impl<'a> Pricer<'a> {
    fn new(start: Option<&AgentState>, cmap: &'a CostMap) -> Self {
        Self {
            cmap,
            seen_free: start.is_some_and(|s| !cmap.blocked_at(s.x, s.y)),
            crashed: false,
            prev: start.map(|s| (s.x, s.y)),
            step: 0.5 * cmap.resolution,
        }
    }

    #[inline]
    fn price(&mut self, x: f64, y: f64) -> f64 {
        if self.crashed {
            return self.cmap.obstacle_cost;
        }
        if let (Some((px, py)), true) = (self.prev, self.seen_free) {
            let (dx, dy) = (x - px, y - py);
            let n = ((dx * dx + dy * dy).sqrt() / self.step).ceil() as usize;
            for i in 1..n {
                let f = i as f64 / n as f64;
                if self.cmap.blocked_at(px + f * dx, py + f * dy) {
                    self.crashed = true;
                    return self.cmap.obstacle_cost;
                }
            }
        }
        let blocked = self.cmap.blocked_at(x, y);
        if blocked && self.seen_free {
            self.crashed = true;
            return self.cmap.obstacle_cost;
        }
        self.seen_free |= !blocked;
        self.prev = Some((x, y));
        self.cmap.cost_at(x, y)
    }
}

/// Softmin weights `exp(-(S - min S) / lambda)`, normalized. Non-finite costs
/// get zero weight.
pub fn importance_weights(costs: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParam("lambda must be positive".into()));
    }
    let beta = costs
        .iter()
        .copied()
        .filter(|c| c.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !beta.is_finite() {
        return Err(Error::AllCostsNonFinite);
    }
    let mut w: Vec<f64> = costs
        .iter()
        .map(|&c| if c.is_finite() { (-(c - beta) / lambda).exp() } else { 0.0 })
        .collect();
    let eta: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= eta);
    Ok(w)
}

/// `u_t += sum_k w_k eps_t^k`, clamped to the limits.
pub fn update_controls(
    seq: &ControlSequence,
    weights: &[f64],
    eps: &Perturbations,
    limits: &VelocityLimits,
) -> Result<ControlSequence> {
    if weights.len() != eps.samples || eps.horizon != seq.horizon() {
        return Err(Error::ShapeMismatch {
            expected: vec![weights.len(), seq.horizon()],
            actual: vec![eps.samples, eps.horizon],
        });
    }
    let controls = seq
        .controls
        .iter()
        .enumerate()
        .map(|(t, &u)| {
            let (mut dv, mut dw) = (0.0, 0.0);
            for (k, &w) in weights.iter().enumerate() {
                if w != 0.0 {
                    let e = eps.get(k, t);
                    dv += w * e.v;
                    dw += w * e.omega;
                }
            }
            limits.clamp(Control::new(u.v + dv, u.omega + dw))
        })
        .collect();
    Ok(ControlSequence {
        controls,
        costs: seq.costs.clone(),
        weights: weights.to_vec(),
    })
}

/// One receding-horizon iteration. Returns the control to apply now and the
/// shifted sequence for the next step.
pub fn mpc_step(
    state: &AgentState,
    seq: &ControlSequence,
    cmap: &CostMap,
    cfg: &MpcConfig,
    seed: u64,
) -> Result<(Control, ControlSequence)> {
    cfg.validate()?;
    if seq.horizon() != cfg.horizon {
        return Err(Error::ShapeMismatch {
            expected: vec![cfg.horizon],
            actual: vec![seq.horizon()],
        });
    }
    let raw = sample_perturbations(cfg, seed)?;
    let prims = if cfg.primitives {
        motion_primitives(cfg.horizon, &cfg.limits)
    } else {
        Vec::new()
    };
    let h = cfg.horizon;
    let mut candidates = Perturbations::zeros(cfg.samples + prims.len(), h);
    for k in 0..cfg.samples {
        for (t, (u, e)) in seq.controls.iter().zip(raw.sample(k)).enumerate() {
            candidates.set(k, t, cfg.limits.clamp(Control::new(u.v + e.v, u.omega + e.omega)));
        }
    }
    for (k, p) in prims.iter().enumerate() {
        candidates.data[(cfg.samples + k) * h..(cfg.samples + k + 1) * h].copy_from_slice(p);
    }
    // Noise actually realised after clamping, so the update stays in bounds.
    let mut eps = candidates.clone();
    for k in 0..eps.samples {
        for (t, u) in seq.controls.iter().enumerate() {
            let p = eps.get(k, t);
            eps.set(k, t, Control::new(p.v - u.v, p.omega - u.omega));
        }
    }
    let costs: Vec<f64> = (0..candidates.samples)
        .into_par_iter()
        .map(|k| {
            let mut pricer = Pricer::new(Some(state), cmap);
            let mut arc = Arc::new(state);
            candidates
                .sample(k)
                .iter()
                .map(|&u| {
                    let (x, y) = arc.advance(u, cfg.dt);
                    pricer.price(x, y) + cfg.effort(u)
                })
                .sum()
        })
        .collect();
    let weights = importance_weights(&costs, cfg.lambda)?;
    let mut next = update_controls(seq, &weights, &eps, &cfg.limits)?;
    next.costs = costs;
    let u0 = next.controls[0];
    next.shift();
    Ok((u0, next))
}

/// Short open-loop maneuvers rolled out next to the sampled sequences: stand
/// still, or spin at full yaw rate for part of the horizon, drive straight for
/// a while and stop.
pub fn motion_primitives(horizon: usize, limits: &VelocityLimits) -> Vec<Vec<Control>> {
    let hold = limits.clamp(Control::ZERO);
    let drive = limits.clamp(Control::new(limits.v_max, 0.0));
    let steps = |tenths: usize| (horizon * tenths).div_ceil(10).min(horizon);
    let mut out = vec![vec![hold; horizon]];
    for spin_tenths in [0, 1, 2, 3, 4, 6] {
        for omega in [limits.omega_max, limits.omega_min] {
            if spin_tenths == 0 && omega == limits.omega_min {
                continue;
            }
            let spin = limits.clamp(Control::new(0.0, omega));
            let turn = steps(spin_tenths);
            for drive_tenths in [2, 4] {
                let end = (turn + steps(drive_tenths)).min(horizon);
                out.push(
                    (0..horizon)
                        .map(|t| if t < turn { spin } else if t < end { drive } else { hold })
                        .collect(),
                );
            }
        }
    }
    out
}
