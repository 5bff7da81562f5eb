//! Egocentric semantic map stack built from raycast observations.
//!
//! Channel layout: `[obstacle, explored, 16 semantic evidence channels]`.
//! Semantic channel `c` holds evidence for the object whose cell-class id is
//! `c`, so `CellClass::id` indexes the stack directly.

use std::f64::consts::PI;

use crate::grid::{connected_components, Grid};
use crate::world::{AgentState, CellClass, Observation, TargetCategory, NUM_CLASSES};

pub const CHANNELS: usize = 2 + NUM_CLASSES;
pub const OBSTACLE: usize = 0;
pub const EXPLORED: usize = 1;
pub const LOCAL_SIZE: usize = 140;
pub const GLOBAL_SIZE: usize = 420;
pub const POOL: usize = GLOBAL_SIZE / LOCAL_SIZE;
pub const DEFAULT_MIN_REGION: usize = 4;

/// A square `(CHANNELS, size, size)` map aligned with the world cell grid.
/// Pooled maps cover `scale x scale` world cells per map cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticMapStack {
    size: usize,
    /// World cell index of the corner of map cell (0, 0).
    origin_cell: (i64, i64),
    /// Meters per world cell.
    world_resolution: f64,
    scale: usize,
    data: Vec<f32>,
}

impl SemanticMapStack {
    pub fn empty(size: usize, origin_cell: (i64, i64), world_resolution: f64) -> Self {
        Self {
            size,
            origin_cell,
            world_resolution,
            scale: 1,
            data: vec![0.0; CHANNELS * size * size],
        }
    }

    /// Global map centered on the start pose's cell.
    pub fn global_at(start: &AgentState, world_resolution: f64) -> Self {
        let cx = (start.x / world_resolution).floor() as i64;
        let cy = (start.y / world_resolution).floor() as i64;
        let half = (GLOBAL_SIZE / 2) as i64;
        Self::empty(GLOBAL_SIZE, (cx - half, cy - half), world_resolution)
    }

    /// Rebuilds a full-resolution stack from a flat `(CHANNELS, size, size)` buffer.
    pub fn from_raw(size: usize, origin_cell: (i64, i64), world_resolution: f64, data: Vec<f32>) -> Option<Self> {
        (data.len() == CHANNELS * size * size).then_some(Self {
            size,
            origin_cell,
            world_resolution,
            scale: 1,
            data,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn channels(&self) -> usize {
        CHANNELS
    }

    pub fn origin_cell(&self) -> (i64, i64) {
        self.origin_cell
    }

    /// Meters per map cell.
    pub fn resolution(&self) -> f64 {
        self.world_resolution * self.scale as f64
    }

    pub fn world_resolution(&self) -> f64 {
        self.world_resolution
    }

    /// World coordinates of the corner of map cell (0, 0).
    pub fn origin(&self) -> (f64, f64) {
        (
            self.origin_cell.0 as f64 * self.world_resolution,
            self.origin_cell.1 as f64 * self.world_resolution,
        )
    }

    pub fn shape(&self) -> [usize; 3] {
        [CHANNELS, self.size, self.size]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.size * self.size;
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize) -> f32 {
        self.data[(c * self.size + y) * self.size + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, x: usize, y: usize, v: f32) {
        self.data[(c * self.size + y) * self.size + x] = v;
    }

    /// Map cell holding world cell `(wx, wy)`, if inside.
    #[inline]
    pub fn map_cell(&self, wx: i64, wy: i64) -> Option<(usize, usize)> {
        let k = self.scale as i64;
        let (mx, my) = (
            (wx - self.origin_cell.0).div_euclid(k),
            (wy - self.origin_cell.1).div_euclid(k),
        );
        let n = self.size as i64;
        (mx >= 0 && my >= 0 && mx < n && my < n).then_some((mx as usize, my as usize))
    }

    /// Map cell under a world position.
    pub fn cell_of_pose(&self, s: &AgentState) -> (i64, i64) {
        let k = self.scale as i64;
        (
            ((s.x / self.world_resolution).floor() as i64 - self.origin_cell.0).div_euclid(k),
            ((s.y / self.world_resolution).floor() as i64 - self.origin_cell.1).div_euclid(k),
        )
    }

    pub fn obstacle_grid(&self) -> Grid<bool> {
        self.threshold(OBSTACLE, 0.5)
    }

    pub fn explored_grid(&self) -> Grid<bool> {
        self.threshold(EXPLORED, 0.5)
    }

    fn threshold(&self, c: usize, t: f32) -> Grid<bool> {
        Grid::from_vec(self.size, self.size, self.channel(c).iter().map(|&v| v > t).collect())
            .expect("square channel")
    }

    pub fn explored_count(&self) -> usize {
        self.channel(EXPLORED).iter().filter(|&&v| v > 0.5).count()
    }

    /// Folds one observation into the map. Swept cells become explored; hit
    /// cells become explored obstacles and raise their class evidence.
    /// Obstacle marks and evidence are fused by running max, so repeated
    /// integration is idempotent. Cells outside the map are dropped.
    pub fn integrate_observation(&mut self, obs: &Observation) {
        let mut dropped = 0usize;
        for ray in &obs.rays {
            for &(wx, wy) in &ray.swept {
                match self.map_cell(wx as i64, wy as i64) {
                    Some((x, y)) => self.set(EXPLORED, x, y, 1.0),
                    None => dropped += 1,
                }
            }
            if let (Some((wx, wy)), Some(class)) = (ray.hit_cell, ray.hit_class) {
                match self.map_cell(wx as i64, wy as i64) {
                    Some((x, y)) => {
                        self.set(EXPLORED, x, y, 1.0);
                        self.set(OBSTACLE, x, y, 1.0);
                        if let CellClass::Object(_) = class {
                            let c = class.id() as usize;
                            let v = self.get(c, x, y).max(1.0);
                            self.set(c, x, y, v);
                        }
                    }
                    None => dropped += 1,
                }
            }
        }
        if dropped > 0 {
            log::trace!("dropped {dropped} observed cells outside the map");
        }
    }

    /// `LOCAL_SIZE` window centered on the agent cell, zero-padded outside.
    pub fn extract_local(&self, pose: &AgentState) -> SemanticMapStack {
        let (ax, ay) = self.cell_of_pose(pose);
        let half = (LOCAL_SIZE / 2) as i64;
        let (x0, y0) = (ax - half, ay - half);
        let k = self.scale as i64;
        let mut out = SemanticMapStack::empty(
            LOCAL_SIZE,
            (self.origin_cell.0 + x0 * k, self.origin_cell.1 + y0 * k),
            self.world_resolution,
        );
        out.scale = self.scale;
        let n = self.size as i64;
        let xs = x0.max(0)..(x0 + LOCAL_SIZE as i64).min(n);
        if xs.is_empty() {
            return out;
        }
        for c in 0..CHANNELS {
            for ly in 0..LOCAL_SIZE as i64 {
                let gy = y0 + ly;
                if gy < 0 || gy >= n {
                    continue;
                }
                let src = (c * self.size + gy as usize) * self.size;
                let dst = (c * LOCAL_SIZE + ly as usize) * LOCAL_SIZE;
                let lx0 = (xs.start - x0) as usize;
                let len = (xs.end - xs.start) as usize;
                out.data[dst + lx0..dst + lx0 + len]
                    .copy_from_slice(&self.data[src + xs.start as usize..src + xs.start as usize + len]);
            }
        }
        out
    }

    /// 3x3 average pooling of every channel. The nine values are summed in
    /// f64, which is exact, so the result is the correctly rounded mean.
    pub fn pool_global(&self) -> SemanticMapStack {
        let out_n = self.size / POOL;
        let mut out = SemanticMapStack::empty(out_n, self.origin_cell, self.world_resolution);
        out.scale = self.scale * POOL;
        let area = (POOL * POOL) as f64;
        for c in 0..CHANNELS {
            for oy in 0..out_n {
                for ox in 0..out_n {
                    let mut acc = 0.0f64;
                    for dy in 0..POOL {
                        let row = (c * self.size + oy * POOL + dy) * self.size + ox * POOL;
                        acc += self.data[row..row + POOL].iter().map(|&v| f64::from(v)).sum::<f64>();
                    }
                    out.set(c, ox, oy, (acc / area) as f32);
                }
            }
        }
        out
    }
}

/// Cells of the local window recognised as the target.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalMask {
    pub mask: Grid<bool>,
    pub count: usize,
}

impl GoalMask {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn cells(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&i| self.mask[i]).collect()
    }
}

/// Target cells: confident evidence (> 0.5) whose strongest semantic channel
/// is the target, minus 8-connected regions smaller than `min_region`.
pub fn goal_mask(local: &SemanticMapStack, target: TargetCategory, min_region: usize) -> GoalMask {
    let n = local.size();
    let want = target.cell_class().id() as usize;
    let nn = n * n;
    let mut mask = Grid::filled(n, n, false);
    let mut any = false;
    for (i, &v) in local.channel(want).iter().enumerate() {
        if v <= 0.5 {
            continue;
        }
        // Ties go to the lower channel.
        let strongest = (2..CHANNELS).all(|c| {
            let o = local.data[c * nn + i];
            c == want || (c < want && o < v) || (c > want && o <= v)
        });
        if strongest {
            mask[i] = true;
            any = true;
        }
    }
    if !any {
        return GoalMask { mask, count: 0 };
    }
    let (labels, sizes) = connected_components(&mask, true);
    let mut count = 0;
    for i in 0..mask.len() {
        if mask[i] {
            if sizes[labels[i] as usize] < min_region {
                mask[i] = false;
            } else {
                count += 1;
            }
        }
    }
    GoalMask { mask, count }
}

/// Heading bin 1..=8, counterclockwise from east, each 45 degrees wide and
/// centered on its compass direction (north is bin 3).
pub fn orientation_bin(theta: f64) -> u8 {
    let a = (theta + PI / 8.0).rem_euclid(2.0 * PI);
    ((a / (PI / 4.0)).floor() as u8).min(7) + 1
}
