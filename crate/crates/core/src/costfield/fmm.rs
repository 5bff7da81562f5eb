//! First-order fast marching on a regular grid.
//!
//! Each trial cell takes the smaller of two upwind eikonal solutions: one on
//! the axis-aligned stencil (spacing 1) and one on the 45-degree rotated
//! stencil (spacing sqrt 2). The rotated stencil removes most of the
//! diagonal over-estimate of the plain 4-neighbour scheme. Diagonal
//! neighbours are only used when both cells they share with the trial cell
//! are free, so fronts never squeeze between touching corners.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Far,
    Trial,
    Alive,
}

#[derive(Debug, Clone, Copy)]
struct Front {
    cost: f64,
    idx: usize,
}

impl PartialEq for Front {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Front {}

impl PartialOrd for Front {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Front {
    // Reversed for a min-heap; index breaks ties so runs are reproducible.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Solves `|grad T| = 1` over free cells (`occupied == false`) with `T = 0` on
/// the seeds. Returns travel distance in meters; occupied and unreachable
/// cells are `+inf`. Occupied seeds are ignored.
pub fn fmm_distance(occupied: &Grid<bool>, seeds: &[usize], resolution: f64) -> Result<Grid<f64>> {
    if seeds.is_empty() {
        return Err(Error::Empty("seed set".into()));
    }
    if let Some(&bad) = seeds.iter().find(|&&s| s >= occupied.len()) {
        return Err(Error::InvalidParam(format!("seed {bad} out of bounds")));
    }
    let (w, h) = (occupied.width(), occupied.height());
    let mut m = Marcher::new(occupied);
    let mut any = false;
    for &s in seeds {
        let p = m.pad(s, w);
        if !m.free[p] || m.state[p] == State::Alive {
            continue;
        }
        any = true;
        m.cost[p] = 0.0;
        m.state[p] = State::Alive;
    }
    if !any {
        return Err(Error::UnreachableGoal);
    }
    for &s in seeds {
        let p = m.pad(s, w);
        if m.free[p] {
            m.relax_neighbors(p);
        }
    }
    while let Some(Front { cost: c, idx }) = m.heap.pop() {
        if m.state[idx] == State::Alive || c > m.cost[idx] {
            continue;
        }
        m.state[idx] = State::Alive;
        m.relax_neighbors(idx);
    }

    let stride = w + 2;
    Ok(Grid::from_fn(w, h, |x, y| {
        let c = m.cost[(y + 1) * stride + x + 1];
        if c.is_finite() {
            c * resolution
        } else {
            c
        }
    }))
}

/// Working state over the grid padded with a one-cell occupied border, so
/// neighbour lookups need no bounds checks.
struct Marcher {
    free: Vec<bool>,
    cost: Vec<f64>,
    state: Vec<State>,
    heap: BinaryHeap<Front>,
    /// Flat offsets of the 8 neighbours, axis moves first.
    offsets: [isize; 8],
    stride: isize,
}

impl Marcher {
    fn new(occupied: &Grid<bool>) -> Self {
        let (w, h) = (occupied.width(), occupied.height());
        let stride = w + 2;
        let mut free = vec![false; stride * (h + 2)];
        for y in 0..h {
            for x in 0..w {
                free[(y + 1) * stride + x + 1] = !*occupied.get(x, y);
            }
        }
        let n = free.len();
        let s = stride as isize;
        Self {
            free,
            cost: vec![f64::INFINITY; n],
            state: vec![State::Far; n],
            heap: BinaryHeap::new(),
            offsets: [1, -1, s, -s, s + 1, -s - 1, -s + 1, s - 1],
            stride: s,
        }
    }

    #[inline]
    fn pad(&self, i: usize, w: usize) -> usize {
        (i / w + 1) * self.stride as usize + i % w + 1
    }

    fn relax_neighbors(&mut self, p: usize) {
        for k in 0..8 {
            let j = (p as isize + self.offsets[k]) as usize;
            if !self.free[j] || self.state[j] == State::Alive {
                continue;
            }
            let t = self.local_update(j);
            if t < self.cost[j] {
                self.cost[j] = t;
                self.state[j] = State::Trial;
                self.heap.push(Front { cost: t, idx: j });
            }
        }
    }

    #[inline]
    fn alive(&self, j: usize) -> f64 {
        if self.state[j] == State::Alive {
            self.cost[j]
        } else {
            f64::INFINITY
        }
    }

    fn local_update(&self, p: usize) -> f64 {
        let s = self.stride;
        let at = |d: isize| (p as isize + d) as usize;
        // Diagonal neighbours count only when both shared axis cells are free.
        let diag = |dx: isize, dy: isize| {
            if self.free[at(dx)] && self.free[at(dy * s)] {
                self.alive(at(dx + dy * s))
            } else {
                f64::INFINITY
            }
        };
        let axis = two_point(
            self.alive(at(1)).min(self.alive(at(-1))),
            self.alive(at(s)).min(self.alive(at(-s))),
            1.0,
        );
        let rotated = two_point(diag(1, 1).min(diag(-1, -1)), diag(1, -1).min(diag(-1, 1)), SQRT_2);
        axis.min(rotated)
    }
}

/// Upwind solve of `(T - a)^2 + (T - b)^2 = h^2` from the smaller neighbour on
/// each of two orthogonal directions.
#[inline]
fn two_point(a: f64, b: f64, h: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if !lo.is_finite() {
        return f64::INFINITY;
    }
    if !hi.is_finite() || hi - lo >= h {
        return lo + h;
    }
    let d = hi - lo;
    (lo + hi + (2.0 * h * h - d * d).sqrt()) * 0.5
}
