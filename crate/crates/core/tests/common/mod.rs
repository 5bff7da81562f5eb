//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::f64::consts::SQRT_2;

use objnav::grid::Grid;

#[derive(PartialEq)]
struct Node(f64, usize);

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// 8-connected Dijkstra with step weights 1 and sqrt 2 (times `res`). A
/// diagonal step needs both cells it cuts past to be free.
pub fn dijkstra8(blocked: &Grid<bool>, seeds: &[usize], res: f64) -> Grid<f64> {
    let (w, h) = blocked.shape();
    let mut dist = Grid::filled(w, h, f64::INFINITY);
    let mut heap = BinaryHeap::new();
    for &s in seeds {
        dist[s] = 0.0;
        heap.push(Node(0.0, s));
    }
    while let Some(Node(d, i)) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        let (x, y) = blocked.coords(i);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if blocked.try_get(nx, ny) != Some(&false) {
                    continue;
                }
                let diag = dx != 0 && dy != 0;
                if diag
                    && (blocked.try_get(x as i64 + dx, y as i64) != Some(&false)
                        || blocked.try_get(x as i64, y as i64 + dy) != Some(&false))
                {
                    continue;
                }
                let j = blocked.index(nx as usize, ny as usize);
                let nd = d + if diag { SQRT_2 } else { 1.0 } * res;
                if nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Node(nd, j));
                }
            }
        }
    }
    dist
}

/// Cells reachable from `start` through `free` cells, 4-connected.
pub fn flood4(free: &Grid<bool>, start: usize) -> Grid<bool> {
    let mut seen = Grid::filled(free.width(), free.height(), false);
    if !free[start] {
        return seen;
    }
    let mut q = VecDeque::from([start]);
    seen[start] = true;
    while let Some(i) = q.pop_front() {
        let (x, y) = free.coords(i);
        for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if free.try_get(nx, ny) == Some(&true) {
                let j = free.index(nx as usize, ny as usize);
                if !seen[j] {
                    seen[j] = true;
                    q.push_back(j);
                }
            }
        }
    }
    seen
}

/// Random obstacle map with roughly `density` occupied cells and a clear
/// border-free layout; `seed` drives a small xorshift so the oracle does not
/// share the library's RNG.
pub fn random_blocked(w: usize, h: usize, density: f64, seed: u64) -> Grid<bool> {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    Grid::from_fn(w, h, |_, _| next() < density)
}

/// Xorshift stream independent of the library's generators.
pub struct XorShift(u64);

impl XorShift {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}
