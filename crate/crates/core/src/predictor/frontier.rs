use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{max_cost_response, obstacle_probability, CostMapProvider, PredictionContext, PredictionResponse};
use crate::costfield::{crop, fmm_distance, normalize_costs};
use crate::error::{Error, Result};
use crate::grid::{dilate, Grid};
use crate::mapping::{goal_mask, SemanticMapStack, DEFAULT_MIN_REGION, LOCAL_SIZE};
use crate::world::{inflation_cells, AgentState, TargetCategory, DEFAULT_INFLATION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontierConfig {
    /// Obstacle inflation in meters.
    pub inflation: f64,
    /// Frontier cells closer than this to the agent are ignored while any
    /// farther frontier exists.
    pub exclude_radius: f64,
    /// Half-width of the window searched for open unknown space.
    pub reach: usize,
    pub min_region: usize,
    /// Steps between frontier re-solves; the field in between is reused.
    pub replan_every: u64,
}

impl Default for FrontierConfig {
    fn default() -> Self {
        Self {
            inflation: DEFAULT_INFLATION,
            exclude_radius: 1.0,
            reach: 2,
            min_region: DEFAULT_MIN_REGION,
            replan_every: 5,
        }
    }
}

/// Explored free cells with open unknown space within `reach` cells.
/// Unknown space is open when a cell and its 8 neighbours are all
/// unexplored, which ignores the thin gaps left between diverging rays.
pub fn frontier_cells(explored: &Grid<bool>, obstacle: &Grid<bool>, reach: usize) -> Vec<usize> {
    let (w, h) = explored.shape();
    let open = Grid::from_fn(w, h, |x, y| {
        (-1..=1).all(|dy| {
            (-1..=1).all(|dx| matches!(explored.try_get(x as i64 + dx, y as i64 + dy), Some(false)))
        })
    });
    let near_open = dilate_square(&open, reach);
    (0..explored.len())
        .filter(|&i| explored[i] && !obstacle[i] && near_open[i])
        .collect()
}

fn dilate_square(mask: &Grid<bool>, r: usize) -> Grid<bool> {
    let (w, h) = mask.shape();
    let r = r as i64;
    // Separable: rows then columns.
    let rows = Grid::from_fn(w, h, |x, y| (-r..=r).any(|d| mask.try_get(x as i64 + d, y as i64) == Some(&true)));
    Grid::from_fn(w, h, |x, y| (-r..=r).any(|d| rows.try_get(x as i64, y as i64 + d) == Some(&true)))
}

/// Frontier-seeking (or, once the target is mapped, goal-seeking) cost over
/// the explored part of `global`, cropped to the local window at `pose`.
/// Unexplored cells are never assigned a finite cost.
pub fn partial_fmm_predict(
    global: &SemanticMapStack,
    target: TargetCategory,
    pose: &AgentState,
    cfg: &FrontierConfig,
) -> Result<PredictionResponse> {
    let start = Instant::now();
    let local = global.extract_local(pose);
    let field = solve_field(global, &local, target, pose, cfg)?;
    Ok(respond(field.as_ref(), &local, start))
}

/// Distance field over a sub-rectangle of the global map.
#[derive(Debug, Clone)]
struct Field {
    dist: Grid<f64>,
    /// Global-map cell of `dist` cell (0, 0).
    offset: (i64, i64),
    toward_goal: bool,
}

fn respond(field: Option<&Field>, local: &SemanticMapStack, start: Instant) -> PredictionResponse {
    let occ = obstacle_probability(local);
    let Some(f) = field else {
        return max_cost_response(occ);
    };
    let window = crop(
        &f.dist,
        local.origin_cell().0 - f.offset.0,
        local.origin_cell().1 - f.offset.1,
        LOCAL_SIZE,
        LOCAL_SIZE,
        f64::INFINITY,
    );
    PredictionResponse {
        nav: normalize_costs(&window),
        occ,
        latency: start.elapsed(),
    }
}

fn solve_field(
    global: &SemanticMapStack,
    local: &SemanticMapStack,
    target: TargetCategory,
    pose: &AgentState,
    cfg: &FrontierConfig,
) -> Result<Option<Field>> {
    let n = global.size();
    let explored = global.explored_grid();
    let obstacle = global.obstacle_grid();

    let Some((bx0, by0, bx1, by1)) = bounding_box(&explored) else {
        return Ok(None);
    };
    // Work on the explored bounding box plus a margin for the open-space test.
    let m = cfg.reach + 2;
    let (bx0, by0) = (bx0.saturating_sub(m), by0.saturating_sub(m));
    let (bx1, by1) = ((bx1 + m + 1).min(n), (by1 + m + 1).min(n));
    let (bw, bh) = (bx1 - bx0, by1 - by0);
    let sub = |g: &Grid<bool>| Grid::from_fn(bw, bh, |x, y| *g.get(bx0 + x, by0 + y));
    let (explored, obstacle) = (sub(&explored), sub(&obstacle));
    let offset = (
        global.origin_cell().0 + bx0 as i64,
        global.origin_cell().1 + by0 as i64,
    );

    let local_mask = goal_mask(local, target, cfg.min_region);
    let (lox, loy) = (local.origin_cell().0 - offset.0, local.origin_cell().1 - offset.1);
    let goal: Vec<usize> = local_mask
        .cells()
        .into_iter()
        .filter_map(|i| {
            let (x, y) = local_mask.mask.coords(i);
            let (gx, gy) = (lox + x as i64, loy + y as i64);
            explored.in_bounds(gx, gy).then(|| explored.index(gx as usize, gy as usize))
        })
        .collect();

    let res = global.resolution();
    let r = inflation_cells(cfg.inflation, res);
    if !goal.is_empty() {
        if let Some(dist) = solve(&explored, &obstacle, &goal, true, r, res)? {
            return Ok(Some(Field {
                dist,
                offset,
                toward_goal: true,
            }));
        }
    }
    let mut seeds = frontier_cells(&explored, &obstacle, cfg.reach);
    let far: Vec<usize> = seeds
        .iter()
        .copied()
        .filter(|&i| {
            let (x, y) = explored.coords(i);
            let cx = ((offset.0 + x as i64) as f64 + 0.5) * res;
            let cy = ((offset.1 + y as i64) as f64 + 0.5) * res;
            (cx - pose.x).hypot(cy - pose.y) >= cfg.exclude_radius
        })
        .collect();
    if !far.is_empty() {
        seeds = far;
    }
    if seeds.is_empty() {
        return Ok(None);
    }
    Ok(solve(&explored, &obstacle, &seeds, false, r, res)?.map(|dist| Field {
        dist,
        offset,
        toward_goal: false,
    }))
}

/// Geodesic field to `seeds` through explored free space, obstacles inflated
/// by `r` cells. Goal seeds are always free; frontier seeds inside the
/// inflated band are dropped. `None` when no seed survives.
fn solve(
    explored: &Grid<bool>,
    obstacle: &Grid<bool>,
    seeds: &[usize],
    goal_seeds: bool,
    r: usize,
    resolution: f64,
) -> Result<Option<Grid<f64>>> {
    let mut walls = obstacle.clone();
    if goal_seeds {
        for &s in seeds {
            walls[s] = false;
        }
    }
    let mut blocked = dilate(&walls, r);
    for i in 0..blocked.len() {
        blocked[i] |= !explored[i];
    }
    if goal_seeds {
        for &s in seeds {
            blocked[s] = false;
        }
    }
    match fmm_distance(&blocked, seeds, resolution) {
        Ok(d) => Ok(Some(d)),
        Err(Error::UnreachableGoal) => Ok(None),
        Err(e) => Err(e),
    }
}

fn bounding_box(mask: &Grid<bool>) -> Option<(usize, usize, usize, usize)> {
    let mut bb: Option<(usize, usize, usize, usize)> = None;
    for i in 0..mask.len() {
        if mask[i] {
            let (x, y) = mask.coords(i);
            bb = Some(match bb {
                None => (x, y, x, y),
                Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
            });
        }
    }
    bb
}

/// Frontier baseline as a provider. The frontier field is re-solved every
/// `replan_every` steps and whenever the target shows up in the local window.
#[derive(Debug, Clone, Default)]
pub struct FrontierPredictor {
    pub config: FrontierConfig,
    cache: Option<(u64, u64, Option<Field>)>,
}

impl FrontierPredictor {
    pub fn new(config: FrontierConfig) -> Self {
        Self { config, cache: None }
    }
}

impl CostMapProvider for FrontierPredictor {
    fn name(&self) -> &str {
        "frontier"
    }

    fn predict(&mut self, ctx: &PredictionContext<'_>) -> Result<PredictionResponse> {
        let start = Instant::now();
        let cfg = self.config;
        let fresh = match &self.cache {
            Some((episode, step, field)) => {
                *episode != ctx.episode
                    || ctx.step < *step
                    || ctx.step - step >= cfg.replan_every.max(1)
                    || field.as_ref().is_some_and(|f| f.toward_goal)
                    || goal_mask(ctx.local, ctx.target, cfg.min_region).count > 0
            }
            None => true,
        };
        if fresh {
            let field = solve_field(ctx.global, ctx.local, ctx.target, &ctx.pose, &cfg)?;
            self.cache = Some((ctx.episode, ctx.step, field));
        }
        let field = self.cache.as_ref().and_then(|(_, _, f)| f.as_ref());
        Ok(respond(field, ctx.local, start))
    }
}
