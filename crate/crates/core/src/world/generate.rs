//! Procedural house-like worlds: rectangular rooms from a binary space
//! partition, one door per partition wall, and furniture of room-typical
//! classes placed against the walls.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CellClass, SemanticClass, WorldGrid};
use crate::error::{Error, Result};
use crate::grid::{connected_components, Grid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldGenParams {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub room_count: usize,
    /// Probability that each optional piece of furniture of a room is placed.
    /// Zero yields an empty house.
    pub object_density: f64,
    pub door_width: f64,
    pub wall_thickness: usize,
    pub min_room_size: f64,
    pub max_attempts: u32,
}

impl Default for WorldGenParams {
    fn default() -> Self {
        Self {
            width: 200,
            height: 200,
            resolution: 0.05,
            room_count: 5,
            object_density: 0.7,
            door_width: 0.9,
            wall_thickness: 3,
            min_room_size: 2.0,
            max_attempts: 20,
        }
    }
}

impl WorldGenParams {
    /// Small two-room layout on a 64x64 grid.
    pub fn small() -> Self {
        Self {
            width: 64,
            height: 64,
            room_count: 2,
            min_room_size: 1.0,
            door_width: 0.6,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.width < 64 || self.height < 64 {
            return Err(Error::InvalidParam(format!(
                "world must be at least 64x64 cells, got {}x{}",
                self.width, self.height
            )));
        }
        if self.room_count < 2 {
            return Err(Error::InvalidParam("room_count must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.object_density) {
            return Err(Error::InvalidParam("object_density must lie in [0, 1]".into()));
        }
        if !(self.resolution > 0.0) || self.wall_thickness == 0 || self.max_attempts == 0 {
            return Err(Error::InvalidParam(
                "resolution, wall_thickness and max_attempts must be positive".into(),
            ));
        }
        Ok(())
    }

    fn cells(&self, meters: f64) -> usize {
        (meters / self.resolution).round() as usize
    }
}

#[derive(Debug, Clone, Copy)]
enum RoomKind {
    Bedroom,
    Living,
    Kitchen,
    Bathroom,
    Office,
}

impl RoomKind {
    const ALL: [RoomKind; 5] = [
        Self::Bedroom,
        Self::Living,
        Self::Kitchen,
        Self::Bathroom,
        Self::Office,
    ];

    fn anchors(self) -> &'static [SemanticClass] {
        use SemanticClass::*;
        match self {
            Self::Bedroom => &[Bed],
            Self::Living => &[Couch],
            Self::Kitchen => &[Counter, Sink],
            Self::Bathroom => &[Toilet, Sink],
            Self::Office => &[Desk],
        }
    }

    fn optional(self) -> &'static [SemanticClass] {
        use SemanticClass::*;
        match self {
            Self::Bedroom => &[Wardrobe, Chair, Plant, Cabinet],
            Self::Living => &[Tv, Table, Plant, Chair, Shelf],
            Self::Kitchen => &[Stove, Fridge, Table, Chair],
            Self::Bathroom => &[Bathtub, Cabinet, Plant],
            Self::Office => &[Chair, Shelf, Cabinet, Plant],
        }
    }
}

/// Footprint in meters: (length along the wall, depth into the room).
fn footprint(class: SemanticClass) -> (f64, f64) {
    use SemanticClass::*;
    match class {
        Bed => (1.4, 1.0),
        Chair => (0.4, 0.4),
        Sink => (0.5, 0.4),
        Plant => (0.3, 0.3),
        Couch => (1.2, 0.55),
        Table => (0.8, 0.6),
        Tv => (0.8, 0.2),
        Toilet => (0.4, 0.5),
        Bathtub => (1.2, 0.6),
        Cabinet => (0.5, 0.4),
        Shelf => (0.8, 0.3),
        Counter => (1.2, 0.5),
        Stove => (0.5, 0.5),
        Fridge => (0.6, 0.6),
        Desk => (0.9, 0.5),
        Wardrobe => (1.0, 0.5),
    }
}

/// Half-open cell rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Rect {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

impl Rect {
    fn w(&self) -> usize {
        self.x1 - self.x0
    }

    fn h(&self) -> usize {
        self.y1 - self.y0
    }

    fn expand(&self, m: usize, width: usize, height: usize) -> Rect {
        Rect {
            x0: self.x0.saturating_sub(m),
            y0: self.y0.saturating_sub(m),
            x1: (self.x1 + m).min(width),
            y1: (self.y1 + m).min(height),
        }
    }

    fn intersects(&self, o: &Rect) -> bool {
        self.x0 < o.x1 && o.x0 < self.x1 && self.y0 < o.y1 && o.y0 < self.y1
    }
}

#[derive(Debug, Clone)]
struct Leaf {
    rect: Rect,
    /// Forbidden coordinates for a split wall, per axis (x, y).
    forbid_x: Vec<(usize, usize)>,
    forbid_y: Vec<(usize, usize)>,
    splittable: bool,
}

/// Generates a world deterministically from `(seed, params)`.
pub fn generate_world(seed: u64, params: &WorldGenParams) -> Result<WorldGrid> {
    params.validate()?;
    let mut last_reason = String::new();
    for attempt in 0..params.max_attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        match try_generate(&mut rng, params) {
            Ok(cells) => {
                if free_space_connected(&cells) {
                    return Ok(WorldGrid::new(cells, params.resolution, seed));
                }
                last_reason = "free space is not connected".into();
            }
            Err(reason) => last_reason = reason,
        }
        log::debug!("world {seed}: attempt {attempt} rejected: {last_reason}");
    }
    Err(Error::Generation {
        attempts: params.max_attempts,
        reason: last_reason,
    })
}

/// True when all free cells form one 4-connected component.
pub(crate) fn free_space_connected(cells: &Grid<CellClass>) -> bool {
    let free = cells.map(|c| c.is_free());
    connected_components(&free, false).1.len() <= 1
}

fn try_generate(rng: &mut ChaCha8Rng, p: &WorldGenParams) -> std::result::Result<Grid<CellClass>, String> {
    let (w, h, wt) = (p.width, p.height, p.wall_thickness);
    let min_room = p.cells(p.min_room_size).max(4);
    let door = p.cells(p.door_width).max(2);
    let door_margin = p.cells(0.3);

    let mut cells = Grid::filled(w, h, CellClass::Obstacle);
    let mut leaves = vec![Leaf {
        rect: Rect {
            x0: wt,
            y0: wt,
            x1: w - wt,
            y1: h - wt,
        },
        forbid_x: vec![],
        forbid_y: vec![],
        splittable: true,
    }];
    let mut doors: Vec<Rect> = Vec::new();

    while leaves.len() < p.room_count {
        let Some(idx) = leaves
            .iter()
            .enumerate()
            .filter(|(_, l)| l.splittable)
            .max_by_key(|(_, l)| l.rect.w() * l.rect.h())
            .map(|(i, _)| i)
        else {
            return Err(format!("could only fit {} rooms", leaves.len()));
        };
        let leaf = leaves[idx].clone();
        match split_leaf(rng, &leaf, min_room, wt, door, door_margin) {
            Some((a, b, door_rect)) => {
                doors.push(door_rect);
                leaves[idx] = a;
                leaves.push(b);
            }
            None => leaves[idx].splittable = false,
        }
    }

    for leaf in &leaves {
        fill(&mut cells, &leaf.rect, CellClass::Free);
    }
    for d in &doors {
        fill(&mut cells, d, CellClass::Free);
    }

    if p.object_density > 0.0 {
        let mut kinds = RoomKind::ALL.to_vec();
        kinds.shuffle(rng);
        let door_zones: Vec<Rect> = doors.iter().map(|d| d.expand(p.cells(0.6), w, h)).collect();
        let mut placed: Vec<Rect> = Vec::new();
        for (i, leaf) in leaves.iter().enumerate() {
            let kind = kinds[i % kinds.len()];
            let mut wanted: Vec<SemanticClass> = kind.anchors().to_vec();
            for &c in kind.optional() {
                if rng.random_bool(p.object_density) {
                    wanted.push(c);
                }
            }
            for class in wanted {
                place_object(rng, &mut cells, p, &leaf.rect, class, &door_zones, &mut placed);
            }
        }
    }
    Ok(cells)
}

fn fill(cells: &mut Grid<CellClass>, r: &Rect, class: CellClass) {
    for y in r.y0..r.y1 {
        for x in r.x0..r.x1 {
            cells.set(x, y, class);
        }
    }
}

fn clear_of(lo: usize, hi: usize, forbidden: &[(usize, usize)]) -> bool {
    forbidden.iter().all(|&(a, b)| hi <= a || lo >= b)
}

/// Splits along the longer axis; returns the two children and the door cells.
fn split_leaf(
    rng: &mut ChaCha8Rng,
    leaf: &Leaf,
    min_room: usize,
    wt: usize,
    door: usize,
    margin: usize,
) -> Option<(Leaf, Leaf, Rect)> {
    let r = leaf.rect;
    let vertical = r.w() >= r.h();
    let (lo, hi, forbidden) = if vertical {
        (r.x0, r.x1, &leaf.forbid_x)
    } else {
        (r.y0, r.y1, &leaf.forbid_y)
    };
    if hi - lo < 2 * min_room + wt {
        return None;
    }
    // Keep the split reasonably central.
    let span = hi - lo - 2 * min_room - wt;
    let first = lo + min_room + span / 4;
    let last = lo + min_room + span - span / 4;
    let candidates: Vec<usize> = (first..=last)
        .filter(|&s| clear_of(s, s + wt, forbidden))
        .collect();
    let &s = candidates.as_slice().choose(rng)?;

    // Door along the new wall, away from both ends.
    let (along_lo, along_hi) = if vertical { (r.y0, r.y1) } else { (r.x0, r.x1) };
    let door_lo = along_lo + margin + wt;
    if along_hi < door_lo + door + margin + wt {
        return None;
    }
    let door_hi = along_hi - door - margin - wt;
    let d = rng.random_range(door_lo..=door_hi.max(door_lo));
    let keep_clear = (d.saturating_sub(margin + wt), d + door + margin);

    let (mut a, mut b) = (leaf.clone(), leaf.clone());
    a.splittable = true;
    b.splittable = true;
    let door_rect;
    if vertical {
        a.rect.x1 = s;
        b.rect.x0 = s + wt;
        a.forbid_y.push(keep_clear);
        b.forbid_y.push(keep_clear);
        door_rect = Rect {
            x0: s,
            x1: s + wt,
            y0: d,
            y1: d + door,
        };
    } else {
        a.rect.y1 = s;
        b.rect.y0 = s + wt;
        a.forbid_x.push(keep_clear);
        b.forbid_x.push(keep_clear);
        door_rect = Rect {
            x0: d,
            x1: d + door,
            y0: s,
            y1: s + wt,
        };
    }
    Some((a, b, door_rect))
}

fn place_object(
    rng: &mut ChaCha8Rng,
    cells: &mut Grid<CellClass>,
    p: &WorldGenParams,
    room: &Rect,
    class: SemanticClass,
    door_zones: &[Rect],
    placed: &mut Vec<Rect>,
) {
    let (len_m, depth_m) = footprint(class);
    let (len, depth) = (p.cells(len_m).max(1), p.cells(depth_m).max(1));
    let gap = p.cells(0.45);
    let (w, h) = (cells.width(), cells.height());
    for _ in 0..30 {
        let side = rng.random_range(0..4);
        let along_x = side % 2 == 0;
        let (along_lo, along_hi) = if along_x { (room.x0, room.x1) } else { (room.y0, room.y1) };
        let across = if along_x { room.h() } else { room.w() };
        if along_hi - along_lo < len || across < depth + p.cells(1.0) {
            continue;
        }
        let mut pos = rng.random_range(along_lo..=along_hi - len);
        // Snap into a corner instead of leaving a narrow slot.
        if pos - along_lo < gap {
            pos = along_lo;
        } else if along_hi - (pos + len) < gap {
            pos = along_hi - len;
        }
        let rect = match side {
            0 => Rect { x0: pos, x1: pos + len, y0: room.y0, y1: room.y0 + depth },
            2 => Rect { x0: pos, x1: pos + len, y0: room.y1 - depth, y1: room.y1 },
            1 => Rect { x0: room.x0, x1: room.x0 + depth, y0: pos, y1: pos + len },
            _ => Rect { x0: room.x1 - depth, x1: room.x1, y0: pos, y1: pos + len },
        };
        if door_zones.iter().any(|z| z.intersects(&rect)) {
            continue;
        }
        let halo = rect.expand(gap, w, h);
        if placed.iter().any(|o| o.intersects(&halo)) {
            continue;
        }
        fill(cells, &rect, CellClass::Object(class));
        if free_space_connected(cells) {
            placed.push(rect);
            return;
        }
        fill(cells, &rect, CellClass::Free);
    }
}
