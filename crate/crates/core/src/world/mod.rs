//! Ground-truth semantic worlds, robot kinematics and the raycast sensor.

mod dynamics;
mod generate;
mod sensor;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

pub use dynamics::{integrate, normalize_angle, step_dynamics, AgentState, Control, VelocityLimits};
pub use generate::{generate_world, WorldGenParams};
pub use sensor::{raycast_observe, Observation, Ray, SensorParams};

/// Number of semantic object classes.
pub const NUM_CLASSES: usize = 16;

/// Simulation step in seconds.
pub const DEFAULT_DT: f64 = 0.1;
pub const DEFAULT_MAX_STEPS: usize = 500;
pub const SUCCESS_DISTANCE: f64 = 1.0;
pub const DEFAULT_RESOLUTION: f64 = 0.05;
/// Clearance added around obstacles for the robot footprint, meters.
pub const DEFAULT_INFLATION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SemanticClass {
    Bed,
    Chair,
    Sink,
    Plant,
    Couch,
    Table,
    Tv,
    Toilet,
    Bathtub,
    Cabinet,
    Shelf,
    Counter,
    Stove,
    Fridge,
    Desk,
    Wardrobe,
}

impl SemanticClass {
    pub const ALL: [SemanticClass; NUM_CLASSES] = [
        Self::Bed,
        Self::Chair,
        Self::Sink,
        Self::Plant,
        Self::Couch,
        Self::Table,
        Self::Tv,
        Self::Toilet,
        Self::Bathtub,
        Self::Cabinet,
        Self::Shelf,
        Self::Counter,
        Self::Stove,
        Self::Fridge,
        Self::Desk,
        Self::Wardrobe,
    ];

    /// Position in `ALL`, 0..16.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Bed => "bed",
            Self::Chair => "chair",
            Self::Sink => "sink",
            Self::Plant => "plant",
            Self::Couch => "couch",
            Self::Table => "table",
            Self::Tv => "tv",
            Self::Toilet => "toilet",
            Self::Bathtub => "bathtub",
            Self::Cabinet => "cabinet",
            Self::Shelf => "shelf",
            Self::Counter => "counter",
            Self::Stove => "stove",
            Self::Fridge => "fridge",
            Self::Desk => "desk",
            Self::Wardrobe => "wardrobe",
        }
    }
}

/// Ground-truth content of one world cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellClass {
    Free,
    Obstacle,
    Object(SemanticClass),
}

impl CellClass {
    /// Wire id: Free=0, Obstacle=1, objects 2..18.
    pub fn id(self) -> u8 {
        match self {
            Self::Free => 0,
            Self::Obstacle => 1,
            Self::Object(c) => 2 + c.index() as u8,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Self::Free),
            1 => Some(Self::Obstacle),
            n => SemanticClass::from_index(n as usize - 2).map(Self::Object),
        }
    }

    #[inline]
    pub fn is_free(self) -> bool {
        self == Self::Free
    }
}

/// The object categories an episode can ask for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetCategory {
    Bed,
    Chair,
    Sink,
    Plant,
    Couch,
}

impl TargetCategory {
    pub const ALL: [TargetCategory; 5] = [Self::Bed, Self::Chair, Self::Sink, Self::Plant, Self::Couch];

    /// Embedding index, 0..5.
    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Self> {
        Self::ALL.get(id).copied()
    }

    pub fn class(self) -> SemanticClass {
        match self {
            Self::Bed => SemanticClass::Bed,
            Self::Chair => SemanticClass::Chair,
            Self::Sink => SemanticClass::Sink,
            Self::Plant => SemanticClass::Plant,
            Self::Couch => SemanticClass::Couch,
        }
    }

    pub fn cell_class(self) -> CellClass {
        CellClass::Object(self.class())
    }

    pub fn name(self) -> &'static str {
        self.class().name()
    }
}

impl fmt::Display for TargetCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TargetCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParam(format!("unknown target category `{s}`")))
    }
}

/// Immutable ground-truth world. World origin is the corner of cell (0, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct WorldGrid {
    cells: Grid<CellClass>,
    resolution: f64,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct WorldFile {
    version: u32,
    width: usize,
    height: usize,
    resolution: f64,
    seed: u64,
    cells: Vec<u8>,
}

impl WorldGrid {
    pub fn new(cells: Grid<CellClass>, resolution: f64, seed: u64) -> Self {
        Self {
            cells,
            resolution,
            seed,
        }
    }

    pub fn width(&self) -> usize {
        self.cells.width()
    }

    pub fn height(&self) -> usize {
        self.cells.height()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cells(&self) -> &Grid<CellClass> {
        &self.cells
    }

    pub fn class_at(&self, x: i64, y: i64) -> Option<CellClass> {
        self.cells.try_get(x, y).copied()
    }

    /// Cell containing world point `(x, y)`.
    pub fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        (
            (x / self.resolution).floor() as i64,
            (y / self.resolution).floor() as i64,
        )
    }

    pub fn cell_center(&self, cx: usize, cy: usize) -> (f64, f64) {
        (
            (cx as f64 + 0.5) * self.resolution,
            (cy as f64 + 0.5) * self.resolution,
        )
    }

    /// True occupancy: every non-free cell.
    pub fn occupancy(&self) -> Grid<bool> {
        self.cells.map(|c| !c.is_free())
    }

    /// Occupancy dilated by `inflation` meters, used for control and collisions.
    pub fn inflated_occupancy(&self, inflation: f64) -> Grid<bool> {
        crate::grid::dilate(&self.occupancy(), inflation_cells(inflation, self.resolution))
    }

    /// Cells of the given object class.
    pub fn cells_of(&self, class: SemanticClass) -> Vec<usize> {
        let want = CellClass::Object(class);
        (0..self.cells.len()).filter(|&i| self.cells[i] == want).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = WorldFile {
            version: 1,
            width: self.width(),
            height: self.height(),
            resolution: self.resolution,
            seed: self.seed,
            cells: self.cells.iter().map(|c| c.id()).collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: WorldFile = serde_json::from_str(s)?;
        if file.version != 1 {
            return Err(Error::InvalidParam(format!(
                "unsupported world file version {}",
                file.version
            )));
        }
        let cells = file
            .cells
            .iter()
            .map(|&id| {
                CellClass::from_id(id)
                    .ok_or_else(|| Error::InvalidParam(format!("bad cell class id {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let len = cells.len();
        let cells = Grid::from_vec(file.width, file.height, cells).ok_or(Error::ShapeMismatch {
            expected: vec![file.height, file.width],
            actual: vec![len],
        })?;
        Ok(Self::new(cells, file.resolution, file.seed))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub fn inflation_cells(inflation: f64, resolution: f64) -> usize {
    (inflation / resolution).round().max(0.0) as usize
}

/// One object-goal episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub world_seed: u64,
    pub start: AgentState,
    pub target: TargetCategory,
    pub max_steps: usize,
    pub dt: f64,
    pub success_distance: f64,
}

impl EpisodeConfig {
    pub fn new(world_seed: u64, start: AgentState, target: TargetCategory) -> Self {
        Self {
            world_seed,
            start,
            target,
            max_steps: DEFAULT_MAX_STEPS,
            dt: DEFAULT_DT,
            success_distance: SUCCESS_DISTANCE,
        }
    }
}
