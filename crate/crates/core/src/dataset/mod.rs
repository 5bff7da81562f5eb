//! Expert-trajectory samples for training cost-map predictors, and the
//! binary tensor format they are stored in.
//!
//! A split is laid out as
//!
//! ```text
//! <root>/<split>/manifest.json
//! <root>/<split>/ep00000/step0000/{local,global,nav,occ,rays}.smt + meta.json
//! ```

pub mod smt;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::harness::{mix_seed, run_episode_observed, sample_episodes, AgentKind, AgentSpec, RunConfig, StepView};
use crate::mapping::{orientation_bin, SemanticMapStack, CHANNELS, GLOBAL_SIZE, LOCAL_SIZE};
use crate::predictor::protocol::{PredictRequest, Rays, WireTensor};
use crate::predictor::{GtOracle, PredictionResponse};
use crate::world::{generate_world, AgentState, EpisodeConfig, TargetCategory, WorldGenParams, WorldGrid};
pub use smt::{read_tensor, write_tensor, Tensor, TensorError};

/// Samples are recorded at every `SAMPLE_STRIDE`-th control step.
pub const SAMPLE_STRIDE: usize = 4;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

const FILES: [&str; 5] = ["local.smt", "global.smt", "nav.smt", "occ.smt", "rays.smt"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub world_seed: u64,
    pub episode: u64,
    pub step: u64,
    pub target: TargetCategory,
    pub target_id: usize,
    pub pose: AgentState,
    pub orientation_bin: u8,
    /// World cell of map cell (0, 0) for the local and global stacks.
    pub local_origin: (i64, i64),
    pub global_origin: (i64, i64),
    pub resolution: f64,
}

/// One training example.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSample {
    pub meta: SampleMeta,
    /// `(18, 140, 140)`.
    pub local: Tensor,
    /// `(18, 420, 420)`.
    pub global: Tensor,
    /// Normalized navigation cost, `(140, 140)`.
    pub nav: Tensor,
    /// Occupancy, `(140, 140)`.
    pub occ: Tensor,
    /// One row per ray: world angle, depth, hit cell class id (0 for none).
    pub rays: Tensor,
}

fn grid_tensor(g: &Grid<f64>) -> Tensor {
    Tensor {
        shape: vec![g.height(), g.width()],
        data: g.iter().map(|&v| v as f32).collect(),
    }
}

fn tensor_grid(t: &Tensor) -> Result<Grid<f64>> {
    expect_shape(t, &[LOCAL_SIZE, LOCAL_SIZE])?;
    let data = t.data.iter().map(|&v| f64::from(v)).collect();
    Ok(Grid::from_vec(LOCAL_SIZE, LOCAL_SIZE, data).expect("shape checked"))
}

fn stack(t: &Tensor, origin: (i64, i64), resolution: f64) -> Result<SemanticMapStack> {
    let size = t.shape.last().copied().unwrap_or(0);
    SemanticMapStack::from_raw(size, origin, resolution, t.data.clone()).ok_or_else(|| Error::ShapeMismatch {
        expected: vec![CHANNELS, size, size],
        actual: t.shape.clone(),
    })
}

fn expect_shape(t: &Tensor, want: &[usize]) -> Result<()> {
    if t.shape == want {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            expected: want.to_vec(),
            actual: t.shape.clone(),
        })
    }
}

impl DatasetSample {
    /// Builds the sample for one step, labelled by `oracle`.
    pub fn from_view(view: &StepView<'_>, oracle: &GtOracle, world_seed: u64, episode: u64, target: TargetCategory) -> Self {
        let label = oracle.predict_at(&view.pose);
        let rays = &view.observation.rays;
        let mut ray_data = Vec::with_capacity(rays.len() * 3);
        for r in rays {
            ray_data.push(r.angle as f32);
            ray_data.push(r.hit_distance as f32);
            ray_data.push(r.hit_class.map_or(0.0, |c| f32::from(c.id())));
        }
        Self {
            meta: SampleMeta {
                world_seed,
                episode,
                step: view.step as u64,
                target,
                target_id: target.id(),
                pose: view.pose,
                orientation_bin: orientation_bin(view.pose.theta),
                local_origin: view.local.origin_cell(),
                global_origin: view.global.origin_cell(),
                resolution: view.global.resolution(),
            },
            local: Tensor {
                shape: view.local.shape().to_vec(),
                data: view.local.as_slice().to_vec(),
            },
            global: Tensor {
                shape: view.global.shape().to_vec(),
                data: view.global.as_slice().to_vec(),
            },
            nav: grid_tensor(&label.nav),
            occ: grid_tensor(&label.occ),
            rays: Tensor {
                shape: vec![rays.len(), 3],
                data: ray_data,
            },
        }
    }

    /// Checks shapes, label ranges and the sampling stride.
    pub fn validate(&self) -> Result<()> {
        expect_shape(&self.local, &[CHANNELS, LOCAL_SIZE, LOCAL_SIZE])?;
        expect_shape(&self.global, &[CHANNELS, GLOBAL_SIZE, GLOBAL_SIZE])?;
        expect_shape(&self.nav, &[LOCAL_SIZE, LOCAL_SIZE])?;
        expect_shape(&self.occ, &[LOCAL_SIZE, LOCAL_SIZE])?;
        if self.rays.shape.len() != 2 || self.rays.shape[1] != 3 {
            return Err(Error::InvalidParam(format!("rays: expected (n, 3), got {:?}", self.rays.shape)));
        }
        let unit = |name: &str, t: &Tensor| {
            if t.data.iter().all(|v| (0.0..=1.0).contains(v)) {
                Ok(())
            } else {
                Err(Error::InvalidParam(format!("{name} values outside [0, 1]")))
            }
        };
        unit("nav", &self.nav)?;
        unit("occ", &self.occ)?;
        if self.meta.step % SAMPLE_STRIDE as u64 != 0 {
            return Err(Error::InvalidParam(format!(
                "step {} is not a multiple of {SAMPLE_STRIDE}",
                self.meta.step
            )));
        }
        if TargetCategory::from_id(self.meta.target_id) != Some(self.meta.target) {
            return Err(Error::InvalidParam("target id does not match target".into()));
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, t) in FILES.iter().zip(self.tensors()) {
            write_tensor(&dir.join(name), t)?;
        }
        fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&self.meta)?)?;
        Ok(())
    }

    /// Reads and validates a sample directory.
    pub fn load(dir: &Path) -> Result<Self> {
        let meta: SampleMeta = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
        let mut t = FILES.iter().map(|name| read_tensor(&dir.join(name)));
        let sample = Self {
            meta,
            local: t.next().expect("five files")?,
            global: t.next().expect("five files")?,
            nav: t.next().expect("five files")?,
            occ: t.next().expect("five files")?,
            rays: t.next().expect("five files")?,
        };
        sample.validate()?;
        Ok(sample)
    }

    /// Global map stack, at full resolution.
    pub fn global_stack(&self) -> Result<SemanticMapStack> {
        stack(&self.global, self.meta.global_origin, self.meta.resolution)
    }

    pub fn local_stack(&self) -> Result<SemanticMapStack> {
        stack(&self.local, self.meta.local_origin, self.meta.resolution)
    }

    /// Ground-truth labels as a provider response.
    pub fn label(&self) -> Result<PredictionResponse> {
        Ok(PredictionResponse {
            nav: tensor_grid(&self.nav)?,
            occ: tensor_grid(&self.occ)?,
            latency: Duration::ZERO,
        })
    }

    /// The predictor request the agent would have sent at this step.
    pub fn to_request(&self) -> Result<PredictRequest> {
        let pooled = self.global_stack()?.pool_global();
        let rows = self.rays.data.chunks_exact(3);
        Ok(PredictRequest {
            episode: self.meta.episode,
            step: self.meta.step,
            target: self.meta.target_id,
            orientation_bin: self.meta.orientation_bin,
            local: WireTensor::encode(&self.local.shape, &self.local.data),
            global: WireTensor::encode(&pooled.shape(), pooled.as_slice()),
            rays: Rays {
                depth: rows.clone().map(|r| r[1]).collect(),
                class: rows.map(|r| r[2] as i32).collect(),
            },
        })
    }

    fn tensors(&self) -> [&Tensor; 5] {
        [&self.local, &self.global, &self.nav, &self.occ, &self.rays]
    }

    /// Bitwise equality of every tensor plus equal metadata.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.meta == other.meta && self.tensors().iter().zip(other.tensors()).all(|(a, b)| a.bit_eq(b))
    }
}

/// Directory name of a sample relative to the split root.
pub fn sample_dir_name(episode: u64, step: u64) -> String {
    format!("ep{episode:05}/step{step:04}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub world_seed: u64,
    pub start: AgentState,
    pub target: TargetCategory,
    pub steps: usize,
    pub success: bool,
    /// Set when the expert did not reach the target; its samples are kept.
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    /// Sample directories relative to the split root.
    pub samples: Vec<String>,
}

/// Runs the ground-truth expert on one episode and hands every
/// `SAMPLE_STRIDE`-th step to `sink`. A sink error stops the episode and is
/// returned.
pub fn collect_episode_with(
    world: &WorldGrid,
    episode: &EpisodeConfig,
    episode_id: u64,
    run: &RunConfig,
    seed: u64,
    sink: &mut dyn FnMut(DatasetSample) -> Result<()>,
) -> Result<EpisodeRecord> {
    let oracle = GtOracle::new(world, episode.target, run.inflation)?;
    let mut samples = Vec::new();
    let mut sink_error = None;
    let result = run_episode_observed(
        world,
        episode,
        episode_id,
        &AgentSpec::new(AgentKind::Gt),
        run,
        seed,
        &mut |view| {
            if view.step % SAMPLE_STRIDE != 0 {
                return Ok(());
            }
            let s = DatasetSample::from_view(view, &oracle, episode.world_seed, episode_id, episode.target);
            let name = sample_dir_name(episode_id, s.meta.step);
            match sink(s) {
                Ok(()) => {
                    samples.push(name);
                    Ok(())
                }
                Err(e) => {
                    let msg = e.to_string();
                    sink_error = Some(e);
                    Err(Error::Empty(msg))
                }
            }
        },
    )?;
    if let Some(e) = sink_error {
        return Err(e);
    }
    Ok(EpisodeRecord {
        episode: episode_id,
        world_seed: episode.world_seed,
        start: episode.start,
        target: episode.target,
        steps: result.steps,
        success: result.success,
        failed: !result.success,
        failure: result.failure,
        samples,
    })
}

/// `collect_episode_with` writing each sample under `split_dir`.
pub fn collect_episode(
    world: &WorldGrid,
    episode: &EpisodeConfig,
    episode_id: u64,
    run: &RunConfig,
    seed: u64,
    split_dir: &Path,
) -> Result<EpisodeRecord> {
    collect_episode_with(world, episode, episode_id, run, seed, &mut |s| {
        s.write(&split_dir.join(sample_dir_name(s.meta.episode, s.meta.step)))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    /// Default world seeds: 36 / 4 / 8 disjoint worlds. The test worlds are the
    /// ones the navigation suite evaluates on.
    pub fn default_world_seeds(self) -> Vec<u64> {
        match self {
            Split::Train => (101..=136).collect(),
            Split::Val => (201..=204).collect(),
            Split::Test => (1..=8).collect(),
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidParam(format!("unknown split `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollectConfig {
    pub world: WorldGenParams,
    pub run: RunConfig,
    pub max_steps: usize,
    pub min_start_distance: f64,
    pub seed: u64,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self {
            world: WorldGenParams::default(),
            run: RunConfig {
                record_trajectory: false,
                ..RunConfig::default()
            },
            max_steps: crate::world::DEFAULT_MAX_STEPS,
            min_start_distance: 1.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ManifestCounts {
    pub episodes: usize,
    pub samples: usize,
    pub failed_episodes: usize,
}

/// Index of a split. Contains no timestamps, so identical inputs give an
/// identical file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub split: String,
    pub world_seeds: Vec<u64>,
    pub episodes_per_world: usize,
    pub counts: ManifestCounts,
    pub episodes: Vec<EpisodeRecord>,
    pub samples: Vec<String>,
}

impl DatasetManifest {
    fn from_records(split: &str, world_seeds: &[u64], episodes_per_world: usize, episodes: Vec<EpisodeRecord>) -> Self {
        let samples: Vec<String> = episodes.iter().flat_map(|e| e.samples.iter().cloned()).collect();
        Self {
            version: MANIFEST_VERSION,
            split: split.to_string(),
            world_seeds: world_seeds.to_vec(),
            episodes_per_world,
            counts: ManifestCounts {
                episodes: episodes.len(),
                samples: samples.len(),
                failed_episodes: episodes.iter().filter(|e| e.failed).count(),
            },
            episodes,
            samples,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Checks the counts against the on-disk sample directories under
    /// `split_dir` and loads every listed sample.
    pub fn verify(&self, split_dir: &Path) -> Result<()> {
        let on_disk = count_sample_dirs(split_dir)?;
        if on_disk != self.counts.samples || self.samples.len() != self.counts.samples {
            return Err(Error::InvalidParam(format!(
                "manifest lists {} samples, {} on disk",
                self.counts.samples, on_disk
            )));
        }
        if self.episodes.len() != self.counts.episodes {
            return Err(Error::InvalidParam("episode count does not match".into()));
        }
        for rel in &self.samples {
            DatasetSample::load(&split_dir.join(rel))?;
        }
        Ok(())
    }
}

fn count_sample_dirs(split_dir: &Path) -> Result<usize> {
    let mut n = 0;
    for ep in fs::read_dir(split_dir)? {
        let ep = ep?;
        if !ep.file_type()?.is_dir() || !ep.file_name().to_string_lossy().starts_with("ep") {
            continue;
        }
        for step in fs::read_dir(ep.path())? {
            let step = step?;
            if step.file_type()?.is_dir() && step.file_name().to_string_lossy().starts_with("step") {
                n += 1;
            }
        }
    }
    Ok(n)
}

/// Collects `episodes_per_world` expert episodes in each world and writes the
/// samples plus `manifest.json` to `root/<split>/`.
pub fn build_split(
    world_seeds: &[u64],
    episodes_per_world: usize,
    split: &str,
    root: &Path,
    cfg: &CollectConfig,
) -> Result<DatasetManifest> {
    let mut seen = BTreeSet::new();
    for &s in world_seeds {
        if !seen.insert(s) {
            return Err(Error::DuplicateSeed(s));
        }
    }
    let split_dir: PathBuf = root.join(split);
    fs::create_dir_all(&split_dir)?;

    let mut jobs = Vec::new();
    for &ws in world_seeds {
        let world = generate_world(ws, &cfg.world)?;
        let episodes = sample_episodes(
            &world,
            episodes_per_world,
            cfg.seed,
            cfg.max_steps,
            cfg.min_start_distance,
            cfg.run.inflation,
        )?;
        let world = std::sync::Arc::new(world);
        for (i, ep) in episodes.into_iter().enumerate() {
            jobs.push((world.clone(), ep, i as u64));
        }
    }
    let records = jobs
        .par_iter()
        .enumerate()
        .map(|(id, (world, ep, i))| {
            let seed = mix_seed(mix_seed(cfg.seed, world.seed()), *i);
            collect_episode(world, ep, id as u64, &cfg.run, seed, &split_dir)
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest::from_records(split, world_seeds, episodes_per_world, records);
    fs::write(split_dir.join(MANIFEST_FILE), manifest.to_json()?)?;
    Ok(manifest)
}
