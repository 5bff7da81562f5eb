//! Scoring predicted cost maps against dataset labels.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::costfield::{
    action_prediction_accuracy, fuse_costmap, occupancy_metrics, total_loss, LossWeights, Neighborhood,
};
use crate::dataset::{read_tensor, DatasetManifest, DatasetSample, Tensor};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::mapping::LOCAL_SIZE;
use crate::predictor::{partial_fmm_predict, FrontierConfig, PredictionResponse, RemotePredictor};

/// Where predictions for dataset samples come from.
pub enum PredictionSource {
    /// The labels themselves; every metric is perfect.
    Labels,
    /// Frontier baseline run on the sample's global map.
    Frontier(FrontierConfig),
    Remote(RemotePredictor),
    /// `<dir>/<sample>/{nav,occ}.smt`, each `(140, 140)`.
    Dir(PathBuf),
}

impl PredictionSource {
    pub fn predict(&mut self, sample: &DatasetSample, rel: &str) -> Result<PredictionResponse> {
        match self {
            PredictionSource::Labels => sample.label(),
            PredictionSource::Frontier(cfg) => {
                partial_fmm_predict(&sample.global_stack()?, sample.meta.target, &sample.meta.pose, cfg)
            }
            PredictionSource::Remote(client) => client.request(sample.to_request()?),
            PredictionSource::Dir(dir) => {
                let d = dir.join(rel);
                let resp = PredictionResponse {
                    nav: local_grid(&read_tensor(&d.join("nav.smt"))?)?,
                    occ: local_grid(&read_tensor(&d.join("occ.smt"))?)?,
                    latency: std::time::Duration::ZERO,
                };
                resp.validate()?;
                Ok(resp)
            }
        }
    }
}

fn local_grid(t: &Tensor) -> Result<Grid<f64>> {
    let want = [LOCAL_SIZE, LOCAL_SIZE];
    let shape = match t.shape.as_slice() {
        [1, h, w] | [h, w] => [*h, *w],
        _ => [0, 0],
    };
    if shape != want {
        return Err(Error::ShapeMismatch {
            expected: want.to_vec(),
            actual: t.shape.clone(),
        });
    }
    let data = t.data.iter().map(|&v| f64::from(v)).collect();
    Ok(Grid::from_vec(LOCAL_SIZE, LOCAL_SIZE, data).expect("shape checked"))
}

/// Per-sample prediction quality. Accuracies are percentages; they are empty
/// when the label window has no free cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionScores {
    pub sample: String,
    pub occupancy_loss: f64,
    pub costmap_loss: f64,
    pub gradient_loss: f64,
    pub total_loss: f64,
    pub aap5: Option<f64>,
    pub aap9: Option<f64>,
    pub mpa: f64,
    pub mf1: f64,
    pub miou: f64,
}

/// Scores `pred` against `label`. Occupied cells are those at or above
/// `theta_occ`; the action agreement compares the fused cost maps over the
/// label's free cells.
pub fn score_prediction(
    sample: &str,
    label: &PredictionResponse,
    pred: &PredictionResponse,
    theta_occ: f64,
) -> Result<PredictionScores> {
    let losses = total_loss(&label.nav, &label.occ, &pred.nav, &pred.occ)?;
    let gt_cost = fuse_costmap(&label.occ, &label.nav, theta_occ)?;
    let pred_cost = fuse_costmap(&pred.occ, &pred.nav, theta_occ)?;
    let free = label.occ.map(|&o| o < theta_occ);
    let aap = |n| match action_prediction_accuracy(&gt_cost, &pred_cost, &free, n) {
        Ok(v) => Ok(Some(v)),
        Err(Error::Empty(_)) => Ok(None),
        Err(e) => Err(e),
    };
    let occ = occupancy_metrics(&label.occ.map(|&o| o >= theta_occ), &pred.occ.map(|&o| o >= theta_occ))?;
    Ok(PredictionScores {
        sample: sample.to_string(),
        occupancy_loss: losses.occ,
        costmap_loss: losses.cost,
        gradient_loss: losses.dir,
        total_loss: losses.total(&LossWeights::default()),
        aap5: aap(Neighborhood::Five)?,
        aap9: aap(Neighborhood::Nine)?,
        mpa: occ.mpa,
        mf1: occ.mf1,
        miou: occ.miou,
    })
}

/// Scores every sample listed in the split's manifest.
pub fn evaluate_split(split_dir: &Path, source: &mut PredictionSource, theta_occ: f64) -> Result<Vec<PredictionScores>> {
    let manifest = DatasetManifest::load(&split_dir.join(crate::dataset::MANIFEST_FILE))?;
    let mut out = Vec::with_capacity(manifest.samples.len());
    for rel in &manifest.samples {
        let sample = DatasetSample::load(&split_dir.join(rel))?;
        let pred = source.predict(&sample, rel)?;
        out.push(score_prediction(rel, &sample.label()?, &pred, theta_occ)?);
    }
    Ok(out)
}

/// Mean of every column; accuracies average over the samples that have them.
pub fn mean_scores(rows: &[PredictionScores]) -> Option<PredictionScores> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let mean = |f: fn(&PredictionScores) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let mean_opt = |f: fn(&PredictionScores) -> Option<f64>| {
        let v: Vec<f64> = rows.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    Some(PredictionScores {
        sample: "mean".into(),
        occupancy_loss: mean(|r| r.occupancy_loss),
        costmap_loss: mean(|r| r.costmap_loss),
        gradient_loss: mean(|r| r.gradient_loss),
        total_loss: mean(|r| r.total_loss),
        aap5: mean_opt(|r| r.aap5),
        aap9: mean_opt(|r| r.aap9),
        mpa: mean(|r| r.mpa),
        mf1: mean(|r| r.mf1),
        miou: mean(|r| r.miou),
    })
}

/// CSV with one row per sample followed by a `mean` row.
pub fn prediction_csv(rows: &[PredictionScores]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows.iter().cloned().chain(mean_scores(rows)) {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}
