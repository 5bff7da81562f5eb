//! Scores the frontier baseline's cost maps against oracle labels along an
//! expert trajectory.
//!
//! cargo run --release --example prediction_metrics -- [seed]

use objnav::dataset::{collect_episode_with, CollectConfig};
use objnav::harness::{mean_scores, sample_episodes, score_prediction};
use objnav::predictor::{partial_fmm_predict, FrontierConfig};
use objnav::world::{generate_world, WorldGenParams, DEFAULT_INFLATION};

fn main() -> objnav::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let world = generate_world(seed, &WorldGenParams::default())?;
    let ep = &sample_episodes(&world, 1, 0, 500, 1.5, DEFAULT_INFLATION)?[0];
    let cfg = CollectConfig::default();

    let mut rows = Vec::new();
    collect_episode_with(&world, ep, 0, &cfg.run, 0, &mut |s| {
        let pred = partial_fmm_predict(&s.global_stack()?, s.meta.target, &s.meta.pose, &FrontierConfig::default())?;
        let name = format!("step {}", s.meta.step);
        rows.push(score_prediction(&name, &s.label()?, &pred, cfg.run.theta_occ)?);
        Ok(())
    })?;
    for r in rows.iter().step_by(4) {
        println!(
            "{:<9} L1 {:.3}  dir {:.3}  aAP5 {:>6.2}  aAP9 {:>6.2}  mIoU {:>6.2}",
            r.sample,
            r.costmap_loss,
            r.gradient_loss,
            r.aap5.unwrap_or(f64::NAN),
            r.aap9.unwrap_or(f64::NAN),
            r.miou
        );
    }
    if let Some(m) = mean_scores(&rows) {
        println!(
            "mean over {}: aAP5 {:.2} aAP9 {:.2} mPA {:.2} mF1 {:.2} mIoU {:.2}",
            rows.len(),
            m.aap5.unwrap_or(f64::NAN),
            m.aap9.unwrap_or(f64::NAN),
            m.mpa,
            m.mf1,
            m.miou
        );
    }
    Ok(())
}
