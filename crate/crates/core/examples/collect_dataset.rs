//! Collects a tiny expert dataset split and reloads one sample.
//!
//! cargo run --release --example collect_dataset -- [out-dir]

use objnav::dataset::{build_split, CollectConfig, DatasetManifest, DatasetSample, MANIFEST_FILE};

fn main() -> objnav::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("objnav_example_data"));
    let cfg = CollectConfig {
        max_steps: 40,
        ..CollectConfig::default()
    };
    let m = build_split(&[201, 202], 2, "val", &root, &cfg)?;
    println!(
        "{} episodes, {} samples, {} expert failures",
        m.counts.episodes, m.counts.samples, m.counts.failed_episodes
    );
    for e in &m.episodes {
        println!(
            "  ep {} world {} {} steps={} success={} samples={}",
            e.episode,
            e.world_seed,
            e.target,
            e.steps,
            e.success,
            e.samples.len()
        );
    }

    let split = root.join("val");
    let reread = DatasetManifest::load(&split.join(MANIFEST_FILE))?;
    reread.verify(&split)?;
    let s = DatasetSample::load(&split.join(&m.samples[1]))?;
    println!(
        "sample {}: local {:?} global {:?} nav {:?} rays {:?}, orientation bin {}",
        m.samples[1], s.local.shape, s.global.shape, s.nav.shape, s.rays.shape, s.meta.orientation_bin
    );
    println!("written to {}", split.display());
    Ok(())
}
