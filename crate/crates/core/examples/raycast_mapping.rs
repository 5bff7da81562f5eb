//! Spins the robot in place, casting rays and building the semantic map.
//!
//! cargo run --example raycast_mapping -- [seed]

use objnav::harness::sample_episodes;
use objnav::mapping::{goal_mask, orientation_bin, SemanticMapStack, DEFAULT_MIN_REGION};
use objnav::world::{generate_world, normalize_angle, raycast_observe, SensorParams, TargetCategory, WorldGenParams, DEFAULT_INFLATION};

fn main() -> objnav::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let world = generate_world(seed, &WorldGenParams::default())?;
    let mut pose = sample_episodes(&world, 1, 0, 500, 1.5, DEFAULT_INFLATION)?[0].start;
    let mut global = SemanticMapStack::global_at(&pose, world.resolution());
    let sensor = SensorParams::default();

    for _ in 0..8 {
        let obs = raycast_observe(&world, &pose, &sensor)?;
        let hits = obs.rays.iter().filter(|r| r.hit_class.is_some()).count();
        global.integrate_observation(&obs);
        println!(
            "heading {:+.2} rad (bin {}): {hits}/{} rays hit, {} cells explored",
            pose.theta,
            orientation_bin(pose.theta),
            obs.rays.len(),
            global.explored_count()
        );
        pose.theta = normalize_angle(pose.theta + std::f64::consts::FRAC_PI_4);
    }

    let local = global.extract_local(&pose);
    println!("local window {:?}, global {:?}", local.shape(), global.shape());
    for t in TargetCategory::ALL {
        let m = goal_mask(&local, t, DEFAULT_MIN_REGION);
        if !m.is_empty() {
            println!("  {} visible: {} cells", t.name(), m.count);
        }
    }
    Ok(())
}
