//! Maps the surroundings of a start near the target and shows the goal reacher
//! switching from inactive to active to done as the robot is placed closer.
//!
//! cargo run --release --example goal_reacher -- [seed]

use objnav::controller::{goal_reacher_update, GoalReacherConfig, GoalStatus};
use objnav::harness::{field_at, sample_episodes, target_distance_field};
use objnav::mapping::SemanticMapStack;
use objnav::world::{generate_world, raycast_observe, AgentState, SensorParams, WorldGenParams, DEFAULT_INFLATION};

fn main() -> objnav::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let world = generate_world(seed, &WorldGenParams::default())?;
    let ep = &sample_episodes(&world, 1, 0, 500, 1.5, DEFAULT_INFLATION)?[0];
    let truth = target_distance_field(&world, ep.target)?;
    let cfg = GoalReacherConfig::default();
    println!("target {}; done below {:.2} m of mapped geodesic distance", ep.target, cfg.done_distance());

    // Walk down the true distance field, mapping a full turn at each stop.
    let blocked = world.inflated_occupancy(DEFAULT_INFLATION);
    let mut global = SemanticMapStack::global_at(&ep.start, world.resolution());
    let mut pose = ep.start;
    for stop in 0..40 {
        for k in 0..4 {
            let look = AgentState::at(pose.x, pose.y, pose.theta + k as f64 * std::f64::consts::FRAC_PI_2);
            global.integrate_observation(&raycast_observe(&world, &look, &SensorParams::default())?);
        }
        let status = goal_reacher_update(&global.extract_local(&pose), ep.target, &pose, &cfg);
        let label = match &status {
            GoalStatus::Inactive => "inactive".to_string(),
            GoalStatus::Active(m) => format!("active (cost here {:.3})", m.cost_at(pose.x, pose.y)),
            GoalStatus::Done => "done".to_string(),
        };
        println!("stop {stop:>2}: true distance {:.2} m, {label}", field_at(&truth, &world, pose.x, pose.y));
        if status.is_done() {
            break;
        }
        // Step 0.3 m to the free neighbour with the smallest true distance.
        let here = field_at(&truth, &world, pose.x, pose.y);
        let best = (0..16)
            .map(|i| {
                let a = i as f64 * std::f64::consts::PI / 8.0;
                (pose.x + 0.3 * a.cos(), pose.y + 0.3 * a.sin(), a)
            })
            .filter(|&(x, y, _)| {
                let (cx, cy) = world.cell_of(x, y);
                blocked.try_get(cx, cy) == Some(&false)
            })
            .min_by(|a, b| field_at(&truth, &world, a.0, a.1).total_cmp(&field_at(&truth, &world, b.0, b.1)));
        match best {
            Some((x, y, a)) if field_at(&truth, &world, x, y) < here => pose = AgentState::at(x, y, a),
            _ => break,
        }
    }
    Ok(())
}
