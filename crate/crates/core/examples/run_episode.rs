//! Runs one object-goal episode with a chosen agent and prints the outcome.
//!
//! cargo run --release --example run_episode -- [gt|frontier|random] [world-seed] [episode-index]

use objnav::harness::{mix_seed, run_episode, sample_episodes, AgentKind, AgentSpec, RunConfig};
use objnav::world::{generate_world, WorldGenParams, DEFAULT_INFLATION, DEFAULT_MAX_STEPS};

fn main() -> objnav::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: AgentKind = args.next().as_deref().unwrap_or("gt").parse()?;
    let world_seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let index: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let world = generate_world(world_seed, &WorldGenParams::default())?;
    let episodes = sample_episodes(&world, index + 1, 0, DEFAULT_MAX_STEPS, 1.5, DEFAULT_INFLATION)?;
    let ep = &episodes[index];
    println!(
        "world {world_seed}: find {} from ({:.2}, {:.2}) heading {:.2}",
        ep.target, ep.start.x, ep.start.y, ep.start.theta
    );

    let r = run_episode(&world, ep, index as u64, &AgentSpec::new(kind), &RunConfig::default(), mix_seed(world_seed, index as u64))?;
    println!(
        "{}: success={} done={} steps={} path={:.2} m shortest={:.2} m dts={:.2} m spl={:.3} ({:.2?})",
        r.agent,
        r.success,
        r.declared_done,
        r.steps,
        r.path_length,
        r.shortest_length,
        r.dts,
        r.spl_term(),
        r.wall_time
    );
    if let Some(f) = &r.failure {
        println!("failure: {f}");
    }
    Ok(())
}
