//! Starts the stub predictor on a local TCP port and runs an episode whose
//! cost maps come over the wire.
//!
//! cargo run --release --example remote_predictor

use objnav::harness::{run_episode, sample_episodes, AgentSpec, RunConfig};
use objnav::predictor::{spawn_tcp_echo, EchoMode};
use objnav::world::{generate_world, WorldGenParams, DEFAULT_INFLATION};

fn main() -> objnav::Result<()> {
    let (addr, _server) = spawn_tcp_echo("127.0.0.1:0", EchoMode::Uniform(0.5))?;
    println!("stub predictor on {addr}");

    let world = generate_world(1, &WorldGenParams::default())?;
    let ep = &sample_episodes(&world, 1, 0, 60, 1.5, DEFAULT_INFLATION)?[0];
    let r = run_episode(&world, ep, 0, &AgentSpec::remote(addr.to_string()), &RunConfig::default(), 0)?;
    println!(
        "{} steps with a flat remote cost map: path {:.2} m, failure {:?}",
        r.steps, r.path_length, r.failure
    );
    Ok(())
}
