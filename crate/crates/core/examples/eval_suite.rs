//! Runs a small navigation suite for each built-in agent and prints the
//! aggregate metrics.
//!
//! cargo run --release --example eval_suite -- [worlds] [episodes-per-world]

use objnav::harness::{run_suite, AgentKind, AgentSpec, SuiteConfig};

fn main() -> objnav::Result<()> {
    let mut args = std::env::args().skip(1);
    let worlds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let per: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let cfg = SuiteConfig {
        world_seeds: (1..=worlds).collect(),
        episodes_per_world: per,
        ..SuiteConfig::default()
    };
    println!("agent     SR     SPL    DTS(m)  steps  jerk(v)");
    for kind in [AgentKind::Gt, AgentKind::Frontier, AgentKind::Random] {
        let (r, _) = run_suite(&cfg, &AgentSpec::new(kind))?;
        println!(
            "{:<8} {:.3}  {:.3}  {:>6.2}  {:>5.0}  {:.3}",
            r.agent, r.sr, r.spl, r.dts, r.time_steps, r.jerk_linear
        );
    }
    Ok(())
}
