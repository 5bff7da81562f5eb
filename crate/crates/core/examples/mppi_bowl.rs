//! Drives the sampling-based controller down a conical cost bowl on an
//! empty map and prints the closed-loop trajectory.
//!
//! cargo run --release --example mppi_bowl

use objnav::controller::{mpc_step, ControlSequence, MpcConfig};
use objnav::costfield::CostMap;
use objnav::grid::Grid;
use objnav::world::{integrate, AgentState};

fn main() -> objnav::Result<()> {
    let (n, res) = (100, 0.05);
    let goal = (3.5, 1.0);
    let far = (goal.0 as f64).hypot(5.0);
    let nav = Grid::from_fn(n, n, |x, y| {
        let (cx, cy) = ((x as f64 + 0.5) * res, (y as f64 + 0.5) * res);
        ((cx - goal.0).hypot(cy - goal.1) / far).min(1.0)
    });
    let cmap = CostMap::from_prediction(nav, Grid::filled(n, n, 0.0), 0.5, 0, (0.0, 0.0), res)?;

    let cfg = MpcConfig::default();
    let mut state = AgentState::at(1.0, 4.0, 0.0);
    let mut seq = ControlSequence::zeros(cfg.horizon);
    for t in 0..120 {
        let (u, next) = mpc_step(&state, &seq, &cmap, &cfg, t)?;
        seq = next;
        state = integrate(&state, u, cfg.dt);
        if t % 10 == 0 {
            println!(
                "t={t:>3} pos=({:.2}, {:.2}) heading {:+.2} v={:.2} w={:+.2} cost {:.3}",
                state.x,
                state.y,
                state.theta,
                u.v,
                u.omega,
                cmap.cost_at(state.x, state.y)
            );
        }
    }
    println!(
        "final distance to the bowl minimum: {:.2} m",
        (state.x - goal.0).hypot(state.y - goal.1)
    );
    Ok(())
}
