//! Solves the geodesic distance to a target class with fast marching and
//! prints the normalized local cost window around a start pose.
//!
//! cargo run --release --example fmm_costmap -- [seed]

use objnav::costfield::{crop, goal_distance, normalize_costs};
use objnav::harness::sample_episodes;
use objnav::mapping::LOCAL_SIZE;
use objnav::predictor::local_origin_cell;
use objnav::world::{generate_world, inflation_cells, WorldGenParams, DEFAULT_INFLATION};

fn main() -> objnav::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let world = generate_world(seed, &WorldGenParams::default())?;
    let ep = &sample_episodes(&world, 1, 0, 500, 1.5, DEFAULT_INFLATION)?[0];
    let goal = world.cells_of(ep.target.class());

    let t = std::time::Instant::now();
    let r = inflation_cells(DEFAULT_INFLATION, world.resolution());
    let dist = goal_distance(&world.occupancy(), &goal, r, world.resolution())?;
    let reachable = dist.iter().filter(|d| d.is_finite()).count();
    println!(
        "{}: {} goal cells, {reachable} reachable cells, solved in {:.1?}",
        ep.target,
        goal.len(),
        t.elapsed()
    );
    let (sx, sy) = world.cell_of(ep.start.x, ep.start.y);
    println!("distance from start: {:.2} m", dist.get(sx as usize, sy as usize));

    let (x0, y0) = local_origin_cell(&ep.start, world.resolution());
    let window = normalize_costs(&crop(&dist, x0, y0, LOCAL_SIZE, LOCAL_SIZE, f64::INFINITY));
    // 0-9 shades of cost, one character per 5x5 block.
    for by in (0..LOCAL_SIZE / 5).rev() {
        let row: String = (0..LOCAL_SIZE / 5)
            .map(|bx| {
                let c = *window.get(5 * bx + 2, 5 * by + 2);
                if c >= 1.0 {
                    '#'
                } else {
                    char::from(b'0' + (c * 10.0) as u8)
                }
            })
            .collect();
        println!("{row}");
    }
    Ok(())
}
