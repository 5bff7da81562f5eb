//! Generates a house, prints what is in it and saves it as JSON.
//!
//! cargo run --example gen_world -- [seed] [out.json]

use std::collections::BTreeMap;

use objnav::world::{generate_world, CellClass, WorldGenParams, WorldGrid};

fn main() -> objnav::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let out = args.next().unwrap_or_else(|| format!("world_{seed}.json"));

    let w = generate_world(seed, &WorldGenParams::default())?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for c in w.cells().iter() {
        let name = match c {
            CellClass::Free => "free".to_string(),
            CellClass::Obstacle => "wall".to_string(),
            CellClass::Object(o) => o.name().to_string(),
        };
        *counts.entry(name).or_default() += 1;
    }
    println!(
        "{}x{} cells at {} m ({:.1} x {:.1} m)",
        w.width(),
        w.height(),
        w.resolution(),
        w.width() as f64 * w.resolution(),
        w.height() as f64 * w.resolution()
    );
    for (name, n) in &counts {
        println!("  {name:<12} {n:>6}");
    }

    // Coarse picture: one character per 4x4 block, top row is +y.
    for by in (0..w.height() / 4).rev() {
        let row: String = (0..w.width() / 4)
            .map(|bx| match w.class_at(4 * bx as i64 + 2, 4 * by as i64 + 2) {
                Some(CellClass::Free) => ' ',
                Some(CellClass::Obstacle) => '#',
                Some(CellClass::Object(_)) => 'o',
                None => '?',
            })
            .collect();
        println!("{row}");
    }

    w.save(&out)?;
    assert_eq!(WorldGrid::load(&out)?, w);
    println!("saved {out}");
    Ok(())
}
