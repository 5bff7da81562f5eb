use image::{Rgb, RgbImage};

use super::episode::EpisodeResult;
use crate::world::{CellClass, WorldGrid};

const SCALE: u32 = 2;

fn class_color(c: CellClass, target: CellClass) -> Rgb<u8> {
    match c {
        CellClass::Free => Rgb([245, 245, 245]),
        CellClass::Obstacle => Rgb([60, 60, 60]),
        _ if c == target => Rgb([220, 30, 30]),
        CellClass::Object(s) => {
            // Muted palette, stable per class.
            let i = s.index() as u32;
            Rgb([
                (110 + (i * 37) % 100) as u8,
                (120 + (i * 53) % 90) as u8,
                (130 + (i * 71) % 80) as u8,
            ])
        }
    }
}

/// Top-down image of the world with the trajectory; north is up.
pub fn render_episode(world: &WorldGrid, r: &EpisodeResult) -> RgbImage {
    let (w, h) = (world.width() as u32, world.height() as u32);
    let target = r.target.cell_class();
    let mut img = RgbImage::new(w * SCALE, h * SCALE);
    for y in 0..h {
        for x in 0..w {
            let c = class_color(*world.cells().get(x as usize, y as usize), target);
            for dy in 0..SCALE {
                for dx in 0..SCALE {
                    img.put_pixel(x * SCALE + dx, (h - 1 - y) * SCALE + dy, c);
                }
            }
        }
    }
    let res = world.resolution();
    let mut dot = |x: f64, y: f64, color: Rgb<u8>, radius: i64| {
        let px = (x / res * SCALE as f64) as i64;
        let py = (h * SCALE) as i64 - 1 - (y / res * SCALE as f64) as i64;
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let (qx, qy) = (px + dx, py + dy);
                if qx >= 0 && qy >= 0 && (qx as u32) < w * SCALE && (qy as u32) < h * SCALE {
                    img.put_pixel(qx as u32, qy as u32, color);
                }
            }
        }
    };
    for &(x, y) in &r.trajectory {
        dot(x, y, Rgb([30, 90, 220]), 0);
    }
    dot(r.start.x, r.start.y, Rgb([20, 170, 60]), 2);
    let end = if r.success { Rgb([250, 180, 0]) } else { Rgb([150, 0, 150]) };
    dot(r.final_pose.x, r.final_pose.y, end, 2);
    img
}
