mod common;

use std::f64::consts::LN_2;

use common::XorShift;
use objnav::costfield::{
    action_prediction_accuracy, costmap_loss, gradient_direction_loss, occupancy_loss, occupancy_metrics, total_loss,
    LossBreakdown, LossWeights, Neighborhood,
};
use objnav::grid::Grid;
use objnav::harness::{smoothness, spl, spl_term};
use objnav::world::Control;
use proptest::prelude::*;

fn grid(w: usize, h: usize, v: Vec<f64>) -> Grid<f64> {
    Grid::from_vec(w, h, v).unwrap()
}

fn random_grid(w: usize, h: usize, rng: &mut XorShift) -> Grid<f64> {
    Grid::from_fn(w, h, |_, _| rng.unit())
}

#[test]
fn cross_entropy_hand_values() {
    let gt = Grid::from_fn(7, 5, |x, y| ((x + y) % 2) as f64);
    let half = Grid::filled(7, 5, 0.5);
    assert!((occupancy_loss(&gt, &half).unwrap() - LN_2).abs() < 1e-6);
    let one = grid(1, 1, vec![1.0]);
    assert!((occupancy_loss(&one, &grid(1, 1, vec![0.25])).unwrap() - 4f64.ln()).abs() < 1e-12);
    assert!(occupancy_loss(&gt, &gt).unwrap() <= 1.2e-6);
}

#[test]
fn costmap_loss_hand_values() {
    let free = Grid::filled(2, 2, 0.0);
    let gt = grid(2, 2, vec![0.1, 0.2, 0.3, 0.4]);
    let plus = gt.map(|v| v + 0.1);
    assert!((costmap_loss(&gt, &plus, &free).unwrap() - 0.1).abs() < 1e-9);
    assert_eq!(costmap_loss(&gt, &gt, &free).unwrap(), 0.0);
    let occ = grid(2, 2, vec![1.0, 0.0, 1.0, 0.0]);
    let pred = grid(2, 2, vec![0.9, 0.4, 0.0, 0.0]);
    assert!((costmap_loss(&gt, &pred, &occ).unwrap() - 0.15).abs() < 1e-9);
}

#[test]
fn gradient_loss_is_bounded_on_random_pairs() {
    let mut rng = XorShift::new(21);
    let mut max: f64 = 0.0;
    for _ in 0..1000 {
        let (w, h) = (3 + rng.below(30), 3 + rng.below(30));
        let gt = random_grid(w, h, &mut rng);
        let pred = random_grid(w, h, &mut rng);
        let occ = Grid::from_fn(w, h, |_, _| if rng.unit() < 0.2 { 1.0 } else { 0.0 });
        let l = gradient_direction_loss(&gt, &pred, &occ).unwrap();
        assert!((0.0..=2.0).contains(&l), "{l}");
        max = max.max(l);
        let affine = gt.map(|v| 2.0 * v + 0.3);
        assert!(gradient_direction_loss(&gt, &affine, &occ).unwrap() <= 1e-12);
    }
    assert!(max > 0.5);
}

#[test]
fn negated_map_is_antiparallel() {
    let gt = Grid::from_fn(6, 5, |x, y| (x * x) as f64 * 0.1 + y as f64 * 0.3);
    let free = Grid::filled(6, 5, 0.0);
    let l = gradient_direction_loss(&gt, &gt.map(|v| -v), &free).unwrap();
    assert!((l - 2.0).abs() < 1e-12);
}

#[test]
fn total_is_the_weighted_sum() {
    let b = LossBreakdown {
        occ: 0.2,
        cost: 0.1,
        dir: 0.3,
    };
    assert!((b.total(&LossWeights::default()) - 0.65).abs() < 1e-12);
    let only_cost = LossWeights {
        occ: 0.0,
        cost: 1.0,
        dir: 0.0,
    };
    assert_eq!(b.total(&only_cost), 0.1);
    let mut rng = XorShift::new(1);
    let gt = random_grid(9, 9, &mut rng);
    let occ = Grid::from_fn(9, 9, |x, _| if x == 4 { 1.0 } else { 0.0 });
    let l = total_loss(&gt, &occ, &gt, &occ).unwrap();
    assert!(l.cost == 0.0 && l.dir < 1e-12 && l.occ < 1.2e-6);
}

// Action agreement recomputed by enumerating each cell's moves.
fn naive_aap(gt: &Grid<f64>, pred: &Grid<f64>, nav: &Grid<bool>, moves: usize) -> f64 {
    let order: [(i64, i64); 9] = [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)];
    let pick = |m: &Grid<f64>, x: usize, y: usize| {
        let mut options: Vec<(f64, usize)> = order[..moves]
            .iter()
            .enumerate()
            .filter_map(|(k, (dx, dy))| m.try_get(x as i64 + dx, y as i64 + dy).map(|&c| (c, k)))
            .collect();
        options.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        options[0].1
    };
    let (mut n, mut ok) = (0, 0);
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            if *nav.get(x, y) {
                n += 1;
                if pick(gt, x, y) == pick(pred, x, y) {
                    ok += 1;
                }
            }
        }
    }
    100.0 * ok as f64 / n as f64
}

#[test]
fn action_agreement_matches_enumeration() {
    let mut rng = XorShift::new(33);
    for _ in 0..200 {
        let (w, h) = (2 + rng.below(12), 2 + rng.below(12));
        // Coarse levels force plenty of ties.
        let gt = Grid::from_fn(w, h, |_, _| rng.below(4) as f64 / 4.0);
        let pred = Grid::from_fn(w, h, |_, _| rng.below(4) as f64 / 4.0);
        let mut nav = Grid::from_fn(w, h, |_, _| rng.unit() < 0.7);
        nav.set(0, 0, true);
        for (moves, n) in [(5, Neighborhood::Five), (9, Neighborhood::Nine)] {
            let got = action_prediction_accuracy(&gt, &pred, &nav, n).unwrap();
            assert_eq!(got, naive_aap(&gt, &pred, &nav, moves));
        }
    }
}

#[test]
fn action_agreement_one_cell_off() {
    let gt = grid(3, 3, vec![0.5, 0.4, 0.3, 0.6, 0.5, 0.4, 0.7, 0.6, 0.5]);
    let mut pred = gt.clone();
    pred.set(2, 2, 0.0);
    let nav = Grid::filled(3, 3, true);
    let got = action_prediction_accuracy(&gt, &pred, &nav, Neighborhood::Five).unwrap();
    assert_eq!(got, naive_aap(&gt, &pred, &nav, 5));
    // Only cell (0, 1) changes its choice: south now beats east.
    let mut one = gt.clone();
    one.set(0, 0, 0.45);
    let a = action_prediction_accuracy(&gt, &one, &nav, Neighborhood::Five).unwrap();
    assert!((a - 800.0 / 9.0).abs() < 1e-9, "{a}");
    let none = Grid::filled(3, 3, false);
    assert!(action_prediction_accuracy(&gt, &gt, &none, Neighborhood::Nine).is_err());
}

#[test]
fn action_agreement_survives_monotone_transforms() {
    let mut rng = XorShift::new(99);
    let transforms: [fn(f64) -> f64; 4] = [|v| v + 0.3, |v| 3.0 * v - 1.0, |v| v.exp(), |v| v * v * v];
    for _ in 0..100 {
        let (w, h) = (5 + rng.below(40), 5 + rng.below(40));
        let gt = random_grid(w, h, &mut rng);
        let nav = Grid::from_fn(w, h, |_, _| rng.unit() < 0.8);
        if !nav.iter().any(|&b| b) {
            continue;
        }
        for f in transforms {
            let pred = gt.map(|&v| f(v));
            for n in [Neighborhood::Five, Neighborhood::Nine] {
                assert_eq!(action_prediction_accuracy(&gt, &pred, &nav, n).unwrap(), 100.0);
            }
        }
    }
}

#[test]
fn occupancy_metrics_match_the_confusion_matrix() {
    // 4x4: 6 occupied hits, 2 misses, 2 false alarms, 6 free hits.
    let gt = Grid::from_vec(4, 4, (0..16).map(|i| i < 8).collect()).unwrap();
    let pred = Grid::from_vec(4, 4, (0..16).map(|i| (2..10).contains(&i)).collect()).unwrap();
    let m = occupancy_metrics(&gt, &pred).unwrap();
    let (tp, fp, fn_, tn) = (6.0, 2.0, 2.0, 6.0);
    let f1_occ = 2.0 * tp / (2.0 * tp + fp + fn_);
    let f1_free = 2.0 * tn / (2.0 * tn + fn_ + fp);
    let iou_occ = tp / (tp + fp + fn_);
    let iou_free = tn / (tn + fp + fn_);
    assert!((m.mf1 - 50.0 * (f1_occ + f1_free)).abs() < 1e-9);
    assert!((m.miou - 50.0 * (iou_occ + iou_free)).abs() < 1e-9);
    assert!((m.mpa - 50.0 * (tp / (tp + fn_) + tn / (tn + fp))).abs() < 1e-9);

    let same = occupancy_metrics(&gt, &gt).unwrap();
    assert_eq!((same.mpa, same.mf1, same.miou), (100.0, 100.0, 100.0));
    let flipped = occupancy_metrics(&gt, &gt.map(|b| !b)).unwrap();
    assert_eq!((flipped.mf1, flipped.miou), (0.0, 0.0));
}

#[test]
fn spl_and_smoothness_trivial_cases() {
    assert_eq!(spl(&[(true, 4.0, 4.0)]).unwrap(), 1.0);
    assert_eq!(spl(&[(false, 4.0, 4.0)]).unwrap(), 0.0);
    assert_eq!(spl(&[(true, 4.0, 8.0)]).unwrap(), 0.5);
    assert_eq!(spl_term(true, 4.0, 2.0), 1.0);
    assert!(spl(&[]).is_err());
    let flat = smoothness(&[Control::new(0.4, -0.2); 30], 0.1);
    assert_eq!(
        (flat.acc_linear, flat.acc_angular, flat.jerk_linear, flat.jerk_angular),
        (0.0, 0.0, 0.0, 0.0)
    );
    let ramp: Vec<Control> = (0..30).map(|i| Control::new(i as f64 * 0.125, 0.0)).collect();
    let r = smoothness(&ramp, 0.5);
    assert_eq!((r.acc_linear, r.jerk_linear, r.acc_angular), (0.25, 0.0, 0.0));
    assert_eq!(smoothness(&[], 0.1), Default::default());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn spl_never_exceeds_success_rate(items in prop::collection::vec((any::<bool>(), 0f64..20.0, 0f64..40.0), 1..60)) {
        let sr = items.iter().filter(|i| i.0).count() as f64 / items.len() as f64;
        prop_assert!(spl(&items).unwrap() <= sr + 1e-12);
    }

    #[test]
    fn metrics_are_pure(seed in any::<u64>(), w in 3usize..20, h in 3usize..20) {
        let mut rng = XorShift::new(seed);
        let gt = random_grid(w, h, &mut rng);
        let pred = random_grid(w, h, &mut rng);
        let occ = Grid::from_fn(w, h, |_, _| (rng.unit() < 0.3) as u8 as f64);
        let a = total_loss(&gt, &occ, &pred, &occ).unwrap();
        let b = total_loss(&gt, &occ, &pred, &occ).unwrap();
        prop_assert_eq!(a.occ.to_bits(), b.occ.to_bits());
        prop_assert_eq!(a.cost.to_bits(), b.cost.to_bits());
        prop_assert_eq!(a.dir.to_bits(), b.dir.to_bits());
        let nav = occ.map(|&o| o < 0.5);
        if nav.iter().any(|&b| b) {
            let x = action_prediction_accuracy(&gt, &pred, &nav, Neighborhood::Nine).unwrap();
            prop_assert_eq!(x.to_bits(), action_prediction_accuracy(&gt, &pred, &nav, Neighborhood::Nine).unwrap().to_bits());
        }
    }

    #[test]
    fn affine_predictions_keep_directions(seed in any::<u64>(), a in 0.01f64..50.0, b in -10f64..10.0) {
        let mut rng = XorShift::new(seed);
        let gt = random_grid(12, 9, &mut rng);
        let occ = Grid::from_fn(12, 9, |_, _| (rng.unit() < 0.15) as u8 as f64);
        let l = gradient_direction_loss(&gt, &gt.map(|v| a * v + b), &occ).unwrap();
        prop_assert!(l <= 1e-9);
    }
}
