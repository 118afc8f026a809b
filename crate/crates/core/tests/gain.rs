use pantilt::angle_map::{BoundingBox, DeviationAngles};
use pantilt::gain::{apply_deadband, apply_gain, efficiency, iou, update_gain, DeadBand, DeadBandDecision, GainState};
use pantilt::Error;
use proptest::prelude::*;

fn replay(distances: &[f64]) -> Vec<f64> {
    let mut s = GainState { prev_distance: distances[0], ..GainState::default() };
    distances[1..]
        .iter()
        .map(|&d| {
            s = update_gain(&s, d).unwrap();
            s.gain_k
        })
        .collect()
}

/// Box with its corners, for an independent overlap computation.
fn corners(b: &BoundingBox) -> (f64, f64, f64, f64) {
    (b.cx - b.w / 2.0, b.cy - b.h / 2.0, b.cx + b.w / 2.0, b.cy + b.h / 2.0)
}

fn box_strategy() -> impl Strategy<Value = BoundingBox> {
    (-50.0..50.0f64, -50.0..50.0f64, 0.1..40.0f64, 0.1..40.0f64).prop_map(|(x, y, w, h)| BoundingBox::new(x, y, w, h))
}

proptest! {
    #[test]
    fn k_stays_bounded_and_moves_by_gamma(ds in prop::collection::vec(0.0..500.0f64, 2..60)) {
        let ks = replay(&ds);
        let mut prev = GainState::default().gain_k;
        for k in ks {
            prop_assert!((0.2..=0.6).contains(&k));
            let step = (k - prev).abs();
            prop_assert!((step - 0.1).abs() < 1e-12 || ((k == 0.2 || k == 0.6) && step < 0.1 + 1e-12));
            prev = k;
        }
    }

    #[test]
    fn replay_is_deterministic(ds in prop::collection::vec(0.0..500.0f64, 2..40)) {
        prop_assert_eq!(replay(&ds), replay(&ds));
    }

    #[test]
    fn k_rises_while_distance_does_not_shrink(start in 1.0..100.0f64, growth in prop::collection::vec(0.0..50.0f64, 1..10)) {
        let mut ds = vec![start];
        for g in growth {
            ds.push(ds.last().unwrap() + g);
        }
        let ks = replay(&ds);
        let mut prev = GainState::default().gain_k;
        for k in ks {
            prop_assert!(k >= prev);
            prev = k;
        }
    }

    #[test]
    fn gain_scales_both_axes(h in -90.0..90.0f64, v in -90.0..90.0f64, k in 0.2..0.6f64) {
        let g = apply_gain(&DeviationAngles::new(h, v), k);
        prop_assert_eq!((g.h_deg, g.v_deg), (h * k, v * k));
    }

    #[test]
    fn deadband_holds_iff_both_axes_inside(h in -5.0..5.0f64, v in -5.0..5.0f64) {
        let d = DeviationAngles::new(h, v);
        let inside = h.abs() < 2.0 && v.abs() < 2.0;
        match apply_deadband(&d, &DeadBand::default()) {
            DeadBandDecision::Hold => prop_assert!(inside),
            DeadBandDecision::Adjust(a) => { prop_assert!(!inside); prop_assert_eq!(a, d); }
        }
    }

    #[test]
    fn iou_is_symmetric_bounded_and_matches_corner_formula(a in box_strategy(), b in box_strategy()) {
        let v = iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v, iou(&b, &a));
        let (ax0, ay0, ax1, ay1) = corners(&a);
        let (bx0, by0, bx1, by1) = corners(&b);
        let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
        let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
        let inter = iw * ih;
        let want = inter / (a.w * a.h + b.w * b.h - inter);
        prop_assert!((v - want).abs() < 1e-12);
    }

    #[test]
    fn iou_of_a_box_with_itself_is_one(a in box_strategy()) {
        prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn efficiency_is_zero_for_equal_times(t in 0.01..100.0f64) {
        prop_assert_eq!(efficiency(t, t).unwrap(), 0.0);
    }
}

#[test]
fn update_gain_rejects_negative_distance() {
    assert!(matches!(update_gain(&GainState::default(), -1.0), Err(Error::Domain(_))));
}

#[test]
fn efficiency_rejects_non_positive_baseline() {
    assert!(matches!(efficiency(1.0, 0.0), Err(Error::Domain(_))));
    assert!(matches!(efficiency(1.0, -2.0), Err(Error::Domain(_))));
}

#[test]
fn degenerate_boxes_have_zero_iou() {
    let z = BoundingBox::new(1.0, 1.0, 0.0, 0.0);
    assert_eq!(iou(&z, &z), 0.0);
}

#[test]
fn boundary_deviation_adjusts() {
    let d = DeviationAngles::new(2.0, 0.0);
    assert_eq!(apply_deadband(&d, &DeadBand::default()), DeadBandDecision::Adjust(d));
}
