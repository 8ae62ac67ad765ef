mod common;

use pipeaug::geometry::Axis;
use pipeaug::ops;
use proptest::prelude::*;

fn size() -> impl Strategy<Value = u32> {
    8u32..=96
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rotate_samples_inside_source(w in size(), h in size(), theta in -45.0f64..=45.0) {
        prop_assume!(!common::crop_collapses(w, h, theta));
        prop_assert_eq!(common::rotate_probe(w, h, theta), 0);
    }

    #[test]
    fn shear_samples_inside_source(w in size(), h in size(), x_axis: bool, frac in -1.0f64..1.0) {
        let angle = frac * common::max_shear_angle(w, h);
        let axis = if x_axis { Axis::X } else { Axis::Y };
        prop_assert_eq!(common::shear_probe(w, h, axis, angle), 0);
    }

    #[test]
    fn skew_samples_inside_source(w in size(), h in size(), kind in 0usize..4, severity in 0.01f64..=1.0, pick in 0.0f64..=1.0) {
        let max = ops::max_skew_displacement(w, h, severity);
        let d = (pick * max as f64).round() as u32;
        prop_assert_eq!(common::skew_probe(w, h, common::SKEW_KINDS[kind], d), 0);
    }
}

#[test]
fn extreme_parameters_stay_inside() {
    for (w, h) in [(8, 8), (9, 40), (200, 100), (31, 17)] {
        assert_eq!(common::rotate_probe(w, h, 45.0), 0);
        assert_eq!(common::rotate_probe(w, h, -45.0), 0);
        let a = common::max_shear_angle(w, h);
        for axis in [Axis::X, Axis::Y] {
            assert_eq!(common::shear_probe(w, h, axis, a), 0);
            assert_eq!(common::shear_probe(w, h, axis, -a), 0);
        }
        let d = ops::max_skew_displacement(w, h, 1.0);
        for kind in common::SKEW_KINDS {
            assert_eq!(common::skew_probe(w, h, kind, d), 0, "{w}x{h} {kind:?} d={d}");
        }
    }
}
