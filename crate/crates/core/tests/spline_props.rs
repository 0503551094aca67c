use cascade_pde::spline::{InitialDensity, SplineKind};
use proptest::prelude::*;

fn samples(min: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((1.0f64..2.0, 0.0f64..5.0), min..12).prop_filter_map("non-zero data", |steps| {
        let mut x = 0.0;
        let pts: Vec<(f64, f64)> = steps
            .into_iter()
            .map(|(dx, y)| {
                x += dx;
                (x, y)
            })
            .collect();
        pts.iter().any(|p| p.1 > 0.0).then_some(pts)
    })
}

proptest! {
    #[test]
    fn interpolates_every_knot(pts in samples(2)) {
        let s = InitialDensity::build(&pts).unwrap();
        for &(x, y) in &pts {
            prop_assert!((s.eval_unclamped(x).unwrap() - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn ends_are_flat(pts in samples(2)) {
        let s = InitialDensity::build(&pts).unwrap();
        let (l, r) = s.domain();
        let h = 1e-6;
        let left = (s.eval(l + h).unwrap() - s.eval(l).unwrap()) / h;
        let right = (s.eval(r).unwrap() - s.eval(r - h).unwrap()) / h;
        prop_assert!(left.abs() <= 1e-4, "{left}");
        prop_assert!(right.abs() <= 1e-4, "{right}");
    }

    #[test]
    fn clamped_second_derivative_is_continuous(pts in samples(4)) {
        let s = InitialDensity::build(&pts).unwrap();
        prop_assert_eq!(s.kind(), SplineKind::Clamped);
        let scale = (0..pts.len() - 1)
            .map(|i| s.second_derivative_on(i, pts[i].0).abs().max(s.second_derivative_on(i, pts[i + 1].0).abs()))
            .fold(1.0, f64::max);
        for (i, &(x, _)) in pts.iter().enumerate().take(pts.len() - 1).skip(1) {
            let jump = (s.second_derivative_on(i - 1, x) - s.second_derivative_on(i, x)).abs();
            prop_assert!(jump <= 1e-8 * scale, "jump {jump} at knot {i}");
        }
    }

    #[test]
    fn evaluation_is_non_negative(pts in samples(2), f in 0.0f64..1.0) {
        let s = InitialDensity::build(&pts).unwrap();
        let (l, r) = s.domain();
        prop_assert!(s.eval(l + f * (r - l)).unwrap() >= 0.0);
    }

    #[test]
    fn short_data_stays_within_sample_range(pts in samples(2).prop_filter("two or three", |p| p.len() <= 3), f in 0.0f64..1.0) {
        let s = InitialDensity::build(&pts).unwrap();
        prop_assert_eq!(s.kind(), SplineKind::Monotone);
        let (l, r) = s.domain();
        let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p.1).fold(0.0, f64::max);
        let v = s.eval(l + f * (r - l)).unwrap();
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }
}
