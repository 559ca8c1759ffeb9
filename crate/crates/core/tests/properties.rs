//! Property tests of the structural invariants.

use igrm_core::linalg::CsrMatrix;
use igrm_core::splines::SplineSpace1D;
use proptest::prelude::*;

fn breakpoint_strategy() -> impl Strategy<Value = Vec<f64>> {
    // 1..=8 interior cuts in (0, 1), deduplicated with a minimum gap
    proptest::collection::vec(0.05f64..0.95, 1..8).prop_map(|mut cuts| {
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut breaks = vec![0.0];
        for c in cuts {
            if c - breaks.last().unwrap() > 0.02 {
                breaks.push(c);
            }
        }
        breaks.push(1.0);
        breaks
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_of_unity_for_all_degrees(
        breaks in breakpoint_strategy(),
        p in 1usize..=5,
        c_offset in 0i32..6,
        x in 0.0f64..=1.0,
    ) {
        let c = (-1 + c_offset).min(p as i32 - 1);
        let space = SplineSpace1D::new(&breaks, p, c).unwrap();
        let (_, ders) = space.eval_basis(x, 1.min(p)).unwrap();
        let sum: f64 = ders[0].iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12, "sum {sum} at x={x}");
        let dsum: f64 = ders[1].iter().sum();
        prop_assert!(dsum.abs() < 1e-9, "derivative sum {dsum} at x={x}");
        prop_assert!(ders[0].iter().all(|&v| v >= -1e-14), "negative basis value");
    }

    #[test]
    fn dimension_formula_matches_knot_count(
        breaks in breakpoint_strategy(),
        p in 1usize..=5,
        c_offset in 0i32..6,
    ) {
        let c = (-1 + c_offset).min(p as i32 - 1);
        let space = SplineSpace1D::new(&breaks, p, c).unwrap();
        prop_assert_eq!(space.dimension(), space.knots().len() - p - 1);
        let n = breaks.len() - 1;
        prop_assert_eq!(
            space.dimension() as i32,
            n as i32 * (p as i32 - c) + c + 1
        );
    }

    #[test]
    fn refinement_only_touches_the_last_interval(
        breaks in breakpoint_strategy(),
        p in 1usize..=4,
    ) {
        let space = SplineSpace1D::new(&breaks, p, p as i32 - 1).unwrap();
        let refined = space.refine_halve_last();
        prop_assert_eq!(refined.n_elements(), space.n_elements() + 1);
        prop_assert_eq!(refined.degree(), space.degree());
        prop_assert_eq!(refined.continuity(), space.continuity());
        let rb = refined.breakpoints();
        let ob = space.breakpoints();
        prop_assert_eq!(&rb[..ob.len() - 1], &ob[..ob.len() - 1]);
        let mid = 0.5 * (ob[ob.len() - 2] + ob[ob.len() - 1]);
        prop_assert!((rb[rb.len() - 2] - mid).abs() < 1e-15);
    }

    #[test]
    fn csr_matvec_matches_dense(
        entries in proptest::collection::vec(
            (0usize..12, 0usize..9, -5.0f64..5.0), 0..60),
        x in proptest::collection::vec(-2.0f64..2.0, 9),
    ) {
        let a = CsrMatrix::from_triplets(12, 9, entries);
        let y = a.matvec_alloc(&x);
        let yd = a.to_dense() * nalgebra::DVector::from_column_slice(&x);
        for i in 0..12 {
            prop_assert!((y[i] - yd[i]).abs() < 1e-10);
        }
        let at = a.transpose();
        let z: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        let w = at.matvec_alloc(&z);
        let wd = a.to_dense().transpose() * nalgebra::DVector::from_column_slice(&z);
        for i in 0..9 {
            prop_assert!((w[i] - wd[i]).abs() < 1e-10);
        }
    }
}
