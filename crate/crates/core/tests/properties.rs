use proptest::prelude::*;

use bbspike_core::solver::{kkt_residual, qp_objective, weight_qp};
use bbspike_core::verify::{certify_atom, extremality_certificate, grid_bb_energy, rasterize, track_curves, weak_form_residual, CandidatePair, TestFunction};
use bbspike_core::{assignment_rmse, AtomicMeasurePair, Curve, CurveAtom, DomainBox, KernelSpec, Observation, TimeGrid};

fn curve(dim: usize, n: usize) -> impl Strategy<Value = Curve> {
    proptest::collection::vec(0.0f64..1.0, dim * n).prop_map(move |nodes| Curve::new(dim, nodes).unwrap())
}

fn params() -> impl Strategy<Value = (f64, f64)> {
    (0.01f64..10.0, 0.01f64..10.0)
}

fn gaussian_obs() -> Observation {
    Observation::template(vec![0.2, 0.5, 0.8], vec![KernelSpec::gaussian_grid(&DomainBox::unit(2), 3, 0.3).unwrap()]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn observations_are_linear(c1 in curve(2, 7), c2 in curve(2, 7), w1 in 0.01f64..3.0, w2 in 0.01f64..3.0, s in 0.1f64..10.0) {
        prop_assume!(c1 != c2);
        let obs = gaussian_obs();
        let a = AtomicMeasurePair::from_curves(0.5, 0.5, vec![c1], vec![w1]).unwrap();
        let b = AtomicMeasurePair::from_curves(0.5, 0.5, vec![c2], vec![w2]).unwrap();
        let sum = obs.apply(&a.concat(&b).unwrap());
        for ((x, y), z) in obs.apply(&a).iter().zip(obs.apply(&b)).zip(&sum) {
            prop_assert!((x + y - z).abs() <= 1e-14 * (1.0 + z.abs()));
        }
        for (x, y) in obs.apply(&a.scaled(s).unwrap()).iter().zip(obs.apply(&a)) {
            prop_assert!((x - s * y).abs() <= 1e-13 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn polynomial_weak_residual_vanishes(c in curve(2, 9), (alpha, beta) in params(), a in 1u32..3, b in 1u32..3, p in 0u32..3, q in 0u32..3, w in 0.1f64..5.0) {
        let m = AtomicMeasurePair::from_curves(alpha, beta, vec![c], vec![w]).unwrap();
        let phi = TestFunction::polynomial(a, b, vec![p, q]);
        prop_assert!(weak_form_residual(&m, &phi).abs() <= 1e-10);
    }

    #[test]
    fn canonical_atoms_pass_and_rescaled_atoms_fail(c in curve(3, 9), (alpha, beta) in params(), s in 1.001f64..10.0) {
        let atom = CurveAtom::new(c, alpha, beta).unwrap();
        prop_assert!(certify_atom(&atom).verdict);
        let scaled = extremality_certificate(&CandidatePair::from_atom(&atom).with_scaled_mass(s));
        prop_assert!(!scaled.verdict);
    }

    #[test]
    fn raster_preserves_mass_and_energy_is_nonnegative(c in curve(1, 5), w in 0.1f64..3.0, n_t in 2usize..40, n_x in 2usize..40) {
        let m = AtomicMeasurePair::from_curves(1.0, 1.0, vec![c], vec![w]).unwrap();
        let g = rasterize(&m, &DomainBox::unit(1), n_t, n_x).unwrap();
        prop_assert!((g.total_mass() - m.total_variation()).abs() <= 1e-12 * m.total_variation());
        let e = grid_bb_energy(&g);
        prop_assert!(e >= 0.0 && e.is_finite());
    }

    #[test]
    fn qp_solution_satisfies_kkt(cols in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 6), 1..5), y in proptest::collection::vec(-3.0f64..3.0, 6)) {
        let c = weight_qp(&cols, &y, 1e-14, None);
        prop_assert!(c.iter().all(|v| *v >= 0.0));
        prop_assert!(kkt_residual(&cols, &y, &c) <= 1e-8);
        let f = qp_objective(&cols, &y, &c);
        for j in 0..c.len() {
            for delta in [-1e-3, 1e-3] {
                let mut d = c.clone();
                d[j] = (d[j] + delta).max(0.0);
                prop_assert!(qp_objective(&cols, &y, &d) >= f - 1e-12);
            }
        }
    }

    #[test]
    fn rmse_is_symmetric_and_zero_on_identity(p in proptest::collection::vec(0.0f64..1.0, 1..4), q in proptest::collection::vec(0.0f64..1.0, 1..4)) {
        let make = |xs: &[f64]| {
            let mut xs = xs.to_vec();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let curves = xs.iter().map(|&x| Curve::constant(&[x], 5).unwrap()).collect();
            AtomicMeasurePair::from_curves(1.0, 1.0, curves, vec![1.0; xs.len()]).unwrap()
        };
        let (a, b) = (make(&p), make(&q));
        let times = [0.1, 0.5, 0.9];
        prop_assert_eq!(assignment_rmse(&a, &a, &times, 1.0), 0.0);
        let ab = assignment_rmse(&a, &b, &times, 1.0);
        prop_assert!((ab - assignment_rmse(&b, &a, &times, 1.0)).abs() <= 1e-15);
        prop_assert!(ab <= 1.0);
    }

    #[test]
    fn tracking_reproduces_separated_clouds(offsets in proptest::collection::vec(-0.02f64..0.02, 10), masses in proptest::collection::vec(0.1f64..2.0, 2)) {
        // two horizontal tracks far apart, small vertical wiggle
        let grid = TimeGrid::new(9).unwrap();
        let times = [0.125, 0.25, 0.5, 0.75, 0.875];
        let clouds: Vec<_> = times.iter().enumerate().map(|(i, &t)| {
            let m = AtomicMeasurePair::from_curves(1.0, 1.0, vec![
                Curve::constant(&[t, 0.2 + offsets[i]], 2).unwrap(),
                Curve::constant(&[t, 0.8 + offsets[5 + i]], 2).unwrap(),
            ], masses.clone()).unwrap();
            m.eval_rho_at(t)
        }).collect();
        let tracked = track_curves(&times, &clouds, 0.5, 2.0, grid).unwrap();
        for (t, cloud) in times.iter().zip(&clouds) {
            let back = tracked.eval_rho_at(*t);
            for (a, b) in back.entries.iter().zip(&cloud.entries) {
                prop_assert!((a.mass - b.mass).abs() <= 1e-12);
                prop_assert!(a.position.iter().zip(&b.position).all(|(x, y)| (x - y).abs() <= 1e-12));
            }
        }
    }
}
