use despeckle::pnm::{decode_pgm, encode_pgm};
use despeckle::{
    apply_speckle, fd2_div, fd4, run_solver, smooth, speckle_index, GridSpacing, ImageGrid, Model, NoiseSpec,
    SolverParams,
};
use proptest::prelude::*;

fn grid(max_side: usize, lo: f64, hi: f64) -> impl Strategy<Value = ImageGrid> {
    (3..=max_side, 3..=max_side).prop_flat_map(move |(w, h)| {
        prop::collection::vec(lo..hi, w * h).prop_map(move |d| ImageGrid::new(w, h, d, 255.0).unwrap())
    })
}

fn pair(max_side: usize) -> impl Strategy<Value = (ImageGrid, ImageGrid)> {
    (3..=max_side, 3..=max_side).prop_flat_map(|(w, h)| {
        (prop::collection::vec(0.01..3.0f64, w * h), prop::collection::vec(0.0..255.0f64, w * h)).prop_map(
            move |(c, u)| (ImageGrid::new(w, h, c, 255.0).unwrap(), ImageGrid::new(w, h, u, 255.0).unwrap()),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operators_conserve_mass((c, u) in pair(20), dx in 0.5..2.0f64, dy in 0.5..2.0f64) {
        let h = GridSpacing::new(dx, dy).unwrap();
        let bound = 1e-9 * u.len() as f64 * 255.0 / (dx * dy).min(1.0).powi(2);
        prop_assert!(fd2_div(&c, &u, h).unwrap().sum().abs() <= bound);
        prop_assert!(fd4(&c, &u, h).unwrap().sum().abs() <= bound);
    }

    #[test]
    fn smoothing_stays_within_range(u in grid(16, 0.0, 255.0), sigma in 0.3..3.0f64) {
        let s = smooth(&u, sigma).unwrap();
        prop_assert!(s.min() >= u.min() - 1e-9 && s.max() <= u.max() + 1e-9);
    }

    #[test]
    fn pgm_round_trips_integer_grids(u in grid(12, 0.0, 256.0)) {
        let q = u.map(f64::floor);
        let back = decode_pgm(&encode_pgm(&q)).unwrap();
        prop_assert_eq!(back.data(), q.data());
    }

    #[test]
    fn speckle_is_seeded_and_nonnegative(u in grid(12, 0.0, 255.0), looks in 1u32..12, seed: u64) {
        let spec = NoiseSpec::new(looks, seed).unwrap();
        let a = apply_speckle(&u, spec).unwrap();
        prop_assert_eq!(&a, &apply_speckle(&u, spec).unwrap());
        prop_assert!(a.data().iter().all(|&v| v >= 0.0 && v.is_finite()));
    }

    #[test]
    fn speckle_index_is_scale_free(u in grid(12, 1.0, 255.0), c in 0.01..100.0f64) {
        let a = speckle_index(&u).unwrap();
        let b = speckle_index(&u.map(|v| c * v)).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn solver_output_is_finite_and_in_range(u in grid(12, 0.0, 255.0), m in 0usize..4) {
        let p = SolverParams { max_iters: 20, ..SolverParams::for_model(Model::ALL[m]) };
        let (out, trace) = run_solver(&u, &p, None).unwrap();
        prop_assert!(trace.iterations >= 1 && trace.iterations <= 20);
        prop_assert!(out.data().iter().all(|&v| (0.0..=255.0).contains(&v)));
    }

    #[test]
    fn constant_images_are_fixed_points(v in 1.0..250.0f64, m in 0usize..4) {
        let c = ImageGrid::filled(7, 5, v).unwrap();
        let p = SolverParams { max_iters: 5, ..SolverParams::for_model(Model::ALL[m]) };
        let (out, _) = run_solver(&c, &p, None).unwrap();
        prop_assert_eq!(out, c);
    }
}
