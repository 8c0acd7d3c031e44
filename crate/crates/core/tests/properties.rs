use proptest::prelude::*;
use tensor_denoise_core::*;

fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=4, 1..=4)
}

fn tensor_strategy() -> impl Strategy<Value = DenseTensor> {
    shape_strategy().prop_flat_map(|shape| {
        let len: usize = shape.iter().product();
        prop::collection::vec(-1.0f64..1.0, len)
            .prop_map(move |data| DenseTensor::new(shape.clone(), data).unwrap())
    })
}

fn cubic_tensor_strategy() -> impl Strategy<Value = DenseTensor> {
    (2usize..=4, 2usize..=3).prop_flat_map(|(m, d)| {
        let shape = vec![m; d];
        prop::collection::vec(-1.0f64..1.0, m.pow(d as u32))
            .prop_map(move |data| DenseTensor::new(shape.clone(), data).unwrap())
    })
}

fn matrix_strategy() -> impl Strategy<Value = Matrix> {
    (1usize..=7, 1usize..=7).prop_flat_map(|(r, c)| {
        prop::collection::vec(-1.0f64..1.0, r * c).prop_map(move |d| Matrix::new(r, c, d).unwrap())
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fold_inverts_unfold(t in tensor_strategy()) {
        for mode in 0..t.ndim() {
            let back = fold(&unfold(&t, mode).unwrap(), mode, t.shape()).unwrap();
            prop_assert_eq!(&back, &t);
        }
    }

    #[test]
    fn rank_one_dense_is_kron(shape in shape_strategy(), seed in any::<u64>()) {
        let cp = random_cp(&shape, 1, seed).unwrap();
        let vectors: Vec<Vec<f64>> = cp.factors.iter().map(|f| f.column(0)).collect();
        let k = kron(&vectors).unwrap();
        let dense = vectorize(&cp.to_dense());
        for (a, b) in dense.iter().zip(&k) {
            prop_assert!((a - cp.weights[0] * b).abs() <= 1e-12);
        }
    }

    #[test]
    fn kron_norm_multiplies(vs in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 1..5), 1..4)) {
        let k = kron(&vs).unwrap();
        let lhs = k.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rhs: f64 = vs.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).product();
        prop_assert!(close(lhs, rhs, 1e-12));
    }

    #[test]
    fn inner_is_symmetric_and_bilinear(
        t in tensor_strategy(),
        s1 in any::<u64>(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let (_, x) = add_noise(&t, &NoiseSpec::unit_variance(s1)).unwrap();
        let (_, y) = add_noise(&t, &NoiseSpec::unit_variance(s1 ^ 1)).unwrap();
        prop_assert!(close(inner(&t, &x).unwrap(), inner(&x, &t).unwrap(), 1e-12));
        let combo = x.scaled(a).add(&y.scaled(b)).unwrap();
        let lhs = inner(&t, &combo).unwrap();
        let rhs = a * inner(&t, &x).unwrap() + b * inner(&t, &y).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn truncated_svd_residual_is_discarded_energy(a in matrix_strategy(), k in 1usize..=7) {
        let full = svd(&a).unwrap();
        let k = k.min(full.rank());
        let t = truncated_svd(&a, k).unwrap();
        let res2 = a.sub(&t.reconstruct()).unwrap().fro_norm().powi(2);
        let discarded: f64 = full.sigma[k..].iter().map(|s| s * s).sum();
        prop_assert!((res2 - discarded).abs() <= 1e-8 * a.fro_norm().powi(2) + 1e-24);
    }

    #[test]
    fn svd_factors_are_orthonormal(a in matrix_strategy()) {
        let f = svd(&a).unwrap();
        prop_assert!(f.u.orthonormality_error() <= 1e-10);
        prop_assert!(f.v.orthonormality_error() <= 1e-10);
        prop_assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(a.sub(&f.reconstruct()).unwrap().fro_norm() <= 1e-10 * (1.0 + a.fro_norm()));
    }

    #[test]
    fn cp_dense_is_linear_in_weights(
        shape in prop::collection::vec(2usize..=4, 2..=4),
        seed in any::<u64>(),
        c in -4.0f64..4.0,
    ) {
        let cp = random_cp(&shape, 2, seed).unwrap();
        let mut scaled = cp.clone();
        scaled.weights.iter_mut().for_each(|w| *w *= c);
        let expect = cp.to_dense().scaled(c);
        let got = scaled.to_dense();
        prop_assert!(fro_norm(&got.sub(&expect).unwrap()) <= 1e-12 * (1.0 + fro_norm(&expect)));
    }

    #[test]
    fn truncations_are_scale_equivariant(t in cubic_tensor_strategy(), c in -5.0f64..5.0, r in 1usize..=2) {
        let ct = t.scaled(c);
        let (_, a) = hosvd(&t, r).unwrap();
        let (_, b) = hosvd(&ct, r).unwrap();
        prop_assert!((b.residual - c.abs() * a.residual).abs() <= 1e-9 * (1.0 + b.residual));
        let (_, a) = tt_svd(&t, r).unwrap();
        let (_, b) = tt_svd(&ct, r).unwrap();
        prop_assert!((b.residual - c.abs() * a.residual).abs() <= 1e-9 * (1.0 + b.residual));
    }

    #[test]
    fn als_is_scale_equivariant(t in cubic_tensor_strategy(), c in 0.1f64..10.0, seed in any::<u64>()) {
        let opts = AlsOptions::default().with_seed(seed);
        let (_, a) = als_cp(&t, 1, &opts).unwrap();
        let (_, b) = als_cp(&t.scaled(c), 1, &opts).unwrap();
        prop_assert!((b.residual - c * a.residual).abs() <= 1e-6 * (1.0 + b.residual));
    }

    #[test]
    fn operators_fix_representable_inputs(m in 2usize..=4, d in 2usize..=4, seed in any::<u64>()) {
        let shape = vec![m; d];
        let cp = random_cp(&shape, 1, seed).unwrap().to_dense();
        prop_assert!(als_cp(&cp, 1, &AlsOptions::default().with_seed(seed)).unwrap().1.residual <= 1e-10);
        let tucker = random_tucker(&shape, 2.min(m), seed).unwrap().to_dense();
        prop_assert!(hosvd(&tucker, 2.min(m)).unwrap().1.residual <= 1e-10);
        let tt = random_tt_via_ttsvd(&shape, 2, seed).unwrap().to_dense();
        prop_assert!(tt_svd(&tt, 2).unwrap().1.residual <= 1e-10);
    }

    #[test]
    fn als_history_never_increases(t in cubic_tensor_strategy(), r in 1usize..=3, seed in any::<u64>()) {
        let (_, rep) = als_cp(&t, r, &AlsOptions::default().with_seed(seed)).unwrap();
        let floor = 1e-10 * fro_norm(&t);
        for w in rep.history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + floor, "{:?}", rep.history);
        }
        prop_assert!(rep.residual <= fro_norm(&t) * (1.0 + 1e-12));
    }

    #[test]
    fn decompositions_are_bitwise_deterministic(t in cubic_tensor_strategy(), seed in any::<u64>()) {
        let opts = AlsOptions::default().with_seed(seed).with_restarts(2);
        prop_assert_eq!(als_cp(&t, 2, &opts).unwrap(), als_cp(&t, 2, &opts).unwrap());
        prop_assert_eq!(hosvd(&t, 1).unwrap(), hosvd(&t, 1).unwrap());
        prop_assert_eq!(tt_svd(&t, 1).unwrap(), tt_svd(&t, 1).unwrap());
    }
}
