use ddmd::linalg::{self, creal, CMat};
use ddmd::report::SpectrumReport;
use ddmd::snapshots::{from_sequential, scale_columns, SnapshotPair};
use ddmd::variants::{ddmd_rrr, dmd, exact_dmd, fb_dmd_mrf, select_pairs, Compression, Refine};
use ddmd::verify::{make_oracle, random_start, trajectory, OracleOperator, SpectrumSpec};
use ddmd::weighted::{two_sided_weighted_dmd, weighted_dmd, InnerProduct, Orientation};
use ddmd::{c64, RankPolicy, VariantConfig};
use faer::Mat;
use proptest::prelude::*;

fn oracle_pair(n: usize, m: usize, seed: u64) -> (OracleOperator, SnapshotPair) {
    let o = make_oracle(n, &SpectrumSpec::Disc { r_min: 0.5, r_max: 1.0 }, 10.0, seed).unwrap();
    let f = trajectory(o.a.as_ref(), random_start(n, seed ^ 7).as_ref(), m).unwrap();
    (o, from_sequential(&f))
}

/// `Y = A X` with Gaussian `X`: full column rank, no Krylov structure.
fn random_pair(n: usize, m: usize, seed: u64) -> (OracleOperator, SnapshotPair) {
    let o = make_oracle(n, &SpectrumSpec::Disc { r_min: 0.5, r_max: 1.0 }, 5.0, seed).unwrap();
    let mut st = ddmd::rng::Stream::new(seed).split(77);
    let x: CMat = Mat::from_fn(n, m, |_, _| creal(st.normal()));
    let y = &o.a * &x;
    (o, SnapshotPair::new(x, y).unwrap())
}

fn conj(v: &[c64]) -> Vec<c64> {
    v.iter().map(|z| z.conj()).collect()
}

fn unscaled(policy: RankPolicy) -> VariantConfig {
    VariantConfig {
        policy: Some(policy),
        scale: false,
        refine: Refine::None,
        compress: Compression::Never,
        ..VariantConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scaling_is_idempotent(seed in any::<u64>(), n in 8usize..40, m in 3usize..10) {
        let (_, pair) = random_pair(n, m, seed);
        let (once, _) = scale_columns(&pair);
        let (twice, d) = scale_columns(&once);
        prop_assert!((&once.x - &twice.x).norm_max() <= 1e-15);
        prop_assert!(d.d.iter().all(|&s| (s - 1.0).abs() <= 1e-15));
    }

    #[test]
    fn rank_is_monotone_in_epsilon(mut sigma in prop::collection::vec(0.0f64..1e3, 1..30), a in 1e-16f64..1.0, b in 1e-16f64..1.0) {
        sigma.sort_by(|x, y| y.total_cmp(x));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let k_lo = RankPolicy::spectral(lo).unwrap().rank(&sigma).unwrap();
        let k_hi = RankPolicy::spectral(hi).unwrap().rank(&sigma).unwrap();
        prop_assert!(k_hi <= k_lo);
        let e_lo = RankPolicy::energy(lo).unwrap().rank(&sigma).unwrap();
        let e_hi = RankPolicy::energy(hi).unwrap().rank(&sigma).unwrap();
        prop_assert!(e_hi <= e_lo);
    }

    #[test]
    fn refined_residual_never_exceeds_plain(seed in any::<u64>()) {
        let (o, pair) = oracle_pair(50, 16, seed);
        let bound = 1e-12 * linalg::norm2(o.a.as_ref()).unwrap();
        let plain = ddmd_rrr(&pair, &VariantConfig { refine: Refine::None, ..VariantConfig::default() }).unwrap();
        let refined = ddmd_rrr(&pair, &VariantConfig::default()).unwrap();
        prop_assert!(linalg::matching_distance(&plain.lambdas(), &refined.lambdas()) <= 1e-10);
        for p in &refined.pairs {
            let r = p.refined.as_ref().unwrap();
            prop_assert_eq!(p.residual, Some(r.sigma_min));
            let q = plain.pairs.iter().min_by(|a, b| (a.lambda - p.lambda).norm().total_cmp(&(b.lambda - p.lambda).norm())).unwrap();
            prop_assert!(r.sigma_min <= q.residual.unwrap() + bound);
        }
    }

    #[test]
    fn dmd_and_rrr_agree_on_the_same_subspace(seed in any::<u64>()) {
        let (o, pair) = oracle_pair(40, 12, seed);
        let cfg = unscaled(RankPolicy::fixed(12).unwrap());
        let a = dmd(&pair, &cfg).unwrap();
        let b = ddmd_rrr(&pair, &cfg).unwrap();
        let tol = 1e-8 * linalg::norm2(o.a.as_ref()).unwrap();
        prop_assert!(linalg::matching_distance(&a.lambdas(), &b.lambdas()) <= tol);
    }

    #[test]
    fn column_scaling_keeps_full_rank_ritz_values(seed in any::<u64>(), m in 3usize..9) {
        let (o, pair) = random_pair(30, m, seed);
        let policy = RankPolicy::fixed(m).unwrap();
        let plain = ddmd_rrr(&pair, &unscaled(policy)).unwrap();
        let scaled = ddmd_rrr(&pair, &VariantConfig { scale: true, ..unscaled(policy) }).unwrap();
        let tol = 1e-9 * linalg::norm2(o.a.as_ref()).unwrap();
        prop_assert!(linalg::matching_distance(&plain.lambdas(), &scaled.lambdas()) <= tol);
    }

    #[test]
    fn exact_vectors_are_eigenvectors_of_y_xpinv(seed in any::<u64>(), m in 3usize..9) {
        let (_, pair) = random_pair(20, m, seed);
        let dec = exact_dmd(&pair, &VariantConfig::default()).unwrap();
        let xp = linalg::thin_svd(pair.x.as_ref()).unwrap();
        let sinv: Vec<f64> = xp.s.iter().map(|s| 1.0 / s).collect();
        let pinv = linalg::scale_cols(xp.v.as_ref(), &sinv) * xp.u.adjoint();
        let ahat = &pair.y * &pinv;
        let norm = linalg::norm2(ahat.as_ref()).unwrap();
        let modes = dec.modes().unwrap();
        for (j, p) in dec.pairs.iter().enumerate() {
            if !p.has_vector {
                continue;
            }
            let z = modes.col(j);
            let r = (&ahat * z - z * faer::Scale(p.lambda)).norm_l2();
            prop_assert!(r <= 1e-10 * norm * z.norm_l2());
        }
    }

    #[test]
    fn diagonal_weight_is_a_row_scaling(seed in any::<u64>(), w in prop::collection::vec(0.1f64..10.0, 30)) {
        let (_, pair) = random_pair(30, 6, seed);
        let cfg = unscaled(RankPolicy::fixed(6).unwrap());
        let ip = InnerProduct::diagonal(&w, Orientation::M).unwrap();
        let dec = weighted_dmd(&pair, &ip, &cfg).unwrap();
        let rows = |a: &CMat| Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * w[i].sqrt());
        let mapped = SnapshotPair::new(rows(&pair.x), rows(&pair.y)).unwrap();
        let plain = dmd(&mapped, &cfg).unwrap();
        prop_assert!(linalg::matching_distance(&dec.lambdas(), &plain.lambdas()) <= 1e-10);

        // Û*MÛ = I
        let u = dec.pod.basis().unwrap();
        let g = ip.gram().unwrap();
        let k = dec.pod.k;
        prop_assert!((u.adjoint() * &g * &u - Mat::<c64>::identity(k, k)).norm_l2() <= 1e-10 * (k as f64).sqrt());
    }

    #[test]
    fn diagonal_snapshot_weight_is_a_column_scaling(seed in any::<u64>(), w in prop::collection::vec(0.1f64..10.0, 6)) {
        let (_, pair) = random_pair(30, 6, seed);
        let cfg = unscaled(RankPolicy::fixed(6).unwrap());
        let eye = InnerProduct::identity(30);
        let n_ip = InnerProduct::diagonal(&w, Orientation::M).unwrap();
        let two = two_sided_weighted_dmd(&pair, &eye, &n_ip, &cfg).unwrap();
        let inv: Vec<f64> = w.iter().map(|x| 1.0 / x.sqrt()).collect();
        let mapped = SnapshotPair::new(
            linalg::scale_cols(pair.x.as_ref(), &inv),
            linalg::scale_cols(pair.y.as_ref(), &inv),
        )
        .unwrap();
        let one = weighted_dmd(&mapped, &eye, &cfg).unwrap();
        prop_assert!(linalg::matching_distance(&two.lambdas(), &one.lambdas()) <= 1e-10);
    }

    #[test]
    fn report_json_round_trips(seed in any::<u64>(), dt in prop::option::of(0.01f64..1.0), cap in prop::option::of(1e-12f64..1.0)) {
        let (_, pair) = oracle_pair(30, 10, seed);
        let dec = ddmd_rrr(&pair, &VariantConfig { dt, ..VariantConfig::default() }).unwrap();
        let rep = SpectrumReport::from_decomposition(&dec, None, cap).with_dt(dt);
        let text = rep.to_json().unwrap();
        let back = SpectrumReport::from_json(&text).unwrap();
        prop_assert_eq!(&back, &rep);
        prop_assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn fb_on_a_quarter_rotation_is_conjugate_closed(seed in any::<u64>(), m in 3usize..8) {
        let a: CMat = Mat::from_fn(2, 2, |i, j| creal([[0.0, -1.0], [1.0, 0.0]][i][j]));
        let f = trajectory(a.as_ref(), random_start(2, seed).as_ref(), m).unwrap();
        let (dec, spec) = fb_dmd_mrf(&from_sequential(&f), &VariantConfig::default()).unwrap();
        let l = dec.lambdas();
        prop_assert_eq!(l.len(), 2);
        prop_assert!(linalg::matching_distance(&l, &conj(&l)) <= 1e-12);
        prop_assert!(linalg::matching_distance(&l, &[c64::new(0.0, 1.0), c64::new(0.0, -1.0)]) <= 1e-12);
        for w in &spec.omegas {
            prop_assert!((w - creal(-1.0)).norm() <= 1e-12);
        }
    }

    #[test]
    fn selection_partitions_by_residual(seed in any::<u64>(), cap in prop::sample::select(vec![5e-4, 1e-8, 1e-2, 0.0])) {
        let (_, pair) = oracle_pair(40, 14, seed);
        let dec = ddmd_rrr(&pair, &VariantConfig::default()).unwrap();
        let kept = select_pairs(&dec, cap);
        let expect: Vec<c64> = dec.pairs.iter().filter(|p| p.residual.unwrap() <= cap).map(|p| p.lambda).collect();
        prop_assert_eq!(kept.lambdas(), expect);
        prop_assert!(kept.pairs.iter().all(|p| p.residual.unwrap() <= cap));
        prop_assert!(kept.pairs.windows(2).all(|w| w[0].residual <= w[1].residual));
        prop_assert_eq!(kept.vectors.ncols(), kept.k());
    }
}
