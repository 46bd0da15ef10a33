mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use sumcor::linalg::{DenseMat, SparseView};
use sumcor::retrieval::{
    aroc, cross_distances, evaluate_pairs, hash_featurize, mean_aroc, nn_freq, project,
    true_match_rank, HashSpec,
};

#[test]
fn distances_match_pairwise_loop() {
    let mut r = rng(1);
    let a = random_dense(7, 3, &mut r);
    let b = random_dense(7, 3, &mut r);
    let d = cross_distances(&a, &b).unwrap();
    for l in 0..7 {
        for m in 0..7 {
            let want: f64 = (0..3)
                .map(|c| (a.get(l, c) - b.get(m, c)).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!((d.get(l, m) - want).abs() <= 1e-10);
        }
    }
    let same = cross_distances(&a, &a).unwrap();
    assert!((0..7).all(|l| same.get(l, l) == 0.0));
    assert!(cross_distances(&a, &random_dense(7, 2, &mut r)).is_err());
}

#[test]
fn projection_matches_dense_product() {
    let mut r = rng(2);
    let x = random_sparse(10, 6, 0.3, &mut r);
    let q = random_dense(6, 2, &mut r);
    let want = matmul(&effective_dense(&x), &to_vecs(&q));
    assert!(frob_sq(&sub(&to_vecs(&project(&x, &q).unwrap()), &want)) < 1e-24);
    assert!(project(&x, &random_dense(5, 2, &mut r)).is_err());
}

#[test]
fn nn_freq_matches_brute_force() {
    let mut r = rng(3);
    for _ in 0..50 {
        // Small integer distances make ties common.
        let d: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..10).map(|_| r.random_range(0..5) as f64).collect())
            .collect();
        let m = DenseMat::from_rows(&d).unwrap();
        assert_eq!(nn_freq(&m).unwrap(), nn_freq_brute(&d));
        for l in 0..10 {
            assert_eq!(true_match_rank(&m, l), rank_brute(&d, l));
        }
    }
    let diag_best = DenseMat::from_fn(4, 4, |a, b| if a == b { 0.0 } else { 1.0 });
    assert_eq!(nn_freq(&diag_best).unwrap(), 100.0);
    let diag_worst = DenseMat::from_fn(4, 4, |a, b| if a == b { 2.0 } else { 1.0 });
    assert_eq!(nn_freq(&diag_worst).unwrap(), 0.0);
    assert_eq!(aroc(&diag_worst, 0).unwrap(), 0.0);
}

#[test]
fn orthogonal_random_projections_score_near_chance() {
    let mut r = rng(4);
    let mut total = 0.0;
    let trials = 40;
    for _ in 0..trials {
        let x1 = random_full_view(60, 8, &mut r);
        let x2 = random_full_view(60, 8, &mut r);
        let q1 = random_dense(8, 3, &mut r);
        let q2 = random_dense(8, 3, &mut r);
        total += evaluate_pairs(&[x1, x2], &[q1, q2]).unwrap().mean_aroc;
    }
    let mean = total / trials as f64;
    assert!((mean - 50.0).abs() <= 5.0, "{mean}");
}

#[test]
fn pair_table_covers_every_ordered_pair() {
    let mut r = rng(5);
    let views: Vec<SparseView> = (0..4).map(|_| random_sparse(12, 5, 0.5, &mut r)).collect();
    let qs: Vec<DenseMat> = (0..4).map(|_| random_dense(5, 2, &mut r)).collect();
    let res = evaluate_pairs(&views, &qs).unwrap();
    assert_eq!(res.pairs.len(), 12);
    assert_eq!(res.per_view.len(), 4);
    for p in &res.pairs {
        assert!(p.i != p.j);
        assert!((0.0..=100.0).contains(&p.aroc) && (0.0..=100.0).contains(&p.nn_freq));
    }
    assert_eq!(res, evaluate_pairs(&views, &qs).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aroc_is_rank_based(d in prop::collection::vec(0.0f64..10.0, 36), a in 0.1f64..5.0, b in -3.0f64..3.0) {
        let m = DenseMat::from_vec(6, 6, d).unwrap();
        let warped = DenseMat::from_fn(6, 6, |r, c| (a * m.get(r, c) + b).exp());
        prop_assert_eq!(mean_aroc(&m).unwrap(), mean_aroc(&warped).unwrap());
        prop_assert_eq!(nn_freq(&m).unwrap(), nn_freq(&warped).unwrap());
        for l in 0..6 {
            if true_match_rank(&m, l) == 1 {
                prop_assert_eq!(aroc(&m, l).unwrap(), 100.0);
            }
        }
    }

    #[test]
    fn hashing_is_linear(
        a in prop::collection::vec("[a-e]{1,3}", 0..20),
        b in prop::collection::vec("[a-e]{1,3}", 0..20),
        bits in 1u32..12, seed: u64,
    ) {
        let spec = HashSpec::new(bits, seed).unwrap();
        let joined: Vec<String> = a.iter().chain(&b).cloned().collect();
        prop_assert_eq!(hash_featurize(&joined, &spec), hash_featurize(&a, &spec).add(&hash_featurize(&b, &spec)));
    }
}
