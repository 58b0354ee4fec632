mod common;

use basketseg::clustering::{assign_to_medoids, pam_best_of, DEFAULT_RESTARTS};
use basketseg::{pairwise, pam, select_k, DissimilarityMatrix, Exec, KRange, MetricKind};
use common::*;
use rand::Rng;

fn random_dm(case: u64) -> (DissimilarityMatrix, Vec<Vec<f64>>) {
    let mut r = rng(10_000 + case);
    let n = r.gen_range(4..=8);
    let p = r.gen_range(2..=12);
    let m = random_matrix(&mut r, n, p, 0.5);
    let dm = pairwise(&m, MetricKind::Euclidean, Exec::Sequential).unwrap();
    let dense = (0..n).map(|u| dm.row(u).to_vec()).collect();
    (dm, dense)
}

#[test]
fn pam_reaches_exhaustive_optimum() {
    let mut checked = 0;
    for case in 0..80 {
        let (dm, dense) = random_dm(case);
        for k in 2..=3 {
            let model = pam_best_of(&dm, k, DEFAULT_RESTARTS, case, Exec::Sequential).unwrap();
            let best = exhaustive_kmedoid_cost(&dense, k);
            assert!(
                (model.total_cost - best).abs() <= 1e-9,
                "case {case} k {k}: {} vs {best}",
                model.total_cost
            );
            checked += 1;
        }
    }
    assert!(checked >= 50);
}

#[test]
fn single_pam_cost_is_consistent() {
    for case in 0..40 {
        let (dm, _) = random_dm(case);
        let k = 2.min(dm.n() - 1);
        let model = pam(&dm, k, 1).unwrap();
        let (labels, cost) = assign_to_medoids(&dm, &model.medoids);
        assert_eq!(labels, model.assignment);
        assert!((cost - model.total_cost).abs() < 1e-12);
        assert!(model.is_consistent_with(&dm));
    }
}

#[test]
fn three_separated_groups_pick_three() {
    let xs: Vec<f64> = [0.0, 0.1, 0.2, 5.0, 5.1, 5.2, 10.0, 10.1, 10.2].to_vec();
    let dm = DissimilarityMatrix::from_points_1d(MetricKind::Euclidean, &xs);
    let (model, profile) = select_k(&dm, KRange::new(2, 5), 3, 4, Exec::Parallel).unwrap();
    assert_eq!(model.k, 3);
    assert_eq!(profile.len(), 4);
    assert_eq!(matched_accuracy(&model.assignment, &[0, 0, 0, 1, 1, 1, 2, 2, 2], 3), 1.0);
}
