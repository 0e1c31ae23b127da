use pmlsh::ann::{ann_query, bc_query, build_distance_distribution, select_rmin};
use pmlsh::cp::{calibrate_gamma, cp_branch_and_bound, cp_radius_filter, projected_closest_pairs};
use pmlsh::data::{exact_kcp, exact_knn, gen_synthetic, Dataset, SyntheticKind};
use pmlsh::metric::euclidean;
use pmlsh::pmtree::{select_pivots, PmTree, PromotePolicy, TreeConfig};
use pmlsh::projection::{HashFamily, QueryParams, DEFAULT_ALPHA1};

fn index(ds: &Dataset, seed: u64) -> (HashFamily, PmTree) {
    let family = HashFamily::new(ds.dim(), 15, seed).unwrap();
    let pts: Vec<_> = ds
        .rows()
        .enumerate()
        .map(|(i, r)| family.project(r, i).unwrap())
        .collect();
    let pivots = select_pivots(&pts, 5, seed).unwrap();
    (
        family,
        PmTree::build(&pts, TreeConfig::default(), pivots).unwrap(),
    )
}

#[test]
fn ball_cover_succeeds_at_the_nearest_neighbor_radius() {
    let ds = gen_synthetic(10_000, 16, SyntheticKind::Gaussian, 1).unwrap();
    let queries = gen_synthetic(200, 16, SyntheticKind::Gaussian, 2).unwrap();
    let p = QueryParams::solve(15, 1.5, DEFAULT_ALPHA1, ds.len(), 1).unwrap();
    let mut success = 0;
    for fam in 0..5u64 {
        let (family, tree) = index(&ds, 100 + fam);
        for q in queries.rows().skip(fam as usize * 40).take(40) {
            let r = exact_knn(&ds, q, 1).unwrap()[0].dist;
            if let Some(hit) = bc_query(&tree, &family, &ds, q, r, &p).unwrap() {
                if hit.dist <= p.c * r {
                    success += 1;
                }
            }
        }
    }
    let rate = success as f64 / 200.0;
    assert!(rate >= 0.5 - (-1.0f64).exp(), "success rate {rate}");
}

#[test]
fn top1_is_a_c_squared_approximation_across_families() {
    let ds = gen_synthetic(2_000, 24, SyntheticKind::Gaussian, 3).unwrap();
    let queries = gen_synthetic(50, 24, SyntheticKind::Gaussian, 4).unwrap();
    let p = QueryParams::solve(15, 1.5, DEFAULT_ALPHA1, ds.len(), 1).unwrap();
    let f = build_distance_distribution(&ds, 50_000, 5).unwrap();
    let r_min = select_rmin(&f, &p, ds.len(), 1);
    let mut good = 0;
    let mut total = 0;
    for fam in 0..10u64 {
        let (family, tree) = index(&ds, 200 + fam);
        for q in queries.rows() {
            let nn = exact_knn(&ds, q, 1).unwrap()[0].dist;
            let res = ann_query(&tree, &family, &ds, q, 1, &p, r_min).unwrap();
            good += usize::from(res.neighbors[0].dist <= p.c * p.c * nn);
            total += 1;
        }
    }
    assert!(good as f64 / total as f64 >= 0.5, "{good}/{total}");
}

#[test]
fn ann_is_deterministic_per_seed() {
    let ds = gen_synthetic(3_000, 10, SyntheticKind::Gaussian, 6).unwrap();
    let p = QueryParams::solve(15, 1.5, DEFAULT_ALPHA1, ds.len(), 10).unwrap();
    let f = build_distance_distribution(&ds, 10_000, 5).unwrap();
    let r_min = select_rmin(&f, &p, ds.len(), 10);
    let (fa, ta) = index(&ds, 7);
    let (fb, tb) = index(&ds, 7);
    for i in 0..20 {
        let q = ds.row(i * 13);
        assert_eq!(
            ann_query(&ta, &fa, &ds, q, 10, &p, r_min).unwrap(),
            ann_query(&tb, &fb, &ds, q, 10, &p, r_min).unwrap()
        );
    }
}

#[test]
fn closest_pair_engines_agree_on_small_data() {
    let ds = gen_synthetic(
        500,
        6,
        SyntheticKind::Clustered {
            clusters: 5,
            spread: 1.0,
        },
        8,
    )
    .unwrap();
    let (family, tree) = index(&ds, 9);
    let k = 10;
    let truth = exact_kcp(&ds, k).unwrap();
    let all = 500 * 499 / 2;

    // exhaustive budget: branch and bound is exact
    let bnb = cp_branch_and_bound(&tree, &ds, k, all).unwrap();
    assert_eq!(bnb.pairs, truth);
    assert_eq!(bnb.verified, all);

    let p = QueryParams::solve(15, 4.0, DEFAULT_ALPHA1, ds.len(), k).unwrap();
    let gamma = calibrate_gamma(&ds, &family, 16, PromotePolicy::MRad, 0.85, 10_000, 1).unwrap();
    let filter = cp_radius_filter(&tree, &ds, k, &p, gamma.gamma).unwrap();
    assert_eq!(filter.pairs.len(), k);
    for (got, best) in filter.pairs.iter().zip(&truth) {
        assert!(got.dist >= best.dist);
        assert_eq!(got.dist, euclidean(ds.row(got.a), ds.row(got.b)));
    }

    // the projected candidates are the same set whichever k is asked for
    let t = 200;
    let cands = projected_closest_pairs(&tree, t);
    assert_eq!(cands.len(), t);
    assert!(cands.windows(2).all(|w| w[0].dist <= w[1].dist));
}
