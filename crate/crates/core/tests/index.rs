use pmlsh::ann::build_projected_distribution;
use pmlsh::data::{gen_synthetic, SyntheticKind};
use pmlsh::metric::euclidean;
use pmlsh::pmtree::{select_pivots, IndexSnapshot, PmTree, PromotePolicy, TreeConfig};
use pmlsh::projection::{HashFamily, ProjectedPoint};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn projected(n: usize, d: usize, seed: u64) -> Vec<ProjectedPoint> {
    let ds = gen_synthetic(n, d, SyntheticKind::Gaussian, seed).unwrap();
    let family = HashFamily::new(d, 15, seed + 1).unwrap();
    ds.rows()
        .enumerate()
        .map(|(i, r)| family.project(r, i).unwrap())
        .collect()
}

fn scan(points: &[ProjectedPoint], q: &[f64], radius: f64) -> Vec<usize> {
    let mut ids: Vec<usize> = points
        .iter()
        .filter(|p| euclidean(&p.coords, q) <= radius)
        .map(|p| p.id)
        .collect();
    ids.sort_unstable();
    ids
}

#[test]
fn range_queries_equal_linear_scan_on_10k_points() {
    let pts = projected(10_000, 32, 1);
    let pivots = select_pivots(&pts, 5, 2).unwrap();
    let tree = PmTree::build(&pts, TreeConfig::default(), pivots).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let q: Vec<f64> = pts[rng.random_range(0..pts.len())]
            .coords
            .iter()
            .map(|x| x + rng.random_range(-3.0..3.0))
            .collect();
        let radius = rng.random_range(0.0..20.0);
        let mut got: Vec<usize> = tree
            .range_query(&q, radius, None)
            .iter()
            .map(|h| h.id)
            .collect();
        got.sort_unstable();
        assert_eq!(got, scan(&pts, &q, radius));
    }
}

#[test]
fn audit_passes_on_10k_points() {
    let pts = projected(10_000, 16, 4);
    let pivots = select_pivots(&pts, 5, 5).unwrap();
    let tree = PmTree::build(&pts, TreeConfig::default(), pivots).unwrap();
    let report = tree.audit().unwrap();
    assert_eq!(report.points, 10_000);
    assert_eq!(report.checked_rings, report.checked_radii * 5);
}

#[test]
fn pivots_are_spread_beyond_the_90th_percentile() {
    let pts = projected(20_000, 16, 6);
    let pivots = select_pivots(&pts, 5, 7).unwrap();
    let ids: std::collections::HashSet<usize> = pivots.ids.iter().copied().collect();
    assert_eq!(ids.len(), 5);

    // empirical pairwise distance distribution of a random sample
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut sample: Vec<f64> = (0..200_000)
        .map(|_| {
            let a = rng.random_range(0..pts.len());
            let b = rng.random_range(0..pts.len());
            euclidean(&pts[a].coords, &pts[b].coords)
        })
        .collect();
    sample.sort_by(f64::total_cmp);
    let p90 = sample[sample.len() * 9 / 10];
    for i in 0..5 {
        for j in 0..i {
            let d = euclidean(pivots.get(i), pivots.get(j));
            assert!(d >= p90, "pivots {j},{i} at {d} < {p90}");
        }
    }
}

#[test]
fn deeper_trees_with_smaller_capacity() {
    let pts = projected(3_000, 16, 9);
    let heights: Vec<usize> = [2, 16, 64]
        .iter()
        .map(|&capacity| {
            let config = TreeConfig {
                capacity,
                ..TreeConfig::default()
            };
            PmTree::build(&pts, config, select_pivots(&pts, 5, 1).unwrap())
                .unwrap()
                .stats()
                .height
        })
        .collect();
    assert!(
        heights[0] >= heights[1] && heights[1] >= heights[2],
        "{heights:?}"
    );
}

#[test]
fn cost_model_tracks_instrumented_counts() {
    let pts = projected(10_000, 32, 10);
    let pivots = select_pivots(&pts, 5, 11).unwrap();
    let tree = PmTree::build(&pts, TreeConfig::default(), pivots).unwrap();
    let f = build_projected_distribution(&pts, 100_000, 12).unwrap();
    let r_q = f.quantile(0.08);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let actual: f64 = (0..100)
        .map(|_| {
            let q = &pts[rng.random_range(0..pts.len())].coords;
            tree.range_query_counted(q, r_q).1 as f64
        })
        .sum::<f64>()
        / 100.0;
    let estimate = tree.estimate_range_cost(&f, r_q);
    let ratio = estimate / actual;
    assert!(
        (1.0 / 3.0..=3.0).contains(&ratio),
        "estimate {estimate}, measured {actual}"
    );
}

#[test]
fn snapshot_file_round_trip() {
    let pts = projected(10_000, 8, 14);
    let config = TreeConfig {
        policy: PromotePolicy::Random,
        seed: 3,
        ..TreeConfig::default()
    };
    let tree = PmTree::build(&pts, config, select_pivots(&pts, 5, 1).unwrap()).unwrap();
    let snap = IndexSnapshot {
        d: 8,
        family_seed: 15,
        tree,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("index.pmls");
    snap.write(&path).unwrap();
    let back = IndexSnapshot::read(&path).unwrap();
    assert_eq!(back.tree.config(), snap.tree.config());
    for i in 0..10 {
        let q = &pts[i * 1_000].coords;
        let a = snap.tree.range_query(q, 4.0, None);
        let b = back.tree.range_query(q, 4.0, None);
        assert_eq!(
            a.iter().map(|h| (h.id, h.dist)).collect::<Vec<_>>(),
            b.iter().map(|h| (h.id, h.dist)).collect::<Vec<_>>()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn snapshot_bytes_are_stable(n in 1usize..400, capacity in 2usize..20, s in 0usize..4, seed in any::<u64>()) {
        let pts = projected(n, 5, seed % 1_000);
        let config = TreeConfig { capacity, ..TreeConfig::default() };
        let pivots = select_pivots(&pts, s.min(n), seed).unwrap();
        let tree = PmTree::build(&pts, config, pivots).unwrap();
        let bytes = IndexSnapshot { d: 5, family_seed: seed, tree }.to_bytes();
        let back = IndexSnapshot::from_bytes(&bytes).unwrap();
        prop_assert!(back.tree.audit().is_ok());
        prop_assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn budgeted_range_query_is_a_prefix_of_the_full_answer(seed in any::<u64>(), budget in 1usize..200) {
        let pts = projected(800, 6, seed % 97);
        let tree = PmTree::build(&pts, TreeConfig::default(), select_pivots(&pts, 3, seed).unwrap()).unwrap();
        let q = &pts[(seed % 800) as usize].coords;
        let full = tree.range_query(q, 6.0, None);
        let part = tree.range_query(q, 6.0, Some(budget));
        prop_assert!(part.len() <= full.len());
        prop_assert!(part.len() >= budget.min(full.len()));
        prop_assert!(part.len() < budget + tree.capacity() || part.len() == full.len());
        let full_ids: std::collections::HashSet<usize> = full.iter().map(|h| h.id).collect();
        prop_assert!(part.iter().all(|h| full_ids.contains(&h.id)));
    }
}
