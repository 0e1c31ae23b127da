use std::hash::Hasher;
use std::path::Path;
use std::time::Instant;

use fnv::FnvHasher;
use pmlsh::ann::{ann_query, bc_query, build_distance_distribution, select_rmin};
use pmlsh::cp::{calibrate_gamma, cp_branch_and_bound, cp_radius_filter};
use pmlsh::data::{
    exact_kcp, exact_knn, gen_synthetic, load_fvecs, load_text, overall_ratio, recall,
    recall_pairs, Dataset, GroundTruth, GroundTruthKind, Neighbor, PairNeighbor,
};
use pmlsh::pmtree::{select_pivots, IndexSnapshot, PmTree, TreeConfig};
use pmlsh::projection::{HashFamily, ProjectedPoint, QueryParams};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Algorithm, OracleKind, RunConfig, SeedUse};
use crate::error::{CliError, CliResult};
use crate::report::{
    BuildInfo, DatasetInfo, GammaInfo, GridRun, GroundTruthInfo, QueryRow, RunReport,
};

/// A query point drawn from the dataset.
#[derive(Debug, Clone)]
pub struct Query {
    /// Row in the loaded dataset.
    pub id: usize,
    pub coords: Vec<f64>,
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn in_pool<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_count()?)
        .build()
        .map_err(|e| CliError::Invariant(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

/// Runs `f` once as a warm-up, then `repeats` timed times. Returns the
/// warm-up result and the mean timed duration in milliseconds.
fn timed<T>(repeats: usize, mut f: impl FnMut() -> pmlsh::Result<T>) -> CliResult<(T, f64)> {
    let first = f()?;
    let mut total = 0.0;
    for _ in 0..repeats {
        let start = Instant::now();
        let out = f()?;
        total += ms_since(start);
        drop(out);
    }
    Ok((first, total / repeats as f64))
}

pub fn load_dataset(cfg: &RunConfig) -> CliResult<Dataset> {
    match &cfg.dataset {
        Some(path) => {
            if !path.exists() {
                return Err(CliError::Io(format!(
                    "dataset file {} does not exist",
                    path.display()
                )));
            }
            let ds = if path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("fvecs"))
            {
                load_fvecs(path)?
            } else {
                load_text(path, cfg.delimiter.unwrap_or(' '))?
            };
            if ds.len() < 2 {
                return Err(CliError::Config(format!(
                    "{} holds fewer than 2 vectors",
                    path.display()
                )));
            }
            Ok(ds)
        }
        None => {
            let spec = cfg.synthetic_spec();
            Ok(gen_synthetic(
                spec.n,
                spec.d,
                spec.kind(),
                cfg.seed_for(SeedUse::Data),
            )?)
        }
    }
}

/// Draws the query set and returns the dataset to index alongside it.
pub fn split_queries(cfg: &RunConfig, full: &Dataset) -> CliResult<(Dataset, Vec<Query>)> {
    let n = full.len();
    let limit = if cfg.exclude_queries {
        n.saturating_sub(2)
    } else {
        n
    };
    if cfg.queries > limit {
        return Err(CliError::Config(format!(
            "{} queries requested but only {limit} can be drawn from {n} points",
            cfg.queries
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed_for(SeedUse::Queries));
    let mut ids = index::sample(&mut rng, n, cfg.queries).into_vec();
    ids.sort_unstable();
    let queries = ids
        .iter()
        .map(|&id| Query {
            id,
            coords: full.row(id).to_vec(),
        })
        .collect();
    if !cfg.exclude_queries {
        return Ok((full.clone(), queries));
    }
    let mut is_query = vec![false; n];
    ids.iter().for_each(|&i| is_query[i] = true);
    let keep: Vec<usize> = (0..n).filter(|&i| !is_query[i]).collect();
    Ok((
        full.select(format!("{}-indexed", full.name()), &keep)?,
        queries,
    ))
}

fn project_all(family: &HashFamily, ds: &Dataset) -> CliResult<Vec<ProjectedPoint>> {
    let pts: pmlsh::Result<Vec<_>> = (0..ds.len())
        .into_par_iter()
        .map(|i| family.project(ds.row(i), i))
        .collect();
    Ok(pts?)
}

pub fn build_index(cfg: &RunConfig, ds: &Dataset) -> CliResult<(HashFamily, PmTree, BuildInfo)> {
    let start = Instant::now();
    let family_seed = cfg.seed_for(SeedUse::Family);
    let family = HashFamily::new(ds.dim(), cfg.m, family_seed)?;
    let pts = project_all(&family, ds)?;
    let pivots = select_pivots(&pts, cfg.s, cfg.seed_for(SeedUse::Pivots))?;
    let config = TreeConfig {
        capacity: cfg.capacity,
        policy: cfg.policy,
        seed: cfg.seed_for(SeedUse::Tree),
    };
    let tree = PmTree::build(&pts, config, pivots)?;
    let info = BuildInfo {
        build_ms: ms_since(start),
        loaded: false,
        family_seed,
        stats: tree.stats(),
        audit: None,
    };
    Ok((family, tree, info))
}

/// Loads the snapshot named by `index` if given, otherwise builds a tree.
fn open_index(cfg: &RunConfig, ds: &Dataset) -> CliResult<(HashFamily, PmTree, BuildInfo)> {
    let Some(path) = &cfg.index else {
        return build_index(cfg, ds);
    };
    if !path.exists() {
        return Err(CliError::Io(format!(
            "index snapshot {} does not exist; create it with `pmlsh build`",
            path.display()
        )));
    }
    let start = Instant::now();
    let snap = IndexSnapshot::read(path)?;
    let tree = snap.tree;
    if snap.d != ds.dim() || tree.dim() != cfg.m || tree.len() != ds.len() {
        return Err(CliError::Config(format!(
            "snapshot {} indexes {} points of dimension {} projected to {}, but this run indexes {} points of \
             dimension {} with m = {}",
            path.display(),
            tree.len(),
            snap.d,
            tree.dim(),
            ds.len(),
            ds.dim(),
            cfg.m
        )));
    }
    if let Some(slot) = (0..tree.len()).find(|&s| tree.point_id(s) >= ds.len()) {
        return Err(CliError::Config(format!(
            "snapshot refers to point {} outside the dataset",
            tree.point_id(slot)
        )));
    }
    let family = HashFamily::new(snap.d, tree.dim(), snap.family_seed)?;
    let info = BuildInfo {
        build_ms: ms_since(start),
        loaded: true,
        family_seed: snap.family_seed,
        stats: tree.stats(),
        audit: None,
    };
    Ok((family, tree, info))
}

fn dataset_info(full: &Dataset, indexed: &Dataset) -> DatasetInfo {
    DatasetInfo {
        name: full.name().to_string(),
        n: full.len(),
        d: full.dim(),
        indexed: indexed.len(),
    }
}

fn fingerprint(kind: GroundTruthKind, ds: &Dataset, queries: &[Query]) -> u64 {
    let mut h = FnvHasher::default();
    h.write_u8(kind as u8);
    h.write_u64(ds.len() as u64);
    h.write_u64(ds.dim() as u64);
    ds.as_flat().iter().for_each(|v| h.write_u64(v.to_bits()));
    for q in queries {
        h.write_u64(q.id as u64);
        q.coords.iter().for_each(|v| h.write_u64(v.to_bits()));
    }
    h.finish()
}

/// Returns the cached answer when it matches, otherwise computes (and
/// caches, if a path is given) a fresh one.
fn cached_truth(
    path: Option<&Path>,
    kind: GroundTruthKind,
    k: usize,
    fp: u64,
    compute: impl FnOnce() -> CliResult<GroundTruth>,
) -> CliResult<(GroundTruth, GroundTruthInfo)> {
    let label = match kind {
        GroundTruthKind::Knn => "knn",
        GroundTruthKind::Kcp => "kcp",
    };
    let mut status = "computed".to_string();
    if let Some(p) = path.filter(|p| p.exists()) {
        match GroundTruth::read(p) {
            Ok(gt) if gt.kind() == kind && gt.k() == k && gt.fingerprint() == fp => {
                let info = GroundTruthInfo {
                    kind: label.into(),
                    k,
                    status: "reused".into(),
                    oracle_ms: 0.0,
                };
                return Ok((gt, info));
            }
            Ok(gt) if gt.kind() != kind => {
                status = "recomputed: cache holds the other kind of answer".into()
            }
            Ok(gt) if gt.k() != k => {
                status = format!("recomputed: cache has k = {}, run needs {k}", gt.k())
            }
            Ok(_) => status = "recomputed: cache was built from different data or queries".into(),
            Err(e) => status = format!("recomputed: unreadable cache ({e})"),
        }
    }
    let start = Instant::now();
    let gt = compute()?;
    let oracle_ms = ms_since(start);
    if let Some(p) = path {
        gt.write(p)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", p.display())))?;
    }
    Ok((
        gt,
        GroundTruthInfo {
            kind: label.into(),
            k,
            status,
            oracle_ms,
        },
    ))
}

fn knn_truth(
    cfg: &RunConfig,
    ds: &Dataset,
    queries: &[Query],
    k: usize,
) -> CliResult<(Vec<Vec<Neighbor>>, GroundTruthInfo)> {
    let fp = fingerprint(GroundTruthKind::Knn, ds, queries);
    let (gt, info) = cached_truth(cfg.gt_cache.as_deref(), GroundTruthKind::Knn, k, fp, || {
        let per_query: pmlsh::Result<Vec<_>> = queries
            .par_iter()
            .map(|q| exact_knn(ds, &q.coords, k))
            .collect();
        Ok(GroundTruth::Knn {
            k,
            fingerprint: fp,
            per_query: per_query?,
        })
    })?;
    match gt {
        GroundTruth::Knn { per_query, .. } if per_query.len() == queries.len() => {
            Ok((per_query, info))
        }
        _ => Err(CliError::Invariant(
            "ground truth does not cover the query set".into(),
        )),
    }
}

fn kcp_truth(
    cfg: &RunConfig,
    ds: &Dataset,
    k: usize,
) -> CliResult<(Vec<PairNeighbor>, GroundTruthInfo)> {
    let fp = fingerprint(GroundTruthKind::Kcp, ds, &[]);
    let (gt, info) = cached_truth(cfg.gt_cache.as_deref(), GroundTruthKind::Kcp, k, fp, || {
        Ok(GroundTruth::Kcp {
            k,
            fingerprint: fp,
            pairs: exact_kcp(ds, k)?,
        })
    })?;
    match gt {
        GroundTruth::Kcp { pairs, .. } => Ok((pairs, info)),
        GroundTruth::Knn { .. } => Err(CliError::Invariant(
            "expected closest-pair ground truth".into(),
        )),
    }
}

fn ratio_of(result: &[f64], truth: &[f64]) -> CliResult<Option<f64>> {
    if result.len() != truth.len() {
        return Ok(None);
    }
    let r = overall_ratio(result, truth)?;
    Ok(r.is_finite().then_some(r.ratio))
}

fn with_algorithm(cfg: &RunConfig, algorithm: Algorithm) -> RunConfig {
    RunConfig {
        algorithm,
        ..cfg.clone()
    }
}

/// Builds an index, audits it, and writes a snapshot to `index`.
pub fn cmd_build(cfg: &RunConfig) -> CliResult<RunReport> {
    cfg.validate()?;
    let path = cfg
        .index
        .clone()
        .ok_or_else(|| CliError::Config("build needs --index <path> for the snapshot".into()))?;
    in_pool(cfg, || {
        let ds = load_dataset(cfg)?;
        let (family, tree, mut info) = build_index(cfg, &ds)?;
        info.audit = Some(tree.audit().map_err(CliError::Invariant)?);
        let snap = IndexSnapshot {
            d: ds.dim(),
            family_seed: family.seed(),
            tree,
        };
        snap.write(&path)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        let mut report = RunReport::new("build", cfg, dataset_info(&ds, &ds));
        report.build = Some(info);
        report.snapshot = Some(path.display().to_string());
        Ok(report)
    })
}

/// `(c,k)`-ANN over the query set for every `(c, k)` in the grid.
pub fn cmd_ann(cfg: &RunConfig) -> CliResult<RunReport> {
    let cfg = &with_algorithm(cfg, Algorithm::Ann);
    cfg.validate()?;
    in_pool(cfg, || {
        let full = load_dataset(cfg)?;
        let (ds, queries) = split_queries(cfg, &full)?;
        let (family, tree, build) = open_index(cfg, &ds)?;
        let ks = cfg.k_values();
        let kmax = ks.iter().copied().max().unwrap_or(1);
        let (truth, gt_info) = knn_truth(cfg, &ds, &queries, kmax)?;
        let dist = build_distance_distribution(
            &ds,
            cfg.sample_pairs,
            cfg.seed_for(SeedUse::Distribution),
        )?;

        let mut report = RunReport::new("ann", cfg, dataset_info(&full, &ds));
        for c in cfg.c_values() {
            for &k in &ks {
                let params = QueryParams::solve(cfg.m, c, cfg.alpha1, ds.len(), k)?;
                let r_min = select_rmin(&dist, &params, ds.len(), k);
                let rows: CliResult<Vec<QueryRow>> = queries
                    .par_iter()
                    .zip(&truth)
                    .map(|(q, t)| {
                        let (res, time_ms) = timed(cfg.repeats, || {
                            ann_query(&tree, &family, &ds, &q.coords, k, &params, r_min)
                        })?;
                        let t = &t[..k.min(t.len())];
                        let got: Vec<f64> = res.neighbors.iter().map(|n| n.dist).collect();
                        let want: Vec<f64> = t.iter().map(|n| n.dist).collect();
                        Ok(QueryRow {
                            query: q.id,
                            time_ms,
                            recall: recall(&res.neighbors, t),
                            ratio: ratio_of(&got, &want)?,
                            returned: res.neighbors.len(),
                            verified: Some(res.probes),
                            rounds: Some(res.rounds),
                        })
                    })
                    .collect();
                report
                    .runs
                    .push(GridRun::new(c, k, params, Some(r_min), rows?));
            }
        }
        report.build = Some(build);
        report.ground_truth = Some(gt_info);
        report.check_aggregates()?;
        Ok(report)
    })
}

/// Ball-cover queries at each query's exact NN distance (or `bc-radius`).
pub fn cmd_bc(cfg: &RunConfig) -> CliResult<RunReport> {
    let cfg = &with_algorithm(cfg, Algorithm::Bc);
    cfg.validate()?;
    in_pool(cfg, || {
        let full = load_dataset(cfg)?;
        let (ds, queries) = split_queries(cfg, &full)?;
        let (family, tree, build) = open_index(cfg, &ds)?;
        let (truth, gt_info) = knn_truth(cfg, &ds, &queries, 1)?;
        let radii: Vec<f64> = truth
            .iter()
            .map(|t| {
                cfg.bc_radius
                    .unwrap_or_else(|| t.first().map_or(0.0, |n| n.dist))
            })
            .collect();
        if let Some(i) = radii.iter().position(|&r| !(r > 0.0)) {
            return Err(CliError::Config(format!(
                "query {} has a zero nearest-neighbor distance; use --exclude-queries or --bc-radius",
                queries[i].id
            )));
        }

        let mut report = RunReport::new("bc", cfg, dataset_info(&full, &ds));
        for c in cfg.c_values() {
            let params = QueryParams::solve(cfg.m, c, cfg.alpha1, ds.len(), 1)?;
            let rows: CliResult<Vec<QueryRow>> = queries
                .par_iter()
                .zip(&radii)
                .map(|(q, &r)| {
                    let (hit, time_ms) = timed(cfg.repeats, || {
                        bc_query(&tree, &family, &ds, &q.coords, r, &params)
                    })?;
                    Ok(QueryRow {
                        query: q.id,
                        time_ms,
                        recall: if hit.is_some_and(|h| h.dist <= c * r) {
                            1.0
                        } else {
                            0.0
                        },
                        ratio: hit.map(|h| h.dist / r),
                        returned: usize::from(hit.is_some()),
                        verified: None,
                        rounds: None,
                    })
                })
                .collect();
            report.runs.push(GridRun::new(c, 1, params, None, rows?));
        }
        report.build = Some(build);
        report.ground_truth = Some(gt_info);
        report.check_aggregates()?;
        Ok(report)
    })
}

/// `(c,k)`-closest pairs with the radius filter or branch and bound.
pub fn cmd_cp(cfg: &RunConfig) -> CliResult<RunReport> {
    let algorithm = if cfg.algorithm.is_cp() {
        cfg.algorithm
    } else {
        Algorithm::CpFilter
    };
    let cfg = &with_algorithm(cfg, algorithm);
    cfg.validate()?;
    in_pool(cfg, || {
        let ds = load_dataset(cfg)?;
        let (family, tree, build) = open_index(cfg, &ds)?;
        let ks = cfg.k_values();
        let kmax = ks.iter().copied().max().unwrap_or(1);
        let (truth, gt_info) = kcp_truth(cfg, &ds, kmax)?;

        let mut report = RunReport::new("cp", cfg, dataset_info(&ds, &ds));
        let gamma = if algorithm == Algorithm::CpFilter {
            let start = Instant::now();
            let cal = calibrate_gamma(
                &ds,
                &family,
                cfg.capacity,
                cfg.policy,
                cfg.prob_gamma,
                cfg.gamma_sample,
                cfg.seed_for(SeedUse::Gamma),
            )?;
            report.gamma = Some(gamma_info(&cal, ms_since(start)));
            Some(cal.gamma)
        } else {
            None
        };
        for c in cfg.c_values() {
            for &k in &ks {
                let params = QueryParams::solve(cfg.m, c, cfg.alpha1, ds.len(), k)?;
                let (res, time_ms) = timed(cfg.repeats, || match gamma {
                    Some(g) => cp_radius_filter(&tree, &ds, k, &params, g),
                    None => cp_branch_and_bound(&tree, &ds, k, params.t_cp),
                })?;
                let t = &truth[..k.min(truth.len())];
                let got: Vec<f64> = res.pairs.iter().map(|p| p.dist).collect();
                let want: Vec<f64> = t.iter().map(|p| p.dist).collect();
                let row = QueryRow {
                    query: 0,
                    time_ms,
                    recall: recall_pairs(&res.pairs, t),
                    ratio: ratio_of(&got, &want)?,
                    returned: res.pairs.len(),
                    verified: Some(res.verified),
                    rounds: None,
                };
                report
                    .runs
                    .push(GridRun::new(c, k, params, None, vec![row]));
            }
        }
        report.build = Some(build);
        report.ground_truth = Some(gt_info);
        report.check_aggregates()?;
        Ok(report)
    })
}

fn gamma_info(cal: &pmlsh::cp::GammaCalibration, calibrate_ms: f64) -> GammaInfo {
    GammaInfo {
        gamma: cal.gamma,
        prob: cal.prob,
        sample_size: cal.sample_size,
        pairs: cal.pairs,
        coverage: cal.coverage,
        calibrate_ms,
    }
}

/// Computes (or confirms) the cached exact answers for the query set or
/// the closest pairs.
pub fn cmd_oracle(cfg: &RunConfig) -> CliResult<RunReport> {
    let cfg = &with_algorithm(cfg, Algorithm::Oracle);
    cfg.validate()?;
    if cfg.gt_cache.is_none() {
        return Err(CliError::Config("oracle needs --gt-cache <path>".into()));
    }
    in_pool(cfg, || {
        let full = load_dataset(cfg)?;
        match cfg.oracle_kind {
            OracleKind::Knn => {
                let (ds, queries) = split_queries(cfg, &full)?;
                let k = with_algorithm(cfg, Algorithm::Ann)
                    .k_values()
                    .into_iter()
                    .max()
                    .unwrap_or(1);
                let (_, info) = knn_truth(cfg, &ds, &queries, k)?;
                let mut report = RunReport::new("oracle", cfg, dataset_info(&full, &ds));
                report.ground_truth = Some(info);
                Ok(report)
            }
            OracleKind::Kcp => {
                let k = with_algorithm(cfg, Algorithm::CpFilter)
                    .k_values()
                    .into_iter()
                    .max()
                    .unwrap_or(1);
                let (_, info) = kcp_truth(cfg, &full, k)?;
                let mut report = RunReport::new("oracle", cfg, dataset_info(&full, &full));
                report.ground_truth = Some(info);
                Ok(report)
            }
        }
    })
}

/// Calibrates gamma for the current dataset and tree settings.
pub fn cmd_calibrate(cfg: &RunConfig) -> CliResult<RunReport> {
    cfg.validate()?;
    in_pool(cfg, || {
        let ds = load_dataset(cfg)?;
        let family = HashFamily::new(ds.dim(), cfg.m, cfg.seed_for(SeedUse::Family))?;
        let start = Instant::now();
        let cal = calibrate_gamma(
            &ds,
            &family,
            cfg.capacity,
            cfg.policy,
            cfg.prob_gamma,
            cfg.gamma_sample,
            cfg.seed_for(SeedUse::Gamma),
        )?;
        let mut report = RunReport::new("calibrate", cfg, dataset_info(&ds, &ds));
        report.gamma = Some(gamma_info(&cal, ms_since(start)));
        Ok(report)
    })
}
