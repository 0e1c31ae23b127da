use std::path::{Path, PathBuf};

use pmlsh::data::SyntheticKind;
use pmlsh::pmtree::PromotePolicy;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ann,
    Bc,
    CpBnb,
    CpFilter,
    Oracle,
}

impl Algorithm {
    pub fn is_cp(self) -> bool {
        matches!(self, Algorithm::CpBnb | Algorithm::CpFilter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    Knn,
    Kcp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SynthShape {
    Gaussian,
    Clustered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub shape: SynthShape,
    /// Used only by the clustered shape.
    pub clusters: usize,
    pub spread: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 10_000,
            d: 8,
            shape: SynthShape::Gaussian,
            clusters: 10,
            spread: 1.0,
        }
    }
}

impl SyntheticSpec {
    pub fn kind(&self) -> SyntheticKind {
        match self.shape {
            SynthShape::Gaussian => SyntheticKind::Gaussian,
            SynthShape::Clustered => SyntheticKind::Clustered {
                clusters: self.clusters,
                spread: self.spread,
            },
        }
    }
}

/// Every knob of a run. Unset list fields fall back to per-algorithm defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct RunConfig {
    /// `.fvecs` or whitespace/delimited text. Mutually exclusive with `synthetic`.
    pub dataset: Option<PathBuf>,
    pub delimiter: Option<char>,
    /// Generated data; the default when no dataset is given.
    pub synthetic: Option<SyntheticSpec>,
    pub algorithm: Algorithm,
    pub oracle_kind: OracleKind,
    pub m: usize,
    /// Number of pivots.
    pub s: usize,
    /// Node capacity `M`.
    pub capacity: usize,
    pub policy: PromotePolicy,
    /// Approximation ratios; empty means 1.5 for NN and 4 for CP.
    pub c: Vec<f64>,
    /// Result sizes; empty means 50 for NN and 1000 for CP.
    pub k: Vec<usize>,
    pub alpha1: f64,
    pub prob_gamma: f64,
    pub gamma_sample: usize,
    /// Pairs sampled for the distance distribution used to pick `r_min`.
    pub sample_pairs: usize,
    /// Master seed; every other seed is derived from it unless given.
    pub seed: u64,
    pub data_seed: Option<u64>,
    pub family_seed: Option<u64>,
    pub queries: usize,
    pub repeats: usize,
    /// Remove the query points from the indexed set.
    pub exclude_queries: bool,
    /// Fixed ball-cover radius; otherwise each query's exact NN distance.
    pub bc_radius: Option<f64>,
    pub threads: Option<usize>,
    /// Snapshot written by `build` and loaded by the query commands.
    pub index: Option<PathBuf>,
    pub gt_cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            delimiter: None,
            synthetic: None,
            algorithm: Algorithm::Ann,
            oracle_kind: OracleKind::Knn,
            m: pmlsh::projection::DEFAULT_M,
            s: pmlsh::pmtree::DEFAULT_PIVOTS,
            capacity: pmlsh::pmtree::DEFAULT_CAPACITY,
            policy: PromotePolicy::MRad,
            c: Vec::new(),
            k: Vec::new(),
            alpha1: pmlsh::projection::DEFAULT_ALPHA1,
            prob_gamma: pmlsh::cp::DEFAULT_GAMMA_PROB,
            gamma_sample: pmlsh::cp::DEFAULT_GAMMA_SAMPLE,
            sample_pairs: pmlsh::ann::DEFAULT_SAMPLE_PAIRS,
            seed: 42,
            data_seed: None,
            family_seed: None,
            queries: 200,
            repeats: 1,
            exclude_queries: false,
            bc_radius: None,
            threads: None,
            index: None,
            gt_cache: None,
            out: None,
            csv: None,
        }
    }
}

/// Purposes that get their own seed stream.
#[derive(Debug, Clone, Copy)]
pub enum SeedUse {
    Data,
    Family,
    Tree,
    Pivots,
    Queries,
    Distribution,
    Gamma,
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn seed_for(&self, purpose: SeedUse) -> u64 {
        let derived = |i: u64| self.seed ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        match purpose {
            SeedUse::Data => self.data_seed.unwrap_or(self.seed),
            SeedUse::Family => self.family_seed.unwrap_or_else(|| derived(1)),
            SeedUse::Tree => derived(2),
            SeedUse::Pivots => derived(3),
            SeedUse::Queries => derived(4),
            SeedUse::Distribution => derived(5),
            SeedUse::Gamma => derived(6),
        }
    }

    pub fn c_values(&self) -> Vec<f64> {
        match (self.c.is_empty(), self.algorithm.is_cp()) {
            (false, _) => self.c.clone(),
            (true, true) => vec![4.0],
            (true, false) => vec![1.5],
        }
    }

    pub fn k_values(&self) -> Vec<usize> {
        match (self.k.is_empty(), self.algorithm.is_cp()) {
            (false, _) => self.k.clone(),
            (true, true) => vec![1000],
            (true, false) => vec![50],
        }
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        self.synthetic.clone().unwrap_or_default()
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |what: String| Err(CliError::Config(what));
        if self.dataset.is_some() && self.synthetic.is_some() {
            return bad("give either a dataset file or a synthetic spec, not both".into());
        }
        if let Some(spec) = &self.synthetic {
            if spec.n < 2 || spec.d == 0 {
                return bad(format!(
                    "synthetic data needs n >= 2 and d >= 1 (got n={}, d={})",
                    spec.n, spec.d
                ));
            }
            if spec.shape == SynthShape::Clustered && (spec.clusters == 0 || !(spec.spread >= 0.0))
            {
                return bad("clustered data needs clusters >= 1 and spread >= 0".into());
            }
        }
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if self.capacity < 2 {
            return bad(format!(
                "node capacity must be at least 2, got {}",
                self.capacity
            ));
        }
        if let Some(c) = self.c.iter().find(|c| !(**c > 1.0 && c.is_finite())) {
            return bad(format!("every c must be a finite value > 1, got {c}"));
        }
        if self.k.contains(&0) {
            return bad("every k must be at least 1".into());
        }
        if !(self.alpha1 > 0.0 && self.alpha1 < 1.0) {
            return bad(format!("alpha1 must lie in (0, 1), got {}", self.alpha1));
        }
        if !(self.prob_gamma > 0.0 && self.prob_gamma <= 1.0) {
            return bad(format!(
                "prob-gamma must lie in (0, 1], got {}",
                self.prob_gamma
            ));
        }
        if self.gamma_sample < 2 {
            return bad("gamma-sample must be at least 2".into());
        }
        if self.sample_pairs == 0 {
            return bad("sample-pairs must be at least 1".into());
        }
        if self.queries == 0 || self.repeats == 0 {
            return bad("queries and repeats must be at least 1".into());
        }
        if let Some(r) = self.bc_radius {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("bc-radius must be positive, got {r}"));
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }

    /// Worker count: `threads` (or all cores), capped by `PMLSH_THREADS`.
    pub fn worker_count(&self) -> CliResult<usize> {
        let wanted = self
            .threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        match std::env::var("PMLSH_THREADS") {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(cap) if cap >= 1 => Ok(wanted.min(cap)),
                _ => Err(CliError::Config(format!(
                    "PMLSH_THREADS must be a positive integer, got {v:?}"
                ))),
            },
            Err(_) => Ok(wanted),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_algorithm() {
        let mut cfg = RunConfig::default();
        assert_eq!((cfg.c_values(), cfg.k_values()), (vec![1.5], vec![50]));
        cfg.algorithm = Algorithm::CpFilter;
        assert_eq!((cfg.c_values(), cfg.k_values()), (vec![4.0], vec![1000]));
        assert_eq!((cfg.m, cfg.s, cfg.capacity), (15, 5, 16));
        assert!((cfg.alpha1 - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(cfg.prob_gamma, 0.85);
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_json_overrides_defaults() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"k": [1, 10], "policy": "random", "synthetic": {"n": 500, "shape": "clustered"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.k, vec![1, 10]);
        assert_eq!(cfg.policy, PromotePolicy::Random);
        let spec = cfg.synthetic.unwrap();
        assert_eq!((spec.n, spec.d, spec.clusters), (500, 8, 10));
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn validation_rejects_out_of_range_values() {
        let ok = RunConfig::default();
        let cases: Vec<Box<dyn Fn(&mut RunConfig)>> = vec![
            Box::new(|c| c.c = vec![1.0]),
            Box::new(|c| c.k = vec![0]),
            Box::new(|c| c.alpha1 = 1.0),
            Box::new(|c| c.prob_gamma = 0.0),
            Box::new(|c| c.capacity = 1),
            Box::new(|c| c.queries = 0),
            Box::new(|c| c.bc_radius = Some(-1.0)),
            Box::new(|c| {
                c.dataset = Some("x.fvecs".into());
                c.synthetic = Some(SyntheticSpec::default());
            }),
        ];
        for f in cases {
            let mut cfg = ok.clone();
            f(&mut cfg);
            assert!(
                matches!(cfg.validate(), Err(CliError::Config(_))),
                "{cfg:?}"
            );
        }
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let cfg = RunConfig::default();
        let uses = [
            SeedUse::Family,
            SeedUse::Tree,
            SeedUse::Pivots,
            SeedUse::Queries,
            SeedUse::Distribution,
            SeedUse::Gamma,
        ];
        let mut seeds: Vec<u64> = uses.iter().map(|&u| cfg.seed_for(u)).collect();
        seeds.push(cfg.seed_for(SeedUse::Data));
        seeds.sort();
        seeds.dedup();
        assert_eq!(seeds.len(), uses.len() + 1);
    }
}
