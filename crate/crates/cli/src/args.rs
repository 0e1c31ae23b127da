use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pmlsh::pmtree::PromotePolicy;

use crate::config::{Algorithm, OracleKind, RunConfig, SynthShape};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "pmlsh",
    version,
    about = "Approximate nearest-neighbor and closest-pair benchmarks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an index and write a snapshot to --index.
    Build(RunArgs),
    /// (c,k)-approximate nearest-neighbor queries.
    Ann(RunArgs),
    /// (r,c)-ball-cover queries.
    Bc(RunArgs),
    /// (c,k)-approximate closest pairs.
    Cp(RunArgs),
    /// Compute and cache exact answers.
    Oracle(RunArgs),
    /// Calibrate gamma for the closest-pair radius filter.
    Calibrate(RunArgs),
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Build(a)
            | Command::Ann(a)
            | Command::Bc(a)
            | Command::Cp(a)
            | Command::Oracle(a)
            | Command::Calibrate(a) => a,
        }
    }
}

/// Flags mirror the fields of the run configuration. Values given here
/// override those read from --config, which override the defaults.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// JSON file with (a subset of) the run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset file: `.fvecs`, or one vector per line of text.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Field separator for text datasets (default: whitespace).
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Generate data of this shape instead of reading a file.
    #[arg(long, value_enum)]
    pub synthetic: Option<SynthShape>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub spread: Option<f64>,
    /// Closest-pair engine for `cp` (cp-filter or cp-bnb).
    #[arg(long, value_enum)]
    pub algorithm: Option<Algorithm>,
    #[arg(long, value_enum)]
    pub oracle_kind: Option<OracleKind>,
    /// Projected dimensionality.
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of pivots.
    #[arg(long)]
    pub s: Option<usize>,
    /// Node capacity M.
    #[arg(long, short = 'M')]
    pub capacity: Option<usize>,
    /// Split policy: m-rad or random.
    #[arg(long)]
    pub policy: Option<PromotePolicy>,
    /// Approximation ratios, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub c: Vec<f64>,
    /// Result sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub prob_gamma: Option<f64>,
    #[arg(long)]
    pub gamma_sample: Option<usize>,
    #[arg(long)]
    pub sample_pairs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub data_seed: Option<u64>,
    #[arg(long)]
    pub family_seed: Option<u64>,
    /// Number of query points drawn from the dataset.
    #[arg(long)]
    pub queries: Option<usize>,
    /// Timed repetitions per query.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Remove the query points from the index.
    #[arg(long)]
    pub exclude_queries: bool,
    #[arg(long)]
    pub bc_radius: Option<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Index snapshot to write (build) or load (queries).
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Ground-truth cache file.
    #[arg(long)]
    pub gt_cache: Option<PathBuf>,
    /// Report path; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-query rows as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

impl RunArgs {
    pub fn to_config(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$field = v; })*
            };
        }
        macro_rules! set_opt {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$field = Some(v); })*
            };
        }
        set!(
            algorithm,
            oracle_kind,
            m,
            s,
            capacity,
            policy,
            alpha1,
            prob_gamma,
            gamma_sample,
            sample_pairs
        );
        set!(seed, queries, repeats);
        set_opt!(
            dataset,
            delimiter,
            data_seed,
            family_seed,
            bc_radius,
            threads,
            index,
            gt_cache,
            out,
            csv
        );
        if !self.c.is_empty() {
            cfg.c = self.c.clone();
        }
        if !self.k.is_empty() {
            cfg.k = self.k.clone();
        }
        if self.exclude_queries {
            cfg.exclude_queries = true;
        }
        let synthetic_given = self.synthetic.is_some()
            || self.n.is_some()
            || self.d.is_some()
            || self.clusters.is_some()
            || self.spread.is_some();
        if synthetic_given {
            let mut spec = cfg.synthetic.clone().unwrap_or_default();
            if let Some(shape) = self.synthetic {
                spec.shape = shape;
            }
            spec.n = self.n.unwrap_or(spec.n);
            spec.d = self.d.unwrap_or(spec.d);
            spec.clusters = self.clusters.unwrap_or(spec.clusters);
            spec.spread = self.spread.unwrap_or(spec.spread);
            cfg.synthetic = Some(spec);
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        let cli =
            Cli::try_parse_from(std::iter::once("pmlsh").chain(args.iter().copied())).unwrap();
        cli.command.args().to_config().unwrap()
    }

    #[test]
    fn kebab_case_flags_reach_the_config() {
        let cfg = parse(&[
            "ann",
            "--synthetic",
            "clustered",
            "--n",
            "300",
            "--k",
            "1,10",
            "--prob-gamma",
            "0.9",
            "-M",
            "8",
            "--policy",
            "random",
            "--exclude-queries",
        ]);
        let spec = cfg.synthetic.clone().unwrap();
        assert_eq!(
            (spec.shape, spec.n, spec.d),
            (SynthShape::Clustered, 300, 8)
        );
        assert_eq!(cfg.k, vec![1, 10]);
        assert_eq!(cfg.prob_gamma, 0.9);
        assert_eq!(cfg.capacity, 8);
        assert_eq!(cfg.policy, PromotePolicy::Random);
        assert!(cfg.exclude_queries);
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"m": 10, "seed": 5, "c": [2.0]}"#).unwrap();
        let cfg = parse(&["cp", "--config", path.to_str().unwrap(), "--seed", "9"]);
        assert_eq!((cfg.m, cfg.seed, cfg.c.clone()), (10, 9, vec![2.0]));
    }

    #[test]
    fn unparsable_values_are_rejected() {
        assert!(Cli::try_parse_from(["pmlsh", "ann", "--k", "x"]).is_err());
        assert!(Cli::try_parse_from(["pmlsh", "ann", "--policy", "best"]).is_err());
        assert!(Cli::try_parse_from(["pmlsh", "frobnicate"]).is_err());
    }
}
