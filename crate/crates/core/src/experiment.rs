//! Ancestral-structure experiments: run small parsimony methods on datasets
//! and report base-pair counts per phylogeny height.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::io::{degap, Cell, Record, Table};
use crate::median::Constraint;
use crate::phylogeny::Phylogeny;
use crate::sampling::{sample_phylogeny, SamplerConfig};
use crate::smallpars::{leaf_restricted_sp, median_heuristic_sp, rf_nc_sp, Assignment};
use crate::structure::RnaTree;

/// A small parsimony pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Exact RF solver.
    RfNc,
    /// Median heuristic with unconstrained IL medians.
    IlNc,
    /// Median heuristic with IL medians restricted to input ILs.
    IlIlc,
    /// Median heuristic with RF medians restricted to input ILs.
    RfIlc,
    /// Leaf-restricted assignment under RE.
    Re,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::RfNc,
        Method::IlNc,
        Method::IlIlc,
        Method::RfIlc,
        Method::Re,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::RfNc => "rf_nc",
            Method::IlNc => "il_nc",
            Method::IlIlc => "il_ilc",
            Method::RfIlc => "rf_ilc",
            Method::Re => "re",
        }
    }

    /// The distance the method optimizes.
    pub fn metric(&self) -> Metric {
        match self {
            Method::RfNc | Method::RfIlc => Metric::Rf,
            Method::IlNc | Method::IlIlc => Metric::Il,
            Method::Re => Metric::Re,
        }
    }

    /// Runs the method; heuristics start from the leaf-restricted optimum.
    pub fn run(
        &self,
        phy: &Phylogeny,
        leaf_trees: &BTreeMap<String, RnaTree>,
        max_rounds: usize,
    ) -> Result<Assignment> {
        let metric = self.metric();
        let heuristic = |constraint| -> Result<Assignment> {
            let init = leaf_restricted_sp(phy, leaf_trees, metric)?;
            Ok(
                median_heuristic_sp(phy, leaf_trees, metric, constraint, init, max_rounds)?
                    .assignment,
            )
        };
        match self {
            Method::RfNc => rf_nc_sp(phy, leaf_trees),
            Method::IlNc => heuristic(Constraint::Nc),
            Method::IlIlc | Method::RfIlc => heuristic(Constraint::Ilc),
            Method::Re => leaf_restricted_sp(phy, leaf_trees, metric),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::Unsupported(format!("unknown method {s:?}")))
    }
}

/// A phylogeny with one structure per leaf.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub phylogeny: Phylogeny,
    pub leaf_trees: BTreeMap<String, RnaTree>,
}

impl Dataset {
    /// Builds a dataset from aligned records, dropping gapped columns.
    pub fn from_records(
        name: impl Into<String>,
        phylogeny: Phylogeny,
        records: &[Record],
    ) -> Result<Self> {
        let leaf_trees = degap(records)?
            .into_iter()
            .map(|(id, s)| (id, s.to_tree()))
            .collect();
        Ok(Self {
            name: name.into(),
            phylogeny,
            leaf_trees,
        })
    }
}

/// Seed of replicate `r` of a run seeded with `seed`.
pub fn replicate_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add((r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn replicate_name(r: usize) -> String {
    format!("rep{r:03}")
}

/// `replicates` RANDOM datasets drawn with per-replicate seeds.
pub fn random_datasets(config: &SamplerConfig, replicates: usize) -> Result<Vec<Dataset>> {
    (0..replicates)
        .map(|r| {
            let cfg = SamplerConfig {
                seed: replicate_seed(config.seed, r),
                ..*config
            };
            let (phylogeny, records) = sample_phylogeny(&cfg)?;
            let leaf_trees = records
                .into_iter()
                .map(|(id, s)| (id, s.to_tree()))
                .collect();
            Ok(Dataset {
                name: replicate_name(r),
                phylogeny,
                leaf_trees,
            })
        })
        .collect()
}

/// One line of the long-format output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub replicate: String,
    pub method: Method,
    pub node_height: usize,
    pub mean_bp: f64,
    pub max_bp: usize,
    pub spcost_per_edge: f64,
    pub wall_ms: f64,
}

/// Per-height base-pair statistics of one assignment.
pub fn height_rows(
    replicate: &str,
    method: Method,
    phy: &Phylogeny,
    assignment: &Assignment,
    wall_ms: f64,
) -> Vec<ExperimentRow> {
    let heights = phy.heights();
    let mut by_height: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, &h) in heights.iter().enumerate() {
        by_height
            .entry(h)
            .or_default()
            .push(assignment.tree(v).num_base_pairs());
    }
    let per_edge = if phy.num_edges() == 0 {
        0.0
    } else {
        assignment.sp_cost() / phy.num_edges() as f64
    };
    by_height
        .into_iter()
        .map(|(h, bps)| ExperimentRow {
            replicate: replicate.to_string(),
            method,
            node_height: h,
            mean_bp: bps.iter().sum::<usize>() as f64 / bps.len() as f64,
            max_bp: bps.iter().copied().max().unwrap_or(0),
            spcost_per_edge: per_edge,
            wall_ms,
        })
        .collect()
}

/// Runs every method on every dataset in the current rayon pool. Rows are
/// sorted by replicate, method and height. With `timing` off, `wall_ms` is
/// 0 so that output is reproducible byte for byte.
pub fn run_experiment(
    datasets: &[Dataset],
    methods: &[Method],
    max_rounds: usize,
    timing: bool,
) -> Result<Vec<ExperimentRow>> {
    let tasks: Vec<(&Dataset, Method)> = datasets
        .iter()
        .flat_map(|d| methods.iter().map(move |&m| (d, m)))
        .collect();
    let chunks = tasks
        .par_iter()
        .map(|(d, m)| {
            let start = Instant::now();
            let assignment = m.run(&d.phylogeny, &d.leaf_trees, max_rounds)?;
            let wall_ms = if timing {
                start.elapsed().as_secs_f64() * 1000.0
            } else {
                0.0
            };
            Ok(height_rows(&d.name, *m, &d.phylogeny, &assignment, wall_ms))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<ExperimentRow> = chunks.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (&a.replicate, a.method, a.node_height).cmp(&(&b.replicate, b.method, b.node_height))
    });
    Ok(rows)
}

pub const EXPERIMENT_HEADER: [&str; 7] = [
    "replicate",
    "method",
    "node_height",
    "mean_bp",
    "max_bp",
    "spcost_per_edge",
    "wall_ms",
];

pub fn experiment_table(rows: &[ExperimentRow]) -> Table {
    let mut t = Table::new(EXPERIMENT_HEADER);
    for r in rows {
        t.push(vec![
            Cell::from(r.replicate.as_str()),
            Cell::from(r.method.name()),
            Cell::from(r.node_height),
            Cell::from(r.mean_bp),
            Cell::from(r.max_bp),
            Cell::from(r.spcost_per_edge),
            Cell::from(r.wall_ms),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("IL-NC".parse::<Method>().unwrap(), Method::IlNc);
        assert!("bp".parse::<Method>().is_err());
    }

    #[test]
    fn small_random_run_is_deterministic() {
        let cfg = SamplerConfig {
            length: 30,
            theta: 3,
            height: 2,
            seed: 9,
        };
        let data = random_datasets(&cfg, 2).unwrap();
        let a = run_experiment(&data, &Method::ALL, 20, false).unwrap();
        let b = run_experiment(&data, &Method::ALL, 20, false).unwrap();
        assert_eq!(a, b);
        // 2 replicates × 5 methods × 3 heights
        assert_eq!(a.len(), 30);
        assert!(a
            .windows(2)
            .all(|w| (&w[0].replicate, w[0].method, w[0].node_height)
                < (&w[1].replicate, w[1].method, w[1].node_height)));
        assert!(run_experiment(&data, &[], 20, false).unwrap().is_empty());
        assert_eq!(
            experiment_table(&[]).to_csv().unwrap(),
            EXPERIMENT_HEADER.join(",") + "\n"
        );
    }
}
