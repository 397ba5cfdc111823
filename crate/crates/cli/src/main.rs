//! `rnapars`: distances, medians and small parsimony for RNA secondary
//! structures, plus the RANDOM-dataset experiment pipeline.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rnapars::experiment::{
    experiment_table, random_datasets, replicate_name, replicate_seed, run_experiment, Dataset,
    Method,
};
use rnapars::io::{self, Cell, Table};
use rnapars::median::{median, Constraint};
use rnapars::oracle;
use rnapars::sampling::{sample_phylogeny, SamplerConfig};
use rnapars::smallpars::{leaf_restricted_sp, median_heuristic_sp, rf_nc_sp, Assignment};
use rnapars::{bp_distance, Error, Metric, Phylogeny, Result, RnaTree, SecondaryStructure};

const STRUCTURES_FILE: &str = "structures.txt";
const TREE_FILE: &str = "tree.nwk";
const ALIGNMENT_FILE: &str = "alignment.sto";

#[derive(Parser, Debug)]
#[command(name = "rnapars", version, about, args_override_self = true)]
struct Cli {
    /// File of key=value lines used as default flag values for the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write the result table here instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pairwise distances between structures.
    Distance(DistanceArgs),
    /// Median structure of a set of structures.
    Median(MedianArgs),
    /// Ancestral structures on a phylogeny.
    Smallpars(SmallparsArgs),
    /// Write RANDOM datasets (structures plus complete binary phylogeny).
    Sample(SampleArgs),
    /// Run small parsimony methods and report base pairs per tree height.
    Experiment(ExperimentArgs),
    /// Brute-force reference answers for small inputs.
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DistanceMetric {
    Rf,
    Il,
    Re,
    Bp,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MetricArg {
    Rf,
    Il,
    Re,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Rf => Metric::Rf,
            MetricArg::Il => Metric::Il,
            MetricArg::Re => Metric::Re,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConstraintArg {
    Nc,
    Ilc,
    Dlc,
    Bpc,
}

impl From<ConstraintArg> for Constraint {
    fn from(c: ConstraintArg) -> Self {
        match c {
            ConstraintArg::Nc => Constraint::Nc,
            ConstraintArg::Ilc => Constraint::Ilc,
            ConstraintArg::Dlc => Constraint::Dlc,
            ConstraintArg::Bpc => Constraint::Bpc,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PairsArg {
    All,
    FirstVsRest,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Solver {
    Exact,
    MedianHeuristic,
    LeafRestricted,
}

#[derive(Args, Debug)]
struct DistanceArgs {
    /// Structure records (">id" line, then an aligned dot-bracket line).
    #[arg(long, short = 's')]
    structures: PathBuf,
    #[arg(long, value_enum, default_value = "rf")]
    metric: DistanceMetric,
    #[arg(long, value_enum, default_value = "all")]
    pairs: PairsArg,
}

#[derive(Args, Debug)]
struct MedianArgs {
    #[arg(long, short = 's')]
    structures: PathBuf,
    #[arg(long, value_enum, default_value = "rf")]
    metric: MetricArg,
    #[arg(long, value_enum, default_value = "nc")]
    constraint: ConstraintArg,
}

#[derive(Args, Debug)]
struct SmallparsArgs {
    #[arg(long, short = 's')]
    structures: PathBuf,
    /// Newick phylogeny whose leaf labels match the structure ids.
    #[arg(long, short = 't')]
    tree: PathBuf,
    #[arg(long, value_enum, default_value = "rf")]
    metric: MetricArg,
    #[arg(long, value_enum, default_value = "nc")]
    constraint: ConstraintArg,
    #[arg(long, value_enum, default_value = "exact")]
    solver: Solver,
    /// Upper bound on improvement rounds of the median heuristic.
    #[arg(long, default_value_t = 100)]
    max_rounds: usize,
}

#[derive(Args, Debug, Clone)]
struct RandomArgs {
    /// Structure length N.
    #[arg(long, default_value_t = 100)]
    length: usize,
    /// Minimum number of unpaired positions enclosed by a pair.
    #[arg(long, default_value_t = 3)]
    theta: usize,
    /// Height of the complete binary phylogeny.
    #[arg(long, default_value_t = 5)]
    height: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
}

impl RandomArgs {
    fn config(&self) -> SamplerConfig {
        SamplerConfig {
            length: self.length,
            theta: self.theta,
            height: self.height,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    random: RandomArgs,
    /// Directory receiving one sub-directory per replicate.
    #[arg(long)]
    outdir: PathBuf,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Dataset directory written by `sample` (or one replicate of it). When
    /// absent, RANDOM datasets are generated in memory.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[command(flatten)]
    random: RandomArgs,
    /// Comma-separated methods among rf_nc, il_nc, il_ilc, rf_ilc, re.
    #[arg(long, default_value = "rf_nc,il_nc,il_ilc,rf_ilc")]
    methods: String,
    #[arg(long, default_value_t = 100)]
    max_rounds: usize,
    /// Write 0 in the wall_ms column so output is reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(subcommand)]
    command: OracleCommand,
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// Every structure of a length.
    Structures {
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        theta: usize,
    },
    /// Exhaustive median.
    Median {
        #[arg(long, short = 's')]
        structures: PathBuf,
        #[arg(long, value_enum, default_value = "rf")]
        metric: MetricArg,
        #[arg(long, value_enum, default_value = "nc")]
        constraint: ConstraintArg,
    },
}

/// Reads records and drops gapped columns.
fn load_structures(path: &Path) -> Result<Vec<(String, SecondaryStructure)>> {
    io::degap(&io::read_structures(path)?)
}

fn load_trees(path: &Path) -> Result<Vec<(String, RnaTree)>> {
    Ok(load_structures(path)?
        .into_iter()
        .map(|(id, s)| (id, s.to_tree()))
        .collect())
}

fn cmd_distance(args: &DistanceArgs) -> Result<Table> {
    let records = load_structures(&args.structures)?;
    let pairs: Vec<(usize, usize)> = match args.pairs {
        PairsArg::All => (0..records.len())
            .flat_map(|i| (i + 1..records.len()).map(move |j| (i, j)))
            .collect(),
        PairsArg::FirstVsRest => (1..records.len()).map(|j| (0, j)).collect(),
    };
    let name = format!("{:?}", args.metric).to_ascii_lowercase();
    let mut table = Table::new(["id1", "id2", "metric", "value"]);
    for (i, j) in pairs {
        let (a, b) = (&records[i], &records[j]);
        let value = match args.metric {
            DistanceMetric::Bp => bp_distance(&a.1, &b.1)? as f64,
            DistanceMetric::Rf => Metric::Rf.distance(&a.1.to_tree(), &b.1.to_tree())?,
            DistanceMetric::Il => Metric::Il.distance(&a.1.to_tree(), &b.1.to_tree())?,
            DistanceMetric::Re => Metric::Re.distance(&a.1.to_tree(), &b.1.to_tree())?,
        };
        table.push(vec![
            a.0.as_str().into(),
            b.0.as_str().into(),
            name.as_str().into(),
            value.into(),
        ]);
    }
    Ok(table)
}

fn cmd_median(args: &MedianArgs) -> Result<Table> {
    let trees: Vec<RnaTree> = load_trees(&args.structures)?
        .into_iter()
        .map(|(_, t)| t)
        .collect();
    let metric = Metric::from(args.metric);
    let constraint = Constraint::from(args.constraint);
    let result = median(&trees, metric, constraint)?;
    let mut table = Table::new(["metric", "constraint", "mcost", "dotbracket"]);
    table.push(vec![
        metric.name().into(),
        constraint.name().into(),
        result.mcost.into(),
        result.tree.to_dotbracket().into(),
    ]);
    Ok(table)
}

fn cmd_smallpars(args: &SmallparsArgs) -> Result<Table> {
    let phy = io::read_newick(&args.tree)?;
    let leaf_trees: BTreeMap<String, RnaTree> = load_trees(&args.structures)?.into_iter().collect();
    let metric = Metric::from(args.metric);
    let constraint = Constraint::from(args.constraint);
    let assignment = match args.solver {
        Solver::Exact => match (metric, constraint) {
            (Metric::Rf, Constraint::Nc) => rf_nc_sp(&phy, &leaf_trees)?,
            _ => {
                return Err(Error::Unsupported(format!(
                    "no exact solver for {metric}/{constraint}; exact small parsimony is only known for rf/nc"
                )))
            }
        },
        Solver::LeafRestricted => leaf_restricted_sp(&phy, &leaf_trees, metric)?,
        Solver::MedianHeuristic => {
            let init = leaf_restricted_sp(&phy, &leaf_trees, metric)?;
            median_heuristic_sp(&phy, &leaf_trees, metric, constraint, init, args.max_rounds)?.assignment
        }
    };
    Ok(assignment_table(&phy, &assignment))
}

fn assignment_table(phy: &Phylogeny, assignment: &Assignment) -> Table {
    let mut table = Table::new([
        "node_id",
        "depth",
        "num_base_pairs",
        "dotbracket",
        "spcost",
        "spcost_per_edge",
    ]);
    for v in phy.preorder() {
        let t = assignment.tree(v);
        table.push(vec![
            phy.node_id(v).into(),
            phy.depth(v).into(),
            t.num_base_pairs().into(),
            t.to_dotbracket().into(),
            Cell::Empty,
            Cell::Empty,
        ]);
    }
    let per_edge = if phy.num_edges() == 0 {
        0.0
    } else {
        assignment.sp_cost() / phy.num_edges() as f64
    };
    table.push(vec![
        "total".into(),
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
        assignment.sp_cost().into(),
        per_edge.into(),
    ]);
    table
}

fn cmd_sample(args: &SampleArgs) -> Result<Table> {
    let mut table = Table::new(["replicate", "seed", "directory"]);
    fs::create_dir_all(&args.outdir)?;
    for r in 0..args.random.replicates {
        let seed = replicate_seed(args.random.seed, r);
        let cfg = SamplerConfig {
            seed,
            ..args.random.config()
        };
        let (phy, records) = sample_phylogeny(&cfg)?;
        let dir = args.outdir.join(replicate_name(r));
        fs::create_dir_all(&dir)?;
        let text: Vec<io::Record> = records
            .into_iter()
            .map(|(id, s)| (id, s.to_dotbracket()))
            .collect();
        io::write_structures(&dir.join(STRUCTURES_FILE), &text)?;
        io::write_newick(&dir.join(TREE_FILE), &phy)?;
        table.push(vec![
            replicate_name(r).into(),
            Cell::Text(seed.to_string()),
            dir.display().to_string().into(),
        ]);
    }
    Ok(table)
}

fn load_dataset(dir: &Path, name: String) -> Result<Dataset> {
    let phy = io::read_newick(&dir.join(TREE_FILE))?;
    let structures = dir.join(STRUCTURES_FILE);
    // Families without per-sequence structures use the projected consensus.
    let records = if structures.exists() || !dir.join(ALIGNMENT_FILE).exists() {
        io::read_structures(&structures)?
    } else {
        io::project_consensus(&io::read_stockholm(&dir.join(ALIGNMENT_FILE))?)?
    };
    let dropped = io::gap_columns(&records).len();
    if dropped > 0 {
        eprintln!("{name}: dropped {dropped} gapped column(s)");
    }
    Dataset::from_records(name, phy, &records)
}

/// A single replicate directory, or a directory of them.
fn load_datasets(root: &Path) -> Result<Vec<Dataset>> {
    if root.join(TREE_FILE).exists() {
        let name = root.file_name().map_or_else(
            || "dataset".to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        return Ok(vec![load_dataset(root, name)?]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(TREE_FILE).exists())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no {TREE_FILE} found in {} or its sub-directories",
            root.display()
        )));
    }
    dirs.iter()
        .map(|d| {
            let name = d
                .file_name()
                .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
            load_dataset(d, name)
        })
        .collect()
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<Table> {
    let methods: Vec<Method> = args
        .methods
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    let datasets = match &args.dataset {
        Some(dir) => load_datasets(dir)?,
        None => random_datasets(&args.random.config(), args.random.replicates)?,
    };
    let rows = run_experiment(&datasets, &methods, args.max_rounds, !args.no_timing)?;
    Ok(experiment_table(&rows))
}

fn cmd_oracle(args: &OracleArgs) -> Result<Table> {
    match &args.command {
        OracleCommand::Structures { length, theta } => {
            let mut table = Table::new(["dotbracket"]);
            for s in oracle::enumerate_structures(*length, *theta, oracle::STRUCTURE_CAP)? {
                table.push(vec![s.to_dotbracket().into()]);
            }
            Ok(table)
        }
        OracleCommand::Median {
            structures,
            metric,
            constraint,
        } => {
            let trees: Vec<RnaTree> = load_trees(structures)?
                .into_iter()
                .map(|(_, t)| t)
                .collect();
            let metric = Metric::from(*metric);
            let constraint = Constraint::from(*constraint);
            let (cost, tree) =
                oracle::brute_median(&trees, metric, constraint, oracle::MEDIAN_CAP)?;
            let mut table = Table::new(["metric", "constraint", "mcost", "dotbracket"]);
            table.push(vec![
                metric.name().into(),
                constraint.name().into(),
                cost.into(),
                tree.to_dotbracket().into(),
            ]);
            Ok(table)
        }
    }
}

/// Turns `key=value` lines into `--key value` flags. `#` starts a comment;
/// `true` yields a bare flag and `false` omits it.
fn config_flags(text: &str) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                format: "config",
                line: idx + 1,
                column: 1,
                message: "expected key=value".into(),
            });
        };
        let key = key.trim().replace('_', "-");
        match value.trim() {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            v => {
                out.push(format!("--{key}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

/// Splices flags from `--config FILE` in right after the subcommand name, so
/// flags given on the command line take precedence.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    for (k, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = args.get(k + 1).cloned();
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let flags = config_flags(&fs::read_to_string(PathBuf::from(&path))?)?;
    const COMMANDS: [&str; 6] = [
        "distance",
        "median",
        "smallpars",
        "sample",
        "experiment",
        "oracle",
    ];
    let Some(at) = args
        .iter()
        .position(|a| COMMANDS.contains(&a.to_string_lossy().as_ref()))
    else {
        return Ok(args);
    };
    let mut out = args[..=at].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[at + 1..]);
    Ok(out)
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("RNAPARS_THREADS") else {
        return Ok(());
    };
    let n: usize = value.trim().parse().map_err(|_| {
        Error::Unsupported(format!("RNAPARS_THREADS must be a number, got {value:?}"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Internal(e.to_string()))
}

fn run(cli: &Cli) -> Result<()> {
    configure_threads()?;
    let table = match &cli.command {
        Command::Distance(a) => cmd_distance(a)?,
        Command::Median(a) => cmd_median(a)?,
        Command::Smallpars(a) => cmd_smallpars(a)?,
        Command::Sample(a) => cmd_sample(a)?,
        Command::Experiment(a) => cmd_experiment(a)?,
        Command::Oracle(a) => cmd_oracle(a)?,
    };
    table.write(cli.out.as_deref(), cli.json)
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 1 } else { 2 })
        }
    }
}
