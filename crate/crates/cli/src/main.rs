use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use l0cert::closed_form::{uniform_radius, GaussianBaseline, Norm, UniformParams};
use l0cert::eval::{
    acc_at_r_certified, adversarial_auc, certified_csv, certify_records, mean_radius_certified, parse_auc_csv,
    write_predictions, AucMode, Evidence, PredictionRecord, DEFAULT_CONFIDENCE,
};
use l0cert::oracle::{brute_predict_prob, brute_regions, brute_rho, brute_tree_adversary};
use l0cert::scalar::format_decimal_ceil;
use l0cert::threshold::{build_cert_table_with_progress, load_table, load_table_for, save_table, DEFAULT_PRECISION};
use l0cert::tree::{load_tree, save_tree, train, Dataset, TrainOptions};
use l0cert::{
    build_region_table, certified_radius, ingest_predictions, parse_rational, rho, Error, NoiseParams, Rational,
};
use num_traits::{One, ToPrimitive};

#[derive(Parser)]
#[command(name = "l0cert", version, about = "Tight l0 certificates for discretely smoothed classifiers")]
struct Cli {
    /// Worker threads (default: available parallelism for table builds, 1 elsewhere).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Precompute certification thresholds for radii 0..=r-max.
    Table(TableArgs),
    /// Certify a prediction dump against a threshold table.
    Certify(CertifyArgs),
    /// Train, evaluate and attack smoothed decision trees.
    #[command(subcommand)]
    Tree(TreeCommand),
    /// Dataset-level certified metrics.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Closed-form radius under uniform smoothing.
    Uniform(UniformArgs),
    /// Gaussian baseline matched to a discrete noise level.
    Gaussian(GaussianArgs),
    /// Brute-force diagnostics against the exact algorithms.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    d: usize,
    #[arg(long = "K", alias = "k", default_value_t = 1)]
    k: u32,
    #[arg(long)]
    alpha_pct: u32,
}

impl NoiseArgs {
    fn params(&self) -> Result<NoiseParams> {
        Ok(NoiseParams::new(self.d, self.k, self.alpha_pct)?)
    }
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long)]
    r_max: usize,
    /// Decimal digits per threshold.
    #[arg(long, default_value_t = DEFAULT_PRECISION)]
    precision: usize,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
    /// Require the table to be built for these parameters.
    #[arg(long, requires_all = ["expect_k", "expect_alpha_pct"])]
    expect_d: Option<usize>,
    #[arg(long)]
    expect_k: Option<u32>,
    #[arg(long)]
    expect_alpha_pct: Option<u32>,
}

#[derive(Subcommand)]
enum TreeCommand {
    /// Fit a smoothed tree to a CSV dataset (label first, binary features).
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        alpha_pct: u32,
        #[arg(long)]
        max_depth: usize,
        /// Keep the weighted class-1 share in leaves instead of rounding.
        #[arg(long)]
        soft_leaves: bool,
        /// Consider a seeded random fraction of the unused features per node.
        #[arg(long)]
        feature_fraction: Option<f64>,
    },
    /// Exact smoothed predictions as a JSON-lines dump.
    Predict {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Worst-case probability of the true label per radius, as CSV.
    Attack {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        r_max: usize,
    },
}

#[derive(Args)]
struct RecordsArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
    /// Also write the per-record certification CSV here.
    #[arg(long)]
    detail: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Greedy,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Certified accuracy at radius r.
    Acc {
        #[command(flatten)]
        records: RecordsArgs,
        #[arg(long)]
        r: usize,
    },
    /// Mean certified radius.
    Radius {
        #[command(flatten)]
        records: RecordsArgs,
    },
    /// Minimum AUC when up to k instances are perturbed.
    Auc {
        /// CSV `id,label,clean,adversarial`.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
        mode: ModeArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L1,
    Linf,
}

#[derive(Args)]
struct UniformArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    p: f64,
    #[arg(long, value_enum, default_value_t = NormArg::L1)]
    norm: NormArg,
}

#[derive(Args)]
struct GaussianArgs {
    #[command(flatten)]
    noise: NoiseArgs,
    /// Report radii at this probability only.
    #[arg(long)]
    p: Option<f64>,
    /// Number of evenly spaced probabilities in (0.5, 0.9999) for the
    /// dominance report.
    #[arg(long, default_value_t = 50)]
    grid: usize,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Region cardinalities by formula and by enumeration.
    Regions {
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long)]
        r: usize,
    },
    /// Point-wise certificate by the solver and by enumeration.
    Rho {
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long)]
        r: usize,
        /// Probability as a decimal or `num/den`.
        #[arg(long)]
        p: String,
    },
    /// Tree prediction and adversary by recursion and by enumeration.
    Tree {
        #[arg(long)]
        tree: PathBuf,
        /// Input as a string of 0/1 digits.
        #[arg(long)]
        x: String,
        #[arg(long)]
        r_max: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::UnsupportedSize(_)) => 3,
        Some(Error::Io(_)) => 1,
        Some(_) => 2,
        None if err.downcast_ref::<std::io::Error>().is_some() => 1,
        None => 2,
    }
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::Validation(format!("{} is not a readable file", path.display())).into());
    }
    Ok(())
}

fn check_out(out: &Option<PathBuf>) -> Result<()> {
    if let Some(path) = out {
        let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(Error::Validation(format!("output directory {} does not exist", parent.display())).into());
        }
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    check_out(&cli.out)?;
    match &cli.command {
        Command::Table(args) => cmd_table(cli, args),
        Command::Certify(args) => cmd_certify(cli, args),
        Command::Tree(cmd) => cmd_tree(cli, cmd),
        Command::Eval(cmd) => cmd_eval(cli, cmd),
        Command::Uniform(args) => cmd_uniform(cli, args),
        Command::Gaussian(args) => cmd_gaussian(cli, args),
        Command::Oracle(cmd) => cmd_oracle(cli, cmd),
    }
}

fn cmd_table(cli: &Cli, args: &TableArgs) -> Result<()> {
    let params = args.noise.params()?;
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let start = Instant::now();
    let table = build_cert_table_with_progress(&params, args.r_max, args.precision, workers, |r, took| {
        eprintln!("row {r} done in {:.3}s (wall {:.3}s)", took.as_secs_f64(), start.elapsed().as_secs_f64());
    })?;
    match &cli.out {
        Some(path) => save_table(&table, path)?,
        None => print!("{}", table.to_text()),
    }
    eprintln!("{} rows in {:.3}s", table.rows().len(), start.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_certify(cli: &Cli, args: &CertifyArgs) -> Result<()> {
    require_file(&args.table)?;
    require_file(&args.predictions)?;
    let table = match (args.expect_d, args.expect_k, args.expect_alpha_pct) {
        (Some(d), Some(k), Some(a)) => load_table_for(&args.table, &NoiseParams::new(d, k, a)?)?,
        _ => load_table(&args.table)?,
    };
    let records = ingest_predictions(&args.predictions)?;
    let rows = worker_pool(cli.workers.unwrap_or(1))?.install(|| certify_records(&records, &table, args.confidence))?;
    emit(&cli.out, &certified_csv(&rows))
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    require_file(path)?;
    Ok(Dataset::load_csv(path)?)
}

fn row_id(i: usize) -> String {
    format!("{i:06}")
}

fn cmd_tree(cli: &Cli, cmd: &TreeCommand) -> Result<()> {
    match cmd {
        TreeCommand::Train {
            data,
            alpha_pct,
            max_depth,
            soft_leaves,
            feature_fraction,
        } => {
            let data = read_dataset(data)?;
            if let Some(f) = feature_fraction {
                if !(*f > 0.0 && *f <= 1.0) {
                    bail!(Error::Validation(format!("feature fraction must lie in (0, 1], got {f}")));
                }
            }
            let options = TrainOptions {
                soft_leaves: *soft_leaves,
                feature_fraction: *feature_fraction,
                seed: cli.seed,
            };
            let tree = train::<Rational>(&data, *alpha_pct, *max_depth, &options)?;
            match &cli.out {
                Some(path) => save_tree(&tree, path)?,
                None => print!("{}", tree.to_text()),
            }
            Ok(())
        }
        TreeCommand::Predict { tree, data } => {
            require_file(tree)?;
            let tree = load_tree(tree)?;
            let data = read_dataset(data)?;
            let records = data
                .features
                .iter()
                .zip(&data.labels)
                .enumerate()
                .map(|(i, (x, &y))| {
                    let p1: Rational = tree.predict_prob(x)?;
                    let predicted = u32::from(p1 > Rational::new(1.into(), 2.into()));
                    let p = if predicted == 1 { p1 } else { Rational::one() - p1 };
                    Ok(PredictionRecord {
                        id: row_id(i),
                        label: u32::from(y),
                        predicted: Some(predicted),
                        evidence: Evidence::Exact(p),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            match &cli.out {
                Some(path) => write_predictions(&records, path)?,
                None => records.iter().for_each(|r| println!("{}", r.to_json_line())),
            }
            Ok(())
        }
        TreeCommand::Attack { tree, data, r_max } => {
            require_file(tree)?;
            let tree = load_tree(tree)?;
            let data = read_dataset(data)?;
            let mut out = String::from("id,r,adv_prob\n");
            for (i, (x, &y)) in data.features.iter().zip(&data.labels).enumerate() {
                let worst: Vec<Rational> = tree.worst_label_prob(x, y, *r_max)?;
                for (r, p) in worst.iter().enumerate() {
                    writeln!(out, "{},{r},{p}", row_id(i))?;
                }
            }
            emit(&cli.out, &out)
        }
    }
}

fn cmd_eval(cli: &Cli, cmd: &EvalCommand) -> Result<()> {
    let certify = |args: &RecordsArgs| -> Result<_> {
        require_file(&args.table)?;
        require_file(&args.predictions)?;
        let table = load_table(&args.table)?;
        let records = ingest_predictions(&args.predictions)?;
        let rows = worker_pool(cli.workers.unwrap_or(1))?
            .install(|| certify_records(&records, &table, args.confidence))?;
        if let Some(path) = &args.detail {
            check_out(&Some(path.clone()))?;
            fs::write(path, certified_csv(&rows))?;
        }
        Ok(rows)
    };
    match cmd {
        EvalCommand::Acc { records, r } => {
            let rows = certify(records)?;
            emit(&cli.out, &format!("acc@{r}={:.6}\n", acc_at_r_certified(&rows, *r)))
        }
        EvalCommand::Radius { records } => {
            let rows = certify(records)?;
            emit(&cli.out, &format!("mean_radius={:.6}\n", mean_radius_certified(&rows)))
        }
        EvalCommand::Auc { scores, k, mode } => {
            require_file(scores)?;
            let instances = parse_auc_csv(&fs::read_to_string(scores)?, scores)?;
            let mode = match mode {
                ModeArg::Exhaustive => AucMode::Exhaustive,
                ModeArg::Greedy => AucMode::Greedy,
            };
            let pool = worker_pool(cli.workers.unwrap_or(1))?;
            let auc: Rational = pool.install(|| adversarial_auc(&instances, *k, mode))?;
            let label = match mode {
                AucMode::Exhaustive => "auc",
                AucMode::Greedy => "auc_upper_bound",
            };
            emit(&cli.out, &format!("{label}@{k}={} ({})\n", format_decimal_ceil(&auc, 6), auc))
        }
    }
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("starting worker pool")
}

fn cmd_uniform(cli: &Cli, args: &UniformArgs) -> Result<()> {
    let params = UniformParams::new(args.gamma, args.d)?;
    let norm = match args.norm {
        NormArg::L1 => Norm::L1,
        NormArg::Linf => Norm::LInf,
    };
    let text = match uniform_radius(&params, args.p, norm)? {
        Some(r) => format!("radius={r:.12}\n"),
        None => "abstain\n".to_string(),
    };
    emit(&cli.out, &text)
}

fn cmd_gaussian(cli: &Cli, args: &GaussianArgs) -> Result<()> {
    let params = args.noise.params()?;
    let baseline = GaussianBaseline::matching(&params)?;
    let workers = cli.workers.unwrap_or(1);
    let table = l0cert::build_cert_table(&params, params.d(), DEFAULT_PRECISION, workers)?;
    let mut out = format!("sigma={:.12} alpha={:.12}\n", baseline.sigma(), baseline.alpha());
    let grid: Vec<f64> = match args.p {
        Some(p) => vec![p],
        None => (1..=args.grid).map(|i| 0.5 + 0.4999 * i as f64 / args.grid as f64).collect(),
    };
    out.push_str("p,discrete,gaussian\n");
    let mut violations = 0;
    for p in grid {
        if !(0.0..=1.0).contains(&p) {
            bail!(Error::OutOfRange(format!("p = {p} outside [0, 1]")));
        }
        let exact = Rational::from_float(p).context("p must be finite")?;
        let discrete = match certified_radius(&exact, &table) {
            l0cert::Certificate::Abstain => "abstain".to_string(),
            l0cert::Certificate::Radius(r) => r.to_string(),
        };
        let gaussian = if p <= 0.5 {
            "abstain".to_string()
        } else {
            baseline.l0_radius(p)?.to_string()
        };
        let ok = match (discrete.parse::<usize>(), gaussian.parse::<usize>()) {
            (Ok(a), Ok(b)) => a >= b,
            _ => true,
        };
        if !ok {
            violations += 1;
        }
        writeln!(out, "{p:.6},{discrete},{gaussian}")?;
    }
    writeln!(out, "violations={violations}")?;
    emit(&cli.out, &out)
}

fn cmd_oracle(cli: &Cli, cmd: &OracleCommand) -> Result<()> {
    match cmd {
        OracleCommand::Regions { noise, r } => {
            let params = noise.params()?;
            let brute = brute_regions(&params, *r)?;
            let table = build_region_table(&params, *r)?;
            let mut out = String::from("u,v,formula,enumerated\n");
            let mut mismatches = 0;
            for entry in &table.entries {
                let counted = brute.get(&(entry.u, entry.v)).copied().unwrap_or(0);
                if entry.count.to_u64() != Some(counted) {
                    mismatches += 1;
                }
                writeln!(out, "{},{},{},{counted}", entry.u, entry.v, entry.count)?;
            }
            let listed: u64 = table.entries.iter().filter_map(|e| brute.get(&(e.u, e.v))).sum();
            if listed != brute.values().sum::<u64>() {
                mismatches += 1;
            }
            writeln!(out, "mismatches={mismatches}")?;
            emit(&cli.out, &out)?;
            if mismatches > 0 {
                bail!(Error::Validation(format!("{mismatches} region counts disagree")));
            }
            Ok(())
        }
        OracleCommand::Rho { noise, r, p } => {
            let params = noise.params()?;
            let p = parse_rational(p)?;
            let regions = build_region_table(&params, *r)?.mass_pairs();
            let (solver, _) = rho(&regions, &p)?;
            let brute = brute_rho(&params, *r, &p)?;
            emit(&cli.out, &format!("solver={solver}\nenumerated={brute}\nequal={}\n", solver == brute))?;
            if solver != brute {
                bail!(Error::Validation("solver and enumeration disagree".into()));
            }
            Ok(())
        }
        OracleCommand::Tree { tree, x, r_max } => {
            require_file(tree)?;
            let tree = load_tree(tree)?;
            let x = x
                .chars()
                .map(|c| match c {
                    '0' => Ok(0u8),
                    '1' => Ok(1u8),
                    other => Err(Error::InputDomain(format!("input digit {other:?} is not 0 or 1"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let exact: Rational = tree.predict_prob(&x)?;
            let brute = brute_predict_prob(&tree, &x)?;
            let adv = tree.dp_adversary::<Rational>(&x, *r_max)?;
            let brute_adv = brute_tree_adversary(&tree, &x, *r_max)?;
            let mut out = format!("predict={exact} enumerated={brute}\nr,dp,enumerated\n");
            for (r, (a, b)) in adv.root().iter().zip(&brute_adv).enumerate() {
                writeln!(out, "{r},{a},{b}")?;
            }
            let agree = exact == brute && adv.root() == brute_adv.as_slice();
            writeln!(out, "equal={agree}")?;
            emit(&cli.out, &out)?;
            if !agree {
                bail!(Error::Validation("recursion and enumeration disagree".into()));
            }
            Ok(())
        }
    }
}
