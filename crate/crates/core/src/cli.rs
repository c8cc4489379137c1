//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 runtime
//! or data error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::datagen::{
    dataset_dimension, generate, read_dataset_file, read_gen_config, write_dataset, BidDistribution,
};
use crate::eval::{
    calibration_curve, evaluate, render_report, render_table, sweep, write_calibration_csv, write_metrics_csv,
    write_report_csv, EvalOptions, UnsoldRevenue,
};
use crate::losses::{LossKind, LossSpec};
use crate::model::{read_checkpoint, train, write_checkpoint, TrainConfig};
use crate::oracle;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "clearprice", version, about = "Learn market-clearing prices and evaluate them as auction reserves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic auction dataset from a TOML manifest
    Generate(GenerateArgs),
    /// Train a linear pricing model
    Train(TrainArgs),
    /// Train and evaluate one model per grid point
    Sweep(SweepArgs),
    /// Print closed-form reference prices and match-rate bounds
    Oracle(OracleArgs),
    /// Evaluate a trained model as a reserve-price policy
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Generator manifest (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output dataset path
    #[arg(long)]
    out: PathBuf,
    /// Override the manifest seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of auctions drawn
    #[arg(long)]
    records: Option<usize>,
    /// Override top-bid-above-cost filtering
    #[arg(long)]
    filter: Option<bool>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum TrainLoss {
    Clearing,
    #[value(name = "sq-b1")]
    SqB1,
    #[value(name = "sq-b2")]
    SqB2,
    Surrogate,
}

impl From<TrainLoss> for LossKind {
    fn from(l: TrainLoss) -> Self {
        match l {
            TrainLoss::Clearing => LossKind::Clearing,
            TrainLoss::SqB1 => LossKind::SquaredTopBid,
            TrainLoss::SqB2 => LossKind::SquaredSecondBid,
            TrainLoss::Surrogate => LossKind::SurrogateRevenue,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct OptimArgs {
    /// Minibatch iterations
    #[arg(long, default_value_t = 10_000)]
    iters: u64,
    /// Minibatch size
    #[arg(long, default_value_t = 512)]
    batch: usize,
    /// Adam learning rate
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Shuffling seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Loss-curve sampling period in iterations
    #[arg(long, default_value_t = 100)]
    curve_every: u64,
}

impl OptimArgs {
    fn config(&self, loss: LossSpec) -> TrainConfig {
        let mut config = TrainConfig::new(loss, self.iters).with_seed(self.seed).with_learning_rate(self.lr);
        config.minibatch_size = self.batch;
        config.curve_every = self.curve_every;
        config
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training dataset
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    loss: TrainLoss,
    /// Seller quantity (clearing) or match-rate regularization weight
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Surrogate loss slope parameter (surrogate only)
    #[arg(long)]
    gamma: Option<f64>,
    #[command(flatten)]
    optim: OptimArgs,
    /// Checkpoint output path
    #[arg(long)]
    model_out: PathBuf,
    /// Loss-curve CSV output path
    #[arg(long)]
    curve_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Training dataset
    #[arg(long)]
    train: PathBuf,
    /// Test dataset (defaults to the training set)
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, value_enum)]
    loss: TrainLoss,
    /// Comma-separated lambda grid
    #[arg(long, default_value = "0")]
    lambdas: String,
    /// Comma-separated gamma grid (surrogate only)
    #[arg(long)]
    gammas: Option<String>,
    #[command(flatten)]
    optim: OptimArgs,
    /// Report CSV output path
    #[arg(long)]
    out: PathBuf,
    /// Also write the target-vs-realized match-rate CSV (clearing only)
    #[arg(long)]
    calibrate: Option<PathBuf>,
    /// Count unsold auctions as zero revenue instead of the seller cost
    #[arg(long)]
    strict_revenue: bool,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Bid distribution, e.g. uniform:0,1, exp:1, lognormal:0,1
    #[arg(long)]
    dist: Option<BidDistribution>,
    /// Bidders per auction
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Seller quantity / regularization weight
    #[arg(long)]
    lambda: Option<f64>,
    /// Match rate to translate into lambda
    #[arg(long)]
    target_mr: Option<f64>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Model checkpoint
    #[arg(long)]
    model: PathBuf,
    /// Dataset to replay
    #[arg(long)]
    data: PathBuf,
    /// Report CSV output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Count unsold auctions as zero revenue instead of the seller cost
    #[arg(long)]
    strict_revenue: bool,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type CmdResult = Result<(), Failure>;

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let sink: &mut dyn Write = if code == EXIT_OK { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Oracle(a) => cmd_oracle(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn cmd_generate(args: GenerateArgs, out: &mut dyn Write) -> CmdResult {
    let mut config = read_gen_config(&args.config)
        .with_context(|| format!("loading generator config {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(records) = args.records {
        config.num_records = records;
    }
    if let Some(filter) = args.filter {
        config.filter_top_bid_above_cost = filter;
    }
    let mut gen = generate(&config).map_err(anyhow::Error::from)?;
    let records: Vec<_> = gen.by_ref().collect();
    write_dataset(&records, create(&args.out)?).map_err(anyhow::Error::from)?;
    writeln!(out, "wrote {} records to {} ({} dropped)", records.len(), args.out.display(), gen.dropped())
        .map_err(anyhow::Error::from)?;
    Ok(())
}

fn loss_spec(kind: TrainLoss, lambda: f64, gamma: Option<f64>) -> Result<LossSpec, Failure> {
    if kind == TrainLoss::Surrogate && gamma.is_none() {
        return Err(Failure::Usage("--loss surrogate requires --gamma".into()));
    }
    if kind != TrainLoss::Surrogate && gamma.is_some() {
        return Err(Failure::Usage("--gamma is only valid with --loss surrogate".into()));
    }
    LossSpec::new(kind.into(), lambda, gamma).map_err(|e| Failure::Usage(e.to_string()))
}

fn load_dataset(path: &Path) -> anyhow::Result<Vec<crate::datagen::AuctionRecord>> {
    let records = read_dataset_file(path).with_context(|| format!("reading dataset {}", path.display()))?;
    if records.is_empty() {
        bail!("dataset {} is empty", path.display());
    }
    if dataset_dimension(&records).is_none() {
        bail!("dataset {} mixes feature dimensions", path.display());
    }
    Ok(records)
}

fn cmd_train(args: TrainArgs, out: &mut dyn Write) -> CmdResult {
    let spec = loss_spec(args.loss, args.lambda, args.gamma)?;
    let config = args.optim.config(spec);
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let records = load_dataset(&args.data)?;
    let fitted = train(&records, &config).map_err(anyhow::Error::from)?;

    write_checkpoint(&fitted.model, create(&args.model_out)?).map_err(anyhow::Error::from)?;
    if let Some(path) = &args.curve_out {
        let mut w = create(path)?;
        let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
            writeln!(w, "iteration,mean_loss")?;
            for p in &fitted.curve {
                writeln!(w, "{},{}", p.iteration, p.mean_loss)?;
            }
            w.flush()
        };
        write(&mut w).map_err(anyhow::Error::from)?;
    }
    let last = fitted.curve.last().map(|p| p.mean_loss).unwrap_or(f64::NAN);
    writeln!(out, "trained {spec} for {} iterations; final mean loss {last}", config.iterations)
        .map_err(anyhow::Error::from)?;
    writeln!(out, "model written to {}", args.model_out.display()).map_err(anyhow::Error::from)?;
    Ok(())
}

fn parse_grid(flag: &str, text: &str) -> Result<Vec<f64>, Failure> {
    let values: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Failure::Usage(format!("{flag}: bad number '{s}'"))))
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(Failure::Usage(format!("{flag}: empty grid")));
    }
    Ok(values)
}

fn cmd_sweep(args: SweepArgs, out: &mut dyn Write) -> CmdResult {
    let lambdas = parse_grid("--lambdas", &args.lambdas)?;
    let gammas: Vec<Option<f64>> = match (&args.gammas, args.loss) {
        (Some(g), TrainLoss::Surrogate) => parse_grid("--gammas", g)?.into_iter().map(Some).collect(),
        (None, TrainLoss::Surrogate) => return Err(Failure::Usage("--loss surrogate requires --gammas".into())),
        (Some(_), _) => return Err(Failure::Usage("--gammas is only valid with --loss surrogate".into())),
        (None, _) => vec![None],
    };
    if args.calibrate.is_some() && args.loss != TrainLoss::Clearing {
        return Err(Failure::Usage("--calibrate requires --loss clearing".into()));
    }
    let mut grid = Vec::new();
    for &gamma in &gammas {
        for &lambda in &lambdas {
            grid.push(loss_spec(args.loss, lambda, gamma)?);
        }
    }
    let base = args.optim.config(grid[0]);
    base.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let train_set = load_dataset(&args.train)?;
    let test_set = match &args.test {
        Some(path) => load_dataset(path)?,
        None => train_set.clone(),
    };
    let options = EvalOptions {
        unsold_revenue: if args.strict_revenue { UnsoldRevenue::Zero } else { UnsoldRevenue::SellerCost },
    };
    let result = sweep(&train_set, &test_set, &grid, &base, options).map_err(anyhow::Error::from)?;
    write_report_csv(&result.rows, create(&args.out)?).map_err(anyhow::Error::from)?;
    if let Some(path) = &args.calibrate {
        let curve = calibration_curve(&result).map_err(anyhow::Error::from)?;
        write_calibration_csv(&curve, create(path)?).map_err(anyhow::Error::from)?;
    }
    write!(out, "{}", render_table(&result.rows)).map_err(anyhow::Error::from)?;
    Ok(())
}

fn cmd_oracle(args: OracleArgs, out: &mut dyn Write) -> CmdResult {
    if args.lambda.is_none() && args.target_mr.is_none() {
        return Err(Failure::Usage("pass --lambda and/or --target-mr".into()));
    }
    let mut lines = Vec::new();
    if let Some(lambda) = args.lambda {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Failure::Usage(format!("--lambda must be >= 0, got {lambda}")));
        }
        if let Some(dist) = args.dist {
            let zero = BidDistribution::PointMass { value: 0.0 };
            let buyers = vec![(1.0, dist); args.n];
            let balance = oracle::balance_price(&buyers, &[(lambda, zero)]).map_err(|e| anyhow!(e))?;
            let quantile =
                oracle::quantile_price(&dist, args.n, lambda).map_err(|e| Failure::Usage(e.to_string()))?;
            lines.push(format!("balance price: {balance:.5}"));
            lines.push(format!("quantile price: {quantile:.5}"));
        }
        if lambda <= args.n as f64 {
            let exact = oracle::exact_iid_match_rate(args.n, lambda).map_err(|e| Failure::Usage(e.to_string()))?;
            lines.push(format!("exact iid match rate (n={}): {exact:.5}", args.n));
        }
        lines.push(format!("match rate lower bound: {:.5}", oracle::match_rate_lower_bound(lambda)));
        lines.push(format!("welfare lower bound: {:.5}", oracle::welfare_lower_bound(lambda)));
    }
    if let Some(mr) = args.target_mr {
        let lambda = oracle::lambda_for_target_match_rate(mr).map_err(|e| Failure::Usage(e.to_string()))?;
        lines.push(format!("lambda for target match rate {mr}: {lambda:.5}"));
    }
    for line in lines {
        writeln!(out, "{line}").map_err(anyhow::Error::from)?;
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs, out: &mut dyn Write) -> CmdResult {
    let file = File::open(&args.model).with_context(|| format!("cannot open model {}", args.model.display()))?;
    let model = read_checkpoint(BufReader::new(file))
        .with_context(|| format!("reading model {}", args.model.display()))?;
    let records = load_dataset(&args.data)?;
    let dim = dataset_dimension(&records).expect("checked on load");
    if dim != model.dimension() {
        return Err(Failure::Runtime(anyhow!(
            "dimension mismatch: model {} has dimension {}, dataset {} has dimension {dim}",
            args.model.display(),
            model.dimension(),
            args.data.display()
        )));
    }
    let options = EvalOptions {
        unsold_revenue: if args.strict_revenue { UnsoldRevenue::Zero } else { UnsoldRevenue::SellerCost },
    };
    let report = evaluate(&model, &records, options).map_err(anyhow::Error::from)?;
    if let Some(path) = &args.out {
        // The label is the file name so reports do not depend on where they ran.
        let label = args.model.file_name().map_or_else(|| args.model.display().to_string(), |n| n.to_string_lossy().into_owned());
        write_metrics_csv(&label, &report, create(path)?)
            .map_err(anyhow::Error::from)?;
    }
    write!(out, "{}", render_report(&report)).map_err(anyhow::Error::from)?;
    Ok(())
}
