//! Command-line front end. The `adsorb` binary is a thin wrapper over [`run`].

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::deeponet::{AnyModel, DeepONet, DeepONetConfig};
use crate::error::{Error, Result};
use crate::field::{Field, FieldPredictor, Phase};
use crate::icgen::{
    build_dataset, build_ood_dataset, evaluate_ic, sample_ic_seeded, Dataset, DatasetConfig, Family, ICSpec,
    RangeTable, Split, SplitSizes,
};
use crate::io::save_array;
use crate::metrics::evaluate;
use crate::nn::Real;
use crate::physics::{dimensionless_coefficients, PhysicalParams};
use crate::solver::{relative_mass_balance, solve, Grid};
use crate::store::{load_dataset, save_dataset};
use crate::trainer::{train, TrainConfig, TrainError, TrainReport};

#[derive(Debug, Parser)]
#[command(name = "adsorb", version, about = "Operator-network surrogate for packed-bed adsorption")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Master seed; required by `dataset` and `train`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for dataset generation.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Train in single precision.
    #[arg(long, global = true)]
    pub f32: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate initial conditions, solve them and write a dataset directory.
    Dataset(DatasetArgs),
    /// Solve one initial condition with the reference solver.
    Solve(SolveArgs),
    /// Train one operator network (gas or solid phase).
    Train(TrainArgs),
    /// Score trained models on a dataset split.
    Eval(EvalArgs),
    /// Write parity, heatmap or snapshot CSV data.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Use the extended ranges plus the sine family.
    #[arg(long)]
    pub ood: bool,
    /// Explicit split sizes as `train,val,test`.
    #[arg(long, value_parser = parse_split_sizes)]
    pub splits: Option<SplitSizes>,
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolveArgs {
    /// JSON initial-condition spec (as stored in a dataset manifest).
    #[arg(long, conflicts_with = "family")]
    pub ic: Option<PathBuf>,
    /// Draw a random in-distribution profile of this family instead.
    #[arg(long)]
    pub family: Option<Family>,
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub phase: Option<Phase>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Manual epoch cap.
    #[arg(long)]
    pub stop_at: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Reduced 3x64 networks with 32 basis functions.
    #[arg(long)]
    pub desk: bool,
    /// Drop the scalar bias inside the output sigmoid.
    #[arg(long)]
    pub no_output_bias: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Gas-phase checkpoint directory.
    #[arg(long)]
    pub gas_model: PathBuf,
    /// Solid-phase checkpoint directory.
    #[arg(long)]
    pub solid_model: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    /// train, val, test, or all (alias: ood).
    #[arg(long, default_value = "test")]
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportKind {
    Parity,
    Heatmap,
    Snapshots,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    #[arg(long, value_enum)]
    pub what: ExportKind,
    /// Sample indices; defaults to every sample of `--split`.
    #[arg(long, value_delimiter = ',')]
    pub index: Vec<usize>,
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// Snapshot levels in [0, 1].
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75, 1.0])]
    pub taus: Vec<f64>,
}

fn parse_split_sizes(s: &str) -> std::result::Result<SplitSizes, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [train, val, test] => Ok(SplitSizes { train, val, test }),
        _ => Err("expected `train,val,test`".into()),
    }
}

/// JSON run configuration; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Physical parameter file; defaults apply when absent.
    pub params: Option<PathBuf>,
    pub grid: Grid,
    pub dataset: DatasetSection,
    pub train: TrainConfig,
    pub model: Option<DeepONetConfig>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub n_samples: Option<usize>,
    pub splits: Option<SplitSizes>,
    pub ranges: Option<RangeTable>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
        if let Some(p) = &cfg.params {
            if !p.exists() {
                return Err(Error::invalid("params", format!("{} does not exist", p.display())));
            }
        }
        Ok(cfg)
    }
}

/// Removes whatever a failed command created in its output directory.
struct OutputGuard {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
    keep: bool,
}

impl OutputGuard {
    fn new(dir: PathBuf) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            created_dir,
            files: Vec::new(),
            keep: false,
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn commit(mut self) {
        self.keep = true;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if self.keep {
            return;
        }
        if self.created_dir {
            let _ = fs::remove_dir_all(&self.dir);
        } else {
            for f in &self.files {
                let _ = fs::remove_file(f);
            }
        }
    }
}

struct Context {
    global: GlobalArgs,
    config: RunConfig,
}

impl Context {
    fn new(global: GlobalArgs) -> Result<Self> {
        let config = match &global.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Ok(Self { global, config })
    }

    fn seed(&self) -> Result<u64> {
        self.global
            .seed
            .or(self.config.seed)
            .ok_or_else(|| Error::invalid("seed", "required for this command"))
    }

    fn out(&self) -> Result<PathBuf> {
        self.global
            .out
            .clone()
            .or_else(|| self.config.out.clone())
            .ok_or_else(|| Error::invalid("out", "an output directory is required"))
    }

    fn params(&self, flag: &Option<PathBuf>) -> Result<PhysicalParams> {
        let params = match flag.as_ref().or(self.config.params.as_ref()) {
            Some(p) => PhysicalParams::from_json_file(p)?,
            None => PhysicalParams::default(),
        };
        params.validate()?;
        params.check_surface_area();
        Ok(params)
    }
}

/// Parses nothing; dispatches an already-parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let ctx = Context::new(cli.global)?;
    match cli.command {
        Command::Dataset(a) => cmd_dataset(&ctx, &a),
        Command::Solve(a) => cmd_solve(&ctx, &a),
        Command::Train(a) => cmd_train(&ctx, &a),
        Command::Eval(a) => cmd_eval(&ctx, &a),
        Command::Export(a) => cmd_export(&ctx, &a),
    }
}

fn cmd_dataset(ctx: &Context, args: &DatasetArgs) -> Result<()> {
    let seed = ctx.seed()?;
    let section = &ctx.config.dataset;
    let config = DatasetConfig {
        n_samples: args.n.or(section.n_samples).unwrap_or(DatasetConfig::default().n_samples),
        splits: args.splits.or(section.splits),
        ranges: section.ranges.clone(),
        grid: ctx.config.grid,
        params: ctx.params(&args.params)?,
        threads: ctx.global.threads.max(1),
    };
    let out = ctx.out()?;
    let mut guard = OutputGuard::new(out.clone())?;
    for name in ["manifest.json", "ics.bin", "gas.bin", "solid.bin"] {
        guard.path(name);
    }
    let dataset = if args.ood {
        build_ood_dataset(&config, seed)?
    } else {
        build_dataset(&config, seed)?
    };
    save_dataset(&dataset, &out)?;
    log::info!(
        "wrote {} samples ({} / {} / {}) to {}",
        dataset.len(),
        dataset.splits.train.len(),
        dataset.splits.val.len(),
        dataset.splits.test.len(),
        out.display()
    );
    guard.commit();
    Ok(())
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    ic: ICSpec,
    grid: Grid,
    coefficients: crate::physics::DimlessCoeffs,
    relative_mass_balance: f64,
}

fn cmd_solve(ctx: &Context, args: &SolveArgs) -> Result<()> {
    let params = ctx.params(&args.params)?;
    let coeffs = dimensionless_coefficients(&params)?;
    let grid = ctx.config.grid;
    grid.validate()?;
    let spec: ICSpec = match (&args.ic, args.family) {
        (Some(path), _) => serde_json::from_str(&fs::read_to_string(path)?)?,
        (None, Some(family)) => sample_ic_seeded(family, &RangeTable::in_distribution(), ctx.seed()?)?,
        (None, None) => return Err(Error::invalid("ic", "pass --ic FILE or --family NAME")),
    };
    let ic = evaluate_ic(&spec, &grid.xi_centers());
    let out_dir = ctx.out()?;
    let mut guard = OutputGuard::new(out_dir)?;
    let result = solve(ic.view(), &coeffs, &grid)?;
    for field in [&result.gas, &result.solid] {
        save_array(guard.path(&format!("{}.bin", field.phase)), field.values.view())?;
        let f = fs::File::create(guard.path(&format!("{}.csv", field.phase)))?;
        field.write_csv(&grid, std::io::BufWriter::new(f))?;
    }
    let summary = SolveSummary {
        ic: spec,
        grid,
        coefficients: coeffs,
        relative_mass_balance: relative_mass_balance(&result.mass_balance_residual, &coeffs, &grid),
    };
    fs::write(guard.path("solve.json"), serde_json::to_string_pretty(&summary)?)?;
    guard.commit();
    Ok(())
}

fn train_config(ctx: &Context, args: &TrainArgs, seed: u64) -> TrainConfig {
    let mut cfg = ctx.config.train.clone();
    cfg.seed = seed;
    if let Some(p) = args.phase {
        cfg.phase = p;
    }
    if let Some(e) = args.epochs {
        cfg.max_epochs = e;
    }
    if args.stop_at.is_some() {
        cfg.stop_at = args.stop_at;
    }
    if let Some(lr) = args.lr {
        cfg.lr = lr;
    }
    if let Some(b) = args.batch_size {
        cfg.batch_size = b;
    }
    if cfg.log_every == 0 {
        cfg.log_every = cfg.val_every;
    }
    cfg
}

fn model_config(ctx: &Context, args: &TrainArgs, sensors: usize) -> DeepONetConfig {
    let mut cfg = ctx.config.model.unwrap_or_else(|| {
        if args.desk {
            DeepONetConfig::desk()
        } else {
            DeepONetConfig::default()
        }
    });
    cfg.sensors = sensors;
    if args.no_output_bias {
        cfg.output_bias = false;
    }
    cfg
}

fn write_train_outputs<F: Real>(guard: &mut OutputGuard, model: &DeepONet<F>, report: &TrainReport) -> Result<()> {
    guard.path("model.json");
    guard.path("weights.bin");
    model.save(&guard.dir)?;
    fs::write(guard.path("report.json"), serde_json::to_string_pretty(report)?)?;
    report.write_history_csv(fs::File::create(guard.path("history.csv"))?)
}

fn train_as<F: Real>(ctx: &Context, args: &TrainArgs, dataset: &Dataset, seed: u64) -> Result<()> {
    let cfg = train_config(ctx, args, seed);
    let mcfg = model_config(ctx, args, dataset.grid.n_x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = DeepONet::<F>::new(mcfg, cfg.phase, &mut rng)?;
    log::info!("training {} model with {} parameters", cfg.phase, model.parameter_count());
    let mut guard = OutputGuard::new(ctx.out()?)?;
    match train(model, dataset, &cfg) {
        Ok(t) => {
            write_train_outputs(&mut guard, &t.model, &t.report)?;
            guard.commit();
            Ok(())
        }
        Err(TrainError::Setup(e)) => Err(e),
        Err(TrainError::NonFinite {
            epoch,
            reason,
            checkpoint,
            report,
        }) => {
            // The last finite parameters are kept for inspection.
            write_train_outputs(&mut guard, &checkpoint, &report)?;
            guard.commit();
            Err(Error::Numerical(format!("epoch {epoch}: {reason}")))
        }
    }
}

fn cmd_train(ctx: &Context, args: &TrainArgs) -> Result<()> {
    let seed = ctx.seed()?;
    let dataset = load_dataset(&args.data)?;
    if ctx.global.f32 {
        train_as::<f32>(ctx, args, &dataset, seed)
    } else {
        train_as::<f64>(ctx, args, &dataset, seed)
    }
}

struct Models {
    dataset: Dataset,
    gas: AnyModel,
    solid: Option<AnyModel>,
}

fn load_models(args: &ModelArgs) -> Result<Models> {
    let dataset = load_dataset(&args.data)?;
    let gas = AnyModel::load(&args.gas_model)?;
    let solid = args.solid_model.as_ref().map(AnyModel::load).transpose()?;
    Ok(Models { dataset, gas, solid })
}

fn cmd_eval(ctx: &Context, args: &EvalArgs) -> Result<()> {
    let m = load_models(&args.models)?;
    let report = evaluate(&m.gas, m.solid.as_ref().map(|s| s as &dyn FieldPredictor), &m.dataset, args.split)?;
    let mut guard = OutputGuard::new(ctx.out()?)?;
    fs::write(guard.path("eval.json"), serde_json::to_string_pretty(&report)?)?;
    report.write_samples_csv(fs::File::create(guard.path("samples.csv"))?)?;
    log::info!("mean relative L2 (gas) on {}: {:.4}%", args.split, 100.0 * report.mean_r_gas);
    guard.commit();
    Ok(())
}

fn cmd_export(ctx: &Context, args: &ExportArgs) -> Result<()> {
    let m = load_models(&args.models)?;
    let indices = if args.index.is_empty() {
        m.dataset.indices(args.split)
    } else {
        args.index.clone()
    };
    let mut guard = OutputGuard::new(ctx.out()?)?;
    let solid = m.solid.as_ref().map(|s| s as &dyn FieldPredictor);
    for i in indices {
        for name in export_sample(&m.gas, solid, &m.dataset, i, args.what, &args.taus, &guard.dir)? {
            guard.path(&name);
        }
    }
    guard.commit();
    Ok(())
}

fn csv_file(path: &Path) -> Result<csv::Writer<std::io::BufWriter<fs::File>>> {
    Ok(csv::Writer::from_writer(std::io::BufWriter::new(fs::File::create(path)?)))
}

/// Writes one sample's plot data into `dir` and returns the file names written.
pub fn export_sample(
    gas: &dyn FieldPredictor,
    solid: Option<&dyn FieldPredictor>,
    dataset: &Dataset,
    index: usize,
    what: ExportKind,
    taus: &[f64],
    dir: &Path,
) -> Result<Vec<String>> {
    if index >= dataset.len() {
        return Err(Error::invalid(
            "index",
            format!("sample {index} does not exist (dataset has {})", dataset.len()),
        ));
    }
    let grid = &dataset.grid;
    let ic = dataset.ic(index);
    let mut pairs = vec![(
        Field::new(dataset.gas.index_axis(ndarray::Axis(0), index).to_owned(), Phase::Gas),
        Field::new(gas.predict(ic, grid)?, Phase::Gas),
    )];
    if let Some(s) = solid {
        pairs.push((
            Field::new(dataset.solid.index_axis(ndarray::Axis(0), index).to_owned(), Phase::Solid),
            Field::new(s.predict(ic, grid)?, Phase::Solid),
        ));
    }
    let mut written = Vec::new();
    match what {
        ExportKind::Parity => {
            for (truth, pred) in &pairs {
                let name = format!("parity_{}_{index}.csv", truth.phase);
                let mut w = csv_file(&dir.join(&name))?;
                w.write_record(["true", "pred"])?;
                for (t, p) in truth.values.iter().zip(pred.values.iter()) {
                    w.serialize((t, p))?;
                }
                w.flush()?;
                written.push(name);
            }
        }
        ExportKind::Heatmap => {
            for (truth, pred) in &pairs {
                let name = format!("heatmap_pred_{}_{index}.csv", truth.phase);
                pred.write_csv(grid, std::io::BufWriter::new(fs::File::create(dir.join(&name))?))?;
                written.push(name);
                let err = Field::new((&pred.values - &truth.values).mapv(f64::abs), truth.phase);
                let name = format!("heatmap_err_{}_{index}.csv", truth.phase);
                err.write_csv(grid, std::io::BufWriter::new(fs::File::create(dir.join(&name))?))?;
                written.push(name);
            }
        }
        ExportKind::Snapshots => {
            let name = format!("snapshots_{index}.csv");
            let mut w = csv_file(&dir.join(&name))?;
            w.write_record(["phase", "tau", "xi", "true", "pred"])?;
            let xi = grid.xi_centers();
            let levels = grid.tau_levels();
            for (truth, pred) in &pairs {
                for &tau in taus {
                    let (k, t) = truth.snapshot(tau)?;
                    let (_, p) = pred.snapshot(tau)?;
                    for j in 0..xi.len() {
                        w.serialize((truth.phase.to_string(), levels[k], xi[j], t[j], p[j]))?;
                    }
                }
            }
            w.flush()?;
            written.push(name);
        }
    }
    Ok(written)
}
