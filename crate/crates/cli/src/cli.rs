use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use provision_core::benchmark::{profile_by_name, profiles, run_savings, SavingsRow};
use provision_core::configurator::{provision, ProvisionRequest};
use provision_core::predictor::{layer_dims, train, LossKind, ModelArtifact, TrainingConfig, DEFAULT_HIDDEN};
use provision_core::similarity::{dissimilarity_score, CallGraph, ModelRegistry};
use provision_core::simulator::{
    build_dataset, generate_trace, simulate, DatasetGrid, PlatformParams, WorkloadTrace, DATASET_VERSION,
};
use provision_core::{ArrivalPattern, Configuration, Network};
use serde::{Deserialize, Serialize};

use crate::config::ServiceConfig;
use crate::io::{check_version, read_dataset, read_json, read_text, write_dataset_csv, write_sim_csv};
use crate::store::RegistryStore;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;

const MATMUL_FLOOR: f64 = 0.60;
const MEAN_FLOOR: f64 = 0.50;

#[derive(Debug, Parser)]
#[command(name = "provision", version, about = "SLO-driven replica and container provisioning")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Service configuration file; supplies default params, prices and threshold.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Cce,
    Klde,
    Psse,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Cce => LossKind::Cce,
            LossArg::Klde => LossKind::Klde,
            LossArg::Psse => LossKind::Psse,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one workload through one configuration.
    Simulate { input: PathBuf },
    /// Sweep a grid in the simulator into a labeled dataset.
    Dataset { grid: PathBuf },
    /// Train a replica classifier on a dataset.
    Train(TrainArgs),
    /// Accuracy and mean loss of a model on a dataset.
    Evaluate {
        model: PathBuf,
        dataset: PathBuf,
        #[arg(long, value_enum)]
        loss: Option<LossArg>,
    },
    /// Dissimilarity of two call graphs.
    Similarity { a: PathBuf, b: PathBuf },
    /// Cheapest plan meeting a request's SLO.
    Provision {
        request: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Add an application to an on-disk registry.
    Register {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Savings of provisioned plans over the naive maximum.
    Benchmark {
        /// Run only this profile.
        #[arg(long)]
        profile: Option<String>,
        /// Simulator runs per dataset cell.
        #[arg(long, default_value_t = 50)]
        runs: u32,
    },
    /// Start the HTTP service.
    Serve,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub dataset: PathBuf,
    /// Replica classes of a CSV dataset.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25,30")]
    pub classes: Vec<u32>,
    #[arg(long, value_enum, default_value = "cce")]
    pub loss: LossArg,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.2)]
    pub validation_fraction: f64,
}

/// Parses `args` and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

struct Output<'a> {
    path: Option<&'a Path>,
}

impl Output<'_> {
    fn bytes(&self, data: &[u8]) -> anyhow::Result<()> {
        match self.path {
            Some(p) => std::fs::write(p, data).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(data)?;
                out.flush()?;
                Ok(())
            }
        }
    }

    fn json<S: Serialize>(&self, value: &S) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.bytes(text.as_bytes())
    }
}

fn service_config(global: &GlobalOpts) -> anyhow::Result<ServiceConfig> {
    match &global.config {
        Some(p) => ServiceConfig::load(p),
        None => Ok(ServiceConfig::default()),
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    let out = Output { path: g.out.as_deref() };
    match cli.command {
        Command::Simulate { input } => cmd_simulate(&input, g, &out),
        Command::Dataset { grid } => cmd_dataset(&grid, g, &out),
        Command::Train(args) => cmd_train(&args, g, &out),
        Command::Evaluate { model, dataset, loss } => {
            let model = ModelArtifact::from_json(&read_text(&model)?)?.into_model::<f64>()?;
            let data = read_dataset(&dataset, &model.class_labels)?;
            let kind = loss.map(LossKind::from).unwrap_or(model.loss_kind);
            out.json(&model.evaluate(&data, kind)?)
        }
        Command::Similarity { a, b } => {
            let a = CallGraph::from_json(&read_text(&a)?)?;
            let b = CallGraph::from_json(&read_text(&b)?)?;
            out.json(&dissimilarity_score::<f64>(&a, &b))
        }
        Command::Provision {
            request,
            params,
            registry,
        } => cmd_provision(&request, params.as_deref(), registry.as_deref(), g, &out),
        Command::Register {
            registry,
            id,
            graph,
            model,
        } => {
            let store = RegistryStore::open(&registry)?;
            let graph = CallGraph::from_json(&read_text(&graph)?)?;
            let model = match model {
                Some(p) => Some(ModelArtifact::from_json(&read_text(&p)?)?),
                None => None,
            };
            store.register(&id, &graph, model.as_ref(), BTreeMap::new())?;
            let summary = store.list()?.into_iter().find(|s| s.id == id).context("registered entry vanished")?;
            out.json(&summary)
        }
        Command::Benchmark { profile, runs } => cmd_benchmark(profile.as_deref(), runs, g, &out),
        Command::Serve => {
            let cfg = service_config(g)?.with_env(|k| std::env::var(k).ok())?;
            tokio::runtime::Runtime::new()?.block_on(crate::service::serve(cfg))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Workload {
    #[serde(default)]
    pub pattern: ArrivalPattern,
    pub rate: f64,
    /// Seconds of arrivals.
    pub horizon: f64,
}

/// Input of `simulate`: an explicit trace or a workload to generate one from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateInput {
    #[serde(default = "current_version")]
    pub version: u32,
    pub configuration: Configuration,
    #[serde(default)]
    pub params: Option<PlatformParams>,
    #[serde(default)]
    pub trace: Option<WorkloadTrace>,
    #[serde(default)]
    pub workload: Option<Workload>,
}

fn current_version() -> u32 {
    1
}

fn cmd_simulate(input: &Path, g: &GlobalOpts, out: &Output) -> anyhow::Result<()> {
    let inp: SimulateInput = read_json(input)?;
    if inp.version != 1 {
        bail!("simulate input: unsupported version {}", inp.version);
    }
    let mut params = match inp.params {
        Some(p) => p,
        None => service_config(g)?.params,
    };
    if let Some(seed) = g.seed {
        params.seed = seed;
    }
    let trace = match (inp.trace, inp.workload) {
        (Some(t), None) => t,
        (None, Some(w)) => generate_trace(w.pattern, w.rate, w.horizon, params.seed)?,
        _ => bail!("simulate input needs exactly one of `trace` or `workload`"),
    };
    let res = simulate(&trace, &inp.configuration, &params)?;
    match g.format {
        Some(Format::Csv) => {
            let mut buf = Vec::new();
            write_sim_csv(&res, &mut buf)?;
            out.bytes(&buf)
        }
        _ => out.json(&res),
    }
}

fn cmd_dataset(grid_path: &Path, g: &GlobalOpts, out: &Output) -> anyhow::Result<()> {
    let value: serde_json::Value = read_json(grid_path)?;
    check_version(&value, DATASET_VERSION, "dataset grid")?;
    let mut value = value;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("version");
    }
    let mut grid: DatasetGrid =
        serde_json::from_value(value).with_context(|| format!("parsing {}", grid_path.display()))?;
    if let Some(seed) = g.seed {
        grid.seed = seed;
    }
    let data = build_dataset(&grid)?;
    match g.format {
        Some(Format::Json) => out.json(&data),
        _ => {
            let mut buf = Vec::new();
            write_dataset_csv(&data, &mut buf)?;
            out.bytes(&buf)
        }
    }
}

#[derive(Serialize)]
struct TrainOutput<'a> {
    model: &'a ModelArtifact,
    report: &'a provision_core::predictor::TrainingReport,
}

fn cmd_train(args: &TrainArgs, g: &GlobalOpts, out: &Output) -> anyhow::Result<()> {
    let data = read_dataset(&args.dataset, &args.classes)?;
    let seed = g.seed.unwrap_or(0);
    let hidden = args.hidden.clone().unwrap_or_else(|| DEFAULT_HIDDEN.to_vec());
    let net = Network::init(&layer_dims(&hidden, data.class_labels.len()), seed)?;
    let cfg = TrainingConfig {
        loss_kind: args.loss.into(),
        learning_rate: args.lr,
        epochs: args.epochs,
        batch_size: args.batch_size,
        validation_fraction: args.validation_fraction,
        seed,
        feature_scaling: None,
    };
    let (model, report) = train(net, &data, &cfg)?;
    let artifact = ModelArtifact::from_model(&model);
    match out.path {
        // Model to the file, report to stdout.
        Some(p) => {
            std::fs::write(p, artifact.to_json()).with_context(|| format!("writing {}", p.display()))?;
            Output { path: None }.json(&report)
        }
        None => out.json(&TrainOutput {
            model: &artifact,
            report: &report,
        }),
    }
}

fn cmd_provision(
    request: &Path,
    params: Option<&Path>,
    registry: Option<&Path>,
    g: &GlobalOpts,
    out: &Output,
) -> anyhow::Result<()> {
    let value: serde_json::Value = read_json(request)?;
    check_version(&value, 1, "provision request")?;
    let mut value = value;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("version");
    }
    let mut req: ProvisionRequest =
        serde_json::from_value(value).with_context(|| format!("parsing {}", request.display()))?;
    if let Some(seed) = g.seed {
        req.seed = seed;
    }
    let cfg = service_config(g)?;
    let params = match params {
        Some(p) => read_json(p)?,
        None => cfg.params.clone(),
    };
    let registry = match registry {
        Some(dir) => RegistryStore::open(dir)?.load_registry(cfg.threshold)?,
        None => ModelRegistry::new(cfg.threshold)?,
    };
    out.json(&provision(&req, &registry, &params)?)
}

#[derive(Debug, Serialize)]
struct BenchmarkReport {
    rows: Vec<SavingsRow>,
    mean_savings: f64,
}

fn cmd_benchmark(profile: Option<&str>, runs: u32, g: &GlobalOpts, out: &Output) -> anyhow::Result<()> {
    let selected = match profile {
        Some(name) => vec![profile_by_name(name)?],
        None => profiles(),
    };
    let seed = g.seed.unwrap_or(21);
    let rows = selected
        .iter()
        .map(|p| Ok(run_savings(p, runs, seed)?.row))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mean_savings = rows.iter().map(|r| r.savings).sum::<f64>() / rows.len() as f64;
    match g.format {
        Some(Format::Json) => out.json(&BenchmarkReport { rows, mean_savings }),
        Some(Format::Csv) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["profile", "replicas", "memory_mb", "cpus", "cost", "baseline_cost", "savings", "satisfiable"])?;
            for r in &rows {
                let c = &r.plan.configuration;
                w.write_record([
                    r.profile.clone(),
                    c.replicas.to_string(),
                    c.container.memory_mb.to_string(),
                    c.container.cpus.to_string(),
                    r.plan.cost.to_string(),
                    r.baseline.cost.to_string(),
                    r.savings.to_string(),
                    r.plan.satisfiable.to_string(),
                ])?;
            }
            out.bytes(&w.into_inner()?)
        }
        None => out.bytes(savings_table(&rows, mean_savings).as_bytes()),
    }
}

fn savings_table(rows: &[SavingsRow], mean: f64) -> String {
    let mut s = format!(
        "{:<14} {:>8} {:>10} {:>6} {:>12} {:>12} {:>8}\n",
        "profile", "replicas", "memory_mb", "cpus", "cost", "baseline", "savings"
    );
    for r in rows {
        let c = &r.plan.configuration;
        let flag = if r.plan.satisfiable { "" } else { "  (unsatisfiable)" };
        s += &format!(
            "{:<14} {:>8} {:>10} {:>6} {:>12.6} {:>12.6} {:>8.3}{flag}\n",
            r.profile, c.replicas, c.container.memory_mb, c.container.cpus, r.plan.cost, r.baseline.cost, r.savings
        );
    }
    for r in rows.iter().filter(|r| r.profile == "matmul-like") {
        s += &format!("matmul-like savings {:.3} vs floor {MATMUL_FLOOR:.2}: {}\n", r.savings, verdict(r.savings >= MATMUL_FLOOR));
    }
    if rows.len() > 1 {
        s += &format!("mean savings {mean:.3} vs floor {MEAN_FLOOR:.2}: {}\n", verdict(mean >= MEAN_FLOOR));
    }
    s
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "below"
    }
}
