//! `accelnet validate | run | montecarlo | synth`.
//!
//! Exit codes: 0 success (or converged), 1 bad flags or runtime failure,
//! 2 invalid input file, 3 iteration budget exhausted.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use accelnet_core::engine::{run_alg1, run_alg2, run_unaccelerated, RunOptions};
use accelnet_core::model::ProblemInstance;
use accelnet_core::opf::build_opf_instance;
use accelnet_core::oracle::solve_active_set;
use accelnet_core::stepsize::build_stepsizes;
use accelnet_core::synth::{random_instance, SynthParams};
use accelnet_core::NetworkModel;
use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::io::{load_case, load_instance, problem_to_string};
use crate::montecarlo::{run_campaign, summarize, write_replicates, write_summary, Campaign, Variant};
use crate::report::{number, write_trace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "accelnet", version, about = "Accelerated dual decomposition over lossy networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load an input and print the influence graph and step-size table.
    Validate(Source),
    /// Run one algorithm and write its trace as CSV.
    Run(RunArgs),
    /// Repeat seeded runs over several failure probabilities.
    Montecarlo(MonteCarloArgs),
    /// Write a random feasible problem file.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Problem file (agents, costs, coupling blocks).
    #[arg(long)]
    problem: Option<PathBuf>,
    /// DC-OPF case file.
    #[arg(long)]
    case: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Alg1,
    Alg2,
    Unaccel,
}

#[derive(Debug, Args)]
struct Solver {
    /// Stop once every agent's row residual is below this.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long = "max-iters", default_value_t = 10_000)]
    max_iters: usize,
    /// Step sizes are `safety / L_i`, with `safety ∈ (0, 1]`.
    #[arg(long, default_value_t = 1.0)]
    safety: f64,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum)]
    algo: Algo,
    /// Link failure probability.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: Solver,
    /// Per-link activation override `ID-ID=BETA`, using file ids.
    #[arg(long = "beta", value_name = "ID-ID=BETA")]
    beta: Vec<String>,
    /// Solve centrally first so the trace carries gap and V.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum McAlgo {
    Alg2,
    Unaccel,
}

#[derive(Debug, Args)]
struct MonteCarloArgs {
    #[command(flatten)]
    source: Source,
    /// Comma-separated failure probabilities.
    #[arg(long, value_delimiter = ',', required = true)]
    gammas: Vec<f64>,
    #[arg(long)]
    runs: usize,
    /// Replicate `r` uses seed `seed + r`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = McAlgo::Alg2)]
    algo: McAlgo,
    #[command(flatten)]
    solver: Solver,
    /// Per-replicate CSV.
    #[arg(long)]
    out: PathBuf,
    /// Summary CSV; defaults to the output path with a `.summary.csv` suffix.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    agents: usize,
    #[arg(long)]
    out: PathBuf,
}

struct Loaded {
    labels: Vec<u64>,
    instance: ProblemInstance,
}

/// A run whose failure has a specific exit code.
struct Failure {
    code: i32,
    error: anyhow::Error,
}

fn invalid(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_INVALID, error: error.into() }
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_USAGE, error: error.into() }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        usage(error)
    }
}

fn load(source: &Source) -> Result<Loaded, Failure> {
    if let Some(path) = &source.problem {
        let p = load_instance(path).map_err(invalid)?;
        return Ok(Loaded { labels: p.ids, instance: p.instance });
    }
    let path = source.case.as_ref().expect("clap enforces one source");
    let case = load_case(path).map_err(invalid)?;
    let instance = build_opf_instance(&case).map_err(invalid)?;
    let mut labels: Vec<u64> = case.buses.iter().map(|b| b.id as u64).collect();
    labels.sort_unstable();
    Ok(Loaded { labels, instance })
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn list(labels: &[u64], set: impl IntoIterator<Item = usize>) -> String {
    let items: Vec<String> = set.into_iter().map(|j| labels[j].to_string()).collect();
    format!("{{{}}}", items.join(","))
}

fn validate(source: &Source, out: &mut dyn Write) -> Result<i32, Failure> {
    let Loaded { labels, instance } = load(source)?;
    let steps = build_stepsizes(&instance, 1.0).map_err(invalid)?;
    let dual = instance.dual_dim();
    let primal = instance.primal_dim();
    let n = instance.len();
    writeln!(out, "N={n} primal_dim={primal} dual_dim={dual}").map_err(anyhow::Error::from)?;
    writeln!(out, "id\tdim\trows\tN_i\tM_i\tsigma\tL\teta").map_err(anyhow::Error::from)?;
    for i in 0..n {
        let a = instance.agent(i);
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            labels[i],
            a.dim(),
            a.rows(),
            list(&labels, instance.in_neighbors(i).iter().copied()),
            list(&labels, instance.out_neighbors(i).iter().copied()),
            number(Some(steps.sigma[i])),
            number(Some(steps.lipschitz[i])),
            number(Some(steps.step[i])),
        )
        .map_err(anyhow::Error::from)?;
    }
    Ok(EXIT_OK)
}

fn apply_overrides(net: &mut NetworkModel, labels: &[u64], overrides: &[String]) -> anyhow::Result<()> {
    let index = |id: &str| -> anyhow::Result<usize> {
        let id: u64 = id.trim().parse().with_context(|| format!("bad id {id:?}"))?;
        labels
            .binary_search(&id)
            .map_err(|_| anyhow!("unknown id {id}"))
    };
    for spec in overrides {
        let (pair, value) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("--beta expects ID-ID=BETA, got {spec:?}"))?;
        let (a, b) = pair
            .split_once('-')
            .ok_or_else(|| anyhow!("--beta expects ID-ID=BETA, got {spec:?}"))?;
        let beta: f64 = value.trim().parse().with_context(|| format!("bad beta {value:?}"))?;
        net.set_beta(index(a)?, index(b)?, beta)?;
    }
    Ok(())
}

fn run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    if !(0.0..1.0).contains(&args.gamma) {
        return Err(usage(anyhow!("--gamma must lie in [0, 1)")));
    }
    if args.algo == Algo::Alg1 && (args.gamma != 0.0 || !args.beta.is_empty()) {
        writeln!(err, "note: alg1 assumes reliable links; --gamma and --beta are ignored")
            .map_err(anyhow::Error::from)?;
    }
    let Loaded { labels, instance } = load(&args.source)?;
    let steps = build_stepsizes(&instance, args.solver.safety).map_err(|e| match e {
        accelnet_core::Error::InvalidSafety(_) => usage(e),
        other => invalid(other),
    })?;
    let mut options = RunOptions::new(args.solver.max_iters, args.solver.eps);
    if args.oracle {
        let star = solve_active_set(&instance).map_err(invalid)?;
        options = options.with_reference(star.reference());
    }
    let trace = match args.algo {
        Algo::Alg1 => run_alg1(&instance, &steps, &options),
        Algo::Alg2 | Algo::Unaccel => {
            let mut net = NetworkModel::build(&instance, args.gamma, args.seed).map_err(usage)?;
            apply_overrides(&mut net, &labels, &args.beta)?;
            if args.algo == Algo::Alg2 {
                run_alg2(&instance, &steps, &net, &options)
            } else {
                run_unaccelerated(&instance, &steps, &net, &options)
            }
        }
    }
    .map_err(anyhow::Error::from)?;

    let mut file = create(&args.out)?;
    write_trace(&trace, &mut file).map_err(anyhow::Error::from)?;
    file.flush().map_err(anyhow::Error::from)?;

    let last = trace.rows.last();
    let true_residual = instance
        .constraint_residual(&trace.primal)
        .ok()
        .filter(|_| last.is_some())
        .map(|r| r.norm());
    writeln!(
        out,
        "k={} q={} residual={} primal_residual={} converged={}",
        trace.iterations(),
        number(last.and_then(|r| r.dual_value)),
        number(last.and_then(|r| r.residual)),
        number(true_residual),
        trace.converged
    )
    .map_err(anyhow::Error::from)?;
    Ok(if trace.converged { EXIT_OK } else { EXIT_BUDGET })
}

fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.summary.csv"))
}

fn montecarlo(args: &MonteCarloArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    if args.runs == 0 {
        return Err(usage(anyhow!("--runs must be at least 1")));
    }
    if let Some(g) = args.gammas.iter().find(|g| !(0.0..1.0).contains(*g)) {
        return Err(usage(anyhow!("gamma {g} is outside [0, 1)")));
    }
    let Loaded { instance, .. } = load(&args.source)?;
    let steps = build_stepsizes(&instance, args.solver.safety).map_err(usage)?;
    let campaign = Campaign {
        gammas: args.gammas.clone(),
        runs: args.runs,
        seed: args.seed,
        eps: args.solver.eps,
        max_iters: args.solver.max_iters,
        variant: match args.algo {
            McAlgo::Alg2 => Variant::Accelerated,
            McAlgo::Unaccel => Variant::Unaccelerated,
        },
    };
    let reps = run_campaign(&instance, &steps, &campaign).map_err(anyhow::Error::from)?;
    let summary = summarize(&reps);

    let mut file = create(&args.out)?;
    write_replicates(&reps, &mut file).map_err(anyhow::Error::from)?;
    file.flush().map_err(anyhow::Error::from)?;
    let path = args.summary.clone().unwrap_or_else(|| summary_path(&args.out));
    let mut file = create(&path)?;
    write_summary(&summary, &mut file).map_err(anyhow::Error::from)?;
    file.flush().map_err(anyhow::Error::from)?;
    write_summary(&summary, &mut *out).map_err(anyhow::Error::from)?;
    Ok(EXIT_OK)
}

fn synth(args: &SynthArgs) -> Result<i32, Failure> {
    if args.agents < 2 {
        return Err(usage(anyhow!("--agents must be at least 2")));
    }
    let params = SynthParams { agents: args.agents, ..SynthParams::default() };
    let instance = random_instance(args.seed, &params).map_err(anyhow::Error::from)?;
    let ids: Vec<u64> = (1..=args.agents as u64).collect();
    std::fs::write(&args.out, problem_to_string(&instance, &ids))
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and executes the command.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Validate(source) => validate(source, out),
        Command::Run(args) => run(args, out, err),
        Command::Montecarlo(args) => montecarlo(args, out),
        Command::Synth(args) => synth(args),
    };
    match result {
        Ok(code) => code,
        Err(Failure { code, error }) => {
            let _ = writeln!(err, "error: {error:#}");
            code
        }
    }
}
