use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng as _;

use neuroglue::cnf::{random_ksat, read_dimacs, write_dimacs_file, Literal};
use neuroglue::datagen::{build_dataset, load_dataset, DatagenConfig};
use neuroglue::env::Env;
use neuroglue::eval::{self, load_instances, run_benchmark, write_report, BenchConfig, Variant};
use neuroglue::extract::extract_graph;
use neuroglue::net::{forward, load_weights, save_weights, HyperParams, NetParams, NeuroOracle};
use neuroglue::solver::{solve, Budget, RandomOracle, RefocusOracle, Schedule, WarmUp};
use neuroglue::train::{sample_index, train_rl_from, train_supervised_from, RlConfig, SupervisedConfig};
use neuroglue::{math, par, rng, Solver, SolverConfig};

#[derive(Parser)]
#[command(name = "neuroglue", version, about = "CDCL solving with network-refocused branching")]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a DIMACS file; exit code 10 = SAT, 20 = UNSAT, 0 = unknown.
    Solve(SolveArgs),
    /// Print the residual clause-literal graph after assigning literals.
    Extract(ExtractArgs),
    /// Write random k-SAT instances.
    Gen(GenArgs),
    /// Build a supervised dataset from a directory of DIMACS files.
    Datagen(DatagenArgs),
    /// Train a network on a dataset with the KL objective.
    TrainSupervised(TrainSupervisedArgs),
    /// Train a network with REINFORCE in the branching environment.
    TrainRl(TrainRlArgs),
    /// Play episodes of the branching environment and print traces.
    EnvRollout(EnvRolloutArgs),
    /// Run solver variants over an instance directory and summarize.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Vanilla,
    Neuro,
    Random,
}

#[derive(Args, Clone)]
struct RefocusArgs {
    #[arg(long, default_value_t = 1e4)]
    kappa: f64,
    #[arg(long, default_value_t = 4.0)]
    temperature: f64,
    #[arg(long, default_value_t = 50_000)]
    schedule_base: u64,
    #[arg(long, default_value_t = 1_000)]
    schedule_quad: u64,
    #[arg(long, default_value_t = 250_000)]
    schedule_cap: u64,
    /// `15s` for wall clock, `1000c` for conflicts.
    #[arg(long, default_value = "15s")]
    warmup: WarmUp,
}

impl RefocusArgs {
    fn solver_config(&self, seed: u64) -> SolverConfig {
        let mut cfg = SolverConfig {
            seed,
            ..SolverConfig::default()
        };
        cfg.refocus.kappa = self.kappa;
        cfg.refocus.temperature = self.temperature;
        cfg.refocus.schedule = Schedule {
            base: self.schedule_base,
            quad: self.schedule_quad,
            cap: self.schedule_cap,
        };
        cfg.refocus.warmup = self.warmup;
        cfg
    }
}

#[derive(Args)]
struct SolveArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "vanilla")]
    mode: Mode,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    conflicts: Option<u64>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[command(flatten)]
    refocus: RefocusArgs,
    /// Include the model (DIMACS literals) in the output.
    #[arg(long)]
    model: bool,
}

#[derive(Args)]
struct ExtractArgs {
    input: PathBuf,
    /// Comma-separated DIMACS literals decided in order, e.g. `1,-3`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    assign: Vec<i64>,
    #[arg(long, default_value_t = 10_000_000)]
    edge_cap: usize,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 100)]
    vars: u32,
    /// Defaults to round(4.26 * vars).
    #[arg(long)]
    clauses: Option<usize>,
    #[arg(long, default_value_t = 3)]
    k: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DatagenArgs {
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    conflicts: u64,
    /// Optional per-solve wall-clock limit in seconds.
    #[arg(long)]
    time: Option<f64>,
    /// Augmentation dump interval in conflicts (0 disables).
    #[arg(long, default_value_t = 5_000)]
    dump_interval: u64,
    #[arg(long, default_value_t = 150_000)]
    max_clauses: usize,
    #[arg(long, default_value_t = 64)]
    max_pieces: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct NetArgs {
    /// `supervised` or `rl`; ignored when --init is given.
    #[arg(long)]
    preset: Option<String>,
    /// Start from these weights instead of a fresh initialization.
    #[arg(long)]
    init: Option<PathBuf>,
}

impl NetArgs {
    fn load(&self, default_preset: &str, seed: u64) -> Result<(NetParams, HyperParams)> {
        if let Some(path) = &self.init {
            return Ok(load_weights(path)?);
        }
        let h = HyperParams::preset(self.preset.as_deref().unwrap_or(default_preset))?;
        Ok((NetParams::init(&h, rng::derive_seed(seed, 0)), h))
    }
}

#[derive(Args)]
struct TrainSupervisedArgs {
    data: PathBuf,
    #[command(flatten)]
    net: NetArgs,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 3)]
    epochs: usize,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
    /// First epoch (0-based) whose iterates are averaged; defaults to the last.
    #[arg(long)]
    average_from: Option<usize>,
    #[arg(long)]
    no_dropout: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// CSV of per-epoch mean KL.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct TrainRlArgs {
    formulas: PathBuf,
    #[command(flatten)]
    net: NetArgs,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 100)]
    batches: usize,
    #[arg(long, default_value_t = 4)]
    workers: usize,
    #[arg(long, default_value_t = 2)]
    episodes_per_worker: usize,
    #[arg(long, default_value_t = 2)]
    grad_steps: usize,
    #[arg(long, default_value_t = 1.0)]
    max_grad_norm: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Weights written after every batch and at the end.
    #[arg(long)]
    out: PathBuf,
    /// CSV of per-step losses and mean return.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct EnvRolloutArgs {
    input: PathBuf,
    /// Comma-separated DIMACS literals to branch on, in order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    script: Vec<i64>,
    /// Sample actions from this network instead of uniformly.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    instances: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "vanilla,neuro,random")]
    variants: Vec<Variant>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Per-run wall-clock limit in seconds (also the PAR-2 timeout).
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    #[arg(long)]
    conflicts: Option<u64>,
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[command(flatten)]
    refocus: RefocusArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Solve(a) => cmd_solve(a),
        Command::Extract(a) => cmd_extract(a).map(|_| 0),
        Command::Gen(a) => cmd_gen(a).map(|_| 0),
        Command::Datagen(a) => cmd_datagen(a).map(|_| 0),
        Command::TrainSupervised(a) => cmd_train_supervised(a).map(|_| 0),
        Command::TrainRl(a) => cmd_train_rl(a).map(|_| 0),
        Command::EnvRollout(a) => cmd_env_rollout(a).map(|_| 0),
        Command::Bench(a) => cmd_bench(a).map(|_| 0),
    }
}

fn secs(x: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(x).with_context(|| format!("bad duration {x}"))
}

fn cmd_solve(a: SolveArgs) -> Result<u8> {
    let f = read_dimacs(&a.input)?;
    let cfg = a.refocus.solver_config(a.seed);
    let budget = Budget {
        conflicts: a.conflicts,
        decisions: None,
        time: a.timeout.map(secs).transpose()?,
    };
    let neuro;
    let oracle: Option<&dyn RefocusOracle> = match a.mode {
        Mode::Vanilla => None,
        Mode::Random => Some(&RandomOracle),
        Mode::Neuro => {
            let path = a.weights.as_ref().context("--mode neuro needs --weights")?;
            let (params, hyper) = load_weights(path)?;
            neuro = NeuroOracle { params, hyper };
            Some(&neuro)
        }
    };
    let r = solve(&f, cfg, budget, oracle);
    let mut out = serde_json::json!({ "status": r.status, "stats": r.stats });
    if a.model {
        if let Some(m) = &r.model {
            let lits: Vec<i64> = m
                .iter()
                .enumerate()
                .map(|(i, &b)| Literal::new(i as u32 + 1, b).to_dimacs())
                .collect();
            out["model"] = serde_json::json!(lits);
        }
    }
    println!("{out}");
    Ok(r.status.exit_code() as u8)
}

fn cmd_extract(a: ExtractArgs) -> Result<()> {
    let f = read_dimacs(&a.input)?;
    let mut s = Solver::new(&f, SolverConfig::default());
    if s.propagate().is_some() || !s.is_ok() {
        bail!("formula is refuted by unit propagation");
    }
    for &x in &a.assign {
        let lit = Literal::from_dimacs(x);
        if s.is_assigned(lit.var) {
            log::info!("{x} already assigned, skipped");
            continue;
        }
        s.decide(lit)?;
        if s.propagate().is_some() {
            bail!("conflict after assigning {x}");
        }
    }
    match extract_graph(&s, a.edge_cap) {
        Some(g) => print!("{}", g.to_edge_list()),
        None => bail!("residual graph exceeds the edge cap {}", a.edge_cap),
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    fs::create_dir_all(&a.out).with_context(|| a.out.display().to_string())?;
    let m = a.clauses.unwrap_or((4.26 * a.vars as f64).round() as usize);
    let width = a.count.max(1).to_string().len();
    for i in 0..a.count {
        let f = random_ksat(a.vars, m, a.k, rng::derive_seed(a.seed, i as u64))?;
        write_dimacs_file(&f, a.out.join(format!("r{i:0width$}.cnf")))?;
    }
    eprintln!("wrote {} instances (n={}, m={m}, k={})", a.count, a.vars, a.k);
    Ok(())
}

fn cmd_datagen(a: DatagenArgs) -> Result<()> {
    let cfg = DatagenConfig {
        conflicts: a.conflicts,
        time: a.time.map(secs).transpose()?,
        dump_interval: (a.dump_interval > 0).then_some(a.dump_interval),
        max_clauses: a.max_clauses,
        max_pieces: a.max_pieces,
        seed: a.seed,
    };
    let report = par::with_threads(a.workers, || build_dataset(&a.input, &a.out, &cfg))?;
    for p in &report.unreadable {
        eprintln!("unreadable: {}", p.display());
    }
    eprintln!(
        "{} examples, {} skipped (no glue clauses), {} unreadable",
        report.manifest.len(),
        report.skipped,
        report.unreadable.len()
    );
    Ok(())
}

fn cmd_train_supervised(a: TrainSupervisedArgs) -> Result<()> {
    let data = load_dataset(&a.data)?;
    if data.is_empty() {
        bail!("no examples in {}", a.data.display());
    }
    let (p, h) = a.net.load("supervised", a.seed)?;
    let cfg = SupervisedConfig {
        lr: a.lr,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
        average_from_epoch: a.average_from,
        dropout: !a.no_dropout,
    };
    let report = train_supervised_from(p, &data, &h, &cfg)?;
    save_weights(&report.params, &h, &a.out)?;
    if let Some(path) = &a.metrics {
        let rows: Vec<(usize, f64)> = report.epoch_kl.iter().copied().enumerate().collect();
        eval::write_csv(&rows, "epoch,mean_kl", path)?;
    }
    eprintln!(
        "{} examples, final epoch mean KL {:.6}",
        data.len(),
        report.epoch_kl.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_train_rl(a: TrainRlArgs) -> Result<()> {
    let formulas: Vec<_> = load_instances(&a.formulas)?.into_iter().map(|i| i.formula).collect();
    if formulas.is_empty() {
        bail!("no formulas in {}", a.formulas.display());
    }
    let (p, h) = a.net.load("rl", a.seed)?;
    let cfg = RlConfig {
        workers: a.workers,
        episodes_per_worker: a.episodes_per_worker,
        batches: a.batches,
        grad_steps: a.grad_steps,
        lr: a.lr,
        max_grad_norm: a.max_grad_norm,
        seed: a.seed,
        checkpoint: Some(a.out.clone()),
        ..RlConfig::default()
    };
    let report = train_rl_from(p, &formulas, &h, &cfg)?;
    save_weights(&report.params, &h, &a.out)?;
    if let Some(path) = &a.metrics {
        eval::write_csv(
            &report.metrics,
            "step,batch,policy_loss,value_loss,total_loss,grad_norm,mean_ratio,mean_return",
            path,
        )?;
    }
    if let Some(m) = report.metrics.last() {
        eprintln!("{} learner steps, last mean return {:.4}", m.step + 1, m.mean_return);
    }
    Ok(())
}

fn cmd_env_rollout(a: EnvRolloutArgs) -> Result<()> {
    let f = read_dimacs(&a.input)?;
    let net = a.weights.as_ref().map(load_weights).transpose()?;
    let mut env = Env::new();
    println!("episode,step,action,polarity,reward");
    for e in 0..a.episodes {
        let seed = rng::derive_seed(a.seed, e as u64);
        let mut obs = env.reset(&f, rng::derive_seed(seed, 0))?;
        let mut pick = rng::derive(seed, 1);
        let mut script = a.script.iter();
        let mut total = 0.0;
        loop {
            let t = if let Some(&x) = script.next() {
                let lit = Literal::from_dimacs(x);
                let idx = env
                    .valid_actions()
                    .iter()
                    .position(|&v| v == lit.var)
                    .with_context(|| format!("variable {} is not unassigned", lit.var))?;
                env.step_with_polarity(idx, lit.sign)?
            } else if let Some((p, h)) = &net {
                let out = forward(p, h, &obs, false, 0)?;
                env.step(sample_index(&math::softmax(&out.policy_logits), &mut pick))?
            } else {
                let idx = pick.random_range(0..obs.num_vars);
                env.step(idx)?
            };
            total += t.reward;
            println!(
                "{e},{},{},{},{}",
                env.steps(),
                t.decision.var,
                if t.decision.sign { '+' } else { '-' },
                t.reward
            );
            match t.observation {
                Some(next) if !t.done => obs = next,
                _ => break,
            }
        }
        eprintln!("episode {e}: {:?}, return {total}", env.terminal());
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let instances = load_instances(&a.instances)?;
    if instances.is_empty() {
        bail!("no instances in {}", a.instances.display());
    }
    fs::create_dir_all(&a.out).with_context(|| a.out.display().to_string())?;
    let weights = a.weights.as_ref().map(load_weights).transpose()?;
    let cfg = BenchConfig {
        variants: a.variants.clone(),
        seeds: a.seeds.clone(),
        timeout: secs(a.timeout)?,
        conflicts: a.conflicts,
        solver: a.refocus.solver_config(0),
        weights,
        threads: a.threads,
    };
    let records_path = a.out.join("records.csv");
    let records = run_benchmark(&instances, &cfg, Some(&records_path))?;
    let scores = write_report(&a.out, &records, a.timeout)?;
    for s in scores {
        println!("{s}");
    }
    for f in eval::REPORT_FILES {
        log::info!("wrote {}", a.out.join(f).display());
    }
    Ok(())
}
