//! Benchmark harness: runs solver variants over instances and seeds, persists
//! one record per run, and summarizes them (PAR-2, GLR, glue, cactus data).

mod metrics;

pub use metrics::{
    aggregate, cactus_csv, cactus_rows, pairwise_better_fraction, par2, write_csv,
    AggregateRecord, CactusAxis, CactusRow, Metric, PairwiseRow, Par2,
};

use std::collections::HashSet;
use std::fmt;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::cnf::{read_dimacs, Formula};
use crate::datagen::list_instances;
use crate::net::{HyperParams, NetParams, NeuroOracle};
use crate::solver::{solve, Budget, RandomOracle, RefocusOracle, SolverConfig, Status};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Plain EVSIDS, no refocusing.
    Vanilla,
    /// Refocused by the network.
    Neuro,
    /// Refocused by uniform random logits.
    Random,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Neuro, Variant::Vanilla, Variant::Random];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Vanilla => "vanilla",
            Variant::Neuro => "neuro",
            Variant::Random => "random",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(Variant::Vanilla),
            "neuro" => Ok(Variant::Neuro),
            "random" => Ok(Variant::Random),
            other => Err(Error::InvalidArgument(format!("unknown variant `{other}`"))),
        }
    }
}

/// Outcome of one (instance, variant, seed) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub instance: String,
    pub variant: Variant,
    pub seed: u64,
    pub status: Status,
    pub runtime_secs: f64,
    pub decisions: u64,
    pub conflicts: u64,
    pub avg_glue: f64,
    pub glr: f64,
    pub refocuses: u64,
}

impl EvalRecord {
    pub fn key(&self) -> (String, Variant, u64) {
        (self.instance.clone(), self.variant, self.seed)
    }
}

pub const RECORDS_HEADER: &str =
    "instance,variant,seed,status,runtime_secs,decisions,conflicts,avg_glue,glr,refocuses";

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    /// Wall-clock limit per run; also the PAR-2 timeout.
    pub timeout: Duration,
    pub conflicts: Option<u64>,
    /// Template for every run; the seed is replaced per run.
    pub solver: SolverConfig,
    pub weights: Option<(NetParams, HyperParams)>,
    /// Worker threads (0 = rayon default).
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            variants: Variant::ALL.to_vec(),
            seeds: vec![0],
            timeout: Duration::from_secs(60),
            conflicts: Some(200_000),
            solver: SolverConfig::default(),
            weights: None,
            threads: 0,
        }
    }
}

/// A named formula.
#[derive(Clone, Debug)]
pub struct Instance {
    pub id: String,
    pub formula: Formula,
}

/// Reads every DIMACS file of `dir`, named by file stem.
pub fn load_instances(dir: &Path) -> Result<Vec<Instance>> {
    list_instances(dir)?
        .into_iter()
        .map(|p| {
            let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or("instance").to_string();
            Ok(Instance {
                id,
                formula: read_dimacs(&p)?,
            })
        })
        .collect()
}

pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Runs a single configuration.
pub fn run_one(inst: &Instance, variant: Variant, seed: u64, cfg: &BenchConfig) -> Result<EvalRecord> {
    let mut solver_cfg = cfg.solver.clone();
    solver_cfg.seed = seed;
    let neuro;
    let oracle: Option<&dyn RefocusOracle> = match variant {
        Variant::Vanilla => None,
        Variant::Random => Some(&RandomOracle),
        Variant::Neuro => {
            let (params, hyper) = cfg
                .weights
                .clone()
                .ok_or_else(|| Error::InvalidArgument("the neuro variant needs weights".into()))?;
            neuro = NeuroOracle { params, hyper };
            Some(&neuro)
        }
    };
    let budget = Budget {
        conflicts: cfg.conflicts,
        decisions: None,
        time: Some(cfg.timeout),
    };
    let r = solve(&inst.formula, solver_cfg, budget, oracle);
    if r.status == Status::Sat {
        let model = r.model.as_ref().expect("SAT result carries a model");
        if !inst.formula.is_satisfied_by(model) {
            return Err(Error::Inconsistent {
                instance: inst.id.clone(),
            });
        }
    }
    Ok(EvalRecord {
        instance: inst.id.clone(),
        variant,
        seed,
        status: r.status,
        runtime_secs: r.stats.runtime_secs,
        decisions: r.stats.decisions,
        conflicts: r.stats.conflicts,
        avg_glue: r.stats.avg_glue,
        glr: r.stats.glr,
        refocuses: r.stats.refocuses,
    })
}

/// Appends records to a CSV file, writing the header when the file is new.
struct RecordSink {
    writer: Mutex<csv::Writer<fs::File>>,
    path: PathBuf,
}

impl RecordSink {
    fn open(path: &Path) -> Result<Self> {
        let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        if fresh {
            writer.write_record(RECORDS_HEADER.split(','))?;
            writer.flush().map_err(|e| Error::io(path, e))?;
        }
        Ok(RecordSink {
            writer: Mutex::new(writer),
            path: path.to_path_buf(),
        })
    }

    fn push(&self, r: &EvalRecord) -> Result<()> {
        let mut w = self.writer.lock().expect("record sink poisoned");
        w.serialize(r)?;
        w.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Runs every (instance, variant, seed) not already present in `records`
/// (when given), appending each result as soon as it finishes. Returns all
/// records, old and new, in (instance, variant, seed) order.
pub fn run_benchmark(
    instances: &[Instance],
    cfg: &BenchConfig,
    records: Option<&Path>,
) -> Result<Vec<EvalRecord>> {
    if cfg.variants.contains(&Variant::Neuro) && cfg.weights.is_none() {
        return Err(Error::InvalidArgument("the neuro variant needs weights".into()));
    }
    let mut done: Vec<EvalRecord> = match records {
        Some(p) if p.exists() && fs::metadata(p).map(|m| m.len() > 0).unwrap_or(false) => {
            read_records(p)?
        }
        _ => Vec::new(),
    };
    let finished: HashSet<(String, Variant, u64)> = done.iter().map(EvalRecord::key).collect();
    let mut jobs = Vec::new();
    for inst in instances {
        for &v in &cfg.variants {
            for &s in &cfg.seeds {
                if !finished.contains(&(inst.id.clone(), v, s)) {
                    jobs.push((inst, v, s));
                }
            }
        }
    }
    log::info!("{} runs to do, {} already recorded", jobs.len(), done.len());
    let sink = records.map(RecordSink::open).transpose()?;
    let results = crate::par::with_threads(cfg.threads, || {
        crate::par::map(&jobs, |&(inst, v, s)| {
            let r = run_one(inst, v, s, cfg)?;
            if let Some(sink) = &sink {
                sink.push(&r)?;
            }
            Ok::<_, Error>(r)
        })
    });
    for r in results {
        done.push(r?);
    }
    let order = |r: &EvalRecord| (r.instance.clone(), r.variant, r.seed);
    done.sort_by_key(order);
    Ok(done)
}

/// File names written by [`write_report`].
pub const REPORT_FILES: [&str; 6] = [
    "records.csv",
    "aggregates.csv",
    "par2.txt",
    "pairwise.csv",
    "cactus_runtime.csv",
    "cactus_decisions.csv",
];

/// Writes every summary file (records.csv is written by [`run_benchmark`]).
pub fn write_report(dir: &Path, records: &[EvalRecord], timeout: f64) -> Result<Vec<Par2>> {
    let aggs = aggregate(records)?;
    write_csv(
        &aggs,
        "instance,variant,runs,solved,status,mean_successful_runtime,mean_successful_decisions,\
         mean_runtime,mean_decisions,mean_conflicts,mean_avg_glue,mean_glr",
        &dir.join("aggregates.csv"),
    )?;
    let scores = par2(&aggs, timeout)?;
    let mut text = format!("timeout {timeout}\n");
    for s in &scores {
        text += &format!("{s}\n");
    }
    let path = dir.join("par2.txt");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    let mut pairs = pairwise_better_fraction(&aggs, Metric::Glr);
    pairs.extend(pairwise_better_fraction(&aggs, Metric::AvgGlue));
    write_csv(&pairs, "metric,a,b,instances,a_better,b_better", &dir.join("pairwise.csv"))?;
    cactus_csv(&aggs, CactusAxis::Runtime, &dir.join("cactus_runtime.csv"))?;
    cactus_csv(&aggs, CactusAxis::Decisions, &dir.join("cactus_decisions.csv"))?;
    Ok(scores)
}
