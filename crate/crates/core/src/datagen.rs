//! Supervised data generation.
//!
//! A formula is solved by the plain solver under a budget and the number of
//! times each variable occurs in a learned clause of glue at most 2 becomes its
//! label. Oversized inputs are split first; augmentation dumps the formula plus
//! its learned clauses at regular conflict intervals and labels each dump by
//! solving it again from scratch.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::cnf::{clause_literal_graph, random_split_capped, read_dimacs, write_dimacs_file, Formula};
use crate::solver::{Budget, Solver, SolverConfig};
use crate::train::SupervisedExample;
use crate::{rng, Error, Result};

pub const MANIFEST: &str = "manifest.csv";
pub const EXAMPLES_DIR: &str = "examples";

/// Solves `f` without refocusing and labels it with glue counts; `None` when no
/// glue clause was learned.
pub fn generate_datapoint(f: &Formula, budget: &Budget) -> Option<SupervisedExample> {
    let mut s = Solver::new(f, SolverConfig::default());
    s.solve_limited(budget, None);
    let counts = s.glue_counts().to_vec();
    if counts.iter().all(|&c| c == 0) {
        return None;
    }
    Some(SupervisedExample {
        graph: clause_literal_graph(f),
        glue_counts: counts,
    })
}

/// Original clauses plus the retained learned clauses at every multiple of
/// `dump_interval` conflicts reached within `budget`.
pub fn augment(f: &Formula, dump_interval: u64, budget: &Budget) -> Result<Vec<Formula>> {
    if dump_interval == 0 {
        return Err(Error::InvalidArgument("dump interval must be >= 1".into()));
    }
    let mut s = Solver::new(f, SolverConfig::default());
    let limit = budget.conflicts.unwrap_or(u64::MAX);
    let mut dumps = Vec::new();
    let mut next = dump_interval;
    while next <= limit {
        let step = Budget {
            conflicts: Some(next),
            ..*budget
        };
        let status = s.solve_limited(&step, None);
        if status.is_decided() || s.stats().conflicts < next {
            break;
        }
        dumps.push(s.formula_with_learned());
        next = next.saturating_add(dump_interval);
    }
    Ok(dumps)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatagenConfig {
    /// Per-solve conflict budget.
    pub conflicts: u64,
    /// Optional per-solve wall-clock budget.
    pub time: Option<Duration>,
    /// Augmentation dump interval in conflicts; `None` disables augmentation.
    pub dump_interval: Option<u64>,
    pub max_clauses: usize,
    /// Upper bound on split pieces per input file.
    pub max_pieces: usize,
    pub seed: u64,
}

impl Default for DatagenConfig {
    fn default() -> Self {
        DatagenConfig {
            conflicts: 20_000,
            time: None,
            dump_interval: Some(5_000),
            max_clauses: 150_000,
            max_pieces: 64,
            seed: 0,
        }
    }
}

impl DatagenConfig {
    pub fn budget(&self) -> Budget {
        Budget {
            conflicts: Some(self.conflicts),
            decisions: None,
            time: self.time,
        }
    }
}

/// Provenance of one emitted example.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub id: String,
    pub source: String,
    pub piece: usize,
    /// Literals fixed by splitting, space separated (DIMACS numbering).
    pub split_path: String,
    /// Augmentation dump index, empty for the formula itself.
    pub dump: Option<usize>,
    pub seed: u64,
    pub num_vars: u32,
    pub num_clauses: usize,
}

#[derive(Clone, Debug, Default)]
pub struct DatasetReport {
    pub manifest: Vec<ManifestRow>,
    /// Inputs that could not be read or parsed.
    pub unreadable: Vec<PathBuf>,
    /// Formulas skipped because no glue clause was learned.
    pub skipped: usize,
}

/// DIMACS files (`.cnf`, `.dimacs`) in `dir`, sorted by name.
pub fn list_instances(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|x| x.to_str())
                    .is_some_and(|x| x == "cnf" || x == "dimacs")
        })
        .collect();
    files.sort();
    Ok(files)
}

fn write_example(dir: &Path, id: &str, f: &Formula, counts: &[u64]) -> Result<()> {
    write_dimacs_file(f, dir.join(format!("{id}.cnf")))?;
    let text: Vec<String> = counts.iter().map(u64::to_string).collect();
    let path = dir.join(format!("{id}.counts"));
    fs::write(&path, text.join(" ") + "\n").map_err(|e| Error::io(&path, e))
}

struct FileOutput {
    rows: Vec<ManifestRow>,
    skipped: usize,
}

fn process_file(path: &Path, index: usize, out: &Path, cfg: &DatagenConfig) -> Result<FileOutput> {
    let f = read_dimacs(path)?.normalized();
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("instance")
        .to_string();
    let seed = rng::derive_seed(cfg.seed, index as u64);
    let budget = cfg.budget();
    let pieces = random_split_capped(&f, cfg.max_clauses, cfg.max_pieces, seed);
    let mut result = FileOutput {
        rows: Vec::new(),
        skipped: 0,
    };
    for (k, piece) in pieces.iter().enumerate() {
        let split_path = piece
            .assignment
            .iter()
            .map(|l| l.to_dimacs().to_string())
            .collect::<Vec<_>>()
            .join(" ");
        let mut candidates = vec![(None, piece.formula.clone())];
        if let Some(interval) = cfg.dump_interval {
            for (d, dump) in augment(&piece.formula, interval, &budget)?.into_iter().enumerate() {
                candidates.push((Some(d), dump.normalized()));
            }
        }
        for (dump, formula) in candidates {
            let Some(ex) = generate_datapoint(&formula, &budget) else {
                result.skipped += 1;
                continue;
            };
            let id = match dump {
                None => format!("{stem}_p{k}"),
                Some(d) => format!("{stem}_p{k}_d{d}"),
            };
            write_example(out, &id, &formula, &ex.glue_counts)?;
            result.rows.push(ManifestRow {
                id,
                source: path.display().to_string(),
                piece: k,
                split_path: split_path.clone(),
                dump,
                seed,
                num_vars: formula.num_vars,
                num_clauses: formula.num_clauses(),
            });
        }
    }
    Ok(result)
}

/// Labels every DIMACS file of `input` and writes examples plus a manifest
/// under `output`.
pub fn build_dataset(input: &Path, output: &Path, cfg: &DatagenConfig) -> Result<DatasetReport> {
    let files = list_instances(input)?;
    let examples = output.join(EXAMPLES_DIR);
    fs::create_dir_all(&examples).map_err(|e| Error::io(&examples, e))?;
    let jobs: Vec<(usize, &PathBuf)> = files.iter().enumerate().collect();
    let outputs = crate::par::map(&jobs, |&(i, p)| process_file(p, i, &examples, cfg));
    let mut report = DatasetReport::default();
    for ((_, path), res) in jobs.iter().zip(outputs) {
        match res {
            Ok(o) => {
                report.manifest.extend(o.rows);
                report.skipped += o.skipped;
            }
            Err(e @ (Error::Io { .. } | Error::Parse { .. })) => {
                log::warn!("skipping {}: {e}", path.display());
                report.unreadable.push((*path).clone());
            }
            Err(e) => return Err(e),
        }
    }
    let manifest = output.join(MANIFEST);
    let mut w = csv::Writer::from_path(&manifest).map_err(|e| Error::io(&manifest, e.into()))?;
    for row in &report.manifest {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(&manifest, e))?;
    if report.manifest.is_empty() {
        // `csv` writes the header with the first record only.
        fs::write(&manifest, manifest_header() + "\n").map_err(|e| Error::io(&manifest, e))?;
    }
    Ok(report)
}

fn manifest_header() -> String {
    "id,source,piece,split_path,dump,seed,num_vars,num_clauses".to_string()
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestRow>> {
    let path = dir.join(MANIFEST);
    let mut r = csv::Reader::from_path(&path).map_err(|e| Error::io(&path, e.into()))?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Reads one example written by [`build_dataset`].
pub fn load_example(dir: &Path, id: &str) -> Result<SupervisedExample> {
    let examples = dir.join(EXAMPLES_DIR);
    let f = read_dimacs(examples.join(format!("{id}.cnf")))?;
    let path = examples.join(format!("{id}.counts"));
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let counts = text
        .split_whitespace()
        .map(|t| {
            t.parse::<u64>().map_err(|_| Error::Parse {
                line: 1,
                msg: format!("bad glue count `{t}` in {}", path.display()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SupervisedExample::new(clause_literal_graph(&f), counts)
}

/// Every example listed in the manifest of `dir`.
pub fn load_dataset(dir: &Path) -> Result<Vec<SupervisedExample>> {
    read_manifest(dir)?
        .iter()
        .map(|row| load_example(dir, &row.id))
        .collect()
}
