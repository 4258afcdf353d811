use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvalRecord, Variant};
use crate::solver::Status;
use crate::{Error, Result};

/// Per (instance, variant) summary over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub instance: String,
    pub variant: Variant,
    pub runs: usize,
    /// Solved by at least one seed.
    pub solved: bool,
    /// Verdict reached by any seed, UNKNOWN otherwise.
    pub status: Status,
    /// Mean runtime of the solving seeds only.
    pub mean_successful_runtime: Option<f64>,
    /// Mean decisions of the solving seeds only.
    pub mean_successful_decisions: Option<f64>,
    pub mean_runtime: f64,
    pub mean_decisions: f64,
    pub mean_conflicts: f64,
    pub mean_avg_glue: f64,
    pub mean_glr: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

/// Groups records per (instance, variant); fails if any instance was reported
/// both SAT and UNSAT.
pub fn aggregate(records: &[EvalRecord]) -> Result<Vec<AggregateRecord>> {
    let mut verdicts: BTreeMap<&str, BTreeSet<Status>> = BTreeMap::new();
    for r in records {
        if r.status.is_decided() {
            verdicts.entry(&r.instance).or_default().insert(r.status);
        }
    }
    if let Some((inst, _)) = verdicts.iter().find(|(_, s)| s.len() > 1) {
        return Err(Error::Inconsistent {
            instance: inst.to_string(),
        });
    }
    let mut groups: BTreeMap<(&str, Variant), Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((&r.instance, r.variant)).or_default().push(r);
    }
    Ok(groups
        .into_iter()
        .map(|((instance, variant), rs)| {
            let ok: Vec<&&EvalRecord> = rs.iter().filter(|r| r.status.is_decided()).collect();
            AggregateRecord {
                instance: instance.to_string(),
                variant,
                runs: rs.len(),
                solved: !ok.is_empty(),
                status: ok.first().map_or(Status::Unknown, |r| r.status),
                mean_successful_runtime: mean(ok.iter().map(|r| r.runtime_secs)),
                mean_successful_decisions: mean(ok.iter().map(|r| r.decisions as f64)),
                mean_runtime: mean(rs.iter().map(|r| r.runtime_secs)).unwrap_or(0.0),
                mean_decisions: mean(rs.iter().map(|r| r.decisions as f64)).unwrap_or(0.0),
                mean_conflicts: mean(rs.iter().map(|r| r.conflicts as f64)).unwrap_or(0.0),
                mean_avg_glue: mean(rs.iter().map(|r| r.avg_glue)).unwrap_or(0.0),
                mean_glr: mean(rs.iter().map(|r| r.glr)).unwrap_or(0.0),
            }
        })
        .collect())
}

/// Normalized PAR-2 of one variant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Par2 {
    pub variant: Variant,
    pub instances: usize,
    pub solved: usize,
    pub score: f64,
    /// Over instances some variant proved SAT; `None` if there are none.
    pub sat_score: Option<f64>,
    pub unsat_score: Option<f64>,
}

impl fmt::Display for Par2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        write!(
            f,
            "{} solved {}/{} par2 {:.3} sat {} unsat {}",
            self.variant,
            self.solved,
            self.instances,
            self.score,
            opt(self.sat_score),
            opt(self.unsat_score)
        )
    }
}

fn par2_over(aggs: &[&AggregateRecord], timeout: f64) -> Option<f64> {
    if aggs.is_empty() {
        return None;
    }
    let total: f64 = aggs
        .iter()
        .map(|a| match (a.solved, a.mean_successful_runtime) {
            (true, Some(t)) => t,
            _ => 2.0 * timeout,
        })
        .sum();
    Some(total / aggs.len() as f64)
}

/// PAR-2 per variant: solved instances cost their mean successful runtime,
/// unsolved ones twice the timeout, divided by the instance count.
pub fn par2(aggs: &[AggregateRecord], timeout: f64) -> Result<Vec<Par2>> {
    if aggs.is_empty() {
        return Err(Error::InvalidArgument("no aggregates".into()));
    }
    let mut established: BTreeMap<&str, Status> = BTreeMap::new();
    for a in aggs.iter().filter(|a| a.solved) {
        established.insert(&a.instance, a.status);
    }
    let variants: BTreeSet<Variant> = aggs.iter().map(|a| a.variant).collect();
    Ok(variants
        .into_iter()
        .map(|v| {
            let mine: Vec<&AggregateRecord> = aggs.iter().filter(|a| a.variant == v).collect();
            let split = |s: Status| -> Vec<&AggregateRecord> {
                mine.iter()
                    .copied()
                    .filter(|a| established.get(a.instance.as_str()) == Some(&s))
                    .collect()
            };
            Par2 {
                variant: v,
                instances: mine.len(),
                solved: mine.iter().filter(|a| a.solved).count(),
                score: par2_over(&mine, timeout).unwrap_or(0.0),
                sat_score: par2_over(&split(Status::Sat), timeout),
                unsat_score: par2_over(&split(Status::Unsat), timeout),
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Conflicts per decision; higher is better.
    Glr,
    /// Mean glue of learned clauses; lower is better.
    AvgGlue,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairwiseRow {
    pub metric: Metric,
    pub a: Variant,
    pub b: Variant,
    pub instances: usize,
    /// Fraction of shared instances where `a` is strictly better (ties count half).
    pub a_better: f64,
    pub b_better: f64,
}

/// For every pair of variants, the share of instances each one wins on `metric`.
pub fn pairwise_better_fraction(aggs: &[AggregateRecord], metric: Metric) -> Vec<PairwiseRow> {
    let mut by: BTreeMap<Variant, BTreeMap<&str, f64>> = BTreeMap::new();
    for a in aggs {
        let x = match metric {
            Metric::Glr => a.mean_glr,
            Metric::AvgGlue => a.mean_avg_glue,
        };
        by.entry(a.variant).or_default().insert(&a.instance, x);
    }
    let variants: Vec<Variant> = by.keys().copied().collect();
    let mut rows = Vec::new();
    for (i, &va) in variants.iter().enumerate() {
        for &vb in &variants[i + 1..] {
            let (ma, mb) = (&by[&va], &by[&vb]);
            let (mut wins, mut n) = (0.0, 0usize);
            for (inst, &xa) in ma {
                let Some(&xb) = mb.get(inst) else { continue };
                n += 1;
                let a_wins = match metric {
                    Metric::Glr => xa > xb,
                    Metric::AvgGlue => xa < xb,
                };
                if xa == xb {
                    wins += 0.5;
                } else if a_wins {
                    wins += 1.0;
                }
            }
            let frac = if n == 0 { 0.5 } else { wins / n as f64 };
            rows.push(PairwiseRow {
                metric,
                a: va,
                b: vb,
                instances: n,
                a_better: frac,
                b_better: 1.0 - frac,
            });
        }
    }
    rows
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CactusAxis {
    Runtime,
    Decisions,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CactusRow {
    pub variant: Variant,
    pub solved: usize,
    pub cost: f64,
}

/// Sorted successful costs per variant; row `i` is the cost of the `i`-th
/// cheapest solved instance.
pub fn cactus_rows(aggs: &[AggregateRecord], axis: CactusAxis) -> Vec<CactusRow> {
    let mut by: BTreeMap<Variant, Vec<f64>> = BTreeMap::new();
    for a in aggs {
        let cost = match axis {
            CactusAxis::Runtime => a.mean_successful_runtime,
            CactusAxis::Decisions => a.mean_successful_decisions,
        };
        let entry = by.entry(a.variant).or_default();
        if let (true, Some(c)) = (a.solved, cost) {
            entry.push(c);
        }
    }
    let mut rows = Vec::new();
    for (variant, mut costs) in by {
        costs.sort_by(f64::total_cmp);
        rows.extend(costs.into_iter().enumerate().map(|(i, cost)| CactusRow {
            variant,
            solved: i + 1,
            cost,
        }));
    }
    rows
}

pub fn cactus_csv(aggs: &[AggregateRecord], axis: CactusAxis, path: &Path) -> Result<()> {
    let rows = cactus_rows(aggs, axis);
    let mut out = String::from("variant,solved,cost\n");
    for r in rows {
        out += &format!("{},{},{}\n", r.variant, r.solved, r.cost);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_csv<T: Serialize>(rows: &[T], header: &str, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::io(path, e.into()))?;
    w.write_record(header.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(inst: &str, v: Variant, seed: u64, status: Status, t: f64) -> EvalRecord {
        EvalRecord {
            instance: inst.into(),
            variant: v,
            seed,
            status,
            runtime_secs: t,
            decisions: (t * 10.0) as u64,
            conflicts: (t * 3.0) as u64,
            avg_glue: 3.0,
            glr: 0.3,
            refocuses: 0,
        }
    }

    #[test]
    fn solved_if_any_seed_solves() {
        let rs = vec![
            rec("a", Variant::Vanilla, 0, Status::Sat, 100.0),
            rec("a", Variant::Vanilla, 1, Status::Unknown, 5000.0),
            rec("b", Variant::Vanilla, 0, Status::Unknown, 5000.0),
        ];
        let ag = aggregate(&rs).unwrap();
        assert!(ag[0].solved);
        assert_eq!(ag[0].mean_successful_runtime, Some(100.0));
        assert_eq!(ag[0].mean_runtime, 2550.0);
        assert!(!ag[1].solved);
        let p = par2(&ag, 5000.0).unwrap();
        assert_eq!(p[0].score, 5050.0);
        assert_eq!(p[0].sat_score, Some(100.0));
        assert_eq!(p[0].unsat_score, None);
    }

    #[test]
    fn par2_extremes_and_monotonicity() {
        let solved = aggregate(&[
            rec("a", Variant::Neuro, 0, Status::Sat, 0.0),
            rec("b", Variant::Neuro, 0, Status::Unsat, 0.0),
        ])
        .unwrap();
        assert_eq!(par2(&solved, 60.0).unwrap()[0].score, 0.0);
        let unsolved = aggregate(&[
            rec("a", Variant::Neuro, 0, Status::Unknown, 60.0),
            rec("b", Variant::Neuro, 0, Status::Unknown, 60.0),
        ])
        .unwrap();
        assert_eq!(par2(&unsolved, 60.0).unwrap()[0].score, 120.0);
        let mut ag = aggregate(&[
            rec("a", Variant::Neuro, 0, Status::Sat, 7.0),
            rec("b", Variant::Neuro, 0, Status::Unsat, 9.0),
        ])
        .unwrap();
        let before = par2(&ag, 60.0).unwrap()[0].score;
        ag[0].solved = false;
        assert!(par2(&ag, 60.0).unwrap()[0].score >= before);
        assert!(par2(&[], 60.0).is_err());
    }

    #[test]
    fn contradictory_verdicts_are_fatal() {
        let rs = vec![
            rec("a", Variant::Vanilla, 0, Status::Sat, 1.0),
            rec("a", Variant::Random, 3, Status::Unsat, 1.0),
        ];
        assert!(matches!(aggregate(&rs), Err(Error::Inconsistent { .. })));
    }

    #[test]
    fn pairwise_ties_and_complements() {
        let mk = |v, glr, glue| {
            let mut r = rec("x", v, 0, Status::Sat, 1.0);
            r.glr = glr;
            r.avg_glue = glue;
            r
        };
        let same = aggregate(&[mk(Variant::Vanilla, 0.3, 4.0), mk(Variant::Neuro, 0.3, 4.0)]).unwrap();
        let rows = pairwise_better_fraction(&same, Metric::Glr);
        assert_eq!((rows[0].a_better, rows[0].b_better), (0.5, 0.5));
        let mut rs = Vec::new();
        for (i, inst) in ["p", "q", "r"].iter().enumerate() {
            let mut a = mk(Variant::Neuro, 0.5 + i as f64, 2.0);
            let mut b = mk(Variant::Vanilla, 0.1, 5.0 + i as f64);
            a.instance = inst.to_string();
            b.instance = inst.to_string();
            rs.extend([a, b]);
        }
        let ag = aggregate(&rs).unwrap();
        for m in [Metric::Glr, Metric::AvgGlue] {
            let row = &pairwise_better_fraction(&ag, m)[0];
            assert_eq!((row.a, row.b), (Variant::Vanilla, Variant::Neuro));
            assert_eq!((row.a_better, row.b_better), (0.0, 1.0));
            assert_eq!(row.a_better + row.b_better, 1.0);
        }
    }

    #[test]
    fn cactus_sorted() {
        let ag = aggregate(&[
            rec("a", Variant::Vanilla, 0, Status::Sat, 3.0),
            rec("b", Variant::Vanilla, 0, Status::Sat, 1.0),
            rec("c", Variant::Vanilla, 0, Status::Unsat, 2.0),
            rec("d", Variant::Vanilla, 0, Status::Unknown, 9.0),
        ])
        .unwrap();
        let rows = cactus_rows(&ag, CactusAxis::Runtime);
        let pairs: Vec<(usize, f64)> = rows.iter().map(|r| (r.solved, r.cost)).collect();
        assert_eq!(pairs, vec![(1, 1.0), (2, 2.0), (3, 3.0)]);
        let d = cactus_rows(&ag, CactusAxis::Decisions);
        assert!(d.windows(2).all(|w| w[0].cost <= w[1].cost));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        cactus_csv(&ag, CactusAxis::Runtime, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "variant,solved,cost\nvanilla,1,1\nvanilla,2,2\nvanilla,3,3\n");
    }
}
