//! CDCL engine: two-watched-literal propagation, first-UIP learning, EVSIDS
//! branching with phase saving, glue-EMA restarts, glue-preserving clause
//! database reduction and the periodic-refocus hook.

mod ema;
mod heap;
mod lit;
mod refocus;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use ema::{Ema, GlueEmas};
pub use refocus::{
    schedule_threshold, FixedOracle, RandomOracle, RefocusConfig, RefocusOracle, Schedule, WarmUp,
};

use crate::cnf::{Clause, Formula, Literal};
use crate::rng::{self, Rng};
use crate::{Error, Result};
use heap::VarHeap;
pub(crate) use lit::Lit;

const RESCALE_LIMIT: f64 = 1e100;
const NO_REASON: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// EVSIDS decay factor ρ; the bump increment grows by `1/ρ` per conflict.
    pub decay: f64,
    pub ema_fast_alpha: f64,
    pub ema_slow_alpha: f64,
    /// Minimum conflicts between restarts.
    pub restart_interval: u64,
    /// Restart when `ema_fast > restart_margin * ema_slow`.
    pub restart_margin: f64,
    /// Database reductions happen every `reduce_base + reduce_inc * k` conflicts.
    pub reduce_base: u64,
    pub reduce_inc: u64,
    pub refocus: RefocusConfig,
    /// Seed of the solver's own random stream (used by refocus oracles only).
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            decay: 0.95,
            ema_fast_alpha: 1.0 / 32.0,
            ema_slow_alpha: 1.0 / 16384.0,
            restart_interval: 2,
            restart_margin: 1.25,
            reduce_base: 2000,
            reduce_inc: 300,
            refocus: RefocusConfig::default(),
            seed: 0,
        }
    }
}

/// Resource limits. Totals are cumulative over the solver's lifetime.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Budget {
    pub conflicts: Option<u64>,
    pub decisions: Option<u64>,
    pub time: Option<Duration>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn conflicts(n: u64) -> Self {
        Budget {
            conflicts: Some(n),
            ..Budget::default()
        }
    }

    pub fn time(d: Duration) -> Self {
        Budget {
            time: Some(d),
            ..Budget::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
}

impl Status {
    pub fn is_decided(self) -> bool {
        self != Status::Unknown
    }

    /// SAT-competition exit code.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Sat => 10,
            Status::Unsat => 20,
            Status::Unknown => 0,
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Sat => "SAT",
            Status::Unsat => "UNSAT",
            Status::Unknown => "UNKNOWN",
        })
    }
}

impl std::str::FromStr for Status {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SAT" => Ok(Status::Sat),
            "UNSAT" => Ok(Status::Unsat),
            "UNKNOWN" => Ok(Status::Unknown),
            _ => Err(Error::InvalidArgument(format!("unknown status `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub reductions: u64,
    pub refocuses: u64,
    pub refocus_skips: u64,
    pub learned: u64,
    pub avg_glue: f64,
    pub glr: f64,
    pub runtime_secs: f64,
    /// Per variable (index `var - 1`): occurrences in learned clauses with glue <= 2.
    pub glue_counts: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    /// Model indexed by `var - 1` when SAT.
    pub model: Option<Vec<bool>>,
    pub stats: SolveStats,
}

/// Result of first-UIP conflict analysis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Analysis {
    /// Asserting literal first; the literal at the backjump level second.
    pub learned: Vec<Literal>,
    pub backjump_level: u32,
    pub glue: u32,
}

/// Index of a clause in the solver's database.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ClauseRef(pub(crate) u32);

#[derive(Clone, Debug)]
struct StoredClause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    glue: u32,
    /// Learn order, for recency.
    serial: u64,
}

#[derive(Clone, Copy, Debug)]
struct Watch {
    cref: u32,
    blocker: Lit,
}

/// Number of distinct decision levels among `clause`'s literals.
///
/// Panics if a literal is unassigned (`level_of` returns `None`).
pub fn compute_lbd(clause: &[Literal], level_of: impl Fn(u32) -> Option<u32>) -> u32 {
    let mut levels: Vec<u32> = clause
        .iter()
        .map(|l| level_of(l.var).unwrap_or_else(|| panic!("LBD of unassigned literal {l}")))
        .collect();
    levels.sort_unstable();
    levels.dedup();
    levels.len() as u32
}

/// Solves `f` under `budget`, refocusing through `oracle` when given.
pub fn solve(
    f: &Formula,
    config: SolverConfig,
    budget: Budget,
    oracle: Option<&dyn RefocusOracle>,
) -> SolveResult {
    let mut solver = Solver::new(f, config);
    let status = solver.solve_limited(&budget, oracle);
    solver.result(status)
}

pub struct Solver {
    config: SolverConfig,
    original: Formula,
    num_vars: usize,
    clauses: Vec<StoredClause>,
    /// Non-deleted learned clauses (length >= 2) in learn order.
    learned: Vec<u32>,
    /// Learned unit clauses, fixed at level 0.
    learned_units: Vec<Lit>,
    num_original: usize,
    watches: Vec<Vec<Watch>>,

    /// 1 true, -1 false, 0 unassigned; per variable.
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    phase: Vec<bool>,
    seen: Vec<bool>,

    scores: Vec<f64>,
    bump_inc: f64,
    heap: VarHeap,

    emas: GlueEmas,
    glue_counts: Vec<u64>,
    glue_sum: u64,
    serial: u64,

    ok: bool,
    stats: SolveStats,
    conflicts_since_restart: u64,
    next_reduce: u64,
    last_refocus_conflicts: u64,
    last_decision: Option<Literal>,
    rng: Rng,
    start: Instant,
}

impl Solver {
    pub fn new(f: &Formula, config: SolverConfig) -> Solver {
        let n = f.num_vars as usize;
        let mut s = Solver {
            emas: GlueEmas::new(config.ema_fast_alpha, config.ema_slow_alpha),
            next_reduce: config.reduce_base,
            rng: rng::seeded(config.seed),
            config,
            original: f.clone(),
            num_vars: n,
            clauses: Vec::new(),
            learned: Vec::new(),
            learned_units: Vec::new(),
            num_original: 0,
            watches: vec![Vec::new(); 2 * n],
            assigns: vec![0; n],
            level: vec![0; n],
            reason: vec![NO_REASON; n],
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            phase: vec![false; n],
            seen: vec![false; n],
            scores: vec![0.0; n],
            bump_inc: 1.0,
            heap: VarHeap::new(n),
            glue_counts: vec![0; n],
            glue_sum: 0,
            serial: 0,
            ok: true,
            stats: SolveStats::default(),
            conflicts_since_restart: 0,
            last_refocus_conflicts: 0,
            last_decision: None,
            start: Instant::now(),
        };
        for v in 0..n {
            s.heap.insert(v, &s.scores);
        }
        for clause in &f.clauses {
            if !s.ok {
                break;
            }
            s.add_original(clause);
        }
        s.num_original = s.clauses.len();
        s
    }

    fn add_original(&mut self, clause: &Clause) {
        let mut lits: Vec<Lit> = clause.literals.iter().map(|&l| Lit::from_literal(l)).collect();
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|w| w[0] == !w[1]) {
            return;
        }
        // Keep the caller's literal order for traversal (graph extraction).
        let mut ordered = Vec::with_capacity(lits.len());
        for l in clause.literals.iter().map(|&l| Lit::from_literal(l)) {
            if !ordered.contains(&l) {
                ordered.push(l);
            }
        }
        match ordered.len() {
            0 => self.ok = false,
            1 => match self.lit_value(ordered[0]) {
                0 => self.enqueue(ordered[0], NO_REASON),
                -1 => self.ok = false,
                _ => {}
            },
            _ => {
                let cref = self.clauses.len() as u32;
                self.watches[ordered[0].idx()].push(Watch {
                    cref,
                    blocker: ordered[1],
                });
                self.watches[ordered[1].idx()].push(Watch {
                    cref,
                    blocker: ordered[0],
                });
                self.clauses.push(StoredClause {
                    lits: ordered,
                    learnt: false,
                    deleted: false,
                    glue: 0,
                    serial: 0,
                });
            }
        }
    }

    // ----- accessors -------------------------------------------------------

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn formula(&self) -> &Formula {
        &self.original
    }

    /// `false` once the formula is known to be unsatisfiable.
    pub fn is_ok(&self) -> bool {
        self.ok
    }

    pub fn stats(&self) -> &SolveStats {
        &self.stats
    }

    pub fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    #[inline]
    fn lit_value(&self, l: Lit) -> i8 {
        let a = self.assigns[l.var()];
        if l.sign() {
            a
        } else {
            -a
        }
    }

    /// Truth value of a literal, `None` if unassigned.
    pub fn value(&self, l: Literal) -> Option<bool> {
        match self.lit_value(Lit::from_literal(l)) {
            0 => None,
            x => Some(x > 0),
        }
    }

    pub fn is_assigned(&self, var: u32) -> bool {
        self.assigns[var as usize - 1] != 0
    }

    pub fn level_of(&self, var: u32) -> Option<u32> {
        self.is_assigned(var).then(|| self.level[var as usize - 1])
    }

    pub fn num_assigned(&self) -> usize {
        self.trail.len()
    }

    pub fn all_assigned(&self) -> bool {
        self.trail.len() == self.num_vars
    }

    /// Trail as `(literal, level, is_decision)`.
    pub fn trail(&self) -> Vec<(Literal, u32, bool)> {
        self.trail
            .iter()
            .map(|&l| {
                let v = l.var();
                (l.to_literal(), self.level[v], self.reason[v] == NO_REASON && self.level[v] > 0)
            })
            .collect()
    }

    /// Original variables (1-based) currently unassigned, ascending.
    pub fn unassigned_vars(&self) -> Vec<u32> {
        (0..self.num_vars)
            .filter(|&v| self.assigns[v] == 0)
            .map(|v| v as u32 + 1)
            .collect()
    }

    pub fn score(&self, var: u32) -> f64 {
        self.scores[var as usize - 1]
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn bump_increment(&self) -> f64 {
        self.bump_inc
    }

    pub fn set_score(&mut self, var: u32, score: f64) {
        assert!(score.is_finite() && score >= 0.0);
        self.scores[var as usize - 1] = score;
        let vars: Vec<usize> = (0..self.num_vars).filter(|&v| self.assigns[v] == 0).collect();
        self.heap.rebuild(vars, &self.scores);
    }

    pub fn ema_fast(&self) -> f64 {
        self.emas.fast.value()
    }

    pub fn ema_slow(&self) -> f64 {
        self.emas.slow.value()
    }

    pub fn glue_emas(&self) -> &GlueEmas {
        &self.emas
    }

    pub fn glue_counts(&self) -> &[u64] {
        &self.glue_counts
    }

    /// Most recent decision, even if since undone by backjumping.
    pub fn last_decision(&self) -> Option<Literal> {
        self.last_decision
    }

    pub fn refocus_count(&self) -> u64 {
        self.stats.refocuses
    }

    pub fn clause_literals(&self, cref: ClauseRef) -> Vec<Literal> {
        self.clauses[cref.0 as usize]
            .lits
            .iter()
            .map(|l| l.to_literal())
            .collect()
    }

    /// Original clauses of length >= 2 as stored (units live on the trail).
    pub(crate) fn original_clause_lits(&self) -> impl Iterator<Item = &[Lit]> {
        self.clauses[..self.num_original]
            .iter()
            .map(|c| c.lits.as_slice())
    }

    /// Retained learned clauses of length >= 2 in learn order.
    pub(crate) fn learned_clause_lits(&self) -> impl Iterator<Item = &[Lit]> {
        self.learned
            .iter()
            .map(move |&c| self.clauses[c as usize].lits.as_slice())
    }

    pub(crate) fn lit_is_true(&self, l: Lit) -> bool {
        self.lit_value(l) > 0
    }

    pub(crate) fn lit_is_false(&self, l: Lit) -> bool {
        self.lit_value(l) < 0
    }

    /// Retained learned clauses (units included) with their glue.
    pub fn learned_clauses(&self) -> Vec<Clause> {
        self.learned_units
            .iter()
            .map(|l| Clause::learned(vec![l.to_literal()], 1))
            .chain(self.learned.iter().map(|&c| {
                let c = &self.clauses[c as usize];
                Clause::learned(c.lits.iter().map(|l| l.to_literal()).collect(), c.glue)
            }))
            .collect()
    }

    /// Original formula plus every retained learned clause.
    pub fn formula_with_learned(&self) -> Formula {
        let mut f = self.original.clone();
        f.clauses.extend(self.learned_clauses());
        f
    }

    // ----- trail -----------------------------------------------------------

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var();
        debug_assert_eq!(self.assigns[v], 0);
        self.assigns[v] = if l.sign() { 1 } else { -1 };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Opens a new decision level and assigns `l`.
    pub fn decide(&mut self, l: Literal) -> Result<()> {
        let lit = Lit::from_literal(l);
        if l.var == 0 || l.var as usize > self.num_vars {
            return Err(Error::InvalidArgument(format!("no variable {}", l.var)));
        }
        if self.lit_value(lit) != 0 {
            return Err(Error::InvalidArgument(format!("variable {} already assigned", l.var)));
        }
        self.trail_lim.push(self.trail.len());
        self.enqueue(lit, NO_REASON);
        self.last_decision = Some(l);
        Ok(())
    }

    /// Undoes all assignments above `level`, saving phases.
    pub fn backtrack(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var();
            self.assigns[v] = 0;
            self.reason[v] = NO_REASON;
            self.phase[v] = l.sign();
            self.heap.insert(v, &self.scores);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = self.qhead.min(lim);
    }

    // ----- propagation -----------------------------------------------------

    /// Unit propagation to fixpoint with two watched literals. Returns the
    /// falsified clause on conflict.
    pub fn propagate(&mut self) -> Option<ClauseRef> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.idx()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.lit_value(w.blocker) > 0 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].deleted {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                if first != w.blocker && self.lit_value(first) > 0 {
                    ws[j] = Watch {
                        cref: w.cref,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let cand = self.clauses[cref].lits[k];
                    if self.lit_value(cand) >= 0 {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[cand.idx()].push(Watch {
                            cref: w.cref,
                            blocker: first,
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watch {
                    cref: w.cref,
                    blocker: first,
                };
                j += 1;
                if self.lit_value(first) < 0 {
                    conflict = Some(ClauseRef(w.cref));
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit.idx()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    // ----- conflict analysis -----------------------------------------------

    /// First-UIP analysis of `conflict`; bumps every variable seen.
    ///
    /// Must be called at decision level >= 1. Literals fixed at level 0 are
    /// left out of the learned clause.
    pub fn analyze(&mut self, conflict: ClauseRef) -> Analysis {
        assert!(self.decision_level() > 0, "conflict analysis at level 0");
        let current = self.decision_level();
        let mut learned: Vec<Lit> = vec![Lit(0)];
        let mut pending = 0usize;
        let mut confl = conflict.0;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();

        loop {
            let skip = usize::from(p.is_some());
            let n = self.clauses[confl as usize].lits.len();
            for k in skip..n {
                let q = self.clauses[confl as usize].lits[k];
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.evsids_bump_internal(v);
                    if self.level[v] >= current {
                        pending += 1;
                    } else {
                        learned.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var()] {
                    break;
                }
            }
            let lit = self.trail[idx];
            p = Some(lit);
            self.seen[lit.var()] = false;
            pending -= 1;
            if pending == 0 {
                break;
            }
            confl = self.reason[lit.var()];
            debug_assert_ne!(confl, NO_REASON);
        }
        learned[0] = !p.expect("UIP");
        for l in &learned[1..] {
            self.seen[l.var()] = false;
        }

        let mut backjump = 0;
        if learned.len() > 1 {
            let mut max_i = 1;
            for k in 2..learned.len() {
                if self.level[learned[k].var()] > self.level[learned[max_i].var()] {
                    max_i = k;
                }
            }
            learned.swap(1, max_i);
            backjump = self.level[learned[1].var()];
        }
        let learned: Vec<Literal> = learned.iter().map(|l| l.to_literal()).collect();
        let glue = compute_lbd(&learned, |v| self.level_of(v));
        Analysis {
            learned,
            backjump_level: backjump,
            glue,
        }
    }

    /// Backjumps, records the learned clause and asserts its first literal.
    pub fn learn(&mut self, analysis: &Analysis) {
        self.backtrack(analysis.backjump_level);
        let lits: Vec<Lit> = analysis.learned.iter().map(|&l| Lit::from_literal(l)).collect();
        self.record_learned_stats(&lits, analysis.glue);
        if lits.len() == 1 {
            debug_assert_eq!(self.decision_level(), 0);
            self.learned_units.push(lits[0]);
            self.enqueue(lits[0], NO_REASON);
            return;
        }
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].idx()].push(Watch {
            cref,
            blocker: lits[1],
        });
        self.watches[lits[1].idx()].push(Watch {
            cref,
            blocker: lits[0],
        });
        let first = lits[0];
        self.serial += 1;
        self.clauses.push(StoredClause {
            lits,
            learnt: true,
            deleted: false,
            glue: analysis.glue,
            serial: self.serial,
        });
        self.learned.push(cref);
        self.enqueue(first, cref);
    }

    fn record_learned_stats(&mut self, lits: &[Lit], glue: u32) {
        self.stats.learned += 1;
        self.glue_sum += glue as u64;
        self.update_glue_emas(glue);
        if glue <= 2 {
            for l in lits {
                self.glue_counts[l.var()] += 1;
            }
        }
    }

    pub fn update_glue_emas(&mut self, glue: u32) {
        self.emas.update(glue);
    }

    // ----- EVSIDS ----------------------------------------------------------

    fn evsids_bump_internal(&mut self, v: usize) {
        self.scores[v] += self.bump_inc;
        if self.scores[v] > RESCALE_LIMIT {
            for s in &mut self.scores {
                *s *= 1.0 / RESCALE_LIMIT;
            }
            self.bump_inc *= 1.0 / RESCALE_LIMIT;
        }
        self.heap.increased(v, &self.scores);
    }

    pub fn evsids_bump(&mut self, var: u32) {
        self.evsids_bump_internal(var as usize - 1);
    }

    pub fn evsids_decay(&mut self) {
        self.bump_inc /= self.config.decay;
        if self.bump_inc > RESCALE_LIMIT {
            for s in &mut self.scores {
                *s *= 1.0 / RESCALE_LIMIT;
            }
            self.bump_inc *= 1.0 / RESCALE_LIMIT;
        }
    }

    /// Highest-scoring unassigned variable (lowest index on ties) with its saved phase.
    pub fn pick_decision(&mut self) -> Option<Literal> {
        while let Some(v) = self.heap.pop(&self.scores) {
            if self.assigns[v] == 0 {
                return Some(Literal::new(v as u32 + 1, self.phase[v]));
            }
        }
        None
    }

    // ----- restarts and reduction ------------------------------------------

    pub fn should_restart(&self) -> bool {
        self.decision_level() > 0
            && self.conflicts_since_restart >= self.config.restart_interval
            && self.emas.fast_exceeds(self.config.restart_margin)
    }

    fn restart(&mut self) {
        self.backtrack(0);
        self.conflicts_since_restart = 0;
        self.stats.restarts += 1;
    }

    fn is_locked(&self, cref: u32) -> bool {
        let c = &self.clauses[cref as usize];
        let v = c.lits[0].var();
        self.reason[v] == cref && self.lit_value(c.lits[0]) > 0
    }

    /// Deletes the worse half of the non-glue learned clauses, ranked by
    /// (glue ascending, most recent first). Glue clauses (glue <= 2) and
    /// reasons on the trail are kept.
    pub fn reduce_db(&mut self) {
        let mut candidates: Vec<u32> = self
            .learned
            .iter()
            .copied()
            .filter(|&c| self.clauses[c as usize].glue > 2)
            .collect();
        candidates.sort_by_key(|&c| {
            let c = &self.clauses[c as usize];
            (c.glue, std::cmp::Reverse(c.serial))
        });
        let keep = candidates.len() - candidates.len() / 2;
        let mut removed = 0;
        for &c in &candidates[keep..] {
            if self.is_locked(c) {
                continue;
            }
            let clause = &mut self.clauses[c as usize];
            clause.deleted = true;
            clause.lits = Vec::new();
            removed += 1;
        }
        if removed > 0 {
            let clauses = &self.clauses;
            self.learned.retain(|&c| !clauses[c as usize].deleted);
            for ws in &mut self.watches {
                ws.retain(|w| !clauses[w.cref as usize].deleted);
            }
        }
        self.stats.reductions += 1;
    }

    // ----- refocusing ------------------------------------------------------

    /// Warm-up elapsed, schedule met, and fast glue EMA above the margin.
    pub fn should_refocus(&self, now: Instant) -> bool {
        let rc = &self.config.refocus;
        let warm = match rc.warmup {
            WarmUp::WallClock(d) => now.duration_since(self.start) >= d,
            WarmUp::Conflicts(c) => self.stats.conflicts >= c,
        };
        if !warm {
            return false;
        }
        let threshold = rc
            .schedule
            .threshold(self.stats.refocuses + 1)
            .expect("ordinal >= 1");
        self.stats.conflicts - self.last_refocus_conflicts >= threshold
            && self.emas.fast_exceeds(rc.glue_margin)
    }

    /// Replaces EVSIDS scores with `probs * n_graph_vars * kappa` for the graph's
    /// variables; every other score becomes 0 and the bump increment resets.
    ///
    /// `probs[i]` belongs to original variable `var_map[i]`.
    pub fn apply_refocus(&mut self, probs: &[f64], var_map: &[u32]) -> Result<()> {
        if probs.len() != var_map.len() {
            return Err(Error::Shape(format!(
                "{} probabilities for {} variables",
                probs.len(),
                var_map.len()
            )));
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "refocus distribution not normalized (sum {total})"
            )));
        }
        let scale = var_map.len() as f64 * self.config.refocus.kappa;
        self.scores.iter_mut().for_each(|s| *s = 0.0);
        for (&p, &v) in probs.iter().zip(var_map) {
            let v = v as usize - 1;
            if self.assigns[v] == 0 {
                self.scores[v] = p * scale;
            }
        }
        self.bump_inc = 1.0;
        let vars: Vec<usize> = (0..self.num_vars).filter(|&v| self.assigns[v] == 0).collect();
        self.heap.rebuild(vars, &self.scores);
        self.stats.refocuses += 1;
        self.last_refocus_conflicts = self.stats.conflicts;
        Ok(())
    }

    /// One refocus through `oracle`, regardless of the schedule. Returns
    /// whether scores were replaced; failures count as skips.
    pub fn refocus(&mut self, oracle: &dyn RefocusOracle) -> bool {
        self.last_refocus_conflicts = self.stats.conflicts;
        let Some(graph) = crate::extract::extract_graph(self, self.config.refocus.edge_cap) else {
            self.stats.refocus_skips += 1;
            return false;
        };
        if graph.num_vars == 0 {
            self.stats.refocus_skips += 1;
            return false;
        }
        let logits = oracle.logits(&graph, &mut self.rng);
        let probs = match crate::net::policy_distribution(&logits, self.config.refocus.temperature) {
            Ok(p) if logits.len() == graph.num_vars => p,
            _ => {
                log::warn!("refocus oracle returned unusable logits; skipping");
                self.stats.refocus_skips += 1;
                return false;
            }
        };
        match self.apply_refocus(&probs, &graph.var_map) {
            Ok(()) => true,
            Err(e) => {
                log::warn!("refocus skipped: {e}");
                self.stats.refocus_skips += 1;
                false
            }
        }
    }

    // ----- search ----------------------------------------------------------

    /// Runs CDCL until decided or a budget total is reached. Can be called
    /// again with a larger budget to resume.
    pub fn solve_limited(&mut self, budget: &Budget, oracle: Option<&dyn RefocusOracle>) -> Status {
        let status = self.search(budget, oracle);
        self.stats.runtime_secs = self.start.elapsed().as_secs_f64();
        status
    }

    fn budget_exhausted(&self, budget: &Budget) -> bool {
        if let Some(c) = budget.conflicts {
            if self.stats.conflicts >= c {
                return true;
            }
        }
        if let Some(d) = budget.decisions {
            if self.stats.decisions >= d {
                return true;
            }
        }
        if let Some(t) = budget.time {
            if self.start.elapsed() >= t {
                return true;
            }
        }
        false
    }

    fn search(&mut self, budget: &Budget, oracle: Option<&dyn RefocusOracle>) -> Status {
        if !self.ok {
            return Status::Unsat;
        }
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                self.conflicts_since_restart += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Status::Unsat;
                }
                let analysis = self.analyze(confl);
                self.learn(&analysis);
                self.evsids_decay();
                if self.should_restart() {
                    self.restart();
                }
                if self.stats.conflicts >= self.next_reduce {
                    self.reduce_db();
                    self.next_reduce = self.stats.conflicts
                        + self.config.reduce_base
                        + self.config.reduce_inc * self.stats.reductions;
                }
                if budget.conflicts.is_some_and(|c| self.stats.conflicts >= c) {
                    return Status::Unknown;
                }
            } else {
                if self.all_assigned() {
                    debug_assert!(self.verify_model());
                    return Status::Sat;
                }
                if self.budget_exhausted(budget) {
                    return Status::Unknown;
                }
                if let Some(oracle) = oracle {
                    if self.should_refocus(Instant::now()) {
                        self.refocus(oracle);
                    }
                }
                let Some(lit) = self.pick_decision() else {
                    unreachable!("unassigned variable must exist");
                };
                self.stats.decisions += 1;
                self.decide(lit).expect("picked an unassigned variable");
            }
        }
    }

    pub fn model(&self) -> Option<Vec<bool>> {
        self.all_assigned()
            .then(|| self.assigns.iter().map(|&a| a > 0).collect())
    }

    fn verify_model(&self) -> bool {
        self.model()
            .is_some_and(|m| self.original.is_satisfied_by(&m))
    }

    /// Packages the outcome of the last [`Solver::solve_limited`] call.
    pub fn result(&self, status: Status) -> SolveResult {
        let model = if status == Status::Sat {
            let m = self.model().expect("complete assignment");
            assert!(
                self.original.is_satisfied_by(&m),
                "solver produced an invalid model"
            );
            Some(m)
        } else {
            None
        };
        let mut stats = self.stats.clone();
        stats.glue_counts = self.glue_counts.clone();
        stats.avg_glue = if stats.learned > 0 {
            self.glue_sum as f64 / stats.learned as f64
        } else {
            0.0
        };
        stats.glr = if stats.decisions > 0 {
            stats.conflicts as f64 / stats.decisions as f64
        } else {
            0.0
        };
        SolveResult {
            status,
            model,
            stats,
        }
    }

    /// Checks the two-watched-literal invariant: every live clause is watched
    /// by its first two literals, and every clause not satisfied has two
    /// non-false watches unless it is unit or conflicting.
    pub fn check_watch_invariant(&self) -> std::result::Result<(), String> {
        for (cref, c) in self.clauses.iter().enumerate() {
            if c.deleted {
                continue;
            }
            for k in 0..2 {
                let l = c.lits[k];
                if !self.watches[l.idx()].iter().any(|w| w.cref as usize == cref) {
                    return Err(format!("clause {cref} not watched by literal {k}"));
                }
            }
            let satisfied = c.lits.iter().any(|&l| self.lit_value(l) > 0);
            if satisfied {
                continue;
            }
            let non_false = c.lits.iter().filter(|&&l| self.lit_value(l) >= 0).count();
            let watched_non_false = c.lits[..2].iter().filter(|&&l| self.lit_value(l) >= 0).count();
            if non_false >= 2 && watched_non_false < 2 {
                return Err(format!("clause {cref} watches a false literal while two are free"));
            }
        }
        Ok(())
    }

    #[doc(hidden)]
    pub fn learned_len(&self) -> usize {
        self.learned.len()
    }

    #[doc(hidden)]
    pub fn is_learnt(&self, cref: ClauseRef) -> bool {
        self.clauses[cref.0 as usize].learnt
    }

    /// Adds a learned clause with the given glue without touching the trail.
    /// Testing aid for database management; the clause must not be unit or
    /// falsified under the current assignment.
    #[doc(hidden)]
    pub fn push_learned_for_test(&mut self, lits: &[Literal], glue: u32) {
        assert!(lits.len() >= 2);
        let lits: Vec<Lit> = lits.iter().map(|&l| Lit::from_literal(l)).collect();
        self.record_learned_stats(&lits, glue);
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].idx()].push(Watch {
            cref,
            blocker: lits[1],
        });
        self.watches[lits[1].idx()].push(Watch {
            cref,
            blocker: lits[0],
        });
        self.serial += 1;
        self.clauses.push(StoredClause {
            lits,
            learnt: true,
            deleted: false,
            glue,
            serial: self.serial,
        });
        self.learned.push(cref);
    }

    #[doc(hidden)]
    pub fn learned_glues(&self) -> Vec<u32> {
        self.learned
            .iter()
            .map(|&c| self.clauses[c as usize].glue)
            .collect()
    }
}
