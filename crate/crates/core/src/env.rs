//! Episodic branching environment.
//!
//! An episode follows one path through the DPLL search tree of a formula φ.
//! The agent picks an unassigned variable; the environment assigns it a uniform
//! random polarity and unit-propagates. Non-terminal steps cost `1/n`, a fully
//! assigned formula ends the episode with reward 0, and a conflict ends it with
//! `1/g²` where `g` is the glue of the clause conflict analysis would learn.
//! Nothing learned survives a reset.

use rand::Rng as _;

use crate::cnf::{Formula, Literal, SparseGraph};
use crate::extract::extract_graph;
use crate::rng::{self, Rng};
use crate::solver::{Solver, SolverConfig};
use crate::{Error, Result};

pub const DEFAULT_EDGE_CAP: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Terminal {
    Satisfied,
    Conflict { glue: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    /// Residual graph; `None` once the episode is over.
    pub observation: Option<SparseGraph>,
    pub reward: f64,
    pub done: bool,
    /// The branched literal (original numbering).
    pub decision: Literal,
    pub terminal: Option<Terminal>,
}

/// Reward for a conflict whose learned clause has glue `g`.
pub fn conflict_reward(glue: u32) -> f64 {
    let g = glue.max(1) as f64;
    1.0 / (g * g)
}

/// Sum of an episode's rewards.
pub fn episode_return(rewards: &[f64]) -> f64 {
    rewards.iter().sum()
}

pub struct Env {
    edge_cap: usize,
    solver: Option<Solver>,
    observation: Option<SparseGraph>,
    rng: Rng,
    num_vars: u32,
    steps: usize,
    terminal: Option<Terminal>,
}

impl Default for Env {
    fn default() -> Self {
        Env::new()
    }
}

impl Env {
    pub fn new() -> Self {
        Env::with_edge_cap(DEFAULT_EDGE_CAP)
    }

    pub fn with_edge_cap(edge_cap: usize) -> Self {
        Env {
            edge_cap,
            solver: None,
            observation: None,
            rng: rng::seeded(0),
            num_vars: 0,
            steps: 0,
            terminal: None,
        }
    }

    /// Starts an episode on `f`; rejects formulas decided by root propagation.
    pub fn reset(&mut self, f: &Formula, seed: u64) -> Result<SparseGraph> {
        self.solver = None;
        self.observation = None;
        if f.num_vars == 0 {
            return Err(Error::Env("formula has no variables".into()));
        }
        let mut s = Solver::new(f, SolverConfig::default());
        if !s.is_ok() || s.propagate().is_some() {
            return Err(Error::Env("formula is UNSAT by root propagation".into()));
        }
        if s.all_assigned() {
            return Err(Error::Env("formula is decided by root propagation".into()));
        }
        let obs = self.extract(&s)?;
        self.rng = rng::seeded(seed);
        self.num_vars = f.num_vars;
        self.steps = 0;
        self.terminal = None;
        self.solver = Some(s);
        self.observation = Some(obs.clone());
        Ok(obs)
    }

    fn extract(&self, s: &Solver) -> Result<SparseGraph> {
        extract_graph(s, self.edge_cap)
            .ok_or_else(|| Error::Env(format!("residual graph exceeds {} edges", self.edge_cap)))
    }

    pub fn observation(&self) -> Option<&SparseGraph> {
        self.observation.as_ref()
    }

    /// Unassigned variables (original numbering), in compacted order.
    pub fn valid_actions(&self) -> &[u32] {
        self.observation.as_ref().map_or(&[], |o| &o.var_map)
    }

    pub fn is_done(&self) -> bool {
        self.terminal.is_some()
    }

    pub fn terminal(&self) -> Option<Terminal> {
        self.terminal
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    /// Full assignment after a satisfied terminal.
    pub fn model(&self) -> Option<Vec<bool>> {
        match self.terminal {
            Some(Terminal::Satisfied) => self.solver.as_ref().and_then(|s| s.model()),
            _ => None,
        }
    }

    /// Branches on the compacted variable `action` with a random polarity.
    pub fn step(&mut self, action: usize) -> Result<Transition> {
        let sign = self.rng.random_bool(0.5);
        self.step_with_polarity(action, sign)
    }

    /// As [`Env::step`] with the polarity given (scripted episodes and tests).
    pub fn step_with_polarity(&mut self, action: usize, sign: bool) -> Result<Transition> {
        if self.terminal.is_some() {
            return Err(Error::Env("step after the episode ended".into()));
        }
        let var = *self
            .observation
            .as_ref()
            .ok_or_else(|| Error::Env("step before reset".into()))?
            .var_map
            .get(action)
            .ok_or_else(|| Error::Env(format!("action {action} is not a valid variable")))?;
        let mut solver = self.solver.take().expect("solver present after reset");
        let decision = Literal::new(var, sign);
        solver.decide(decision)?;
        self.steps += 1;
        let result = if let Some(confl) = solver.propagate() {
            let glue = solver.analyze(confl).glue;
            let t = Terminal::Conflict { glue };
            self.terminal = Some(t);
            self.observation = None;
            Transition {
                observation: None,
                reward: conflict_reward(glue),
                done: true,
                decision,
                terminal: Some(t),
            }
        } else if solver.all_assigned() {
            self.terminal = Some(Terminal::Satisfied);
            self.observation = None;
            Transition {
                observation: None,
                reward: 0.0,
                done: true,
                decision,
                terminal: Some(Terminal::Satisfied),
            }
        } else {
            let obs = self.extract(&solver)?;
            self.observation = Some(obs.clone());
            Transition {
                observation: Some(obs),
                reward: -1.0 / self.num_vars as f64,
                done: false,
                decision,
                terminal: None,
            }
        };
        self.solver = Some(solver);
        Ok(result)
    }
}
