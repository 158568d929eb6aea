//! Certificate-aware PDR/IC3 model checking for ASCII AIGER circuits.
//!
//! [`frontend`] parses and encodes circuits, [`sat`] is the incremental
//! solver, [`engine`] runs the PDR loop, [`policy`] ranks choices,
//! [`certs`] is the independent checker and [`replay`]/[`metrics`] cover
//! reproducibility and cost reporting.

pub mod certs;
pub mod engine;
pub mod frontend;
pub mod logic;
pub mod metrics;
pub mod policy;
pub mod replay;
pub mod sat;

pub use certs::{Accepted, Certificate, CheckVerdict, Checker, FailingCondition, Trace};
pub use engine::{solve, CandidateMode, EngineConfig, FailReason, Outcome, Pdr, RunResult};
pub use frontend::{load, AigerCircuit, TransitionSystem};
pub use logic::{Clause, Cube, Lit, Var};
pub use metrics::{CostVector, ObjectiveWeights};
pub use policy::{PolicyModel, Ranker, RankingEvent};
pub use replay::{replay, DivergenceReport, ReplayError, ReplayLog};
pub use sat::{SatBackend, SolveResult, Solver};
