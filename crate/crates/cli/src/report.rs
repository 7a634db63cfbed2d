//! The document every command emits, whatever the output format.

use fracrl_core::rules::{CounterexampleRow, LocalityRow};
use fracrl_core::{FracDerivResult, LocalityReport, RuleReport};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ConfigEcho,
    pub results: Vec<Record>,
    pub status: Status,
}

/// Inputs and tunables the results depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub alpha: Option<f64>,
    pub at: Option<f64>,
    pub method: Option<String>,
    pub tol: f64,
    pub merge_tol: f64,
    pub nodes: usize,
    pub domain_end: f64,
    pub oracle_step: f64,
    pub richardson_levels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operand {
    pub name: String,
    pub function: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Record {
    Derivative {
        function: String,
        result: FracDerivResult,
    },
    Rule {
        operands: Vec<Operand>,
        report: RuleReport,
    },
    Locality {
        u1: String,
        report: LocalityReport,
    },
    Counterexample(CounterexampleRow),
    LocalityCheck(LocalityRow),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Ok,
    /// The one-sided limits disagree, so there is no value.
    TwoSidedMismatch,
    Holds,
    Violated,
    /// Every computed cell matches its expected value.
    Reproduced,
    Deviation,
    Local,
    NotLocal,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok
            | Status::TwoSidedMismatch
            | Status::Holds
            | Status::Reproduced
            | Status::Local => 0,
            Status::Violated | Status::Deviation | Status::NotLocal => 1,
        }
    }
}
