use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::doc::{self, Format};
use crate::impact::{AdapterError, CoverageAdapter, RunOutcome};
use crate::model::{ModelDocument, ParameterModel, TestCase};

use super::expr::{parse_guard, Expr, GuardContext};
use super::EvalError;

/// A block of code units that executes when its guard holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub lines: BTreeSet<usize>,
    pub guard: Expr,
}

/// Declarative stand-in for a program: coverage of an assignment is the
/// union of the lines of every block whose guard holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulatedSut {
    pub total_units: usize,
    pub blocks: Vec<Block>,
    domain_sizes: Vec<usize>,
}

impl SimulatedSut {
    pub fn coverage(&self, case: &TestCase) -> BTreeSet<usize> {
        self.blocks
            .iter()
            .filter(|b| b.guard.eval(case, None))
            .flat_map(|b| b.lines.iter().copied())
            .collect()
    }

    pub fn accepts(&self, case: &TestCase) -> bool {
        case.values().len() == self.domain_sizes.len()
            && case.values().iter().zip(&self.domain_sizes).all(|(&v, &n)| v < n)
    }
}

impl CoverageAdapter for SimulatedSut {
    fn run(&self, model: &ParameterModel, case: &TestCase) -> Result<RunOutcome, AdapterError> {
        if !self.accepts(case) {
            return Err(AdapterError::Protocol {
                assignment: format!("{:?}", case.values()),
                message: "assignment does not fit the fixture model".into(),
            });
        }
        let _ = model;
        Ok(RunOutcome::Covered {
            total_units: self.total_units,
            covered: self.coverage(case),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mutant {
    pub id: String,
    /// Operator label such as `ROR` or `AMC`; informational only.
    pub kind: String,
    pub kill: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultModel {
    pub mutants: Vec<Mutant>,
}

impl FaultModel {
    pub fn len(&self) -> usize {
        self.mutants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mutants.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.mutants.iter().map(|m| m.id.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockEntry {
    pub lines: Vec<usize>,
    pub guard: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutantEntry {
    pub id: String,
    pub kind: String,
    pub kill: String,
}

/// One document holding the model, the simulated program and its mutants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureDocument {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_domain_size: Option<usize>,
    pub total_units: usize,
    pub parameters: Vec<crate::model::Parameter>,
    #[serde(default)]
    pub blocks: Vec<BlockEntry>,
    #[serde(default)]
    pub mutants: Vec<MutantEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub name: String,
    pub model: ParameterModel,
    pub sut: SimulatedSut,
    pub faults: FaultModel,
}

impl Fixture {
    pub fn from_document(doc: FixtureDocument) -> Result<Self, EvalError> {
        let model = ParameterModel::from_document(ModelDocument {
            max_domain_size: doc.max_domain_size,
            parameters: doc.parameters,
        })?;
        if doc.total_units == 0 {
            return Err(EvalError::Fixture("total_units must be positive".into()));
        }
        let block_ctx = GuardContext {
            model: &model,
            coverage_units: None,
        };
        let mut blocks = Vec::with_capacity(doc.blocks.len());
        for (i, b) in doc.blocks.iter().enumerate() {
            if let Some(bad) = b.lines.iter().find(|&&u| u >= doc.total_units) {
                return Err(EvalError::Fixture(format!(
                    "block {} covers unit {bad}, outside [0, {})",
                    i + 1,
                    doc.total_units
                )));
            }
            blocks.push(Block {
                lines: b.lines.iter().copied().collect(),
                guard: parse_guard(&b.guard, block_ctx)?,
            });
        }
        let kill_ctx = GuardContext {
            model: &model,
            coverage_units: Some(doc.total_units),
        };
        let mut ids = HashSet::new();
        let mut mutants = Vec::with_capacity(doc.mutants.len());
        for m in &doc.mutants {
            if !ids.insert(m.id.as_str()) {
                return Err(EvalError::Fixture(format!("duplicate mutant id `{}`", m.id)));
            }
            mutants.push(Mutant {
                id: m.id.clone(),
                kind: m.kind.clone(),
                kill: parse_guard(&m.kill, kill_ctx)?,
            });
        }
        let sut = SimulatedSut {
            total_units: doc.total_units,
            blocks,
            domain_sizes: model.domain_sizes(),
        };
        Ok(Fixture {
            name: doc.name,
            model,
            sut,
            faults: FaultModel { mutants },
        })
    }

    pub fn parse(text: &str, format: Format) -> Result<Self, EvalError> {
        let d: FixtureDocument = doc::parse(text, format).map_err(|e| EvalError::Fixture(e.to_string()))?;
        Self::from_document(d)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, EvalError> {
        let d: FixtureDocument = doc::read(path).map_err(|e| EvalError::Fixture(e.to_string()))?;
        Self::from_document(d)
    }
}
