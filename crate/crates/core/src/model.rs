//! Parameter/value universe, test cases, suites and coverage requirements.
//!
//! Value tokens are opaque strings. Everything downstream of loading works on
//! value *indices* into a parameter's ordered domain; tokens only reappear
//! when something is written out.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::doc::{self, Format};

pub const DEFAULT_MAX_DOMAIN: usize = 5;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("model has no parameters")]
    NoParameters,
    #[error("parameter #{0} has an empty name")]
    EmptyName(usize),
    #[error("duplicate parameter name `{0}`")]
    DuplicateName(String),
    #[error("parameter `{0}`: empty domain")]
    EmptyDomain(String),
    #[error("parameter `{0}`: domain too small (a parameter needs at least 2 values)")]
    DomainTooSmall(String),
    #[error("parameter `{param}`: domain too large ({size} values, limit {max})")]
    DomainTooLarge { param: String, size: usize, max: usize },
    #[error("parameter `{param}`: duplicate value `{value}`")]
    DuplicateValue { param: String, value: String },
    #[error("maximum domain size must be at least 2, got {0}")]
    BadDomainCap(usize),
    #[error("malformed model document: {0}")]
    Malformed(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("parameter `{param}`: unknown value `{value}`")]
    UnknownValue { param: String, value: String },
    #[error("assignment has {got} values, model has {expected} parameters")]
    Arity { expected: usize, got: usize },
    #[error("assignment is missing parameter `{0}`")]
    MissingParameter(String),
    #[error("requirement references parameter index {0}, model has {1} parameters")]
    IndexOutOfRange(usize, usize),
    #[error("requirement has an empty relation")]
    EmptyRelation,
    #[error("requirement strength {strength} is invalid for a relation of {size} parameters")]
    BadStrength { strength: usize, size: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub values: Vec<String>,
}

impl Parameter {
    pub fn new(name: impl Into<String>, values: &[&str]) -> Self {
        Parameter {
            name: name.into(),
            values: values.iter().map(|v| v.to_string()).collect(),
        }
    }

    pub fn domain_size(&self) -> usize {
        self.values.len()
    }

    pub fn value_index(&self, token: &str) -> Option<usize> {
        self.values.iter().position(|v| v == token)
    }
}

/// On-disk shape of a model document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_domain_size: Option<usize>,
    pub parameters: Vec<Parameter>,
}

/// Ordered parameters with validated, ordered value domains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterModel {
    parameters: Vec<Parameter>,
    max_domain_size: usize,
}

impl ParameterModel {
    pub fn new(parameters: Vec<Parameter>) -> Result<Self, ModelError> {
        Self::with_domain_cap(parameters, DEFAULT_MAX_DOMAIN)
    }

    pub fn with_domain_cap(parameters: Vec<Parameter>, max: usize) -> Result<Self, ModelError> {
        if max < 2 {
            return Err(ModelError::BadDomainCap(max));
        }
        if parameters.is_empty() {
            return Err(ModelError::NoParameters);
        }
        let mut names = HashSet::new();
        for (i, p) in parameters.iter().enumerate() {
            if p.name.trim().is_empty() {
                return Err(ModelError::EmptyName(i));
            }
            if !names.insert(p.name.as_str()) {
                return Err(ModelError::DuplicateName(p.name.clone()));
            }
            match p.values.len() {
                0 => return Err(ModelError::EmptyDomain(p.name.clone())),
                1 => return Err(ModelError::DomainTooSmall(p.name.clone())),
                n if n > max => {
                    return Err(ModelError::DomainTooLarge {
                        param: p.name.clone(),
                        size: n,
                        max,
                    })
                }
                _ => {}
            }
            let mut seen = HashSet::new();
            for v in &p.values {
                if !seen.insert(v.as_str()) {
                    return Err(ModelError::DuplicateValue {
                        param: p.name.clone(),
                        value: v.clone(),
                    });
                }
            }
        }
        Ok(ParameterModel {
            parameters,
            max_domain_size: max,
        })
    }

    pub fn from_document(doc: ModelDocument) -> Result<Self, ModelError> {
        Self::with_domain_cap(doc.parameters, doc.max_domain_size.unwrap_or(DEFAULT_MAX_DOMAIN))
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            max_domain_size: (self.max_domain_size != DEFAULT_MAX_DOMAIN).then_some(self.max_domain_size),
            parameters: self.parameters.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        doc::to_json(&self.to_document())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_document()).expect("model document serializes")
    }

    pub fn parameters(&self) -> &[Parameter] {
        &self.parameters
    }

    pub fn parameter(&self, index: usize) -> &Parameter {
        &self.parameters[index]
    }

    /// Number of parameters (k).
    pub fn len(&self) -> usize {
        self.parameters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parameters.is_empty()
    }

    pub fn max_domain_size(&self) -> usize {
        self.max_domain_size
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        self.parameters.iter().map(Parameter::domain_size).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.parameters.iter().position(|p| p.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.parameters.iter().map(|p| p.name.as_str()).collect()
    }

    /// Size of the full cross-product of all domains.
    pub fn exhaustive_size(&self) -> u128 {
        self.parameters.iter().map(|p| p.domain_size() as u128).product()
    }

    /// Every full assignment, in lexicographic order of value indices.
    pub fn exhaustive_cases(&self) -> Vec<TestCase> {
        let sizes = self.domain_sizes();
        let mut out = Vec::new();
        let mut cur = vec![0usize; sizes.len()];
        loop {
            out.push(TestCase(cur.clone()));
            let mut i = sizes.len();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                cur[i] += 1;
                if cur[i] < sizes[i] {
                    break;
                }
                cur[i] = 0;
            }
        }
    }

    pub fn case_from_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Result<TestCase, ModelError> {
        if tokens.len() != self.len() {
            return Err(ModelError::Arity {
                expected: self.len(),
                got: tokens.len(),
            });
        }
        tokens
            .iter()
            .zip(&self.parameters)
            .map(|(t, p)| {
                p.value_index(t.as_ref()).ok_or_else(|| ModelError::UnknownValue {
                    param: p.name.clone(),
                    value: t.as_ref().to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(TestCase)
    }

    /// Builds a case from a name → token map, as used on the adapter wire.
    pub fn case_from_map(&self, map: &serde_json::Map<String, serde_json::Value>) -> Result<TestCase, ModelError> {
        for key in map.keys() {
            if self.index_of(key).is_none() {
                return Err(ModelError::UnknownParameter(key.clone()));
            }
        }
        let mut values = Vec::with_capacity(self.len());
        for p in &self.parameters {
            let token = match map.get(&p.name) {
                Some(serde_json::Value::String(s)) => s.clone(),
                Some(other) => other.to_string(),
                None => return Err(ModelError::MissingParameter(p.name.clone())),
            };
            let idx = p.value_index(&token).ok_or_else(|| ModelError::UnknownValue {
                param: p.name.clone(),
                value: token.clone(),
            })?;
            values.push(idx);
        }
        Ok(TestCase(values))
    }

    pub fn requirement(
        &self,
        relation: impl IntoIterator<Item = usize>,
        strength: usize,
    ) -> Result<CoverageRequirement, ModelError> {
        let req = CoverageRequirement::new(relation, strength)?;
        if let Some(&bad) = req.relation.iter().find(|&&i| i >= self.len()) {
            return Err(ModelError::IndexOutOfRange(bad, self.len()));
        }
        Ok(req)
    }

    /// One requirement of strength `t` over every parameter.
    pub fn uniform(&self, t: usize) -> Result<CoverageRequirement, ModelError> {
        self.requirement(0..self.len(), t)
    }
}

pub fn load_model(text: &str, format: Format) -> Result<ParameterModel, ModelError> {
    let doc: ModelDocument = doc::parse(text, format).map_err(|e| ModelError::Malformed(e.to_string()))?;
    ParameterModel::from_document(doc)
}

/// A total assignment stored as one value index per parameter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TestCase(pub Vec<usize>);

impl TestCase {
    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn value(&self, param: usize) -> usize {
        self.0[param]
    }

    pub fn tokens<'m>(&self, model: &'m ParameterModel) -> Vec<&'m str> {
        self.0
            .iter()
            .zip(model.parameters())
            .map(|(&v, p)| p.values[v].as_str())
            .collect()
    }

    /// `{name: token}` in parameter order.
    pub fn to_map(&self, model: &ParameterModel) -> serde_json::Map<String, serde_json::Value> {
        model
            .parameters()
            .iter()
            .zip(&self.0)
            .map(|(p, &v)| (p.name.clone(), serde_json::Value::String(p.values[v].clone())))
            .collect()
    }

    pub fn describe(&self, model: &ParameterModel) -> String {
        model
            .parameters()
            .iter()
            .zip(&self.0)
            .map(|(p, &v)| format!("{}={}", p.name, p.values[v]))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn is_valid_for(&self, model: &ParameterModel) -> bool {
        self.0.len() == model.len() && self.0.iter().zip(model.parameters()).all(|(&v, p)| v < p.domain_size())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSuite {
    pub label: String,
    pub cases: Vec<TestCase>,
}

impl TestSuite {
    pub fn new(label: impl Into<String>) -> Self {
        TestSuite {
            label: label.into(),
            cases: Vec::new(),
        }
    }

    pub fn with_cases(label: impl Into<String>, cases: Vec<TestCase>) -> Self {
        TestSuite {
            label: label.into(),
            cases,
        }
    }

    /// Row count (N).
    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    /// Drops repeated cases, keeping the first occurrence of each.
    pub fn finalize(mut self) -> Self {
        let mut seen = HashSet::new();
        self.cases.retain(|c| seen.insert(c.clone()));
        self
    }
}

/// Parameters in `relation` must have all their `strength`-way value
/// combinations covered.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CoverageRequirement {
    relation: Vec<usize>,
    strength: usize,
}

impl CoverageRequirement {
    pub fn new(relation: impl IntoIterator<Item = usize>, strength: usize) -> Result<Self, ModelError> {
        let relation: Vec<usize> = relation.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if relation.is_empty() {
            return Err(ModelError::EmptyRelation);
        }
        if strength == 0 || strength > relation.len() {
            return Err(ModelError::BadStrength {
                strength,
                size: relation.len(),
            });
        }
        Ok(CoverageRequirement { relation, strength })
    }

    pub fn relation(&self) -> &[usize] {
        &self.relation
    }

    pub fn strength(&self) -> usize {
        self.strength
    }
}

impl fmt::Display for CoverageRequirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={} over {:?}", self.strength, self.relation)
    }
}
