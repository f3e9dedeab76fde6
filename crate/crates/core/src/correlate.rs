//! Pairwise correlation matrix, partner selection and mixed-strength plans.
//!
//! `Corr(X, Y) = I_XY / (I_X · I_Y)`. With fractional impacts the raw ratio
//! is unbounded, so computed matrices are divided by their largest
//! off-diagonal ratio; the raw grid and the divisor are kept for audit.
//! Matrices imported from CSV are taken as already normalized.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::impact::ImpactTable;
use crate::model::{CoverageRequirement, ModelError, ParameterModel};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CorrelateError {
    #[error("missing impact for {0}")]
    MissingImpact(String),
    #[error("malformed correlation matrix: {0}")]
    Malformed(String),
    #[error("matrix is not symmetric at ({0}, {1}): {2} vs {3}")]
    Asymmetric(String, String, f64, f64),
    #[error("thresholds must satisfy 0 <= low < high <= 1 (low = {low}, high = {high})")]
    Thresholds { low: f64, high: f64 },
    #[error("strengths must satisfy base >= 2 and high > base (base = {base}, high = {high})")]
    Strengths { base: usize, high: usize },
    #[error("matrix parameters {matrix:?} do not match model parameters {model:?}")]
    NameMismatch { matrix: Vec<String>, model: Vec<String> },
    #[error("malformed plan: {0}")]
    BadPlan(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixSource {
    Computed,
    Imported,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    names: Vec<String>,
    /// Normalized values; diagonal entries are unused and kept at 0.
    values: Vec<Vec<f64>>,
    raw: Vec<Vec<f64>>,
    /// Divisor applied to `raw`; `None` when nothing was positive or the
    /// matrix was imported.
    scale: Option<f64>,
    source: MatrixSource,
}

impl CorrelationMatrix {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Normalized entry; `None` on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        (i != j).then(|| self.values[i][j])
    }

    pub fn raw(&self, i: usize, j: usize) -> Option<f64> {
        (i != j).then(|| self.raw[i][j])
    }

    pub fn scale(&self) -> Option<f64> {
        self.scale
    }

    pub fn source(&self) -> MatrixSource {
        self.source
    }

    /// Builds a matrix from already-normalized values, e.g. a published
    /// table. Diagonal values are ignored.
    pub fn from_values(names: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self, CorrelateError> {
        let k = names.len();
        if values.len() != k || values.iter().any(|r| r.len() != k) {
            return Err(CorrelateError::Malformed(format!("expected a {k}×{k} grid")));
        }
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let v = values[i][j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(CorrelateError::Malformed(format!(
                        "entry ({}, {}) = {v} outside [0, 1]",
                        names[i], names[j]
                    )));
                }
                if v != values[j][i] {
                    return Err(CorrelateError::Asymmetric(
                        names[i].clone(),
                        names[j].clone(),
                        v,
                        values[j][i],
                    ));
                }
            }
        }
        let mut values = values;
        for (i, row) in values.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        Ok(CorrelationMatrix {
            names,
            raw: values.clone(),
            values,
            scale: None,
            source: MatrixSource::Imported,
        })
    }

    /// CSV with a `Correlation` corner cell and `-` on the diagonal.
    pub fn to_csv(&self) -> String {
        self.grid_csv(&self.values)
    }

    pub fn raw_to_csv(&self) -> String {
        self.grid_csv(&self.raw)
    }

    fn grid_csv(&self, grid: &[Vec<f64>]) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec!["Correlation".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (i, row) in grid.iter().enumerate() {
            let mut rec = vec![self.names[i].clone()];
            rec.extend(
                row.iter()
                    .enumerate()
                    .map(|(j, v)| if i == j { "-".to_string() } else { v.to_string() }),
            );
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn from_csv(text: &str) -> Result<Self, CorrelateError> {
        let bad = |m: String| CorrelateError::Malformed(m);
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut values = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() != names.len() + 1 {
                return Err(bad(format!("row {} has {} cells", i + 1, rec.len())));
            }
            if names.get(i).map(String::as_str) != rec.get(0) {
                return Err(bad(format!(
                    "row {} is labelled `{}`, expected `{}`",
                    i + 1,
                    rec.get(0).unwrap_or(""),
                    names.get(i).map(String::as_str).unwrap_or("<none>")
                )));
            }
            let row = rec
                .iter()
                .skip(1)
                .enumerate()
                .map(|(j, cell)| {
                    if i == j {
                        match cell {
                            "-" | "" => Ok(0.0),
                            other => Err(bad(format!("diagonal cell `{other}` should be `-`"))),
                        }
                    } else {
                        cell.parse::<f64>()
                            .map_err(|_| bad(format!("cell ({}, {}) = `{cell}` is not a number", i + 1, j + 1)))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            values.push(row);
        }
        Self::from_values(names, values)
    }

    /// Checks that the matrix is laid out over the model's parameters.
    pub fn check_model(&self, model: &ParameterModel) -> Result<(), CorrelateError> {
        let model_names: Vec<String> = model.names().into_iter().map(String::from).collect();
        if self.names != model_names {
            return Err(CorrelateError::NameMismatch {
                matrix: self.names.clone(),
                model: model_names,
            });
        }
        Ok(())
    }
}

#[allow(clippy::needless_range_loop)]
pub fn correlation_matrix(model: &ParameterModel, impacts: &ImpactTable) -> Result<CorrelationMatrix, CorrelateError> {
    let k = model.len();
    if impacts.singles.len() != k {
        return Err(CorrelateError::MissingImpact(format!(
            "{} of {k} parameters",
            k.saturating_sub(impacts.singles.len())
        )));
    }
    let mut raw = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let pair = impacts.pair(i, j).ok_or_else(|| {
                CorrelateError::MissingImpact(format!(
                    "pair ({}, {})",
                    model.parameter(i).name,
                    model.parameter(j).name
                ))
            })?;
            let (a, b) = (impacts.single(i), impacts.single(j));
            let ratio = if a > 0.0 && b > 0.0 { pair / (a * b) } else { 0.0 };
            raw[i][j] = ratio;
            raw[j][i] = ratio;
        }
    }
    let max = raw
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, v)| *v))
        .fold(0.0_f64, f64::max);
    let (values, scale) = if max > 0.0 {
        let values = raw.iter().map(|row| row.iter().map(|v| v / max).collect()).collect();
        (values, Some(max))
    } else {
        (vec![vec![0.0; k]; k], None)
    };
    Ok(CorrelationMatrix {
        names: model.names().into_iter().map(String::from).collect(),
        values,
        raw,
        scale,
        source: MatrixSource::Computed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Partner {
    pub index: usize,
    /// The whole row was zero, so `index` is just the lowest other index.
    pub degenerate: bool,
}

/// Highest-correlated other parameter; ties go to the lower index.
pub fn partner(matrix: &CorrelationMatrix, p: usize) -> Partner {
    assert!(matrix.len() >= 2, "partner needs at least two parameters");
    let mut best: Option<(usize, f64)> = None;
    for j in (0..matrix.len()).filter(|&j| j != p) {
        let v = matrix.values[p][j];
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((j, v));
        }
    }
    let (index, value) = best.expect("k >= 2");
    Partner {
        index,
        degenerate: value == 0.0,
    }
}

/// Same as [`partner`] but over the raw ratios.
pub fn raw_partner(matrix: &CorrelationMatrix, p: usize) -> Partner {
    let swapped = CorrelationMatrix {
        values: matrix.raw.clone(),
        ..matrix.clone()
    };
    partner(&swapped, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanSettings {
    pub theta_high: f64,
    pub theta_low: f64,
    pub t_base: usize,
    pub t_high: usize,
    /// Groups are covered at their own size instead of `t_high`.
    pub full_strength: bool,
}

impl Default for PlanSettings {
    fn default() -> Self {
        PlanSettings {
            theta_high: 0.9,
            theta_low: 0.1,
            t_base: 2,
            t_high: 3,
            full_strength: false,
        }
    }
}

impl PlanSettings {
    pub fn validate(&self) -> Result<(), CorrelateError> {
        let ok = 0.0 <= self.theta_low && self.theta_low < self.theta_high && self.theta_high <= 1.0;
        if !ok {
            return Err(CorrelateError::Thresholds {
                low: self.theta_low,
                high: self.theta_high,
            });
        }
        if self.t_base < 2 || self.t_high <= self.t_base {
            return Err(CorrelateError::Strengths {
                base: self.t_base,
                high: self.t_high,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrengthGroup {
    pub members: Vec<usize>,
    pub strength: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Group,
    BaseOnly,
    DontCare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrengthPlan {
    pub settings: PlanSettings,
    pub groups: Vec<StrengthGroup>,
    pub dont_care: Vec<usize>,
    pub base_only: Vec<usize>,
    k: usize,
}

impl StrengthPlan {
    pub fn classification(&self, p: usize) -> Classification {
        if self.groups.iter().any(|g| g.members.contains(&p)) {
            Classification::Group
        } else if self.dont_care.contains(&p) {
            Classification::DontCare
        } else {
            Classification::BaseOnly
        }
    }

    /// Base requirement over every non-don't-care parameter, one per group,
    /// and a strength-1 requirement per don't-care parameter.
    pub fn requirements(&self) -> Vec<CoverageRequirement> {
        let mut out = Vec::new();
        let base: Vec<usize> = (0..self.k).filter(|p| !self.dont_care.contains(p)).collect();
        if !base.is_empty() {
            let t = self.settings.t_base.min(base.len());
            out.push(CoverageRequirement::new(base, t).expect("non-empty relation"));
        }
        for g in &self.groups {
            out.push(CoverageRequirement::new(g.members.iter().copied(), g.strength).expect("valid group"));
        }
        for &p in &self.dont_care {
            out.push(CoverageRequirement::new([p], 1).expect("singleton"));
        }
        out
    }

    pub fn to_document(&self, model: &ParameterModel, matrix: Option<&CorrelationMatrix>) -> PlanDocument {
        let name = |p: &usize| model.parameter(*p).name.clone();
        PlanDocument {
            thresholds: Thresholds {
                high: self.settings.theta_high,
                low: self.settings.theta_low,
            },
            base_strength: self.settings.t_base,
            high_strength: self.settings.t_high,
            full_strength: self.settings.full_strength,
            normalization: matrix.map(normalization_note),
            groups: self
                .groups
                .iter()
                .map(|g| GroupEntry {
                    parameters: g.members.iter().map(name).collect(),
                    strength: g.strength,
                })
                .collect(),
            dont_care: self.dont_care.iter().map(name).collect(),
            base_only: self.base_only.iter().map(name).collect(),
            requirements: self
                .requirements()
                .iter()
                .map(|r| GroupEntry {
                    parameters: r.relation().iter().map(name).collect(),
                    strength: r.strength(),
                })
                .collect(),
        }
    }

    pub fn from_document(model: &ParameterModel, doc: &PlanDocument) -> Result<Self, CorrelateError> {
        let settings = PlanSettings {
            theta_high: doc.thresholds.high,
            theta_low: doc.thresholds.low,
            t_base: doc.base_strength,
            t_high: doc.high_strength,
            full_strength: doc.full_strength,
        };
        settings.validate()?;
        let idx = |n: &String| {
            model
                .index_of(n)
                .ok_or_else(|| CorrelateError::BadPlan(format!("unknown parameter `{n}`")))
        };
        let mut groups = Vec::new();
        for g in &doc.groups {
            let members: Vec<usize> = g.parameters.iter().map(idx).collect::<Result<_, _>>()?;
            if members.len() < 2 || g.strength < 2 || g.strength > members.len() {
                return Err(CorrelateError::BadPlan(format!(
                    "group {:?} with strength {}",
                    g.parameters, g.strength
                )));
            }
            groups.push(StrengthGroup {
                members,
                strength: g.strength,
            });
        }
        let dont_care: Vec<usize> = doc.dont_care.iter().map(idx).collect::<Result<_, _>>()?;
        let base_only: Vec<usize> = doc.base_only.iter().map(idx).collect::<Result<_, _>>()?;

        let mut seen = vec![0usize; model.len()];
        for p in groups
            .iter()
            .flat_map(|g| g.members.iter())
            .chain(&dont_care)
            .chain(&base_only)
        {
            seen[*p] += 1;
        }
        if let Some(p) = seen.iter().position(|&n| n != 1) {
            return Err(CorrelateError::BadPlan(format!(
                "parameter `{}` must be classified exactly once",
                model.parameter(p).name
            )));
        }
        Ok(StrengthPlan {
            settings,
            groups,
            dont_care,
            base_only,
            k: model.len(),
        })
    }
}

fn normalization_note(matrix: &CorrelationMatrix) -> String {
    match (matrix.source(), matrix.scale()) {
        (MatrixSource::Imported, _) => "imported matrix, used as given".into(),
        (MatrixSource::Computed, Some(s)) => {
            format!("raw impact ratios divided by their off-diagonal maximum {s}")
        }
        (MatrixSource::Computed, None) => "all raw ratios are zero".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub high: f64,
    pub low: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEntry {
    pub parameters: Vec<String>,
    pub strength: usize,
}

/// `plan.json` layout. `requirements` is informational; loading rebuilds
/// it from the classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub thresholds: Thresholds,
    pub base_strength: usize,
    pub high_strength: usize,
    pub full_strength: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<String>,
    pub groups: Vec<GroupEntry>,
    pub dont_care: Vec<String>,
    pub base_only: Vec<String>,
    #[serde(default)]
    pub requirements: Vec<GroupEntry>,
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut cur = x;
        while self.0[cur] != root {
            let next = self.0[cur];
            self.0[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so component ids follow parameter order
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// Groups: connected components of pairs at or above `theta_high`.
/// Don't-care: parameters whose every entry is below `theta_low`.
pub fn build_plan(matrix: &CorrelationMatrix, settings: PlanSettings) -> Result<StrengthPlan, CorrelateError> {
    settings.validate()?;
    let k = matrix.len();
    let mut sets = DisjointSets::new(k);
    let mut linked = vec![false; k];
    for i in 0..k {
        for j in i + 1..k {
            if matrix.values[i][j] >= settings.theta_high {
                sets.union(i, j);
                linked[i] = true;
                linked[j] = true;
            }
        }
    }
    let mut groups: Vec<StrengthGroup> = Vec::new();
    for root in 0..k {
        let members: Vec<usize> = (0..k).filter(|&p| linked[p] && sets.find(p) == root).collect();
        if members.len() >= 2 {
            let strength = if settings.full_strength {
                members.len()
            } else {
                settings.t_high.min(members.len())
            };
            groups.push(StrengthGroup { members, strength });
        }
    }
    let dont_care: Vec<usize> = (0..k)
        .filter(|&p| {
            (0..k)
                .filter(|&j| j != p)
                .all(|j| matrix.values[p][j] < settings.theta_low)
        })
        .collect();
    let base_only: Vec<usize> = (0..k).filter(|&p| !linked[p] && !dont_care.contains(&p)).collect();
    Ok(StrengthPlan {
        settings,
        groups,
        dont_care,
        base_only,
        k,
    })
}

/// Fixed-width text rendering of the matrix for reports.
pub fn render_matrix(matrix: &CorrelationMatrix) -> String {
    let width = matrix.names.iter().map(String::len).max().unwrap_or(0).max(11);
    let mut out = String::new();
    let _ = write!(out, "{:<width$}", "Correlation");
    for n in &matrix.names {
        let _ = write!(out, " {n:>width$}");
    }
    out.push('\n');
    for (i, n) in matrix.names.iter().enumerate() {
        let _ = write!(out, "{n:<width$}");
        for j in 0..matrix.len() {
            match matrix.get(i, j) {
                None => {
                    let _ = write!(out, " {:>width$}", "-");
                }
                Some(v) => {
                    let _ = write!(out, " {v:>width$.3}");
                }
            }
        }
        out.push('\n');
    }
    out
}
