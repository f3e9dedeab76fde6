//! Suite files.
//!
//! CSV: a header row of parameter names followed by one row of value tokens
//! per test, `\n` line endings. JSON: `{"label", "parameters", "cases"}` where
//! each case is a `{name: token}` object in parameter order.

use serde::{Deserialize, Serialize};

use crate::model::{ParameterModel, TestSuite};

use super::CagenError;

pub fn suite_to_csv(model: &ParameterModel, suite: &TestSuite) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(model.names()).expect("in-memory write");
    for case in &suite.cases {
        w.write_record(case.tokens(model)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("tokens are utf-8")
}

pub fn suite_from_csv(model: &ParameterModel, label: &str, text: &str) -> Result<TestSuite, CagenError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| CagenError::Malformed(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != model.names() {
        return Err(CagenError::Malformed(format!(
            "header {:?} does not match model parameters {:?}",
            header,
            model.names()
        )));
    }
    let mut suite = TestSuite::new(label);
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CagenError::Malformed(e.to_string()))?;
        let tokens: Vec<&str> = rec.iter().collect();
        let case = model.case_from_tokens(&tokens).map_err(|e| CagenError::BadRow {
            row: row + 1,
            message: e.to_string(),
        })?;
        suite.cases.push(case);
    }
    Ok(suite)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteDocument {
    pub label: String,
    pub parameters: Vec<String>,
    pub cases: Vec<serde_json::Map<String, serde_json::Value>>,
}

pub fn suite_to_json(model: &ParameterModel, suite: &TestSuite) -> String {
    let doc = SuiteDocument {
        label: suite.label.clone(),
        parameters: model.names().into_iter().map(String::from).collect(),
        cases: suite.cases.iter().map(|c| c.to_map(model)).collect(),
    };
    crate::doc::to_json(&doc)
}

pub fn suite_from_json(model: &ParameterModel, text: &str) -> Result<TestSuite, CagenError> {
    let doc: SuiteDocument = serde_json::from_str(text).map_err(|e| CagenError::Malformed(e.to_string()))?;
    if doc.parameters != model.names() {
        return Err(CagenError::Malformed(format!(
            "suite parameters {:?} do not match model parameters {:?}",
            doc.parameters,
            model.names()
        )));
    }
    let mut suite = TestSuite::new(doc.label);
    for (row, map) in doc.cases.iter().enumerate() {
        let case = model.case_from_map(map).map_err(|e| CagenError::BadRow {
            row: row + 1,
            message: e.to_string(),
        })?;
        suite.cases.push(case);
    }
    Ok(suite)
}
