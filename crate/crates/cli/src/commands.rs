//! Pipeline stages. Each stage reads its inputs from the config and the
//! output directory and writes its artifacts back there, so any stage can
//! be re-run on its own.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use codeaware_core::cagen::{
    compile_requirements, generate as generate_suite, suite_from_csv, suite_from_json, suite_stats, suite_to_csv,
    suite_to_json, verify as verify_suite, SizeComparison, VerificationReport,
};
use codeaware_core::correlate::{
    build_plan, correlation_matrix, render_matrix, CorrelationMatrix, MatrixSource, PlanDocument, StrengthPlan,
};
use codeaware_core::doc;
use codeaware_core::evaluate::{compare, mutation_score, render_evaluation, Comparison, EvaluationReport, Fixture};
use codeaware_core::impact::{
    compute_impacts, execute, plan_experiments, sensitivity_report, CoverageAdapter, CoverageMatrix, ExecAdapter,
    ExecOptions, ImpactDocument, ImpactTable, ReplayAdapter, SensitivityReport,
};
use codeaware_core::model::{CoverageRequirement, ParameterModel, TestSuite};

use crate::config::{AdapterSource, Resolved};
use crate::error::{CliError, Result};

pub const COVERAGE_FILE: &str = "coverage.jsonl";
pub const IMPACTS_FILE: &str = "impacts.json";
pub const SENSITIVITY_FILE: &str = "sensitivity.json";
pub const CORRELATION_FILE: &str = "correlation.csv";
pub const CORRELATION_RAW_FILE: &str = "correlation-raw.csv";
pub const PLAN_FILE: &str = "plan.json";
pub const SIZES_FILE: &str = "sizes.json";
pub const EVALUATION_JSON: &str = "evaluation.json";
pub const EVALUATION_TXT: &str = "evaluation.txt";
pub const REPORT_FILE: &str = "report.txt";
pub const MIXED_LABEL: &str = "code-aware-mixed";

pub fn uniform_label(t: usize) -> String {
    format!("uniform-{t}way")
}

pub fn suite_csv_name(label: &str) -> String {
    format!("suite-{label}.csv")
}

pub fn suite_json_name(label: &str) -> String {
    format!("suite-{label}.json")
}

pub fn verify_name(label: &str) -> String {
    format!("suite-{label}.verify.json")
}

fn write_artifact(cfg: &Resolved, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::io(format!("creating {}", cfg.output_dir.display()), e))?;
    let path = cfg.output_dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn read_artifact(cfg: &Resolved, name: &str, produced_by: &str) -> Result<String> {
    let path = cfg.output_dir.join(name);
    std::fs::read_to_string(&path)
        .map_err(|_| CliError::Validation(format!("missing {} (run `{produced_by}` first)", path.display())))
}

pub struct AnalyzeOutput {
    pub matrix: CoverageMatrix,
    pub impacts: ImpactTable,
    pub sensitivity: SensitivityReport,
}

pub fn analyze(cfg: &Resolved) -> Result<AnalyzeOutput> {
    let model = &cfg.model;
    let source = cfg
        .adapter
        .as_ref()
        .ok_or_else(|| CliError::Validation("analyze needs an [adapter] source".into()))?;
    let plan = plan_experiments(model, cfg.profiles)?;

    let replay;
    let exec;
    let adapter: &dyn CoverageAdapter = match source {
        AdapterSource::Fixture(_) => &cfg.fixture.as_ref().expect("fixture loaded with config").sut,
        AdapterSource::Replay(path) => {
            replay = ReplayAdapter::load(path, model)?;
            &replay
        }
        AdapterSource::Exec(cmd) => {
            exec = ExecAdapter::new(cmd, cfg.timeout)?.current_dir(&cfg.base_dir);
            &exec
        }
    };
    let matrix = execute(model, &plan, adapter, ExecOptions { workers: cfg.workers })?;
    let impacts = compute_impacts(model, &matrix, &plan, cfg.mode)?;
    let sensitivity = sensitivity_report(&matrix, model);

    write_artifact(cfg, COVERAGE_FILE, &matrix.to_jsonl(model))?;
    write_artifact(cfg, IMPACTS_FILE, &doc::to_json(&impacts.to_document(model)))?;
    write_artifact(cfg, SENSITIVITY_FILE, &doc::to_json(&sensitivity))?;
    Ok(AnalyzeOutput {
        matrix,
        impacts,
        sensitivity,
    })
}

pub fn load_impacts(cfg: &Resolved) -> Result<ImpactTable> {
    let text = read_artifact(cfg, IMPACTS_FILE, "analyze")?;
    let d: ImpactDocument =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{IMPACTS_FILE}: {e}")))?;
    Ok(ImpactTable::from_document(&cfg.model, &d)?)
}

pub struct PlanOutput {
    pub matrix: CorrelationMatrix,
    pub plan: StrengthPlan,
}

/// Correlation matrix plus strength plan. `import` (or the config's
/// `correlation.import`) replaces the computed matrix.
pub fn plan(cfg: &Resolved, import: Option<&Path>) -> Result<PlanOutput> {
    cfg.plan_settings.validate()?;
    let import = import.map(Path::to_path_buf).or_else(|| cfg.import.clone());
    let matrix = match import {
        Some(path) => {
            let text = doc::read_text(&path)?;
            let m = CorrelationMatrix::from_csv(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            m.check_model(&cfg.model)?;
            m
        }
        None => correlation_matrix(&cfg.model, &load_impacts(cfg)?)?,
    };
    let plan = build_plan(&matrix, cfg.plan_settings)?;

    write_artifact(cfg, CORRELATION_FILE, &matrix.to_csv())?;
    if matrix.source() == MatrixSource::Computed {
        write_artifact(cfg, CORRELATION_RAW_FILE, &matrix.raw_to_csv())?;
    }
    write_artifact(
        cfg,
        PLAN_FILE,
        &doc::to_json(&plan.to_document(&cfg.model, Some(&matrix))),
    )?;
    Ok(PlanOutput { matrix, plan })
}

pub fn load_plan(cfg: &Resolved) -> Result<StrengthPlan> {
    let text = read_artifact(cfg, PLAN_FILE, "plan")?;
    let d: PlanDocument = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{PLAN_FILE}: {e}")))?;
    Ok(StrengthPlan::from_document(&cfg.model, &d)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenerateMode {
    /// Uniform baseline at the base strength plus the mixed suite from the plan.
    Pipeline,
    /// A single uniform-strength suite.
    Uniform(usize),
}

pub struct GeneratedSuite {
    pub suite: TestSuite,
    pub verification: VerificationReport,
}

pub struct GenerateOutput {
    pub suites: Vec<GeneratedSuite>,
    pub sizes: Option<SizeComparison>,
}

fn uniform_requirement(model: &ParameterModel, t: usize) -> Result<CoverageRequirement> {
    if t == 0 || t > model.len() {
        return Err(CliError::Validation(format!(
            "uniform strength must be in 1..={}, got {t}",
            model.len()
        )));
    }
    Ok(model.uniform(t)?)
}

fn build_and_check(cfg: &Resolved, reqs: &[CoverageRequirement], label: &str) -> Result<GeneratedSuite> {
    let universe = compile_requirements(&cfg.model, reqs)?;
    let suite = generate_suite(&cfg.model, &universe, label);
    let verification = verify_suite(&suite, &universe);
    if !verification.is_complete() {
        return Err(CliError::Invariant(format!(
            "generated suite `{label}` leaves {} tuples uncovered",
            verification.uncovered.len()
        )));
    }
    write_artifact(cfg, &suite_csv_name(label), &suite_to_csv(&cfg.model, &suite))?;
    write_artifact(cfg, &suite_json_name(label), &suite_to_json(&cfg.model, &suite))?;
    write_artifact(
        cfg,
        &verify_name(label),
        &doc::to_json(&verification.to_json(&cfg.model)),
    )?;
    Ok(GeneratedSuite { suite, verification })
}

pub fn generate(cfg: &Resolved, mode: GenerateMode) -> Result<GenerateOutput> {
    match mode {
        GenerateMode::Uniform(t) => {
            let req = uniform_requirement(&cfg.model, t)?;
            let s = build_and_check(cfg, &[req], &uniform_label(t))?;
            Ok(GenerateOutput {
                suites: vec![s],
                sizes: None,
            })
        }
        GenerateMode::Pipeline => {
            let plan = load_plan(cfg)?;
            let t = plan.settings.t_base.min(cfg.model.len());
            let baseline = build_and_check(cfg, &[uniform_requirement(&cfg.model, t)?], &uniform_label(t))?;
            let mixed = build_and_check(cfg, &plan.requirements(), MIXED_LABEL)?;
            let sizes = suite_stats(&baseline.suite, &mixed.suite);
            write_artifact(cfg, SIZES_FILE, &doc::to_json(&sizes))?;
            Ok(GenerateOutput {
                suites: vec![baseline, mixed],
                sizes: Some(sizes),
            })
        }
    }
}

pub fn read_suite(model: &ParameterModel, path: &Path) -> Result<TestSuite> {
    let text = doc::read_text(path)?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let suite = if is_json {
        suite_from_json(model, &text)?
    } else {
        let label = path
            .file_stem()
            .and_then(|s| s.to_str())
            .map(|s| s.strip_prefix("suite-").unwrap_or(s))
            .unwrap_or("suite");
        suite_from_csv(model, label, &text)?
    };
    Ok(suite)
}

/// Checks a suite file against the plan's requirements or a uniform strength.
pub fn verify(cfg: &Resolved, suite_path: &Path, uniform: Option<usize>) -> Result<VerificationReport> {
    let suite = read_suite(&cfg.model, suite_path)?;
    let reqs = match uniform {
        Some(t) => vec![uniform_requirement(&cfg.model, t)?],
        None => load_plan(cfg)?.requirements(),
    };
    let universe = compile_requirements(&cfg.model, &reqs)?;
    Ok(verify_suite(&suite, &universe))
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateOutput {
    pub fixture: String,
    pub reports: Vec<EvaluationReport>,
    pub comparison: Comparison,
}

pub fn evaluate(cfg: &Resolved, baseline: Option<&Path>, candidate: Option<&Path>) -> Result<EvaluateOutput> {
    let fixture_path = cfg.evaluate_fixture.as_ref().ok_or_else(|| {
        CliError::Validation("evaluate needs a fixture ([evaluate].fixture or [adapter].fixture)".into())
    })?;
    let fixture = Fixture::load(fixture_path)?;
    if fixture.model != cfg.model {
        return Err(CliError::Validation(format!(
            "fixture `{}` was written for a different model",
            fixture.name
        )));
    }
    let default_baseline = || {
        let t = load_plan(cfg)
            .map(|p| p.settings.t_base)
            .unwrap_or(cfg.plan_settings.t_base);
        cfg.output_dir
            .join(suite_json_name(&uniform_label(t.min(cfg.model.len()))))
    };
    let baseline_path = baseline.map(Path::to_path_buf).unwrap_or_else(default_baseline);
    let candidate_path = candidate
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir.join(suite_json_name(MIXED_LABEL)));
    let load = |p: &Path| {
        read_suite(&cfg.model, p).map_err(|e| match e {
            CliError::Io { .. } => {
                CliError::Validation(format!("missing suite {} (run `generate` first)", p.display()))
            }
            other => other,
        })
    };
    let base_suite = load(&baseline_path)?;
    let cand_suite = load(&candidate_path)?;

    let base = mutation_score(&base_suite, &fixture.faults, &fixture.sut)?;
    let cand = mutation_score(&cand_suite, &fixture.faults, &fixture.sut)?;
    let comparison = compare(&base, &cand)?;
    let out = EvaluateOutput {
        fixture: fixture.name.clone(),
        reports: vec![base, cand],
        comparison,
    };
    write_artifact(cfg, EVALUATION_JSON, &doc::to_json(&out))?;
    write_artifact(
        cfg,
        EVALUATION_TXT,
        &render_evaluation(&out.reports, Some(&out.comparison)),
    )?;
    Ok(out)
}

fn read_optional(cfg: &Resolved, name: &str) -> Option<String> {
    std::fs::read_to_string(cfg.output_dir.join(name)).ok()
}

/// Collects whatever artifacts exist into `report.txt`.
pub fn report(cfg: &Resolved) -> Result<String> {
    let model = &cfg.model;
    let mut out = String::new();
    let _ = writeln!(out, "Code-aware CIT analysis report");
    let _ = writeln!(out, "==============================");
    let _ = writeln!(
        out,
        "parameters: {} ({})",
        model.len(),
        model
            .parameters()
            .iter()
            .map(|p| format!("{}:{}", p.name, p.domain_size()))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let _ = writeln!(out, "exhaustive suite size: {}", model.exhaustive_size());

    out.push_str("\nParameter impact\n----------------\n");
    match (read_optional(cfg, IMPACTS_FILE), read_optional(cfg, SENSITIVITY_FILE)) {
        (Some(imp), Some(sens)) => {
            let imp: ImpactDocument =
                serde_json::from_str(&imp).map_err(|e| CliError::Validation(format!("{IMPACTS_FILE}: {e}")))?;
            let sens: Value =
                serde_json::from_str(&sens).map_err(|e| CliError::Validation(format!("{SENSITIVITY_FILE}: {e}")))?;
            let width = model.names().iter().map(|n| n.len()).max().unwrap_or(9).max(9);
            let mode = serde_json::to_value(imp.mode).expect("serializable");
            let _ = writeln!(out, "mode: {}", mode.as_str().unwrap_or("?"));
            let _ = writeln!(
                out,
                "{:<width$}  {:>7}  {:>9}  {:>9}",
                "parameter", "impact", "sensitive", "exclusive"
            );
            let rows = sens["parameters"].as_array().cloned().unwrap_or_default();
            for (entry, s) in imp.singles.iter().zip(rows) {
                let pct = |v: &Value| v.as_f64().map_or("n/a".into(), |f| format!("{:.1}%", f * 100.0));
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>7.3}  {:>9}  {:>9}",
                    entry.parameter,
                    entry.impact,
                    pct(&s["sensitive_fraction"]),
                    pct(&s["exclusive_fraction"])
                );
            }
            if let Some(f) = sens["never_covered_fraction"].as_f64() {
                let _ = writeln!(out, "never covered: {:.1}%", f * 100.0);
            }
        }
        _ => out.push_str("not produced\n"),
    }

    out.push_str("\nParameter correlation\n---------------------\n");
    match (read_optional(cfg, CORRELATION_FILE), read_optional(cfg, PLAN_FILE)) {
        (Some(csv), Some(plan)) => {
            let m = CorrelationMatrix::from_csv(&csv)?;
            let plan: PlanDocument =
                serde_json::from_str(&plan).map_err(|e| CliError::Validation(format!("{PLAN_FILE}: {e}")))?;
            if let Some(note) = &plan.normalization {
                let _ = writeln!(out, "({note})");
            }
            out.push_str(&render_matrix(&m));
            let _ = writeln!(
                out,
                "\nStrength plan (high >= {}, don't care < {}, base t = {})",
                plan.thresholds.high, plan.thresholds.low, plan.base_strength
            );
            for g in &plan.groups {
                let _ = writeln!(out, "  group {{{}}} at t = {}", g.parameters.join(", "), g.strength);
            }
            let names = |v: &[String]| if v.is_empty() { "none".to_string() } else { v.join(", ") };
            let _ = writeln!(out, "  base only: {}", names(&plan.base_only));
            let _ = writeln!(out, "  don't care: {}", names(&plan.dont_care));
        }
        _ => out.push_str("not produced\n"),
    }

    out.push_str("\nSuite sizes\n-----------\n");
    match read_optional(cfg, SIZES_FILE) {
        Some(text) => {
            let v: Value =
                serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{SIZES_FILE}: {e}")))?;
            let _ = writeln!(
                out,
                "{}: {}",
                v["baseline_label"].as_str().unwrap_or("?"),
                v["baseline_size"]
            );
            let _ = writeln!(
                out,
                "{}: {}",
                v["candidate_label"].as_str().unwrap_or("?"),
                v["candidate_size"]
            );
            let _ = writeln!(out, "difference: {:+}", v["difference"].as_i64().unwrap_or(0));
        }
        None => out.push_str("not produced\n"),
    }

    out.push_str("\nFault detection\n---------------\n");
    match read_optional(cfg, EVALUATION_TXT) {
        Some(text) => out.push_str(&text),
        None => out.push_str("not produced\n"),
    }

    write_artifact(cfg, REPORT_FILE, &out)?;
    Ok(out)
}

/// Every stage in order. Analysis is skipped when there is no adapter and
/// the correlation matrix is imported; evaluation is skipped without a
/// fixture.
pub fn pipeline(cfg: &Resolved) -> Result<Value> {
    let mut summary = json!({});
    if cfg.adapter.is_some() {
        let a = analyze(cfg)?;
        summary["runs"] = json!(a.matrix.len());
        summary["failed_runs"] = json!(a.matrix.failed_count());
    } else if cfg.import.is_none() {
        return Err(CliError::Validation(
            "pipeline needs an [adapter] source or correlation.import".into(),
        ));
    }
    let p = plan(cfg, None)?;
    summary["groups"] = json!(p.plan.groups.len());
    summary["dont_care"] = json!(p.plan.dont_care.len());
    let g = generate(cfg, GenerateMode::Pipeline)?;
    if let Some(s) = &g.sizes {
        summary["sizes"] = serde_json::to_value(s).expect("serializable");
    }
    if cfg.evaluate_fixture.is_some() {
        let e = evaluate(cfg, None, None)?;
        summary["newly_killed"] = json!(e.comparison.newly_killed);
    }
    report(cfg)?;
    Ok(summary)
}
