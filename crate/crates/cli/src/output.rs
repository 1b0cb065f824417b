//! Output writers: RFC-4180 CSV for fields and versioned JSON for reports
//! and estimates.  Key order is stable (struct order / sorted maps) so
//! identical runs produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use eqstop_core::constructor::{CaseTag, ConstructionResult};
use eqstop_core::diffusion::ProblemSpec;
use eqstop_core::expected_time::ConstraintReport;
use eqstop_core::mc::McEstimate;
use eqstop_core::ode::Field;
use eqstop_core::strategy::Strategy;
use eqstop_core::verifier::VerificationReport;

pub const SCHEMA_VERSION: u32 = 1;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {dir:?}"))
}

pub fn write_expected_time_csv(dir: &Path, field: &Field) -> Result<PathBuf> {
    let path = dir.join("e.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {path:?}"))?;
    w.write_record(["x", "e"])?;
    for (x, v) in field.grid.iter().zip(&field.values) {
        w.write_record([x.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_reward_csv(dir: &Path, spec: &ProblemSpec, field: &Field) -> Result<PathBuf> {
    let path = dir.join("j.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {path:?}"))?;
    w.write_record(["x", "J", "g"])?;
    for (x, v) in field.grid.iter().zip(&field.values) {
        w.write_record([
            x.to_string(),
            v.to_string(),
            spec.payoff.value(*x).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_figure_csv(
    dir: &Path,
    horizon: f64,
    spec: &ProblemSpec,
    field: &Field,
    span: f64,
) -> Result<PathBuf> {
    let path = dir.join(format!("figure_T{horizon}.csv"));
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {path:?}"))?;
    w.write_record(["x", "g", "J"])?;
    for (x, v) in field.grid.iter().zip(&field.values) {
        if x.abs() <= span {
            w.write_record([
                x.to_string(),
                spec.payoff.value(*x).to_string(),
                v.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(path)
}

#[derive(Serialize)]
struct ConstructionJson<'a> {
    #[serde(rename = "schemaVersion")]
    schema_version: u32,
    case: &'a CaseTag,
    boundaries: BTreeMap<String, f64>,
    residuals: BTreeMap<String, f64>,
    strategy: &'a Strategy,
    constraint: &'a ConstraintReport,
    verification: &'a VerificationReport,
    truncation_sensitivity: Option<f64>,
    warnings: &'a [String],
}

pub fn write_construction_json(
    dir: &Path,
    result: &ConstructionResult,
    constraint: &ConstraintReport,
) -> Result<PathBuf> {
    let path = dir.join("construction.json");
    let doc = ConstructionJson {
        schema_version: SCHEMA_VERSION,
        case: &result.case,
        boundaries: result.boundaries.iter().cloned().collect(),
        residuals: result.residuals.iter().cloned().collect(),
        strategy: &result.strategy,
        constraint,
        verification: &result.report,
        truncation_sensitivity: result.reward.truncation_sensitivity,
        warnings: &result.warnings,
    };
    fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")
        .with_context(|| format!("writing {path:?}"))?;
    Ok(path)
}

#[derive(Serialize)]
struct VerificationJson<'a> {
    #[serde(rename = "schemaVersion")]
    schema_version: u32,
    check: &'a str,
    report: &'a VerificationReport,
    constraint: &'a ConstraintReport,
}

pub fn write_verification_json(
    dir: &Path,
    check: &str,
    report: &VerificationReport,
    constraint: &ConstraintReport,
) -> Result<PathBuf> {
    let path = dir.join("verification.json");
    let doc = VerificationJson {
        schema_version: SCHEMA_VERSION,
        check,
        report,
        constraint,
    };
    fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")
        .with_context(|| format!("writing {path:?}"))?;
    Ok(path)
}

#[derive(Serialize)]
struct SimulateJson<'a> {
    #[serde(rename = "schemaVersion")]
    schema_version: u32,
    x0: f64,
    expected_time: &'a McEstimate,
    reward: &'a McEstimate,
}

pub fn write_simulate_json(dir: &Path, x0: f64, e: &McEstimate, j: &McEstimate) -> Result<PathBuf> {
    let path = dir.join("simulate.json");
    let doc = SimulateJson {
        schema_version: SCHEMA_VERSION,
        x0,
        expected_time: e,
        reward: j,
    };
    fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")
        .with_context(|| format!("writing {path:?}"))?;
    Ok(path)
}

#[derive(Serialize)]
struct OccupationJson<'a> {
    #[serde(rename = "schemaVersion")]
    schema_version: u32,
    x: f64,
    h: f64,
    ratio: &'a McEstimate,
}

pub fn write_occupation_json(dir: &Path, x: f64, h: f64, est: &McEstimate) -> Result<PathBuf> {
    let path = dir.join("occupation.json");
    let doc = OccupationJson {
        schema_version: SCHEMA_VERSION,
        x,
        h,
        ratio: est,
    };
    fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")
        .with_context(|| format!("writing {path:?}"))?;
    Ok(path)
}

/// Human-readable condition table for the terminal.
pub fn print_report(report: &VerificationReport) {
    println!("{} conditions:", report.theorem);
    println!(
        "{:<55} {:>6} {:>14} {:>14}",
        "condition", "pass", "residual", "witness"
    );
    for c in &report.conditions {
        println!(
            "{:<55} {:>6} {:>14.6e} {:>14}",
            c.name,
            if c.pass { "yes" } else { "NO" },
            c.residual,
            c.witness.map_or("-".to_string(), |w| format!("{w:.6}")),
        );
        if let Some(note) = &c.note {
            println!("    note: {note}");
        }
    }
    println!("overall: {}", if report.overall { "PASS" } else { "FAIL" });
}
