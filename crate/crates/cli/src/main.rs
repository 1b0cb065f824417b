//! `eqstop`: config-driven solver and simulator for equilibrium randomized
//! stopping of one-dimensional diffusions under an expected-time budget.
//!
//! Exit codes: 0 success / verification pass, 2 verification failure,
//! 1 any other error.

mod config;
mod expr;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;

use eqstop_core::constructor::construct_equilibrium;
use eqstop_core::expected_time::{check_constraint, expected_time_field};
use eqstop_core::mc::{estimate_e_and_j, occupation_ratio};
use eqstop_core::reward::reward_field;
use eqstop_core::verifier::{check_necessary, check_sufficient};

use config::{CheckKind, Mode, RunConfig};

#[derive(Parser)]
#[command(
    name = "eqstop",
    about = "Construct, verify and simulate equilibrium randomized stopping strategies"
)]
struct Args {
    /// Path to the run configuration (flat key = value text with sections).
    config: PathBuf,
    /// Override a config key, e.g. --set run.seed=7 (repeatable).
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides [run] out_dir and EQSTOP_OUT_DIR).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(args: &Args) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading config {:?}", args.config))?;
    let mut overrides: Vec<(String, String)> = Vec::new();
    for item in &args.set {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("--set {item:?} must be section.key=value"))?;
        overrides.push((key.trim().to_string(), value.trim().to_string()));
    }
    if let Some(dir) = &args.out_dir {
        overrides.push(("run.out_dir".to_string(), dir.display().to_string()));
    }
    let cfg = RunConfig::parse(&text, &overrides)?;
    let out_dir = PathBuf::from(&cfg.out_dir);
    output::ensure_dir(&out_dir)?;
    // record the resolved configuration next to the outputs
    std::fs::write(out_dir.join("resolved.cfg"), cfg.to_text())
        .with_context(|| "writing resolved.cfg")?;

    match cfg.mode {
        Mode::Construct => run_construct(&cfg, &out_dir),
        Mode::Verify => run_verify(&cfg, &out_dir),
        Mode::Fields => run_fields(&cfg, &out_dir),
        Mode::Simulate => run_simulate(&cfg, &out_dir),
        Mode::Occupation => run_occupation(&cfg, &out_dir),
        Mode::Figures => run_figures(&cfg, &out_dir),
    }
}

fn run_construct(cfg: &RunConfig, out_dir: &Path) -> Result<ExitCode> {
    let spec = cfg.build_spec()?;
    let hint = cfg.build_hint()?;
    let result = construct_equilibrium(&spec, hint.as_ref(), &cfg.grid_config(), &cfg.tolerances())
        .map_err(|e| anyhow!("{e}"))?;
    let constraint = check_constraint(
        &result.e.field,
        spec.horizon,
        cfg.tol_value * spec.horizon.max(1.0),
    );
    output::write_construction_json(out_dir, &result, &constraint)?;
    output::write_expected_time_csv(out_dir, &result.e.field)?;
    output::write_reward_csv(out_dir, &spec, &result.reward.field)?;
    println!("case: {:?}", result.case);
    for (name, value) in &result.boundaries {
        println!("  {name} = {value}");
    }
    output::print_report(&result.report);
    for w in &result.warnings {
        println!("warning: {w}");
    }
    Ok(if result.report.overall && constraint.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn run_verify(cfg: &RunConfig, out_dir: &Path) -> Result<ExitCode> {
    let spec = cfg.build_spec()?;
    let strat = cfg.build_strategy()?;
    let grid_cfg = cfg.grid_config();
    let tols = cfg.tolerances();
    let e = expected_time_field(&spec, &strat, &grid_cfg).map_err(|e| anyhow!("{e}"))?;
    let j = reward_field(&spec, &strat, &grid_cfg).map_err(|e| anyhow!("{e}"))?;
    let constraint = check_constraint(
        &e.field,
        spec.horizon,
        cfg.tol_value * spec.horizon.max(1.0),
    );
    let (label, report) = match cfg.check {
        CheckKind::Sufficient => {
            let refined_cfg = grid_cfg.refined();
            let e_ref =
                expected_time_field(&spec, &strat, &refined_cfg).map_err(|e| anyhow!("{e}"))?;
            let j_ref = reward_field(&spec, &strat, &refined_cfg).map_err(|e| anyhow!("{e}"))?;
            (
                "sufficient",
                check_sufficient(
                    &spec,
                    &strat,
                    &e.field,
                    &j.field,
                    Some((&e_ref.field, &j_ref.field)),
                    &tols,
                )
                .map_err(|e| anyhow!("{e}"))?,
            )
        }
        CheckKind::Necessary => (
            "necessary",
            check_necessary(&spec, &strat, &e.field, &j.field, &tols)
                .map_err(|e| anyhow!("{e}"))?,
        ),
    };
    output::write_verification_json(out_dir, label, &report, &constraint)?;
    output::print_report(&report);
    if !constraint.pass {
        println!(
            "budget violated: max e = {:.6} > T = {} at x = {:.6}",
            constraint.max_value, constraint.horizon, constraint.witness
        );
    }
    Ok(if report.overall && constraint.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn run_fields(cfg: &RunConfig, out_dir: &Path) -> Result<ExitCode> {
    let spec = cfg.build_spec()?;
    let strat = cfg.build_strategy()?;
    let grid_cfg = cfg.grid_config();
    let e = expected_time_field(&spec, &strat, &grid_cfg).map_err(|e| anyhow!("{e}"))?;
    let j = reward_field(&spec, &strat, &grid_cfg).map_err(|e| anyhow!("{e}"))?;
    let e_path = output::write_expected_time_csv(out_dir, &e.field)?;
    let j_path = output::write_reward_csv(out_dir, &spec, &j.field)?;
    println!("wrote {} and {}", e_path.display(), j_path.display());
    for w in e.warnings.iter().chain(&j.warnings) {
        println!("warning: {w}");
    }
    Ok(ExitCode::SUCCESS)
}

fn run_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<ExitCode> {
    let spec = cfg.build_spec()?;
    let strat = cfg.build_strategy()?;
    let (e, j) = estimate_e_and_j(&spec, &strat, cfg.x0, cfg.n, cfg.dt, cfg.seed)
        .map_err(|e| anyhow!("{e}"))?;
    output::write_simulate_json(out_dir, cfg.x0, &e, &j)?;
    println!(
        "e({}) = {:.6} ± {:.6}   J({}) = {:.6} ± {:.6}   (n = {}, dt = {})",
        cfg.x0, e.mean, e.stderr, cfg.x0, j.mean, j.stderr, cfg.n, cfg.dt
    );
    if e.flagged {
        println!("warning: censored fraction {:.2e}", e.censored_fraction);
    }
    Ok(ExitCode::SUCCESS)
}

fn run_occupation(cfg: &RunConfig, out_dir: &Path) -> Result<ExitCode> {
    let spec = cfg.build_spec()?;
    let est = occupation_ratio(&spec, cfg.x, cfg.h, cfg.n, cfg.dt, cfg.seed)
        .map_err(|e| anyhow!("{e}"))?;
    output::write_occupation_json(out_dir, cfg.x, cfg.h, &est)?;
    println!(
        "occupation ratio at x = {}: {:.6} ± {:.6}",
        cfg.x, est.mean, est.stderr
    );
    Ok(ExitCode::SUCCESS)
}

fn run_figures(cfg: &RunConfig, out_dir: &Path) -> Result<ExitCode> {
    if cfg.problem_name != "bm-abs" {
        bail!("figures mode supports only the bm-abs builtin");
    }
    if cfg.t_list.is_empty() {
        bail!("figures mode needs t_list in [run]");
    }
    for &t in &cfg.t_list {
        let spec = eqstop_core::diffusion::problems::bm_abs(cfg.discount, t);
        let result = construct_equilibrium(&spec, None, &cfg.grid_config(), &cfg.tolerances())
            .map_err(|e| anyhow!("{e}"))?;
        let span = 5.0 * t.sqrt();
        let path = output::write_figure_csv(out_dir, t, &spec, &result.reward.field, span)?;
        println!("T = {t}: case {:?}, wrote {}", result.case, path.display());
    }
    Ok(ExitCode::SUCCESS)
}
