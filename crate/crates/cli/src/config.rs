//! Run configuration: flat `key = value` text with `[sections]`, strictly
//! parsed (unknown sections or keys are rejected with line numbers).
//! Command-line `--set section.key=value` flags override file keys; the
//! `EQSTOP_OUT_DIR` environment variable supplies the default output
//! directory.

use std::collections::BTreeMap;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};

use eqstop_core::constructor::{ComponentHint, StructureHint};
use eqstop_core::diffusion::{brownian, problems, Payoff, ProblemSpec};
use eqstop_core::strategy::{OpenSetUnion, RateFunction, Strategy};
use eqstop_core::verifier::Tolerances;
use eqstop_core::GridConfig;

use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Construct,
    Verify,
    Fields,
    Simulate,
    Occupation,
    Figures,
}

impl Mode {
    fn parse(s: &str) -> Result<Mode> {
        Ok(match s {
            "construct" => Mode::Construct,
            "verify" => Mode::Verify,
            "fields" => Mode::Fields,
            "simulate" => Mode::Simulate,
            "occupation" => Mode::Occupation,
            "figures" => Mode::Figures,
            other => bail!("unknown mode {other:?}"),
        })
    }

    fn as_str(&self) -> &'static str {
        match self {
            Mode::Construct => "construct",
            Mode::Verify => "verify",
            Mode::Fields => "fields",
            Mode::Simulate => "simulate",
            Mode::Occupation => "occupation",
            Mode::Figures => "figures",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckKind {
    Sufficient,
    Necessary,
}

/// Parsed and validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    // [problem]
    pub problem_name: String,
    pub discount: f64,
    pub horizon: f64,
    pub mu: Option<String>,
    pub sigma: Option<String>,
    pub payoff: Option<String>,
    pub payoff_kinks: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub poly_growth: bool,
    // [run]
    pub mode: Mode,
    pub grid: usize,
    pub complement_grid: usize,
    pub dt: f64,
    pub n: u64,
    pub seed: u64,
    pub tol_value: f64,
    pub tol_derivative: f64,
    pub truncation_radius: Option<f64>,
    pub out_dir: String,
    pub x0: f64,
    pub x: f64,
    pub h: f64,
    pub check: CheckKind,
    pub t_list: Vec<f64>,
    // [strategy]
    pub strategy_d: Option<String>,
    pub strategy_psi: Option<String>,
    // [hint]
    pub hint_components: Option<String>,
}

const PROBLEM_KEYS: &[&str] = &[
    "name",
    "r",
    "T",
    "mu",
    "sigma",
    "payoff",
    "payoff_kinks",
    "alpha",
    "beta",
    "poly_growth",
];
const RUN_KEYS: &[&str] = &[
    "mode",
    "grid",
    "complement_grid",
    "dt",
    "n",
    "seed",
    "tol_value",
    "tol_derivative",
    "truncation_radius",
    "out_dir",
    "x0",
    "x",
    "h",
    "check",
    "t_list",
];
const STRATEGY_KEYS: &[&str] = &["d", "psi"];
const HINT_KEYS: &[&str] = &["components"];

fn parse_float(s: &str) -> Result<f64> {
    match s {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|_| anyhow!("bad number {other:?}")),
    }
}

fn float_to_string(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

impl RunConfig {
    /// Parses config text, applying `overrides` (as `section.key=value`)
    /// afterwards.  Unknown sections/keys and malformed lines are errors.
    pub fn parse(text: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
        let mut raw: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut section = String::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| anyhow!("line {}: unterminated section header", lineno + 1))?
                    .trim()
                    .to_string();
                if !["problem", "run", "strategy", "hint"].contains(&name.as_str()) {
                    bail!("line {}: unknown section [{name}]", lineno + 1);
                }
                section = name;
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", lineno + 1))?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if section.is_empty() {
                bail!("line {}: key {key:?} before any [section]", lineno + 1);
            }
            let allowed: &[&str] = match section.as_str() {
                "problem" => PROBLEM_KEYS,
                "run" => RUN_KEYS,
                "strategy" => STRATEGY_KEYS,
                _ => HINT_KEYS,
            };
            if !allowed.contains(&key.as_str()) {
                bail!(
                    "line {}: unknown key {key:?} in section [{section}]",
                    lineno + 1
                );
            }
            let entry = raw.entry(section.clone()).or_default();
            if entry.insert(key.clone(), value).is_some() {
                bail!(
                    "line {}: duplicate key {key:?} in section [{section}]",
                    lineno + 1
                );
            }
        }
        for (path, value) in overrides {
            let (section, key) = path
                .split_once('.')
                .ok_or_else(|| anyhow!("override {path:?} must be section.key"))?;
            let allowed: &[&str] = match section {
                "problem" => PROBLEM_KEYS,
                "run" => RUN_KEYS,
                "strategy" => STRATEGY_KEYS,
                "hint" => HINT_KEYS,
                other => bail!("override references unknown section {other:?}"),
            };
            if !allowed.contains(&key) {
                bail!("override references unknown key {key:?} in [{section}]");
            }
            raw.entry(section.to_string())
                .or_default()
                .insert(key.to_string(), value.clone());
        }
        RunConfig::from_raw(&raw)
    }

    fn from_raw(raw: &BTreeMap<String, BTreeMap<String, String>>) -> Result<RunConfig> {
        let empty = BTreeMap::new();
        let problem = raw.get("problem").unwrap_or(&empty);
        let run = raw.get("run").unwrap_or(&empty);
        let strategy = raw.get("strategy").unwrap_or(&empty);
        let hint = raw.get("hint").unwrap_or(&empty);

        let get = |m: &BTreeMap<String, String>, k: &str| m.get(k).cloned();
        let problem_name =
            get(problem, "name").ok_or_else(|| anyhow!("[problem] name is required"))?;
        if !["bm-abs", "bm-square", "two-well", "custom"].contains(&problem_name.as_str()) {
            bail!("unknown problem name {problem_name:?}");
        }
        let horizon =
            parse_float(&get(problem, "T").ok_or_else(|| anyhow!("[problem] T is required"))?)?;
        let discount = get(problem, "r")
            .map(|s| parse_float(&s))
            .transpose()?
            .unwrap_or(0.0);
        let out_dir = get(run, "out_dir")
            .or_else(|| std::env::var("EQSTOP_OUT_DIR").ok())
            .unwrap_or_else(|| "out".to_string());

        let cfg = RunConfig {
            problem_name,
            discount,
            horizon,
            mu: get(problem, "mu"),
            sigma: get(problem, "sigma"),
            payoff: get(problem, "payoff"),
            payoff_kinks: get(problem, "payoff_kinks")
                .map(|s| parse_float_list(&s))
                .transpose()?
                .unwrap_or_default(),
            alpha: get(problem, "alpha")
                .map(|s| parse_float(&s))
                .transpose()?
                .unwrap_or(f64::NEG_INFINITY),
            beta: get(problem, "beta")
                .map(|s| parse_float(&s))
                .transpose()?
                .unwrap_or(f64::INFINITY),
            poly_growth: get(problem, "poly_growth")
                .map(|s| parse_bool(&s))
                .transpose()?
                .unwrap_or(true),
            mode: Mode::parse(&get(run, "mode").ok_or_else(|| anyhow!("[run] mode is required"))?)?,
            grid: get(run, "grid")
                .map(|s| parse_usize(&s))
                .transpose()?
                .unwrap_or(2048),
            complement_grid: get(run, "complement_grid")
                .map(|s| parse_usize(&s))
                .transpose()?
                .unwrap_or(256),
            dt: get(run, "dt")
                .map(|s| parse_float(&s))
                .transpose()?
                .unwrap_or(1e-3),
            n: get(run, "n")
                .map(|s| parse_u64(&s))
                .transpose()?
                .unwrap_or(100_000),
            seed: get(run, "seed")
                .map(|s| parse_u64(&s))
                .transpose()?
                .unwrap_or(1),
            tol_value: get(run, "tol_value")
                .map(|s| parse_float(&s))
                .transpose()?
                .unwrap_or(1e-6),
            tol_derivative: get(run, "tol_derivative")
                .map(|s| parse_float(&s))
                .transpose()?
                .unwrap_or(1e-4),
            truncation_radius: get(run, "truncation_radius")
                .map(|s| parse_float(&s))
                .transpose()?,
            out_dir,
            x0: get(run, "x0")
                .map(|s| parse_float(&s))
                .transpose()?
                .unwrap_or(0.0),
            x: get(run, "x")
                .map(|s| parse_float(&s))
                .transpose()?
                .unwrap_or(0.0),
            h: get(run, "h")
                .map(|s| parse_float(&s))
                .transpose()?
                .unwrap_or(0.01),
            check: match get(run, "check").as_deref() {
                None | Some("sufficient") => CheckKind::Sufficient,
                Some("necessary") => CheckKind::Necessary,
                Some(other) => bail!("unknown check kind {other:?}"),
            },
            t_list: get(run, "t_list")
                .map(|s| parse_float_list(&s))
                .transpose()?
                .unwrap_or_default(),
            strategy_d: get(strategy, "d"),
            strategy_psi: get(strategy, "psi"),
            hint_components: get(hint, "components"),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) {
            bail!("T must be > 0");
        }
        if self.discount < 0.0 {
            bail!("r must be >= 0");
        }
        for (name, v) in [
            ("dt", self.dt),
            ("tol_value", self.tol_value),
            ("tol_derivative", self.tol_derivative),
            ("h", self.h),
        ] {
            if !(v > 0.0) {
                bail!("{name} must be > 0");
            }
        }
        if self.grid < 16 {
            bail!("grid must be >= 16");
        }
        if self.n == 0 {
            bail!("n must be > 0");
        }
        if let Some(r) = self.truncation_radius {
            if !(r > 0.0) {
                bail!("truncation_radius must be > 0");
            }
        }
        if self.problem_name == "custom" && self.payoff.is_none() {
            bail!("custom problems need a payoff expression");
        }
        Ok(())
    }

    /// Canonical serialization; `serialize(parse(text))` is idempotent.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("[problem]\n");
        out.push_str(&format!("name = {}\n", self.problem_name));
        out.push_str(&format!("r = {}\n", float_to_string(self.discount)));
        out.push_str(&format!("T = {}\n", float_to_string(self.horizon)));
        if let Some(mu) = &self.mu {
            out.push_str(&format!("mu = {mu}\n"));
        }
        if let Some(sigma) = &self.sigma {
            out.push_str(&format!("sigma = {sigma}\n"));
        }
        if let Some(payoff) = &self.payoff {
            out.push_str(&format!("payoff = {payoff}\n"));
        }
        if !self.payoff_kinks.is_empty() {
            let ks: Vec<String> = self
                .payoff_kinks
                .iter()
                .map(|v| float_to_string(*v))
                .collect();
            out.push_str(&format!("payoff_kinks = {}\n", ks.join(", ")));
        }
        if self.alpha != f64::NEG_INFINITY {
            out.push_str(&format!("alpha = {}\n", float_to_string(self.alpha)));
        }
        if self.beta != f64::INFINITY {
            out.push_str(&format!("beta = {}\n", float_to_string(self.beta)));
        }
        if !self.poly_growth {
            out.push_str("poly_growth = false\n");
        }
        out.push_str("\n[run]\n");
        out.push_str(&format!("mode = {}\n", self.mode.as_str()));
        out.push_str(&format!("grid = {}\n", self.grid));
        out.push_str(&format!("complement_grid = {}\n", self.complement_grid));
        out.push_str(&format!("dt = {}\n", float_to_string(self.dt)));
        out.push_str(&format!("n = {}\n", self.n));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!(
            "tol_value = {}\n",
            float_to_string(self.tol_value)
        ));
        out.push_str(&format!(
            "tol_derivative = {}\n",
            float_to_string(self.tol_derivative)
        ));
        if let Some(r) = self.truncation_radius {
            out.push_str(&format!("truncation_radius = {}\n", float_to_string(r)));
        }
        out.push_str(&format!("out_dir = {}\n", self.out_dir));
        out.push_str(&format!("x0 = {}\n", float_to_string(self.x0)));
        out.push_str(&format!("x = {}\n", float_to_string(self.x)));
        out.push_str(&format!("h = {}\n", float_to_string(self.h)));
        out.push_str(&format!(
            "check = {}\n",
            match self.check {
                CheckKind::Sufficient => "sufficient",
                CheckKind::Necessary => "necessary",
            }
        ));
        if !self.t_list.is_empty() {
            let ts: Vec<String> = self.t_list.iter().map(|v| float_to_string(*v)).collect();
            out.push_str(&format!("t_list = {}\n", ts.join(", ")));
        }
        if self.strategy_d.is_some() || self.strategy_psi.is_some() {
            out.push_str("\n[strategy]\n");
            if let Some(d) = &self.strategy_d {
                out.push_str(&format!("d = {d}\n"));
            }
            if let Some(psi) = &self.strategy_psi {
                out.push_str(&format!("psi = {psi}\n"));
            }
        }
        if let Some(components) = &self.hint_components {
            out.push_str("\n[hint]\n");
            out.push_str(&format!("components = {components}\n"));
        }
        out
    }

    /// Builds the problem spec (builtin or from custom expressions).
    pub fn build_spec(&self) -> Result<ProblemSpec> {
        let spec = match self.problem_name.as_str() {
            "bm-abs" => problems::bm_abs(self.discount, self.horizon),
            "bm-square" => problems::bm_square(self.discount, self.horizon),
            "two-well" => problems::two_well(self.discount, self.horizon),
            "custom" => {
                let payoff_src = self
                    .payoff
                    .as_ref()
                    .ok_or_else(|| anyhow!("custom payoff missing"))?;
                let payoff_expr = Arc::new(Expr::parse(payoff_src).context("payoff expression")?);
                let g = {
                    let e = payoff_expr.clone();
                    Arc::new(move |x: f64| e.eval(x)) as Arc<dyn Fn(f64) -> f64 + Send + Sync>
                };
                let mut kinks = self.payoff_kinks.clone();
                kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
                kinks.dedup();
                let payoff = Payoff::from_closure(g, kinks)
                    .map_err(|e| anyhow!("payoff construction: {e}"))?;
                if self.mu.is_none() && self.sigma.is_none() {
                    let mut spec = brownian(payoff, self.discount, self.horizon);
                    spec.poly_growth = self.poly_growth;
                    return Ok(spec);
                }
                let mu_expr = Arc::new(
                    Expr::parse(self.mu.as_deref().unwrap_or("0")).context("mu expression")?,
                );
                let sigma_expr = Arc::new(
                    Expr::parse(self.sigma.as_deref().unwrap_or("1"))
                        .context("sigma expression")?,
                );
                let mu = {
                    let e = mu_expr;
                    Arc::new(move |x: f64| e.eval(x)) as Arc<dyn Fn(f64) -> f64 + Send + Sync>
                };
                let sigma = {
                    let e = sigma_expr;
                    Arc::new(move |x: f64| e.eval(x)) as Arc<dyn Fn(f64) -> f64 + Send + Sync>
                };
                let mut spec = ProblemSpec::new(
                    self.alpha,
                    self.beta,
                    mu,
                    sigma,
                    self.discount,
                    payoff,
                    self.horizon,
                )
                .map_err(|e| anyhow!("problem spec: {e}"))?;
                spec.poly_growth = self.poly_growth;
                spec
            }
            other => bail!("unknown problem {other:?}"),
        };
        Ok(spec)
    }

    /// Parses the `[strategy]` section into a strategy.
    pub fn build_strategy(&self) -> Result<Strategy> {
        let d_src = self
            .strategy_d
            .as_ref()
            .ok_or_else(|| anyhow!("[strategy] d is required for this mode"))?;
        let domain = parse_intervals(d_src)?;
        let rate = match &self.strategy_psi {
            None => RateFunction::zero(),
            Some(src) => parse_rate(src)?,
        };
        Ok(Strategy::new(domain, rate, self.horizon))
    }

    pub fn build_hint(&self) -> Result<Option<StructureHint>> {
        let Some(src) = &self.hint_components else {
            return Ok(None);
        };
        let mut components = Vec::new();
        for part in src.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let inner = part
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| {
                    anyhow!("hint component {part:?} must be (lo, hi, center, randomize)")
                })?;
            let fields: Vec<&str> = inner.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                bail!("hint component {part:?} must have 4 fields");
            }
            components.push(ComponentHint {
                window: (parse_float(fields[0])?, parse_float(fields[1])?),
                center: parse_float(fields[2])?,
                randomize: parse_bool(fields[3])?,
            });
        }
        Ok(Some(StructureHint { components }))
    }

    pub fn grid_config(&self) -> GridConfig {
        GridConfig {
            nodes_per_component: self.grid,
            complement_nodes: self.complement_grid,
            truncation_radius: self.truncation_radius,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            value: self.tol_value,
            derivative: self.tol_derivative,
        }
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => bail!("bad boolean {other:?}"),
    }
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse().map_err(|_| anyhow!("bad integer {s:?}"))
}

fn parse_u64(s: &str) -> Result<u64> {
    s.parse().map_err(|_| anyhow!("bad integer {s:?}"))
}

fn parse_float_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|p| parse_float(p.trim())).collect()
}

/// Intervals as `(l, u); (l, u)`; `-inf`/`inf` endpoints allowed.  `none`
/// yields the empty set and `all` the whole state space.
pub fn parse_intervals(s: &str) -> Result<OpenSetUnion> {
    let s = s.trim();
    if s == "none" {
        return Ok(OpenSetUnion::empty());
    }
    if s == "all" {
        return Ok(OpenSetUnion::full());
    }
    let mut intervals = Vec::new();
    for part in s.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let inner = part
            .strip_prefix('(')
            .and_then(|p| p.strip_suffix(')'))
            .ok_or_else(|| anyhow!("interval {part:?} must look like (l, u)"))?;
        let (l, u) = inner
            .split_once(',')
            .ok_or_else(|| anyhow!("interval {part:?} must have two endpoints"))?;
        intervals.push((parse_float(l.trim())?, parse_float(u.trim())?));
    }
    OpenSetUnion::new(intervals).map_err(|e| anyhow!("bad strategy domain: {e}"))
}

/// Rate pieces as `breakpoint: value` pairs separated by commas; each value
/// applies from its breakpoint (inclusive) to the next.  A leading pair with
/// breakpoint `-inf` sets the value below the first real breakpoint.
pub fn parse_rate(s: &str) -> Result<RateFunction> {
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (bp, v) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("rate piece {part:?} must look like breakpoint:value"))?;
        pairs.push((parse_float(bp.trim())?, parse_float(v.trim())?));
    }
    let mut leading = 0.0;
    if let Some(&(bp, v)) = pairs.first() {
        if bp == f64::NEG_INFINITY {
            leading = v;
            pairs.remove(0);
        }
    }
    let breakpoints: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut values = vec![leading];
    values.extend(pairs.iter().map(|p| p.1));
    RateFunction::new(breakpoints, values).map_err(|e| anyhow!("bad rate: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
[problem]
name = bm-abs
r = 0.01
T = 10

[run]
mode = construct
seed = 7
";

    #[test]
    fn parse_and_canonical_roundtrip() {
        let cfg = RunConfig::parse(SAMPLE, &[]).unwrap();
        assert_eq!(cfg.problem_name, "bm-abs");
        assert_eq!(cfg.discount, 0.01);
        assert_eq!(cfg.seed, 7);
        let text1 = cfg.to_text();
        let cfg2 = RunConfig::parse(&text1, &[]).unwrap();
        let text2 = cfg2.to_text();
        assert_eq!(text1, text2, "canonical form must be a fixed point");
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let bad = "[problem]\nname = bm-abs\nT = 1\nbogus = 3\n[run]\nmode = construct\n";
        let err = RunConfig::parse(bad, &[]).unwrap_err().to_string();
        assert!(err.contains("line 4"), "{err}");
        assert!(err.contains("bogus"), "{err}");
        let bad2 = "[nonsense]\nkey = 1\n";
        assert!(RunConfig::parse(bad2, &[]).is_err());
    }

    #[test]
    fn overrides_win() {
        let cfg = RunConfig::parse(
            SAMPLE,
            &[
                ("run.seed".into(), "99".into()),
                ("problem.T".into(), "5".into()),
            ],
        )
        .unwrap();
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.horizon, 5.0);
        assert!(RunConfig::parse(SAMPLE, &[("run.bogus".into(), "1".into())]).is_err());
    }

    #[test]
    fn strategy_parsing() {
        let d = parse_intervals("(-2, 2); (3, inf)").unwrap();
        assert_eq!(d.intervals(), &[(-2.0, 2.0), (3.0, f64::INFINITY)]);
        let psi = parse_rate("-1: 0.25, 1: 0").unwrap();
        assert_eq!(psi.value(0.0), 0.25);
        assert_eq!(psi.value(1.5), 0.0);
        assert_eq!(psi.value(-3.0), 0.0);
        let full = parse_rate("-inf: 0.5").unwrap();
        assert_eq!(full.value(-100.0), 0.5);
        assert!(parse_rate("nonsense").is_err());
    }

    #[test]
    fn custom_problem_builds() {
        let text = "\
[problem]
name = custom
T = 1
r = 0.1
payoff = abs(x - 1)
payoff_kinks = 1

[run]
mode = fields

[strategy]
d = (0, 2)
";
        let cfg = RunConfig::parse(text, &[]).unwrap();
        let spec = cfg.build_spec().unwrap();
        assert_eq!(spec.payoff.value(3.0), 2.0);
        assert_eq!(spec.payoff.value(1.0), 0.0);
        let strat = cfg.build_strategy().unwrap();
        assert_eq!(strat.domain.intervals(), &[(0.0, 2.0)]);
    }

    #[test]
    fn knob_validation() {
        let bad = "[problem]\nname = bm-abs\nT = -1\n[run]\nmode = construct\n";
        assert!(RunConfig::parse(bad, &[]).is_err());
        let bad = "[problem]\nname = bm-abs\nT = 1\n[run]\nmode = construct\ndt = 0\n";
        assert!(RunConfig::parse(bad, &[]).is_err());
    }

    #[test]
    fn hint_parsing() {
        let text = "\
[problem]
name = two-well
r = 0.72
T = 1

[run]
mode = construct

[hint]
components = (-3, -1, -2, false); (1, 3, 2, false)
";
        let cfg = RunConfig::parse(text, &[]).unwrap();
        let hint = cfg.build_hint().unwrap().unwrap();
        assert_eq!(hint.components.len(), 2);
        assert_eq!(hint.components[1].center, 2.0);
        assert!(!hint.components[1].randomize);
    }
}
