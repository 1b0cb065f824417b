//! Guess-and-verify construction of equilibrium strategies.
//!
//! Case logic:
//!  1. Unconstrained: per hinted component, solve the unconstrained stopping
//!     problem restricted to a symmetric threshold structure by smooth fit
//!     (shooting the even solution of `(A - r) w = 0` from the component
//!     center).  If the resulting pure strategy satisfies `max e <= T`, done.
//!  2. Submartingale: if a discrete certificate shows `(A - r) g >= 0`
//!     (with convex kinks only) for a continuous payoff of polynomial
//!     growth, randomize everywhere at rate 1/T.
//!  3. Free boundary: for each randomizing component, solve the
//!     three-condition boundary system `A e = -1`, `e(dD) = 0`, `e(a) = T`,
//!     `e'(a) = 0` by shooting in the inner boundary, nested inside a
//!     root-find on the outer boundary enforcing smooth fit of the reward.
//!     For standard Brownian motion with a local |x - center| payoff the
//!     outer root is taken on the closed-form smooth-fit function instead,
//!     which pins the boundary to near machine precision.
//!
//! Every constructed strategy is run through the sufficient-condition
//! verifier before being returned; a failing report is attached rather than
//! silently dropped.

use serde::Serialize;

use crate::diffusion::{ProblemSpec, Side};
use crate::error::{Error, Result};
use crate::expected_time::{check_constraint, expected_time_field, ExpectedTime};
use crate::layout::GridConfig;
use crate::ode::one_sided_derivative;
use crate::reward::{reward_field, Reward};
use crate::strategy::{OpenSetUnion, RateFunction, Strategy};
use crate::verifier::{check_sufficient, Tolerances, VerificationReport};

/// Bracketed scalar root finder: bisection with secant acceleration,
/// deterministic, returns the evaluation point with the smallest |f| once the
/// bracket width drops below `tol`.
pub fn find_root(f: impl Fn(f64) -> f64, lo0: f64, hi0: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo0, hi0);
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::Numeric {
            lo,
            hi,
            msg: "non-finite bracket values".into(),
        });
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(Error::NoBracket { lo, hi });
    }
    let (mut best_x, mut best_f) = if flo.abs() < fhi.abs() {
        (lo, flo.abs())
    } else {
        (hi, fhi.abs())
    };
    let mut prev_width = hi - lo;
    for iter in 0..256 {
        let width = hi - lo;
        if width <= tol {
            break;
        }
        let mut x = if fhi != flo {
            (lo * fhi - hi * flo) / (fhi - flo)
        } else {
            0.5 * (lo + hi)
        };
        let margin = 1e-3 * width;
        if !(x > lo + margin && x < hi - margin) {
            x = 0.5 * (lo + hi);
        }
        // force at least bisection-rate bracket shrinkage
        if iter % 2 == 1 {
            if width > 0.5 * prev_width {
                x = 0.5 * (lo + hi);
            }
            prev_width = width;
        }
        let fx = f(x);
        if !fx.is_finite() {
            return Err(Error::Numeric {
                lo,
                hi,
                msg: format!("f({x}) is not finite"),
            });
        }
        if fx.abs() < best_f {
            best_f = fx.abs();
            best_x = x;
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if flo * fx < 0.0 {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
    }
    Ok(best_x)
}

/// The unique positive solution of `z tanh(z) = 1`.
pub fn z_tilde() -> f64 {
    find_root(|z| z * z.tanh() - 1.0, 0.5, 2.0, 1e-14).expect("bracket is valid")
}

/// Pure-threshold radius for Brownian motion with payoff |x| and discount r:
/// `z_tilde / sqrt(2 r)`.
pub fn unconstrained_threshold_bm(r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("need r > 0, got {r}")));
    }
    Ok(z_tilde() / (2.0 * r).sqrt())
}

/// Smooth-fit function for the Brownian |x| free-boundary regime; its unique
/// zero in `(sqrt(T), inf)` is the outer boundary b*.
pub fn smooth_fit_residual_bm(r: f64, horizon: f64, b: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("need r > 0, got {r}")));
    }
    let zt = z_tilde();
    if r * horizon >= 0.5 * zt * zt {
        return Err(Error::Domain(format!(
            "free-boundary regime needs r T < z~^2/2, got r T = {}",
            r * horizon
        )));
    }
    let sqrt_t = horizon.sqrt();
    if b < sqrt_t {
        return Err(Error::Domain(format!("need b >= sqrt(T), got b = {b}")));
    }
    let gamma = (2.0 * (r + 1.0 / horizon)).sqrt();
    let s2r = (2.0 * r).sqrt();
    let s2rt = (2.0 * r * horizon).sqrt();
    let rt1 = r * horizon + 1.0;
    let a = b - sqrt_t;
    let bracket1 =
        b * s2rt.cosh() - s2rt.sinh() / s2r - a / rt1 - (-gamma * a).exp() / (gamma * rt1);
    let bracket2 = s2r * b * s2rt.sinh() - s2rt.cosh() + (1.0 - (-gamma * a).exp()) / rt1;
    Ok(gamma * (gamma * a).sinh() * bracket1 + (gamma * a).cosh() * bracket2)
}

/// Outer boundary b* of the Brownian |x| free-boundary equilibrium: the root
/// of [`smooth_fit_residual_bm`] above `sqrt(T)`.
pub fn free_boundary_bm(r: f64, horizon: f64) -> Result<f64> {
    let sqrt_t = horizon.sqrt();
    let mut hi = 2.0 * sqrt_t.max(1.0);
    let ell = |b: f64| smooth_fit_residual_bm(r, horizon, b).unwrap_or(f64::NAN);
    let mut tries = 0;
    while ell(hi) <= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::NoBracket { lo: sqrt_t, hi });
        }
    }
    find_root(ell, sqrt_t, hi, 1e-12)
}

/// Component skeleton for the guess: a rough window, the local symmetry
/// center, and whether this component randomizes in the free-boundary case.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComponentHint {
    pub window: (f64, f64),
    pub center: f64,
    pub randomize: bool,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct StructureHint {
    pub components: Vec<ComponentHint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    Unconstrained,
    Submartingale,
    FreeBoundary,
}

#[derive(Debug, Clone)]
pub struct ConstructionResult {
    pub case: CaseTag,
    pub strategy: Strategy,
    pub e: ExpectedTime,
    pub reward: Reward,
    pub boundaries: Vec<(String, f64)>,
    pub residuals: Vec<(String, f64)>,
    pub report: VerificationReport,
    pub warnings: Vec<String>,
}

// ---------------------------------------------------------------------------
// shooting primitives
// ---------------------------------------------------------------------------

/// Even solution of `(A - r) w = 0` shot from `center` with w = 1, w' = 0;
/// returns (w, w') at `center + c` (c may be negative).
fn shoot_even(spec: &ProblemSpec, center: f64, c: f64) -> (f64, f64) {
    let steps = (c.abs() * 2048.0).ceil().max(512.0).min(65536.0) as usize;
    let h = c / steps as f64;
    let r = spec.discount;
    let deriv = |x: f64, w: f64, dw: f64| {
        let sig2 = spec.volatility(x).powi(2);
        (dw, 2.0 * (r * w - spec.drift(x) * dw) / sig2)
    };
    let mut w = 1.0_f64;
    let mut dw = 0.0_f64;
    let mut x = center;
    for _ in 0..steps {
        let (k1w, k1d) = deriv(x, w, dw);
        let (k2w, k2d) = deriv(x + 0.5 * h, w + 0.5 * h * k1w, dw + 0.5 * h * k1d);
        let (k3w, k3d) = deriv(x + 0.5 * h, w + 0.5 * h * k2w, dw + 0.5 * h * k2d);
        let (k4w, k4d) = deriv(x + h, w + h * k3w, dw + h * k3d);
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        dw += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        x += h;
    }
    (w, dw)
}

/// Solution of `A e = -1` shot from `a` with e(a) = T, e'(a) = 0; returns
/// e at `b`.
fn shoot_expected_time(spec: &ProblemSpec, horizon: f64, a: f64, b: f64) -> f64 {
    let steps = ((b - a).abs() * 2048.0).ceil().max(512.0).min(65536.0) as usize;
    let h = (b - a) / steps as f64;
    let deriv = |x: f64, _e: f64, de: f64| {
        let sig2 = spec.volatility(x).powi(2);
        (de, 2.0 * (-1.0 - spec.drift(x) * de) / sig2)
    };
    let mut e = horizon;
    let mut de = 0.0_f64;
    let mut x = a;
    for _ in 0..steps {
        let (k1e, k1d) = deriv(x, e, de);
        let (k2e, k2d) = deriv(x + 0.5 * h, e + 0.5 * h * k1e, de + 0.5 * h * k1d);
        let (k3e, k3d) = deriv(x + 0.5 * h, e + 0.5 * h * k2e, de + 0.5 * h * k2d);
        let (k4e, k4d) = deriv(x + h, e + h * k3e, de + h * k3d);
        e += h / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e);
        de += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        x += h;
    }
    e
}

// ---------------------------------------------------------------------------
// case 1: unconstrained smooth-fit threshold
// ---------------------------------------------------------------------------

/// Smooth-fit threshold offset for a symmetric component: the root c of
/// `w'(c) g(center + c) - w(c) g'(center + c) = 0`.  None when no root exists
/// inside the window (e.g. r = 0 with a submartingale payoff).
fn unconstrained_offset(spec: &ProblemSpec, hint: &ComponentHint) -> Option<f64> {
    let reach = (hint.window.1 - hint.center).min(hint.center - hint.window.0);
    if !(reach > 0.0) {
        return None;
    }
    let residual = |c: f64| {
        let (w, dw) = shoot_even(spec, hint.center, c);
        let edge = hint.center + c;
        dw * spec.payoff.value(edge) - w * spec.payoff.derivative(edge, Side::Right)
    };
    let c_min = 1e-6 * reach;
    let c_max = reach * (1.0 - 1e-6);
    let scan = 48;
    let mut prev_c = c_min;
    let mut prev_f = residual(prev_c);
    for k in 1..=scan {
        let c = c_min + (c_max - c_min) * k as f64 / scan as f64;
        let fc = residual(c);
        if prev_f == 0.0 {
            return Some(prev_c);
        }
        if prev_f.is_finite() && fc.is_finite() && prev_f * fc < 0.0 {
            return find_root(residual, prev_c, c, 1e-12).ok();
        }
        prev_c = c;
        prev_f = fc;
    }
    None
}

// ---------------------------------------------------------------------------
// case 2: submartingale certificate
// ---------------------------------------------------------------------------

/// Discrete certificate that `(e^{-rt} g(X_t))` is a submartingale:
/// `(A - r) g >= 0` on a dense grid, convex kinks only, continuous payoff of
/// polynomial growth.
pub fn submartingale_certificate(spec: &ProblemSpec) -> bool {
    if !spec.poly_growth {
        return false;
    }
    let g = &spec.payoff;
    for &k in g.breakpoints() {
        if !g.is_continuous_at(k) {
            return false;
        }
        if g.derivative(k, Side::Right) < g.derivative(k, Side::Left) - 1e-9 {
            return false;
        }
    }
    let mut refs: Vec<f64> = g.breakpoints().to_vec();
    refs.push(0.0);
    let (lo, hi) = spec.truncated_window(&refs, None);
    let grid = crate::ode::build_grid(lo, hi, g.breakpoints(), 512);
    let is_break = |x: f64| {
        g.breakpoints()
            .iter()
            .any(|&b| (b - x).abs() <= 1e-12 * x.abs().max(1.0))
    };
    for &x in &grid {
        if is_break(x) || !spec.contains(x) {
            continue;
        }
        let val = spec.drift(x) * g.derivative(x, Side::Right)
            + 0.5 * spec.volatility(x).powi(2) * g.second_derivative(x, Side::Right)
            - spec.discount * g.value(x);
        let scale = g.value(x).abs().max(1.0);
        if val < -1e-9 * scale {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// case 3: free-boundary solves
// ---------------------------------------------------------------------------

fn is_standard_bm(spec: &ProblemSpec, window: (f64, f64)) -> bool {
    let (lo, hi) = window;
    (0..=8).all(|k| {
        let x = lo + (hi - lo) * k as f64 / 8.0;
        spec.drift(x).abs() <= 1e-12 && (spec.volatility(x) - 1.0).abs() <= 1e-12
    })
}

/// Does the payoff look like |x - center| out to `reach` on both sides?
fn is_local_abs_payoff(spec: &ProblemSpec, center: f64, reach: f64) -> bool {
    if spec.payoff.value(center).abs() > 1e-12 {
        return false;
    }
    for k in 1..=8 {
        let d = reach * k as f64 / 8.0;
        let scale = d.max(1.0);
        if (spec.payoff.value(center + d) - d).abs() > 1e-10 * scale
            || (spec.payoff.value(center - d) - d).abs() > 1e-10 * scale
        {
            return false;
        }
    }
    true
}

struct FreeBoundaryComponent {
    inner: f64, // a > 0, offset of the randomization boundary
    outer: f64, // b > a, offset of the stopping boundary
    analytic: bool,
    extra_inner_roots: usize,
    ell_residual: Option<f64>,
}

/// Inner solve of the boundary system: given the outer offset `c`, find the
/// randomization offset `a` in (0, c) with e(center+c) = 0 for the shot
/// solution e(center+a) = T, e'(center+a) = 0 of `A e = -1`.  Scans a ladder
/// and reports every sign change (the boundary system is not known to have a
/// unique solution); the first root is used.
fn inner_boundary(spec: &ProblemSpec, horizon: f64, center: f64, c: f64) -> Option<(f64, usize)> {
    let shoot = |a: f64| shoot_expected_time(spec, horizon, center + a, center + c);
    let scan = 64;
    let a_min = 1e-9 * c.max(1.0);
    let mut roots = Vec::new();
    let mut prev_a = a_min;
    let mut prev_f = shoot(prev_a);
    for k in 1..=scan {
        let a = a_min + (c * (1.0 - 1e-9) - a_min) * k as f64 / scan as f64;
        let fa = shoot(a);
        if prev_f * fa < 0.0 || fa == 0.0 {
            if let Ok(root) = find_root(shoot, prev_a, a, 1e-12) {
                roots.push(root);
            }
        }
        prev_a = a;
        prev_f = fa;
    }
    roots.first().map(|&a| (a, roots.len().saturating_sub(1)))
}

/// Full numeric free-boundary solve for a symmetric component: nested
/// root-find on the outer boundary enforcing reward smooth fit.
fn free_boundary_numeric(
    spec: &ProblemSpec,
    horizon: f64,
    hint: &ComponentHint,
    warnings: &mut Vec<String>,
) -> Result<FreeBoundaryComponent> {
    let center = hint.center;
    let reach = (hint.window.1 - center).min(center - hint.window.0);
    let coarse = GridConfig {
        nodes_per_component: 768,
        complement_nodes: 24,
        truncation_radius: None,
    };

    let smooth_fit = |c: f64| -> Option<f64> {
        let (a, _) = inner_boundary(spec, horizon, center, c)?;
        let strat = Strategy::new(
            OpenSetUnion::interval(center - c, center + c).ok()?,
            RateFunction::indicator(center - a, center + a, 1.0 / horizon).ok()?,
            horizon,
        );
        let rew = reward_field(spec, &strat, &coarse).ok()?;
        let edge = center + c;
        let dj = one_sided_derivative(&rew.field, edge, Side::Left, 1).ok()?;
        Some(dj - spec.payoff.derivative(edge, Side::Right))
    };

    // ladder scan for an outer bracket; inner solvability bounds the domain
    let scan = 48;
    let mut bracket: Option<(f64, f64, f64, f64)> = None;
    let mut prev: Option<(f64, f64)> = None;
    let mut outer_sign_changes = 0;
    for k in 1..=scan {
        let c = reach * 0.02 + (reach * 0.97) * k as f64 / scan as f64;
        match smooth_fit(c) {
            Some(fc) if fc.is_finite() => {
                if let Some((pc, pf)) = prev {
                    if pf * fc < 0.0 {
                        outer_sign_changes += 1;
                        if bracket.is_none() {
                            bracket = Some((pc, c, pf, fc));
                        }
                    }
                }
                prev = Some((c, fc));
            }
            _ => prev = None,
        }
    }
    if outer_sign_changes > 1 {
        warnings.push(format!(
            "outer smooth-fit scan found {outer_sign_changes} sign changes for component at {center}; using the first"
        ));
    }
    let (blo, bhi, _, _) = bracket.ok_or_else(|| {
        Error::Construction(format!(
            "no smooth-fit root for the free boundary of the component at {center}"
        ))
    })?;
    let c_star = find_root(|c| smooth_fit(c).unwrap_or(f64::NAN), blo, bhi, 1e-9)?;
    let (a_star, extra) = inner_boundary(spec, horizon, center, c_star)
        .ok_or_else(|| Error::Construction("inner boundary lost at the outer root".into()))?;
    if extra > 0 {
        warnings.push(format!(
            "inner boundary system has {} extra solutions for component at {center}",
            extra
        ));
    }
    Ok(FreeBoundaryComponent {
        inner: a_star,
        outer: c_star,
        analytic: false,
        extra_inner_roots: extra,
        ell_residual: None,
    })
}

fn free_boundary_component(
    spec: &ProblemSpec,
    horizon: f64,
    hint: &ComponentHint,
    warnings: &mut Vec<String>,
) -> Result<FreeBoundaryComponent> {
    // analytic route for the standard Brownian |x - center| family
    if spec.discount > 0.0 && is_standard_bm(spec, hint.window) {
        if let Ok(b) = free_boundary_bm(spec.discount, horizon) {
            if b < (hint.window.1 - hint.center).min(hint.center - hint.window.0)
                && is_local_abs_payoff(spec, hint.center, b + 0.25)
            {
                let ell = smooth_fit_residual_bm(spec.discount, horizon, b)?;
                return Ok(FreeBoundaryComponent {
                    inner: b - horizon.sqrt(),
                    outer: b,
                    analytic: true,
                    extra_inner_roots: 0,
                    ell_residual: Some(ell),
                });
            }
        }
    }
    free_boundary_numeric(spec, horizon, hint, warnings)
}

// ---------------------------------------------------------------------------
// construction driver
// ---------------------------------------------------------------------------

fn auto_hint(spec: &ProblemSpec) -> Result<StructureHint> {
    // accept a hint-free call only for problems symmetric about 0
    let scale = spec.truncation_radius() / 10.0;
    let symmetric = [0.31, 0.77, 1.3, 2.9].iter().all(|&t| {
        let x = t * scale;
        spec.contains(x)
            && spec.contains(-x)
            && (spec.drift(x) + spec.drift(-x)).abs() <= 1e-9 * x.abs().max(1.0)
            && (spec.volatility(x) - spec.volatility(-x)).abs() <= 1e-9
            && (spec.payoff.value(x) - spec.payoff.value(-x)).abs()
                <= 1e-9 * spec.payoff.value(x).abs().max(1.0)
    });
    if !symmetric {
        return Err(Error::Construction(
            "structure hint required: problem is not symmetric about 0".into(),
        ));
    }
    let window = spec.truncated_window(&[0.0], None);
    Ok(StructureHint {
        components: vec![ComponentHint {
            window,
            center: 0.0,
            randomize: true,
        }],
    })
}

fn assemble_result(
    spec: &ProblemSpec,
    case: CaseTag,
    strategy: Strategy,
    boundaries: Vec<(String, f64)>,
    mut residuals: Vec<(String, f64)>,
    mut warnings: Vec<String>,
    cfg: &GridConfig,
    tols: &Tolerances,
) -> Result<ConstructionResult> {
    let violations = strategy.validate(true);
    if !violations.is_empty() {
        return Err(Error::InvalidStrategy(format!("{violations:?}")));
    }
    let e = expected_time_field(spec, &strategy, cfg)?;
    let reward = reward_field(spec, &strategy, cfg)?;
    let refined_cfg = cfg.refined();
    let e_ref = expected_time_field(spec, &strategy, &refined_cfg)?;
    let j_ref = reward_field(spec, &strategy, &refined_cfg)?;
    let report = check_sufficient(
        spec,
        &strategy,
        &e.field,
        &reward.field,
        Some((&e_ref.field, &j_ref.field)),
        tols,
    )?;
    warnings.extend(e.warnings.iter().cloned());
    warnings.extend(reward.warnings.iter().cloned());
    if let Some(dev) = e.randomization_max_dev {
        residuals.push(("expected_time_cross_check_dev".into(), dev));
    }
    // boundary-system residuals from the solved fields
    for (s, en) in strategy.rate.positive_pieces() {
        if s.is_finite() && strategy.domain.contains(s) {
            residuals.push((
                format!("e_slope_at_{s}"),
                one_sided_derivative(&e.field, s, Side::Left, 1).unwrap_or(f64::NAN),
            ));
            residuals.push((
                format!("e_dev_at_{s}"),
                e.field.value_at(s) - strategy.horizon,
            ));
        }
        if en.is_finite() && strategy.domain.contains(en) {
            residuals.push((
                format!("e_slope_at_{en}"),
                one_sided_derivative(&e.field, en, Side::Right, 1).unwrap_or(f64::NAN),
            ));
            residuals.push((
                format!("e_dev_at_{en}"),
                e.field.value_at(en) - strategy.horizon,
            ));
        }
    }
    for p in strategy.domain.boundary_points(spec.alpha, spec.beta) {
        residuals.push((format!("e_at_boundary_{p}"), e.field.value_at(p)));
    }
    if !report.overall {
        let failing: Vec<&str> = report
            .conditions
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        warnings.push(format!(
            "not verified as an equilibrium; failing conditions: {failing:?}"
        ));
    }
    Ok(ConstructionResult {
        case,
        strategy,
        e,
        reward,
        boundaries,
        residuals,
        report,
        warnings,
    })
}

/// Runs the construction scheme.  A structure hint is required unless the
/// problem is symmetric about 0 (then a single symmetric component is
/// assumed).
pub fn construct_equilibrium(
    spec: &ProblemSpec,
    hint: Option<&StructureHint>,
    cfg: &GridConfig,
    tols: &Tolerances,
) -> Result<ConstructionResult> {
    let hint = match hint {
        Some(h) if !h.components.is_empty() => h.clone(),
        _ => auto_hint(spec)?,
    };
    let horizon = spec.horizon;
    let mut warnings = Vec::new();

    // --- case 1: unconstrained threshold structure -------------------------
    let offsets: Vec<Option<f64>> = hint
        .components
        .iter()
        .map(|h| unconstrained_offset(spec, h))
        .collect();
    if offsets.iter().all(|o| o.is_some()) {
        let intervals: Vec<(f64, f64)> = hint
            .components
            .iter()
            .zip(&offsets)
            .map(|(h, o)| {
                let c = o.unwrap();
                (h.center - c, h.center + c)
            })
            .collect();
        let strategy = Strategy::pure_exit(OpenSetUnion::new(intervals.clone())?, horizon);
        let e = expected_time_field(spec, &strategy, cfg)?;
        let constraint = check_constraint(&e.field, horizon, 1e-9 * horizon.max(1.0));
        if constraint.pass {
            let mut boundaries = Vec::new();
            for (k, (h, o)) in hint.components.iter().zip(&offsets).enumerate() {
                boundaries.push((format!("x_tilde_{k}"), o.unwrap()));
                boundaries.push((format!("d{k}_lo"), h.center - o.unwrap()));
                boundaries.push((format!("d{k}_hi"), h.center + o.unwrap()));
            }
            return assemble_result(
                spec,
                CaseTag::Unconstrained,
                strategy,
                boundaries,
                vec![("max_e_minus_T".into(), constraint.max_value - horizon)],
                warnings,
                cfg,
                tols,
            );
        }
        warnings.push(format!(
            "unconstrained threshold structure violates the budget (max e = {:.6} > T = {horizon}); falling through",
            constraint.max_value
        ));
    }

    // --- case 2: submartingale ---------------------------------------------
    if submartingale_certificate(spec) {
        let strategy = Strategy::new(
            OpenSetUnion::full(),
            RateFunction::constant(1.0 / horizon),
            horizon,
        );
        return assemble_result(
            spec,
            CaseTag::Submartingale,
            strategy,
            vec![],
            vec![],
            warnings,
            cfg,
            tols,
        );
    }

    // --- case 3: free boundary ---------------------------------------------
    if !hint.components.iter().any(|h| h.randomize) {
        return Err(Error::Construction(
            "no admissible case: unconstrained structure is inadmissible or absent, the payoff is not a certified submartingale, and no component is hinted to randomize"
                .into(),
        ));
    }
    let mut intervals = Vec::new();
    let mut rate_breaks: Vec<(f64, f64)> = Vec::new(); // (start, end) of 1/T pieces
    let mut boundaries = Vec::new();
    let mut residuals = Vec::new();
    for (k, h) in hint.components.iter().enumerate() {
        if h.randomize {
            let fb = free_boundary_component(spec, horizon, h, &mut warnings)?;
            intervals.push((h.center - fb.outer, h.center + fb.outer));
            rate_breaks.push((h.center - fb.inner, h.center + fb.inner));
            boundaries.push((format!("b_star_{k}"), h.center + fb.outer));
            boundaries.push((format!("a_star_{k}"), h.center + fb.inner));
            boundaries.push((format!("b_offset_{k}"), fb.outer));
            boundaries.push((format!("a_offset_{k}"), fb.inner));
            if let Some(ell) = fb.ell_residual {
                residuals.push((format!("ell_at_b_star_{k}"), ell));
            }
            if fb.analytic {
                residuals.push((
                    format!("inner_matches_b_minus_sqrt_T_{k}"),
                    fb.inner - (fb.outer - horizon.sqrt()),
                ));
            }
            if fb.extra_inner_roots > 0 {
                residuals.push((
                    format!("extra_inner_roots_{k}"),
                    fb.extra_inner_roots as f64,
                ));
            }
        } else {
            let c = unconstrained_offset(spec, h).ok_or_else(|| {
                Error::Construction(format!(
                    "component at {} neither randomizes nor admits a smooth-fit threshold",
                    h.center
                ))
            })?;
            intervals.push((h.center - c, h.center + c));
            boundaries.push((format!("x_tilde_{k}"), c));
        }
    }
    let domain = OpenSetUnion::new(intervals)?;
    let mut breakpoints = Vec::new();
    let mut values = vec![0.0];
    rate_breaks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (s, e) in rate_breaks {
        breakpoints.push(s);
        values.push(1.0 / horizon);
        breakpoints.push(e);
        values.push(0.0);
    }
    let rate = RateFunction::new(breakpoints, values)?;
    let strategy = Strategy::new(domain, rate, horizon);
    assemble_result(
        spec,
        CaseTag::FreeBoundary,
        strategy,
        boundaries,
        residuals,
        warnings,
        cfg,
        tols,
    )
}
