//! Reward functional J(x) = E_x[e^{-r tau} g(X_tau)], computed per component
//! of D from the ODE `(A - r) J = psi (J - g̅)` where `g̅ = ½(g(x-) + g(x+))`,
//! i.e. `(A - r - psi) J = -psi g̅`, with `J = g` on the stopping region and
//! Dirichlet value pasting at finite component endpoints.  Components are
//! solved as a single linear system each, so C¹ pasting at interior rate
//! breakpoints holds to discretization order.  Truncated infinite edges use
//! the Robin condition `J' = g'` with a truncation-sensitivity report.

use crate::diffusion::{ProblemSpec, Side};
use crate::error::{Error, Result};
use crate::layout::{layout, ClippedComponent, GridConfig, Layout};
use crate::ode::{solve_linear_bvp_on_grid, BoundaryCondition, Field};
use crate::strategy::Strategy;

#[derive(Debug, Clone)]
pub struct Reward {
    pub field: Field,
    /// Max change of the field when the truncation radius grows by 30%
    /// (only reported when a component touches a truncation cut).
    pub truncation_sensitivity: Option<f64>,
    pub warnings: Vec<String>,
}

fn solve_component(
    spec: &ProblemSpec,
    strat: &Strategy,
    lay: &Layout,
    comp: &ClippedComponent,
) -> Result<Vec<f64>> {
    let r = spec.discount;
    let rate_on_component = strat
        .rate
        .positive_pieces()
        .iter()
        .any(|&(s, e)| s < comp.hi && e > comp.lo);
    if r == 0.0 && !rate_on_component && (comp.lo_truncated || comp.hi_truncated) {
        return Err(Error::NonIntegrableHorizon(format!(
            "r = 0 and psi = 0 on the unbounded component ({}, {})",
            comp.lo, comp.hi
        )));
    }
    let g = &spec.payoff;
    let left = if comp.lo_truncated {
        BoundaryCondition::Robin {
            a: 0.0,
            b: 1.0,
            c: g.derivative(comp.lo, Side::Left),
        }
    } else {
        BoundaryCondition::Dirichlet(g.value(comp.lo))
    };
    let right = if comp.hi_truncated {
        BoundaryCondition::Robin {
            a: 0.0,
            b: 1.0,
            c: g.derivative(comp.hi, Side::Right),
        }
    } else {
        BoundaryCondition::Dirichlet(g.value(comp.hi))
    };
    let (i0, i1) = lay.slice_indices(comp.lo, comp.hi);
    let f = solve_linear_bvp_on_grid(
        spec,
        &lay.grid[i0..=i1],
        |x| r + strat.rate.value(x),
        |x| strat.rate.value(x) * g.mid_value(x),
        left,
        right,
    )?;
    Ok(f.values)
}

fn assemble(spec: &ProblemSpec, strat: &Strategy, lay: &Layout) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = lay.grid.iter().map(|&x| spec.payoff.value(x)).collect();
    for comp in &lay.components {
        let vals = solve_component(spec, strat, lay, comp)?;
        let (i0, i1) = lay.slice_indices(comp.lo, comp.hi);
        values[i0..=i1].copy_from_slice(&vals);
        // restore exact value pasting at real boundary points
        if !comp.lo_truncated {
            values[i0] = spec.payoff.value(comp.lo);
        }
        if !comp.hi_truncated {
            values[i1] = spec.payoff.value(comp.hi);
        }
    }
    Ok(values)
}

/// Re-solves a truncation-touching component on a grid extended by `pad`
/// beyond each cut and returns the max change on the original nodes.  The
/// extended grid contains the base grid exactly, so the comparison is free
/// of interpolation noise.
fn component_sensitivity(
    spec: &ProblemSpec,
    strat: &Strategy,
    lay: &Layout,
    comp: &ClippedComponent,
    base: &[f64],
    pad: f64,
) -> Result<f64> {
    let g = &spec.payoff;
    let (i0, i1) = lay.slice_indices(comp.lo, comp.hi);
    let base_grid = &lay.grid[i0..=i1];
    let ext_nodes = 192;
    let mut grid: Vec<f64> = Vec::new();
    if comp.lo_truncated {
        let mut pre = crate::ode::build_grid(comp.lo - pad, comp.lo, &[], ext_nodes);
        pre.pop();
        grid.extend(pre);
    }
    let offset = grid.len();
    grid.extend_from_slice(base_grid);
    if comp.hi_truncated {
        let post = crate::ode::build_grid(comp.hi, comp.hi + pad, &[], ext_nodes);
        grid.extend(post.into_iter().skip(1));
    }
    let (new_lo, new_hi) = (grid[0], *grid.last().unwrap());
    let left = if comp.lo_truncated {
        BoundaryCondition::Robin {
            a: 0.0,
            b: 1.0,
            c: g.derivative(new_lo, Side::Left),
        }
    } else {
        BoundaryCondition::Dirichlet(g.value(comp.lo))
    };
    let right = if comp.hi_truncated {
        BoundaryCondition::Robin {
            a: 0.0,
            b: 1.0,
            c: g.derivative(new_hi, Side::Right),
        }
    } else {
        BoundaryCondition::Dirichlet(g.value(comp.hi))
    };
    let r = spec.discount;
    let f = solve_linear_bvp_on_grid(
        spec,
        &grid,
        |x| r + strat.rate.value(x),
        |x| strat.rate.value(x) * g.mid_value(x),
        left,
        right,
    )?;
    let mut dev = 0.0_f64;
    for (k, &v) in base.iter().enumerate() {
        dev = dev.max((v - f.values[offset + k]).abs());
    }
    Ok(dev)
}

/// Computes the reward field for a strategy; `J = g` exactly on the stopping
/// region.
pub fn reward_field(spec: &ProblemSpec, strat: &Strategy, cfg: &GridConfig) -> Result<Reward> {
    let lay = layout(spec, strat, cfg);
    let values = assemble(spec, strat, &lay)?;
    let field = Field::new(lay.grid.clone(), values, "reward");

    let mut warnings = Vec::new();
    let mut sensitivity: Option<f64> = None;
    let base_radius = cfg
        .truncation_radius
        .unwrap_or_else(|| spec.truncation_radius());
    for comp in &lay.components {
        if comp.lo_truncated || comp.hi_truncated {
            let (i0, i1) = lay.slice_indices(comp.lo, comp.hi);
            let dev = component_sensitivity(
                spec,
                strat,
                &lay,
                comp,
                &field.values[i0..=i1],
                0.3 * base_radius,
            )?;
            sensitivity = Some(sensitivity.map_or(dev, |s: f64| s.max(dev)));
        }
    }
    let truncation_sensitivity = sensitivity;
    if let Some(dev) = truncation_sensitivity {
        let scale: f64 = field.values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        if dev > 1e-4 * scale {
            warnings.push(format!(
                "reward field moves by {dev:.3e} when the truncation radius grows 30%; increase the radius"
            ));
        }
    }

    Ok(Reward {
        field,
        truncation_sensitivity,
        warnings,
    })
}

/// The closed-form reward for Brownian motion with payoff |x| in the
/// free-boundary regime, evaluated at the constructed outer boundary `b`:
/// a cosh piece on `|x| <= b - sqrt(T)`, an exponential pair on
/// `b - sqrt(T) < |x| < b`, and `|x|` outside.
pub fn reward_closed_form_bm(r: f64, horizon: f64, b: f64, x: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("closed form needs r > 0, got {r}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!(
            "closed form needs T > 0, got {horizon}"
        )));
    }
    let sqrt_t = horizon.sqrt();
    if !(b > sqrt_t) {
        return Err(Error::Domain(format!(
            "closed form needs b > sqrt(T), got b = {b}"
        )));
    }
    let y = x.abs();
    if y >= b {
        return Ok(y);
    }
    let s2r = (2.0 * r).sqrt();
    let a = b - sqrt_t;
    if y > a {
        let up = 0.5 * (b + 1.0 / s2r) * (-s2r * (b - y)).exp();
        let down = 0.5 * (b - 1.0 / s2r) * (s2r * (b - y)).exp();
        return Ok(up + down);
    }
    let gamma = (2.0 * (r + 1.0 / horizon)).sqrt();
    let rt1 = r * horizon + 1.0;
    let xi = xi_coefficient(r, horizon, b);
    Ok(xi * (gamma * y).cosh() + y / rt1 + (-gamma * y).exp() / (gamma * rt1))
}

/// Coefficient of the cosh piece of the closed form.
pub fn xi_coefficient(r: f64, horizon: f64, b: f64) -> f64 {
    let sqrt_t = horizon.sqrt();
    let s2r = (2.0 * r).sqrt();
    let s2rt = (2.0 * r * horizon).sqrt();
    let gamma = (2.0 * (r + 1.0 / horizon)).sqrt();
    let rt1 = r * horizon + 1.0;
    let a = b - sqrt_t;
    (b * s2rt.cosh() - s2rt.sinh() / s2r - (a + (-gamma * a).exp() / gamma) / rt1)
        / (gamma * a).cosh()
}
