//! Expected time until stopping, `e(x) = E_x[tau]`, computed by ODE solves.
//!
//! Two independent discretizations are kept:
//!  * the split solve used for equilibrium candidates (e ≡ T on the
//!    randomization set, `A e = -1` on each continuation piece with the
//!    boundary data of the free-boundary systems), and
//!  * the monolithic solve of `A e - psi e = -1` per component of D.
//!
//! For a candidate the split field is the primary output and the monolithic
//! field acts as a cross-check; the maximum deviation of the monolithic field
//! from T on the randomization interior is reported.

use serde::Serialize;

use crate::diffusion::ProblemSpec;
use crate::error::{Error, Result};
use crate::layout::{layout, ClippedComponent, GridConfig, Layout};
use crate::ode::{solve_linear_bvp_on_grid, BoundaryCondition, Field};
use crate::strategy::Strategy;

/// Result of [`expected_time_field`].
#[derive(Debug, Clone)]
pub struct ExpectedTime {
    /// Primary field: split solve for equilibrium candidates, monolithic
    /// otherwise.
    pub field: Field,
    /// Monolithic `A e - psi e = -1` solve on the same grid.
    pub monolithic: Field,
    /// `max |monolithic - T|` over the randomization interior (candidates
    /// only).
    pub randomization_max_dev: Option<f64>,
    pub split_used: bool,
    pub warnings: Vec<String>,
}

/// Outcome of the uniform constraint check `e <= T`.
#[derive(Debug, Clone, Serialize)]
pub struct ConstraintReport {
    pub pass: bool,
    pub max_value: f64,
    pub witness: f64,
    pub horizon: f64,
    pub tol: f64,
}

/// Checks `max e <= T + tol` and reports the argmax witness.
pub fn check_constraint(e: &Field, horizon: f64, tol: f64) -> ConstraintReport {
    let (max_value, witness) = e.max_with_witness();
    ConstraintReport {
        pass: max_value <= horizon + tol,
        max_value,
        witness,
        horizon,
        tol,
    }
}

/// Randomization sub-interval of a clipped component, if any.
/// Returns `(a, b)` clipped to the component.
fn randomization_in(strat: &Strategy, comp: &ClippedComponent) -> Option<(f64, f64)> {
    for (s, e) in strat.rate.positive_pieces() {
        let a = s.max(comp.lo);
        let b = e.min(comp.hi);
        if a < b {
            return Some((a, b));
        }
    }
    None
}

fn solve_component_monolithic(
    spec: &ProblemSpec,
    strat: &Strategy,
    lay: &Layout,
    comp: &ClippedComponent,
    warnings: &mut Vec<String>,
) -> Result<Vec<f64>> {
    let horizon = strat.horizon;
    let rand = randomization_in(strat, comp);
    let bc_for = |truncated: bool,
                  touches_randomization: bool,
                  warnings: &mut Vec<String>,
                  end: f64| {
        if !truncated {
            BoundaryCondition::Dirichlet(0.0)
        } else if touches_randomization {
            // e ≡ T on a randomization set reaching the truncated edge
            BoundaryCondition::Dirichlet(horizon)
        } else {
            warnings.push(format!(
                "component end at truncation cut {end} has no randomization; expected time is unbounded there and the field is unreliable near the cut"
            ));
            BoundaryCondition::Dirichlet(horizon)
        }
    };
    let lo_touches = rand.map_or(false, |(a, _)| a <= comp.lo);
    let hi_touches = rand.map_or(false, |(_, b)| b >= comp.hi);
    let left = bc_for(comp.lo_truncated, lo_touches, warnings, comp.lo);
    let right = bc_for(comp.hi_truncated, hi_touches, warnings, comp.hi);

    let (i0, i1) = lay.slice_indices(comp.lo, comp.hi);
    let grid = &lay.grid[i0..=i1];
    let f = solve_linear_bvp_on_grid(spec, grid, |x| strat.rate.value(x), |_| 1.0, left, right)?;
    Ok(f.values)
}

fn solve_component_split(
    spec: &ProblemSpec,
    strat: &Strategy,
    lay: &Layout,
    comp: &ClippedComponent,
    warnings: &mut Vec<String>,
) -> Result<(Vec<f64>, bool)> {
    let horizon = strat.horizon;
    let (i0, i1) = lay.slice_indices(comp.lo, comp.hi);
    let n = i1 - i0 + 1;
    let mut values = vec![0.0; n];

    match randomization_in(strat, comp) {
        None => {
            return Ok((
                solve_component_monolithic(spec, strat, lay, comp, warnings)?,
                true,
            ))
        }
        // a randomization set flush against a real stopping boundary is
        // inconsistent with e = T there (e vanishes on the boundary); fall
        // back to the monolithic solve so the field stays truthful
        Some((a, b))
            if (a <= comp.lo && !comp.lo_truncated) || (b >= comp.hi && !comp.hi_truncated) =>
        {
            warnings.push(format!(
                "randomization set [{a}, {b}) touches the stopping boundary of ({}, {}); using the monolithic solve",
                comp.lo, comp.hi
            ));
            return Ok((
                solve_component_monolithic(spec, strat, lay, comp, warnings)?,
                false,
            ));
        }
        Some((a, b)) => {
            let (ra, rb) = lay.slice_indices(a, b);
            for v in values.iter_mut().take(rb - i0 + 1).skip(ra - i0) {
                *v = horizon;
            }
            // continuation piece below the randomization set
            if a > comp.lo {
                if comp.lo_truncated {
                    return Err(Error::NonIntegrableHorizon(format!(
                        "continuation piece at truncated edge {}; candidate shape invalid",
                        comp.lo
                    )));
                }
                let grid = &lay.grid[i0..=ra];
                let f = solve_linear_bvp_on_grid(
                    spec,
                    grid,
                    |_| 0.0,
                    |_| 1.0,
                    BoundaryCondition::Dirichlet(0.0),
                    BoundaryCondition::Dirichlet(horizon),
                )?;
                values[..=(ra - i0)].copy_from_slice(&f.values);
            }
            // continuation piece above
            if b < comp.hi {
                if comp.hi_truncated {
                    return Err(Error::NonIntegrableHorizon(format!(
                        "continuation piece at truncated edge {}; candidate shape invalid",
                        comp.hi
                    )));
                }
                let grid = &lay.grid[rb..=i1];
                let f = solve_linear_bvp_on_grid(
                    spec,
                    grid,
                    |_| 0.0,
                    |_| 1.0,
                    BoundaryCondition::Dirichlet(horizon),
                    BoundaryCondition::Dirichlet(0.0),
                )?;
                values[(rb - i0)..].copy_from_slice(&f.values);
            }
        }
    }
    Ok((values, true))
}

/// Computes the expected-time field for a strategy on the shared layout grid.
/// `e = 0` on the stopping region exactly.
pub fn expected_time_field(
    spec: &ProblemSpec,
    strat: &Strategy,
    cfg: &GridConfig,
) -> Result<ExpectedTime> {
    let lay = layout(spec, strat, cfg);
    let mut warnings = Vec::new();
    let candidate = strat.validate(true).is_empty();

    let mut mono = vec![0.0; lay.grid.len()];
    for comp in &lay.components {
        let vals = solve_component_monolithic(spec, strat, &lay, comp, &mut warnings)?;
        let (i0, i1) = lay.slice_indices(comp.lo, comp.hi);
        mono[i0..=i1].copy_from_slice(&vals);
    }
    let monolithic = Field::new(lay.grid.clone(), mono, "expected-time-monolithic");

    let (field, split_used, randomization_max_dev) = if candidate {
        let mut split = vec![0.0; lay.grid.len()];
        let mut all_split = true;
        for comp in &lay.components {
            let (vals, used_split) = solve_component_split(spec, strat, &lay, comp, &mut warnings)?;
            all_split &= used_split;
            let (i0, i1) = lay.slice_indices(comp.lo, comp.hi);
            split[i0..=i1].copy_from_slice(&vals);
        }
        // cross-check: monolithic field must sit at T on the randomization
        // interior
        let mut dev = 0.0_f64;
        let mut saw = false;
        for (s, e) in strat.rate.positive_pieces() {
            for (i, &x) in lay.grid.iter().enumerate() {
                if x > s && x < e {
                    dev = dev.max((monolithic.values[i] - strat.horizon).abs());
                    saw = true;
                }
            }
        }
        (
            Field::new(lay.grid.clone(), split, "expected-time"),
            all_split,
            if saw { Some(dev) } else { None },
        )
    } else {
        (
            Field::new(lay.grid.clone(), monolithic.values.clone(), "expected-time"),
            false,
            None,
        )
    };

    Ok(ExpectedTime {
        field,
        monolithic,
        randomization_max_dev,
        split_used,
        warnings,
    })
}
