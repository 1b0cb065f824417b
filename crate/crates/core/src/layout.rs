//! Shared grid layout for strategy fields.  The expected-time and reward
//! solvers must live on the same grid so the verifier can compare them
//! pointwise; this module builds that grid once: per-component solver grids
//! (default 2048 nodes) plus coarser reporting grids on the stopping region,
//! with every component endpoint, rate breakpoint and payoff breakpoint as an
//! exact node.

use crate::diffusion::ProblemSpec;
use crate::ode::build_grid;
use crate::strategy::Strategy;

#[derive(Debug, Clone, Copy)]
pub struct GridConfig {
    pub nodes_per_component: usize,
    pub complement_nodes: usize,
    pub truncation_radius: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            nodes_per_component: 2048,
            complement_nodes: 256,
            truncation_radius: None,
        }
    }
}

impl GridConfig {
    pub fn with_nodes(nodes: usize) -> Self {
        GridConfig {
            nodes_per_component: nodes,
            ..Default::default()
        }
    }

    /// Same layout with the per-component resolution doubled (used for the
    /// verifier's refinement checks).
    pub fn refined(&self) -> Self {
        GridConfig {
            nodes_per_component: self.nodes_per_component * 2,
            complement_nodes: self.complement_nodes * 2,
            truncation_radius: self.truncation_radius,
        }
    }
}

/// One component of D clipped to the working window.
#[derive(Debug, Clone, Copy)]
pub struct ClippedComponent {
    pub lo: f64,
    pub hi: f64,
    /// True when the corresponding end is a truncation cut rather than a real
    /// boundary point of D.
    pub lo_truncated: bool,
    pub hi_truncated: bool,
}

#[derive(Debug, Clone)]
pub struct Layout {
    pub window: (f64, f64),
    pub grid: Vec<f64>,
    pub components: Vec<ClippedComponent>,
}

impl Layout {
    /// Index range (inclusive) of the global grid covering `[lo, hi]`.
    pub fn slice_indices(&self, lo: f64, hi: f64) -> (usize, usize) {
        let i0 = nearest_index(&self.grid, lo);
        let i1 = nearest_index(&self.grid, hi);
        (i0, i1)
    }
}

pub fn nearest_index(grid: &[f64], x: f64) -> usize {
    let i = grid.partition_point(|&g| g < x);
    let mut best = i.min(grid.len() - 1);
    let mut err = (grid[best] - x).abs();
    if i > 0 && (grid[i - 1] - x).abs() < err {
        best = i - 1;
        err = (grid[i - 1] - x).abs();
    }
    debug_assert!(err <= 1e-9 * x.abs().max(1.0), "x = {x} is not a grid node");
    best
}

pub fn layout(spec: &ProblemSpec, strat: &Strategy, cfg: &GridConfig) -> Layout {
    let mut refs: Vec<f64> = strat
        .domain
        .intervals()
        .iter()
        .flat_map(|&(l, u)| [l, u])
        .filter(|p| p.is_finite())
        .collect();
    refs.extend(strat.rate.breakpoints().iter().cloned());
    refs.extend(spec.payoff.breakpoints().iter().cloned());
    let window = spec.truncated_window(&refs, cfg.truncation_radius);
    let (lo, hi) = window;

    let mut components = Vec::new();
    for &(l, u) in strat.domain.intervals() {
        let cl = l.max(lo);
        let cu = u.min(hi);
        if cl < cu {
            components.push(ClippedComponent {
                lo: cl,
                hi: cu,
                lo_truncated: cl > l || !l.is_finite() && cl == lo && l < lo,
                hi_truncated: cu < u,
            });
        }
    }
    // infinite component ends clipped exactly at the window edge
    for c in components.iter_mut() {
        let original = strat
            .domain
            .intervals()
            .iter()
            .find(|&&(l, u)| l <= c.lo && c.hi <= u)
            .copied()
            .unwrap();
        c.lo_truncated = original.0 < c.lo || (!original.0.is_finite() && c.lo == lo);
        c.hi_truncated = original.1 > c.hi || (!original.1.is_finite() && c.hi == hi);
    }

    let mut inner_breaks: Vec<f64> = strat.rate.breakpoints().to_vec();
    inner_breaks.extend(spec.payoff.breakpoints().iter().cloned());

    let mut grid: Vec<f64> = Vec::new();
    let push_segment = |seg: Vec<f64>, grid: &mut Vec<f64>| {
        for x in seg {
            if grid
                .last()
                .map_or(true, |&g| x > g + 1e-13 * x.abs().max(1.0))
            {
                grid.push(x);
            }
        }
    };

    // walk complement segments and components in order
    let mut cursor = lo;
    for c in &components {
        if c.lo > cursor {
            push_segment(
                build_grid(cursor, c.lo, &inner_breaks, cfg.complement_nodes),
                &mut grid,
            );
        } else if grid.is_empty() && c.lo == cursor {
            grid.push(cursor);
        }
        push_segment(
            build_grid(c.lo, c.hi, &inner_breaks, cfg.nodes_per_component),
            &mut grid,
        );
        cursor = c.hi;
    }
    if cursor < hi {
        push_segment(
            build_grid(cursor, hi, &inner_breaks, cfg.complement_nodes),
            &mut grid,
        );
    }
    if grid.is_empty() {
        grid = build_grid(lo, hi, &inner_breaks, cfg.complement_nodes);
    }

    Layout {
        window,
        grid,
        components,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::problems::bm_abs;
    use crate::strategy::{OpenSetUnion, RateFunction, Strategy};

    #[test]
    fn layout_contains_critical_nodes() {
        let spec = bm_abs(0.01, 10.0);
        let strat = Strategy::new(
            OpenSetUnion::interval(-5.0, 5.0).unwrap(),
            RateFunction::indicator(-1.8, 1.8, 0.1).unwrap(),
            10.0,
        );
        let lay = layout(&spec, &strat, &GridConfig::default());
        for target in [-5.0, -1.8, 0.0, 1.8, 5.0] {
            assert!(
                lay.grid.iter().any(|&x| (x - target).abs() < 1e-12),
                "missing node {target}"
            );
        }
        assert!(lay.grid.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(lay.components.len(), 1);
        assert!(!lay.components[0].lo_truncated && !lay.components[0].hi_truncated);
    }

    #[test]
    fn layout_marks_truncated_full_domain() {
        let spec = bm_abs(0.0, 1.0);
        let strat = Strategy::new(OpenSetUnion::full(), RateFunction::constant(1.0), 1.0);
        let lay = layout(&spec, &strat, &GridConfig::default());
        assert_eq!(lay.components.len(), 1);
        assert!(lay.components[0].lo_truncated && lay.components[0].hi_truncated);
        assert_eq!(lay.window, (-10.0, 10.0));
    }
}
