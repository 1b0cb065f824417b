//! Finite-difference engine for second-order linear two-point problems
//! `mu f' + sigma^2/2 f'' - q f = -s` with Dirichlet/Neumann/Robin endpoint
//! conditions.  Central differences on the interior, one-sided second-order
//! stencils for derivative conditions, direct tridiagonal solve.
//!
//! Declared breakpoints of `q` and `s` are always grid nodes; at a breakpoint
//! the discrete operator uses the right (càdlàg) value.

use serde::Serialize;

use crate::diffusion::{ProblemSpec, Side};
use crate::error::{Error, Result};

/// A grid-sampled scalar field (an expected-time or reward function).
#[derive(Debug, Clone, Serialize)]
pub struct Field {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub tag: String,
}

impl Field {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, tag: impl Into<String>) -> Self {
        assert_eq!(grid.len(), values.len(), "grid/value length mismatch");
        Field {
            grid,
            values,
            tag: tag.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Index of the grid node equal to `x` up to a relative tolerance.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let i = self.grid.partition_point(|&g| g < x);
        let tol = 1e-9 * x.abs().max(1.0);
        for cand in [i.wrapping_sub(1), i, i + 1] {
            if cand < self.grid.len() && (self.grid[cand] - x).abs() <= tol {
                return Some(cand);
            }
        }
        None
    }

    /// Linear interpolation, clamped to the grid span.
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x <= self.grid[0] {
            return self.values[0];
        }
        if x >= self.grid[n - 1] {
            return self.values[n - 1];
        }
        let i = self.grid.partition_point(|&g| g <= x);
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        let w = (x - x0) / (x1 - x0);
        self.values[i - 1] * (1.0 - w) + self.values[i] * w
    }

    pub fn max_with_witness(&self) -> (f64, f64) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = self.grid[0];
        for (&x, &v) in self.grid.iter().zip(&self.values) {
            if v > best {
                best = v;
                arg = x;
            }
        }
        (best, arg)
    }
}

/// Endpoint condition for [`solve_linear_bvp`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BoundaryCondition {
    Dirichlet(f64),
    Neumann(f64),
    /// a·f + b·f' = c
    Robin {
        a: f64,
        b: f64,
        c: f64,
    },
}

impl BoundaryCondition {
    fn validate(&self) -> Result<()> {
        if let BoundaryCondition::Robin { a, b, .. } = self {
            if *a == 0.0 && *b == 0.0 {
                return Err(Error::Domain("Robin condition with a = b = 0".into()));
            }
        }
        Ok(())
    }
}

/// Builds a grid on `[l, u]` containing every point of `must` strictly inside,
/// with roughly `n` nodes distributed proportionally over the sub-segments
/// (at least 8 per segment) and uniform spacing within each segment.
pub fn build_grid(l: f64, u: f64, must: &[f64], n: usize) -> Vec<f64> {
    let mut cuts = vec![l, u];
    for &m in must {
        if m > l && m < u {
            cuts.push(m);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));

    let total: f64 = u - l;
    let mut grid = Vec::with_capacity(n + cuts.len() * 8);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        let m = ((n as f64 * len / total).round() as usize).max(8);
        for k in 0..m {
            grid.push(a + len * k as f64 / m as f64);
        }
    }
    grid.push(u);
    grid
}

struct Stencil {
    sub: f64,
    diag: f64,
    sup: f64,
}

/// Central-difference coefficients for f' and f'' at a (possibly nonuniform)
/// interior node with spacings `hm = x_i - x_{i-1}` and `hp = x_{i+1} - x_i`.
fn central(spec: &ProblemSpec, x: f64, hm: f64, hp: f64, q: f64) -> Stencil {
    let mu = spec.drift(x);
    let half_sig2 = 0.5 * spec.volatility(x).powi(2);
    let d1m = -hp / (hm * (hm + hp));
    let d10 = (hp - hm) / (hm * hp);
    let d1p = hm / (hp * (hm + hp));
    let d2m = 2.0 / (hm * (hm + hp));
    let d20 = -2.0 / (hm * hp);
    let d2p = 2.0 / (hp * (hm + hp));
    Stencil {
        sub: mu * d1m + half_sig2 * d2m,
        diag: mu * d10 + half_sig2 * d20 - q,
        sup: mu * d1p + half_sig2 * d2p,
    }
}

/// One-sided second-order 3-point first-derivative coefficients at `x0`
/// toward `x1`, `x2` (Newton divided-difference form).
fn one_sided_first(x0: f64, x1: f64, x2: f64) -> (f64, f64, f64) {
    // f'(x0) ≈ f[x0,x1] + (x0 - x1) f[x0,x1,x2]
    let h1 = x1 - x0;
    let h2 = x2 - x0;
    // as linear combination of f0, f1, f2:
    let c0 = -(h1 + h2) / (h1 * h2);
    let c1 = h2 / (h1 * (h2 - h1));
    let c2 = -h1 / (h2 * (h2 - h1));
    (c0, c1, c2)
}

/// Solves `mu f' + sigma^2/2 f'' - q f = -s` on `[l, u]`.
///
/// `q_breaks` and `s_breaks` are forced to be grid nodes.  Fails on singular
/// systems or when the assembled solution does not satisfy the discrete
/// equations (`max_residual` a-posteriori check).
#[allow(clippy::too_many_arguments)]
pub fn solve_linear_bvp(
    spec: &ProblemSpec,
    interval: (f64, f64),
    q: impl Fn(f64) -> f64,
    q_breaks: &[f64],
    s: impl Fn(f64) -> f64,
    s_breaks: &[f64],
    left: BoundaryCondition,
    right: BoundaryCondition,
    n: usize,
) -> Result<Field> {
    let (l, u) = interval;
    if !(l < u) {
        return Err(Error::Domain(format!("need l < u, got [{l}, {u}]")));
    }
    if n < 16 {
        return Err(Error::Domain(format!("need n >= 16, got {n}")));
    }
    let mut must: Vec<f64> = q_breaks.to_vec();
    must.extend_from_slice(s_breaks);
    let grid = build_grid(l, u, &must, n);
    solve_linear_bvp_on_grid(spec, &grid, q, s, left, right)
}

/// Same as [`solve_linear_bvp`] but on a caller-supplied grid (which must
/// already contain all coefficient breakpoints).
pub fn solve_linear_bvp_on_grid(
    spec: &ProblemSpec,
    grid: &[f64],
    q: impl Fn(f64) -> f64,
    s: impl Fn(f64) -> f64,
    left: BoundaryCondition,
    right: BoundaryCondition,
) -> Result<Field> {
    left.validate()?;
    right.validate()?;
    let n = grid.len();
    let (l, u) = (grid[0], grid[n - 1]);
    if n < 8 {
        return Err(Error::Domain(format!("grid too small ({n} nodes)")));
    }

    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut first_extra = 0.0; // coefficient of f_2 in row 0
    let mut last_extra = 0.0; // coefficient of f_{n-3} in row n-1

    for i in 1..n - 1 {
        let x = grid[i];
        let st = central(spec, x, x - grid[i - 1], grid[i + 1] - x, q(x));
        sub[i] = st.sub;
        diag[i] = st.diag;
        sup[i] = st.sup;
        rhs[i] = -s(x);
    }

    match left {
        BoundaryCondition::Dirichlet(v) => {
            diag[0] = 1.0;
            rhs[0] = v;
        }
        BoundaryCondition::Neumann(slope) => {
            let (c0, c1, c2) = one_sided_first(grid[0], grid[1], grid[2]);
            diag[0] = c0;
            sup[0] = c1;
            first_extra = c2;
            rhs[0] = slope;
        }
        BoundaryCondition::Robin { a, b, c } => {
            let (c0, c1, c2) = one_sided_first(grid[0], grid[1], grid[2]);
            diag[0] = a + b * c0;
            sup[0] = b * c1;
            first_extra = b * c2;
            rhs[0] = c;
        }
    }
    match right {
        BoundaryCondition::Dirichlet(v) => {
            diag[n - 1] = 1.0;
            rhs[n - 1] = v;
        }
        BoundaryCondition::Neumann(slope) => {
            let (c0, c1, c2) = one_sided_first(grid[n - 1], grid[n - 2], grid[n - 3]);
            diag[n - 1] = c0;
            sub[n - 1] = c1;
            last_extra = c2;
            rhs[n - 1] = slope;
        }
        BoundaryCondition::Robin { a, b, c } => {
            let (c0, c1, c2) = one_sided_first(grid[n - 1], grid[n - 2], grid[n - 3]);
            diag[n - 1] = a + b * c0;
            sub[n - 1] = b * c1;
            last_extra = b * c2;
            rhs[n - 1] = c;
        }
    }

    // Reduce the 3-entry boundary rows against their neighbors so the system
    // becomes strictly tridiagonal.
    if first_extra != 0.0 {
        if sup[1] == 0.0 {
            return Err(Error::SingularSystem { lo: l, hi: u });
        }
        let f = first_extra / sup[1];
        diag[0] -= f * sub[1];
        sup[0] -= f * diag[1];
        rhs[0] -= f * rhs[1];
    }
    if last_extra != 0.0 {
        if sub[n - 2] == 0.0 {
            return Err(Error::SingularSystem { lo: l, hi: u });
        }
        let f = last_extra / sub[n - 2];
        diag[n - 1] -= f * sup[n - 2];
        sub[n - 1] -= f * diag[n - 2];
        rhs[n - 1] -= f * rhs[n - 2];
    }

    // Thomas algorithm.
    let mut c_star = vec![0.0; n];
    let mut d_star = vec![0.0; n];
    let scale: f64 = diag.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let tiny = 1e-300f64.max(1e-15 * scale);
    if diag[0].abs() < tiny {
        return Err(Error::SingularSystem { lo: l, hi: u });
    }
    c_star[0] = sup[0] / diag[0];
    d_star[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c_star[i - 1];
        if denom.abs() < tiny {
            return Err(Error::SingularSystem { lo: l, hi: u });
        }
        c_star[i] = if i < n - 1 { sup[i] / denom } else { 0.0 };
        d_star[i] = (rhs[i] - sub[i] * d_star[i - 1]) / denom;
    }
    let mut values = vec![0.0; n];
    values[n - 1] = d_star[n - 1];
    for i in (0..n - 1).rev() {
        values[i] = d_star[i] - c_star[i] * values[i + 1];
    }

    let field = Field::new(grid.to_vec(), values, "bvp");
    // a-posteriori check of the discrete equations
    let res = max_residual(spec, &field, &q, &s);
    let res_scale: f64 = field.values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    if !res.is_finite() || res > 1e-7 * res_scale.max(1.0) {
        return Err(Error::Numeric {
            lo: l,
            hi: u,
            msg: format!("discrete residual {res:.3e} exceeds tolerance"),
        });
    }
    Ok(field)
}

/// One-sided derivative estimate of a field at a grid node using the
/// second-order three-point stencil.  `order` selects f' (1) or f'' (2).
pub fn one_sided_derivative(f: &Field, x: f64, side: Side, order: u8) -> Result<f64> {
    let i = f.node_index(x).ok_or_else(|| Error::InsufficientStencil {
        x,
        msg: "x is not a grid node".into(),
    })?;
    let n = f.len();
    let idx: [usize; 3] = match side {
        Side::Right => {
            if i + 2 >= n {
                return Err(Error::InsufficientStencil {
                    x,
                    msg: "need 3 nodes to the right".into(),
                });
            }
            [i, i + 1, i + 2]
        }
        Side::Left => {
            if i < 2 {
                return Err(Error::InsufficientStencil {
                    x,
                    msg: "need 3 nodes to the left".into(),
                });
            }
            [i, i - 1, i - 2]
        }
    };
    let (x0, x1, x2) = (f.grid[idx[0]], f.grid[idx[1]], f.grid[idx[2]]);
    let (f0, f1, f2) = (f.values[idx[0]], f.values[idx[1]], f.values[idx[2]]);
    let d01 = (f1 - f0) / (x1 - x0);
    let d12 = (f2 - f1) / (x2 - x1);
    let d012 = (d12 - d01) / (x2 - x0);
    match order {
        1 => Ok(d01 + (x0 - x1) * d012),
        2 => Ok(2.0 * d012),
        _ => Err(Error::Domain(format!(
            "derivative order must be 1 or 2, got {order}"
        ))),
    }
}

/// Maximum over interior nodes of |A f - q f + s| with the same central
/// stencil used for assembly; checks the discrete equation a posteriori.
pub fn max_residual(
    spec: &ProblemSpec,
    f: &Field,
    q: impl Fn(f64) -> f64,
    s: impl Fn(f64) -> f64,
) -> f64 {
    let n = f.len();
    let mut worst = 0.0_f64;
    for i in 1..n - 1 {
        let x = f.grid[i];
        let st = central(spec, x, x - f.grid[i - 1], f.grid[i + 1] - x, q(x));
        let lhs = st.sub * f.values[i - 1] + st.diag * f.values[i] + st.sup * f.values[i + 1];
        worst = worst.max((lhs + s(x)).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::problems::bm_square;

    fn bm() -> ProblemSpec {
        bm_square(0.0, 1.0)
    }

    #[test]
    fn quadratic_dirichlet_is_exact() {
        // 1/2 f'' = -1 on (-h, h), f(±h) = 0  =>  f = h^2 - x^2
        let spec = bm();
        let h = 1.5;
        let f = solve_linear_bvp(
            &spec,
            (-h, h),
            |_| 0.0,
            &[],
            |_| 1.0,
            &[],
            BoundaryCondition::Dirichlet(0.0),
            BoundaryCondition::Dirichlet(0.0),
            128,
        )
        .unwrap();
        for (&x, &v) in f.grid.iter().zip(&f.values) {
            assert!((v - (h * h - x * x)).abs() < 1e-10, "x={x}");
        }
        assert!((f.value_at(0.0) - h * h).abs() < 1e-10);
    }

    #[test]
    fn constant_solution_under_uniform_rate() {
        // 1/2 f'' - f/T = -1 with f = T at both edges => f ≡ T
        let spec = bm();
        let t = 3.0;
        let f = solve_linear_bvp(
            &spec,
            (-20.0, 20.0),
            |_| 1.0 / t,
            &[],
            |_| 1.0,
            &[],
            BoundaryCondition::Dirichlet(t),
            BoundaryCondition::Dirichlet(t),
            256,
        )
        .unwrap();
        for &v in &f.values {
            assert!((v - t).abs() < 1e-9);
        }
    }

    #[test]
    fn neumann_quadratic_matches_hand_solution() {
        // 1/2 f'' = -1 on (a, b), f'(a) = 0, f(b) = 0 with b - a = sqrt(T)
        // => f(x) = T - (x - a)^2, f(a) = T.
        let spec = bm();
        let t = 2.25_f64;
        let (a, b) = (0.5, 0.5 + t.sqrt());
        let f = solve_linear_bvp(
            &spec,
            (a, b),
            |_| 0.0,
            &[],
            |_| 1.0,
            &[],
            BoundaryCondition::Neumann(0.0),
            BoundaryCondition::Dirichlet(0.0),
            200,
        )
        .unwrap();
        for (&x, &v) in f.grid.iter().zip(&f.values) {
            assert!((v - (t - (x - a) * (x - a))).abs() < 1e-9, "x={x} v={v}");
        }
        assert!((f.value_at(a) - t).abs() < 1e-9);
    }

    #[test]
    fn one_sided_derivatives() {
        let grid: Vec<f64> = (0..=100).map(|i| -1.0 + 0.02 * i as f64).collect();
        let linear = Field::new(grid.clone(), grid.iter().map(|&x| 3.0 * x).collect(), "lin");
        assert!((one_sided_derivative(&linear, 0.0, Side::Left, 1).unwrap() - 3.0).abs() < 1e-12);
        assert!((one_sided_derivative(&linear, 0.0, Side::Right, 1).unwrap() - 3.0).abs() < 1e-12);

        let quad = Field::new(grid.clone(), grid.iter().map(|&x| x * x).collect(), "quad");
        assert!((one_sided_derivative(&quad, 0.5, Side::Left, 2).unwrap() - 2.0).abs() < 1e-8);

        let kink = Field::new(grid.clone(), grid.iter().map(|&x| x.abs()).collect(), "abs");
        assert!((one_sided_derivative(&kink, 0.0, Side::Left, 1).unwrap() + 1.0).abs() < 1e-12);
        assert!((one_sided_derivative(&kink, 0.0, Side::Right, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_sided_derivative_requires_stencil() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let f = Field::new(grid.clone(), grid.clone(), "id");
        assert!(one_sided_derivative(&f, 0.0, Side::Left, 1).is_err());
        assert!(one_sided_derivative(&f, 10.0, Side::Right, 1).is_err());
        assert!(one_sided_derivative(&f, 0.5, Side::Right, 1).is_err());
    }

    #[test]
    fn residual_zero_for_solved_and_constant_fields() {
        let spec = bm();
        let t = 4.0_f64;
        let grid = build_grid(-5.0, 5.0, &[], 64);
        let f = Field::new(grid.clone(), vec![t; grid.len()], "const");
        let r = max_residual(&spec, &f, |_| 1.0 / t, |_| 1.0);
        assert!(r < 1e-13);
    }

    #[test]
    fn residual_grows_with_noise() {
        let spec = bm();
        let h = 1.0;
        let f = solve_linear_bvp(
            &spec,
            (-h, h),
            |_| 0.0,
            &[],
            |_| 1.0,
            &[],
            BoundaryCondition::Dirichlet(0.0),
            BoundaryCondition::Dirichlet(0.0),
            128,
        )
        .unwrap();
        let base = max_residual(&spec, &f, |_| 0.0, |_| 1.0);
        let mut noisy = f.clone();
        for (i, v) in noisy.values.iter_mut().enumerate() {
            *v += if i % 2 == 0 { 1e-3 } else { -1e-3 };
        }
        let r = max_residual(&spec, &noisy, |_| 0.0, |_| 1.0);
        // noise / h^2 scale: h ≈ 2/128, so amplification ≈ 4/h² ≈ 1.6e4
        assert!(r > 1e3 * 1e-3, "residual {r} should blow up");
        assert!(base < 1e-9);
    }

    #[test]
    fn discrete_maximum_principle_nonnegativity() {
        // q >= 0, s >= 0, nonnegative boundary data => solution >= 0
        let spec = bm();
        let f = solve_linear_bvp(
            &spec,
            (0.0, 4.0),
            |x| 0.3 + 0.1 * x,
            &[],
            |x| (x - 1.0).max(0.0),
            &[],
            BoundaryCondition::Dirichlet(0.2),
            BoundaryCondition::Dirichlet(0.0),
            128,
        )
        .unwrap();
        assert!(f.values.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn singular_system_reported() {
        // pure Neumann problem with q ≡ 0 has a constant null mode
        let spec = bm();
        let got = solve_linear_bvp(
            &spec,
            (0.0, 1.0),
            |_| 0.0,
            &[],
            |_| 0.0,
            &[],
            BoundaryCondition::Neumann(0.0),
            BoundaryCondition::Neumann(0.0),
            64,
        );
        assert!(matches!(
            got,
            Err(Error::SingularSystem { .. }) | Err(Error::Numeric { .. })
        ));
    }

    #[test]
    fn grid_contains_breakpoints() {
        let g = build_grid(-2.0, 2.0, &[0.3, -1.7, 5.0], 64);
        assert!(g.iter().any(|&x| (x - 0.3).abs() < 1e-14));
        assert!(g.iter().any(|&x| (x + 1.7).abs() < 1e-14));
        assert!(g.iter().all(|&x| x <= 2.0));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_tiny_n() {
        let spec = bm();
        let got = solve_linear_bvp(
            &spec,
            (0.0, 1.0),
            |_| 0.0,
            &[],
            |_| 1.0,
            &[],
            BoundaryCondition::Dirichlet(0.0),
            BoundaryCondition::Dirichlet(0.0),
            8,
        );
        assert!(got.is_err());
    }
}
