//! Diffusion model: coefficients, payoff, infinitesimal generator, scale
//! function and Euler–Maruyama path simulation.
//!
//! The state process is `dX = mu(X) dt + sigma(X) dW` on an interval
//! `(alpha, beta)` where either end may be infinite.  Payoffs are represented
//! piecewise-smooth so that one-sided values and derivatives at declared
//! kinks/jumps are exact rather than recovered by thresholding.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Side of a one-sided limit or derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// One smooth piece of a payoff.  The closure must extend smoothly to the
/// closure of its sub-interval so that one-sided values at the piece
/// boundaries can be read off by direct evaluation.
#[derive(Clone)]
pub struct Piece {
    pub f: ScalarFn,
    pub df: Option<ScalarFn>,
    pub d2f: Option<ScalarFn>,
}

impl Piece {
    pub fn new(f: ScalarFn) -> Self {
        Piece {
            f,
            df: None,
            d2f: None,
        }
    }

    pub fn with_derivatives(f: ScalarFn, df: ScalarFn, d2f: ScalarFn) -> Self {
        Piece {
            f,
            df: Some(df),
            d2f: Some(d2f),
        }
    }
}

/// Piecewise-smooth payoff with declared breakpoints (kinks or jumps).
///
/// Values follow the right-continuous convention: at a breakpoint the payoff
/// takes the value of the piece to the right.  The left limit is obtained by
/// evaluating the left piece at the breakpoint.
#[derive(Clone)]
pub struct Payoff {
    breaks: Vec<f64>,
    pieces: Vec<Piece>,
}

impl Payoff {
    /// `pieces.len()` must equal `breaks.len() + 1`; `breaks` strictly sorted.
    pub fn piecewise(breaks: Vec<f64>, pieces: Vec<Piece>) -> Result<Self> {
        if pieces.len() != breaks.len() + 1 {
            return Err(Error::Domain(format!(
                "payoff needs {} pieces for {} breakpoints, got {}",
                breaks.len() + 1,
                breaks.len(),
                pieces.len()
            )));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(
                "payoff breakpoints must be strictly sorted".into(),
            ));
        }
        Ok(Payoff { breaks, pieces })
    }

    /// Single closure with declared kinks; derivatives fall back to finite
    /// differences inside each piece.
    pub fn from_closure(f: ScalarFn, kinks: Vec<f64>) -> Result<Self> {
        let pieces = (0..=kinks.len()).map(|_| Piece::new(f.clone())).collect();
        Payoff::piecewise(kinks, pieces)
    }

    pub fn smooth(f: ScalarFn, df: ScalarFn, d2f: ScalarFn) -> Self {
        Payoff {
            breaks: vec![],
            pieces: vec![Piece::with_derivatives(f, df, d2f)],
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    fn piece_right(&self, x: f64) -> usize {
        self.breaks.partition_point(|&b| b <= x)
    }

    fn piece_left(&self, x: f64) -> usize {
        self.breaks.partition_point(|&b| b < x)
    }

    /// Right-continuous value g(x).
    pub fn value(&self, x: f64) -> f64 {
        (self.pieces[self.piece_right(x)].f)(x)
    }

    /// Left limit g(x-).
    pub fn left_value(&self, x: f64) -> f64 {
        (self.pieces[self.piece_left(x)].f)(x)
    }

    /// ½(g(x-) + g(x+)), the payoff seen by randomized stopping at `x`.
    pub fn mid_value(&self, x: f64) -> f64 {
        0.5 * (self.left_value(x) + self.value(x))
    }

    pub fn is_continuous_at(&self, x: f64) -> bool {
        let scale = 1.0_f64.max(self.value(x).abs());
        (self.value(x) - self.left_value(x)).abs() <= 1e-12 * scale
    }

    fn piece_for_side(&self, x: f64, side: Side) -> &Piece {
        let idx = match side {
            Side::Right => self.piece_right(x),
            Side::Left => self.piece_left(x),
        };
        &self.pieces[idx]
    }

    /// One-sided first derivative; analytic when the piece provides it,
    /// otherwise a symmetric finite difference of the piece closure.
    pub fn derivative(&self, x: f64, side: Side) -> f64 {
        let piece = self.piece_for_side(x, side);
        match &piece.df {
            Some(df) => df(x),
            None => {
                let h = 1e-6 * x.abs().max(1.0);
                ((piece.f)(x + h) - (piece.f)(x - h)) / (2.0 * h)
            }
        }
    }

    /// One-sided second derivative, analytic or finite-difference.
    pub fn second_derivative(&self, x: f64, side: Side) -> f64 {
        let piece = self.piece_for_side(x, side);
        match &piece.d2f {
            Some(d2f) => d2f(x),
            None => {
                let h = 1e-5 * x.abs().max(1.0);
                ((piece.f)(x + h) - 2.0 * (piece.f)(x) + (piece.f)(x - h)) / (h * h)
            }
        }
    }
}

/// Problem data: diffusion coefficients on `(alpha, beta)`, discount rate,
/// payoff and the expected-time budget `T`.
#[derive(Clone)]
pub struct ProblemSpec {
    pub alpha: f64,
    pub beta: f64,
    drift: ScalarFn,
    volatility: ScalarFn,
    pub discount: f64,
    pub payoff: Payoff,
    pub horizon: f64,
    /// Caller-supplied certificate that g has at most polynomial growth
    /// (needed by the submartingale construction case).
    pub poly_growth: bool,
}

impl ProblemSpec {
    pub fn new(
        alpha: f64,
        beta: f64,
        drift: ScalarFn,
        volatility: ScalarFn,
        discount: f64,
        payoff: Payoff,
        horizon: f64,
    ) -> Result<Self> {
        if !(alpha < beta) {
            return Err(Error::Domain(format!(
                "need alpha < beta, got [{alpha}, {beta}]"
            )));
        }
        if discount < 0.0 {
            return Err(Error::Domain(format!(
                "discount must be >= 0, got {discount}"
            )));
        }
        if !(horizon > 0.0) {
            return Err(Error::Domain(format!("horizon must be > 0, got {horizon}")));
        }
        let spec = ProblemSpec {
            alpha,
            beta,
            drift,
            volatility,
            discount,
            payoff,
            horizon,
            poly_growth: true,
        };
        // spot-check sigma > 0 and g >= 0 on a sample grid
        let mut refs: Vec<f64> = spec.payoff.breakpoints().to_vec();
        refs.push(0.0_f64.clamp(alpha, beta));
        let (lo, hi) = spec.truncated_window(&refs, None);
        for k in 0..=16 {
            let x = lo + (hi - lo) * k as f64 / 16.0;
            if !spec.contains(x) {
                continue;
            }
            let sigma = spec.volatility(x);
            if !(sigma > 0.0) {
                return Err(Error::Domain(format!("sigma({x}) = {sigma} must be > 0")));
            }
            let g = spec.payoff.value(x);
            if g < 0.0 {
                return Err(Error::Domain(format!("payoff g({x}) = {g} must be >= 0")));
            }
        }
        Ok(spec)
    }

    pub fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }

    pub fn volatility(&self, x: f64) -> f64 {
        (self.volatility)(x)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.alpha < x && x < self.beta
    }

    fn check_inside(&self, x: f64) -> Result<()> {
        if !self.contains(x) {
            return Err(Error::Domain(format!(
                "x = {x} outside state space ({}, {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// Applies the generator `A f = mu f' + sigma^2/2 f''` given the value and
    /// derivatives of `f` at `x`.
    pub fn generator_apply(&self, _f: f64, f1: f64, f2: f64, x: f64) -> Result<f64> {
        self.check_inside(x)?;
        let sigma = self.volatility(x);
        Ok(self.drift(x) * f1 + 0.5 * sigma * sigma * f2)
    }

    /// Scale function s with s(anchor) = 0 and
    /// s'(y) = exp(-∫_anchor^y 2 mu / sigma^2), computed by integrating the
    /// first-order system (s, s') with RK4 plus a Richardson consistency
    /// check.  Strictly increasing by construction.
    pub fn scale_function(&self, anchor: f64, x: f64) -> Result<f64> {
        self.check_inside(anchor)?;
        self.check_inside(x)?;
        if x == anchor {
            return Ok(0.0);
        }
        let coarse = self.scale_rk4(anchor, x, 512);
        let fine = self.scale_rk4(anchor, x, 1024);
        let err = (fine - coarse).abs();
        if !fine.is_finite() || err > 1e-8 * fine.abs().max(1.0) {
            return Err(Error::Numeric {
                lo: anchor.min(x),
                hi: anchor.max(x),
                msg: format!("scale-function quadrature did not converge (delta {err:.3e})"),
            });
        }
        // Richardson-extrapolated RK4 value.
        Ok(fine + (fine - coarse) / 15.0)
    }

    fn scale_rk4(&self, anchor: f64, x: f64, steps: usize) -> f64 {
        // s' = p, p' = -(2 mu / sigma^2) p, s(anchor) = 0, p(anchor) = 1.
        let h = (x - anchor) / steps as f64;
        let rate = |y: f64| {
            let sigma = self.volatility(y);
            -2.0 * self.drift(y) / (sigma * sigma)
        };
        let mut s = 0.0_f64;
        let mut p = 1.0_f64;
        let mut y = anchor;
        for _ in 0..steps {
            let k1s = p;
            let k1p = rate(y) * p;
            let k2s = p + 0.5 * h * k1p;
            let k2p = rate(y + 0.5 * h) * k2s;
            let k3s = p + 0.5 * h * k2p;
            let k3p = rate(y + 0.5 * h) * k3s;
            let k4s = p + h * k3p;
            let k4p = rate(y + h) * k4s;
            s += h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
            p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            y += h;
        }
        s
    }

    /// Default truncation radius for infinite boundaries:
    /// `10 * max(sqrt(T), 1/sqrt(2r))` (the second term only when r > 0).
    pub fn truncation_radius(&self) -> f64 {
        let mut r = self.horizon.sqrt();
        if self.discount > 0.0 {
            r = r.max(1.0 / (2.0 * self.discount).sqrt());
        }
        10.0 * r
    }

    /// Finite working window around the given reference points, truncating
    /// infinite boundaries at `radius` (default [`Self::truncation_radius`]).
    pub fn truncated_window(&self, refs: &[f64], radius: Option<f64>) -> (f64, f64) {
        let rad = radius.unwrap_or_else(|| self.truncation_radius());
        let (mut lo_ref, mut hi_ref) = (f64::INFINITY, f64::NEG_INFINITY);
        for &p in refs {
            if p.is_finite() {
                lo_ref = lo_ref.min(p);
                hi_ref = hi_ref.max(p);
            }
        }
        if !lo_ref.is_finite() {
            lo_ref = 0.0;
            hi_ref = 0.0;
        }
        let lo = if self.alpha.is_finite() {
            self.alpha
        } else {
            lo_ref - rad
        };
        let hi = if self.beta.is_finite() {
            self.beta
        } else {
            hi_ref + rad
        };
        (lo, hi)
    }
}

/// One Euler–Maruyama step given a standard normal draw `z`.
pub fn em_step(spec: &ProblemSpec, x: f64, dt: f64, z: f64) -> f64 {
    x + spec.drift(x) * dt + spec.volatility(x) * dt.sqrt() * z
}

/// A simulated discretized path together with the accumulated randomization
/// clock increments (trapezoid rule per step).
#[derive(Debug, Clone)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    /// Per-step clock increments; `clock_increments.len() == times.len() - 1`.
    pub clock_increments: Vec<f64>,
    /// Set when the configured maximum horizon was hit before the stop
    /// predicate fired; callers must treat such samples as censored.
    pub truncated: bool,
}

impl PathSample {
    pub fn total_clock(&self) -> f64 {
        self.clock_increments.iter().sum()
    }
}

/// Simulates the diffusion from `x0` with fixed step `dt`, accumulating the
/// clock `∫ psi(X_s) ds`, until `stop(t, x, clock)` returns true or
/// `max_time` is exceeded (which sets the truncation flag).
pub fn simulate_path<R: Rng + ?Sized>(
    spec: &ProblemSpec,
    rate: impl Fn(f64) -> f64,
    x0: f64,
    dt: f64,
    mut stop: impl FnMut(f64, f64, f64) -> bool,
    max_time: f64,
    rng: &mut R,
) -> Result<PathSample> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    spec.check_inside(x0)?;
    let mut times = vec![0.0];
    let mut states = vec![x0];
    let mut increments = Vec::new();
    let mut t = 0.0;
    let mut x = x0;
    let mut clock = 0.0;
    let mut truncated = false;
    if !stop(t, x, clock) {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            let x_next = em_step(spec, x, dt, z);
            let inc = 0.5 * (rate(x) + rate(x_next)) * dt;
            t += dt;
            clock += inc;
            x = x_next;
            times.push(t);
            states.push(x);
            increments.push(inc);
            if stop(t, x, clock) {
                break;
            }
            if t >= max_time {
                truncated = true;
                break;
            }
        }
    }
    Ok(PathSample {
        times,
        states,
        clock_increments: increments,
        truncated,
    })
}

/// Brownian motion spec helper used across the built-in problems.
pub fn brownian(payoff: Payoff, discount: f64, horizon: f64) -> ProblemSpec {
    ProblemSpec::new(
        f64::NEG_INFINITY,
        f64::INFINITY,
        Arc::new(|_| 0.0),
        Arc::new(|_| 1.0),
        discount,
        payoff,
        horizon,
    )
    .expect("valid Brownian spec")
}

/// Built-in problems mirrored by the CLI.
pub mod problems {
    use super::*;

    /// Brownian motion with payoff |x|.
    pub fn bm_abs(discount: f64, horizon: f64) -> ProblemSpec {
        let payoff = Payoff::piecewise(
            vec![0.0],
            vec![
                Piece::with_derivatives(
                    Arc::new(|x: f64| -x),
                    Arc::new(|_| -1.0),
                    Arc::new(|_| 0.0),
                ),
                Piece::with_derivatives(Arc::new(|x: f64| x), Arc::new(|_| 1.0), Arc::new(|_| 0.0)),
            ],
        )
        .expect("valid |x| payoff");
        brownian(payoff, discount, horizon)
    }

    /// Brownian motion with payoff x^2.
    pub fn bm_square(discount: f64, horizon: f64) -> ProblemSpec {
        let payoff = Payoff::smooth(
            Arc::new(|x: f64| x * x),
            Arc::new(|x: f64| 2.0 * x),
            Arc::new(|_| 2.0),
        );
        brownian(payoff, discount, horizon)
    }

    /// Two-well payoff: |x-2| on (1,3), |x+2| on (-3,-1), 1 elsewhere.
    /// Continuous, with kinks at -3, -2, -1, 1, 2, 3.
    pub fn two_well(discount: f64, horizon: f64) -> ProblemSpec {
        let one =
            || Piece::with_derivatives(Arc::new(|_| 1.0), Arc::new(|_| 0.0), Arc::new(|_| 0.0));
        let abs_at = |c: f64, sign: f64| {
            Piece::with_derivatives(
                Arc::new(move |x: f64| sign * (x - c)),
                Arc::new(move |_| sign),
                Arc::new(|_| 0.0),
            )
        };
        let payoff = Payoff::piecewise(
            vec![-3.0, -2.0, -1.0, 1.0, 2.0, 3.0],
            vec![
                one(),
                abs_at(-2.0, -1.0),
                abs_at(-2.0, 1.0),
                one(),
                abs_at(2.0, -1.0),
                abs_at(2.0, 1.0),
                one(),
            ],
        )
        .expect("valid two-well payoff");
        brownian(payoff, discount, horizon)
    }
}
