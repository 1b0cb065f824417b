//! Monte Carlo engine: simulates randomized Markovian stopping times,
//! estimates expected time and reward independently of the ODE path,
//! estimates local-perturbation equilibrium gaps and occupation-time ratios.
//!
//! Determinism contract: per-path RNG streams are derived from
//! (master seed, path index, stream tag), and reductions are compensated
//! sums in path-index order, so results are bit-identical for any worker
//! count.  Perturbation gaps use common random numbers: both arms consume
//! the same diffusion-increment stream; clock draws live on separate
//! streams (the restart after the perturbation window draws a fresh
//! exponential, which the memoryless property justifies for marginal
//! expectations).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::diffusion::{em_step, ProblemSpec};
use crate::error::{Error, Result};
use crate::strategy::{OpenSetUnion, RateFunction, Strategy};

const STREAM_INCREMENTS: u64 = 0;
const STREAM_CLOCK_MAIN: u64 = 1;
const STREAM_CLOCK_PERTURBED: u64 = 2;

/// Paths longer than this multiple of max(T, 1) are censored.
const MAX_TIME_FACTOR: f64 = 200.0;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-(path, stream) RNG derivation.
pub fn path_rng(master_seed: u64, path: u64, stream: u64) -> ChaCha8Rng {
    let mut state = splitmix64(master_seed)
        ^ splitmix64(path.wrapping_mul(0xA3EC_6476_5935_9ACD).wrapping_add(1))
        ^ splitmix64(stream.wrapping_mul(0x9E6C_63D0_876A_68EF).wrapping_add(2));
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = neumaier_sum(values.iter().cloned()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = neumaier_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let std = (ss / (n - 1.0)).sqrt();
    (mean, std / n.sqrt())
}

fn covariance(a: &[f64], b: &[f64], mean_a: f64, mean_b: f64) -> f64 {
    let n = a.len() as f64;
    neumaier_sum(a.iter().zip(b).map(|(x, y)| (x - mean_a) * (y - mean_b))) / (n - 1.0)
}

/// A Monte Carlo estimate with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub master_seed: u64,
    pub dt: f64,
    pub censored_fraction: f64,
    /// Set when censored_fraction > 1e-3; such estimates are unreliable.
    pub flagged: bool,
}

impl McEstimate {
    fn new(mean: f64, stderr: f64, n: u64, master_seed: u64, dt: f64, censored: f64) -> Self {
        McEstimate {
            mean,
            stderr,
            n,
            master_seed,
            dt,
            censored_fraction: censored,
            flagged: censored > 1e-3,
        }
    }
}

/// One realized stopping experiment.
#[derive(Debug, Clone, Copy)]
pub struct StopSample {
    pub tau: f64,
    pub x_tau: f64,
    pub payoff: f64,
    pub censored: bool,
}

fn default_max_time(spec: &ProblemSpec) -> f64 {
    MAX_TIME_FACTOR * spec.horizon.max(1.0)
}

/// Core stopping-rule simulation: Euler–Maruyama steps with increments from
/// `z_draw`, exponential clock threshold `u` (infinite when the strategy
/// never randomizes).  Exits are localized at the first grid point outside
/// D; clock stops are localized by linear interpolation of the accumulated
/// clock within the step.
fn run_rule(
    spec: &ProblemSpec,
    strat: &Strategy,
    x0: f64,
    dt: f64,
    max_time: f64,
    u: f64,
    mut z_draw: impl FnMut() -> f64,
) -> StopSample {
    let finish = |tau: f64, x_tau: f64, censored: bool| StopSample {
        tau,
        x_tau,
        payoff: (-spec.discount * tau).exp() * spec.payoff.value(x_tau),
        censored,
    };
    if !strat.domain.contains(x0) {
        return finish(0.0, x0, false);
    }
    let mut t = 0.0_f64;
    let mut x = x0;
    let mut clock = 0.0_f64;
    let mut rate_here = strat.rate.value(x);
    loop {
        let z = z_draw();
        let x_next = em_step(spec, x, dt, z);
        let rate_next = if strat.domain.contains(x_next) {
            strat.rate.value(x_next)
        } else {
            0.0
        };
        let inc = 0.5 * (rate_here + rate_next) * dt;
        if clock + inc >= u {
            let frac = if inc > 0.0 {
                ((u - clock) / inc).clamp(0.0, 1.0)
            } else {
                1.0
            };
            let tau = t + frac * dt;
            let x_tau = x + frac * (x_next - x);
            return finish(tau, x_tau, false);
        }
        t += dt;
        clock += inc;
        x = x_next;
        rate_here = rate_next;
        if !strat.domain.contains(x) {
            return finish(t, x, false);
        }
        if t >= max_time {
            return finish(t, x, true);
        }
    }
}

/// Simulates one realization of the stopping time from `x0`: stop at the
/// first exit of D or when the accumulated clock reaches an Exp(1) draw,
/// whichever comes first.
pub fn sample_stopping<R: Rng + ?Sized>(
    spec: &ProblemSpec,
    strat: &Strategy,
    x0: f64,
    dt: f64,
    max_time: f64,
    rng: &mut R,
) -> StopSample {
    let u: f64 = if strat.rate.max_value() > 0.0 {
        rng.sample(Exp1)
    } else {
        f64::INFINITY
    };
    run_rule(spec, strat, x0, dt, max_time, u, || {
        rng.sample(StandardNormal)
    })
}

/// Estimates the expected time e(x0) and the reward J(x0) over `n` paths
/// with deterministic per-path seeding.
pub fn estimate_e_and_j(
    spec: &ProblemSpec,
    strat: &Strategy,
    x0: f64,
    n: u64,
    dt: f64,
    master_seed: u64,
) -> Result<(McEstimate, McEstimate)> {
    if n < 100 {
        return Err(Error::Domain(format!("need n >= 100 paths, got {n}")));
    }
    if !spec.contains(x0) {
        return Err(Error::Domain(format!("x0 = {x0} outside the state space")));
    }
    let max_time = default_max_time(spec);
    let samples: Vec<StopSample> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut inc = path_rng(master_seed, i, STREAM_INCREMENTS);
            let mut clk = path_rng(master_seed, i, STREAM_CLOCK_MAIN);
            let u: f64 = if strat.rate.max_value() > 0.0 {
                clk.sample(Exp1)
            } else {
                f64::INFINITY
            };
            run_rule(spec, strat, x0, dt, max_time, u, || {
                inc.sample(StandardNormal)
            })
        })
        .collect();
    let taus: Vec<f64> = samples.iter().map(|s| s.tau).collect();
    let payoffs: Vec<f64> = samples.iter().map(|s| s.payoff).collect();
    let censored = samples.iter().filter(|s| s.censored).count() as f64 / n as f64;
    let (me, se) = mean_and_stderr(&taus);
    let (mj, sj) = mean_and_stderr(&payoffs);
    Ok((
        McEstimate::new(me, se, n, master_seed, dt, censored),
        McEstimate::new(mj, sj, n, master_seed, dt, censored),
    ))
}

/// One perturbed-time realization: follow `deviation` until the first exit
/// of the radius-h window around x0, then restart under `equilibrium` with a
/// fresh exponential clock.  Also returns the realized window exit time.
#[allow(clippy::too_many_arguments)]
fn run_perturbed(
    spec: &ProblemSpec,
    equilibrium: &Strategy,
    deviation: &Strategy,
    x0: f64,
    h: f64,
    dt: f64,
    max_time: f64,
    inc: &mut ChaCha8Rng,
    clk: &mut ChaCha8Rng,
) -> (StopSample, f64, bool) {
    let finish = |tau: f64, x_tau: f64, censored: bool| StopSample {
        tau,
        x_tau,
        payoff: (-spec.discount * tau).exp() * spec.payoff.value(x_tau),
        censored,
    };
    let u_dev: f64 = if deviation.rate.max_value() > 0.0 {
        clk.sample(Exp1)
    } else {
        f64::INFINITY
    };
    let mut dev_stop: Option<(f64, f64)> = None;
    if !deviation.domain.contains(x0) {
        dev_stop = Some((0.0, x0));
    }
    let mut t = 0.0_f64;
    let mut x = x0;
    let mut clock = 0.0_f64;
    let mut rate_here = if dev_stop.is_none() {
        deviation.rate.value(x)
    } else {
        0.0
    };
    // phase 1: simulate until the window exit, tracking a possible earlier
    // stop of the deviation rule
    let tau_h;
    let mut censored_window = false;
    loop {
        let z: f64 = inc.sample(StandardNormal);
        let x_next = em_step(spec, x, dt, z);
        if dev_stop.is_none() {
            let rate_next = if deviation.domain.contains(x_next) {
                deviation.rate.value(x_next)
            } else {
                0.0
            };
            let inc_clock = 0.5 * (rate_here + rate_next) * dt;
            if clock + inc_clock >= u_dev {
                let frac = if inc_clock > 0.0 {
                    ((u_dev - clock) / inc_clock).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                dev_stop = Some((t + frac * dt, x + frac * (x_next - x)));
            } else {
                clock += inc_clock;
                rate_here = rate_next;
                if !deviation.domain.contains(x_next) {
                    dev_stop = Some((t + dt, x_next));
                }
            }
        }
        t += dt;
        x = x_next;
        if (x - x0).abs() >= h {
            tau_h = t;
            break;
        }
        if t >= max_time {
            tau_h = t;
            censored_window = true;
            break;
        }
    }
    if let Some((tau_d, x_d)) = dev_stop {
        if tau_d <= tau_h {
            return (finish(tau_d, x_d, censored_window), tau_h, censored_window);
        }
    }
    if censored_window {
        return (finish(t, x, true), tau_h, true);
    }
    // phase 2: Markov restart under the equilibrium rule with a fresh clock
    let u_eq: f64 = if equilibrium.rate.max_value() > 0.0 {
        clk.sample(Exp1)
    } else {
        f64::INFINITY
    };
    let cont = run_rule(spec, equilibrium, x, dt, max_time - tau_h, u_eq, || {
        inc.sample(StandardNormal)
    });
    (
        finish(tau_h + cont.tau, cont.x_tau, cont.censored),
        tau_h,
        false,
    )
}

/// Perturbation-gap estimate together with its ingredients.
#[derive(Debug, Clone, Serialize)]
pub struct GapEstimate {
    /// `(J_eq(x0) - J_pert(x0)) / E[tau_h]`, delta-method standard error.
    pub gap: McEstimate,
    pub j_equilibrium: McEstimate,
    pub j_perturbed: McEstimate,
    pub tau_h: McEstimate,
    /// Estimated expected total time of the perturbed rule at x0.
    pub e_perturbed: McEstimate,
    /// Set when the perturbed time measurably violates the budget at x0
    /// (the deviation is then outside the admissible class).
    pub inadmissible: bool,
}

/// Estimates the first-order equilibrium gap of `deviation` against
/// `equilibrium` at `x0` with window radius `h`, using common random numbers
/// for the diffusion increments of both arms.
#[allow(clippy::too_many_arguments)]
pub fn estimate_perturbation_gap(
    spec: &ProblemSpec,
    equilibrium: &Strategy,
    deviation: &Strategy,
    x0: f64,
    h: f64,
    n: u64,
    dt: f64,
    master_seed: u64,
) -> Result<GapEstimate> {
    if !(h > 0.0) || !spec.contains(x0 - h) || !spec.contains(x0 + h) {
        return Err(Error::Domain(format!(
            "window [{}, {}] must lie inside the state space",
            x0 - h,
            x0 + h
        )));
    }
    if n < 100 {
        return Err(Error::Domain(format!("need n >= 100 paths, got {n}")));
    }
    let max_time = default_max_time(spec);
    struct PathOut {
        payoff_eq: f64,
        payoff_pert: f64,
        tau_h: f64,
        total_pert: f64,
        censored: bool,
    }
    let outs: Vec<PathOut> = (0..n)
        .into_par_iter()
        .map(|i| {
            // equilibrium arm
            let mut inc_a = path_rng(master_seed, i, STREAM_INCREMENTS);
            let mut clk_a = path_rng(master_seed, i, STREAM_CLOCK_MAIN);
            let u: f64 = if equilibrium.rate.max_value() > 0.0 {
                clk_a.sample(Exp1)
            } else {
                f64::INFINITY
            };
            let eq = run_rule(spec, equilibrium, x0, dt, max_time, u, || {
                inc_a.sample(StandardNormal)
            });
            // perturbed arm, common increments
            let mut inc_b = path_rng(master_seed, i, STREAM_INCREMENTS);
            let mut clk_b = path_rng(master_seed, i, STREAM_CLOCK_PERTURBED);
            let (pert, tau_h, _c) = run_perturbed(
                spec,
                equilibrium,
                deviation,
                x0,
                h,
                dt,
                max_time,
                &mut inc_b,
                &mut clk_b,
            );
            PathOut {
                payoff_eq: eq.payoff,
                payoff_pert: pert.payoff,
                tau_h,
                total_pert: pert.tau,
                censored: eq.censored || pert.censored,
            }
        })
        .collect();

    let diffs: Vec<f64> = outs.iter().map(|o| o.payoff_eq - o.payoff_pert).collect();
    let tau_hs: Vec<f64> = outs.iter().map(|o| o.tau_h).collect();
    let totals: Vec<f64> = outs.iter().map(|o| o.total_pert).collect();
    let payoffs_eq: Vec<f64> = outs.iter().map(|o| o.payoff_eq).collect();
    let payoffs_pert: Vec<f64> = outs.iter().map(|o| o.payoff_pert).collect();
    let censored = outs.iter().filter(|o| o.censored).count() as f64 / n as f64;

    let (d_mean, d_se) = mean_and_stderr(&diffs);
    let (th_mean, th_se) = mean_and_stderr(&tau_hs);
    let ratio = d_mean / th_mean;
    // delta method for D/TH including their covariance
    let cov = covariance(&diffs, &tau_hs, d_mean, th_mean) / n as f64;
    let var = (d_se * d_se) / (th_mean * th_mean)
        + (d_mean * d_mean) * (th_se * th_se) / th_mean.powi(4)
        - 2.0 * d_mean * cov / th_mean.powi(3);
    let ratio_se = var.max(0.0).sqrt();

    let (ep_mean, ep_se) = mean_and_stderr(&totals);
    let (je_mean, je_se) = mean_and_stderr(&payoffs_eq);
    let (jp_mean, jp_se) = mean_and_stderr(&payoffs_pert);
    let horizon = equilibrium.horizon;
    let inadmissible = ep_mean > horizon * (1.0 + 1e-3) + 3.0 * ep_se;

    Ok(GapEstimate {
        gap: McEstimate::new(ratio, ratio_se, n, master_seed, dt, censored),
        j_equilibrium: McEstimate::new(je_mean, je_se, n, master_seed, dt, censored),
        j_perturbed: McEstimate::new(jp_mean, jp_se, n, master_seed, dt, censored),
        tau_h: McEstimate::new(th_mean, th_se, n, master_seed, dt, censored),
        e_perturbed: McEstimate::new(ep_mean, ep_se, n, master_seed, dt, censored),
        inadmissible,
    })
}

/// Estimates `E_x[∫_0^{tau_h} 1{X_s > x} ds] / E_x[tau_h]` (which tends to
/// 1/2 as h -> 0 for any diffusion).
pub fn occupation_ratio(
    spec: &ProblemSpec,
    x: f64,
    h: f64,
    n: u64,
    dt: f64,
    master_seed: u64,
) -> Result<McEstimate> {
    if !spec.contains(x - h) || !spec.contains(x + h) {
        return Err(Error::Domain(format!(
            "window around {x} leaves the state space"
        )));
    }
    let max_time = default_max_time(spec);
    let pairs: Vec<(f64, f64, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut inc = path_rng(master_seed, i, STREAM_INCREMENTS);
            let mut t = 0.0_f64;
            let mut above = 0.0_f64;
            let mut state = x;
            let mut censored = false;
            loop {
                let z: f64 = inc.sample(StandardNormal);
                let next = em_step(spec, state, dt, z);
                above += 0.5
                    * ((if state > x { 1.0 } else { 0.0 }) + (if next > x { 1.0 } else { 0.0 }))
                    * dt;
                t += dt;
                state = next;
                if (state - x).abs() >= h {
                    break;
                }
                if t >= max_time {
                    censored = true;
                    break;
                }
            }
            (above, t, censored)
        })
        .collect();
    let nums: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let dens: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let censored = pairs.iter().filter(|p| p.2).count() as f64 / n as f64;
    let (num_mean, num_se) = mean_and_stderr(&nums);
    let (den_mean, den_se) = mean_and_stderr(&dens);
    let ratio = num_mean / den_mean;
    let cov = covariance(&nums, &dens, num_mean, den_mean) / n as f64;
    let var = (num_se * num_se) / (den_mean * den_mean)
        + num_mean * num_mean * (den_se * den_se) / den_mean.powi(4)
        - 2.0 * num_mean * cov / den_mean.powi(3);
    Ok(McEstimate::new(
        ratio,
        var.max(0.0).sqrt(),
        n,
        master_seed,
        dt,
        censored,
    ))
}

/// Canned deviation families used by the equilibrium sign tests.
pub mod deviations {
    use super::*;

    /// Stop immediately everywhere (D = ∅).
    pub fn stop_now(horizon: f64) -> Strategy {
        Strategy::pure_exit(OpenSetUnion::empty(), horizon)
    }

    /// Never stop (D = (alpha, beta), psi = 0).
    pub fn never_stop(horizon: f64) -> Strategy {
        Strategy::pure_exit(OpenSetUnion::full(), horizon)
    }

    /// Widen every finite component of D by `factor` of its length on each
    /// side (overlaps merged); the rate is kept.
    pub fn widen_domain(eq: &Strategy, factor: f64) -> Result<Strategy> {
        let mut widened: Vec<(f64, f64)> = eq
            .domain
            .intervals()
            .iter()
            .map(|&(l, u)| {
                if l.is_finite() && u.is_finite() {
                    let pad = factor * (u - l);
                    (l - pad, u + pad)
                } else {
                    (l, u)
                }
            })
            .collect();
        widened.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (l, u) in widened {
            if let Some(last) = merged.last_mut() {
                if l <= last.1 {
                    last.1 = last.1.max(u);
                    continue;
                }
            }
            merged.push((l, u));
        }
        Ok(Strategy::new(
            OpenSetUnion::new(merged)?,
            eq.rate.clone(),
            eq.horizon,
        ))
    }

    /// Halve (or scale) the randomization rate everywhere.
    pub fn shrink_rate(eq: &Strategy, factor: f64) -> Strategy {
        let values = eq.rate.values().iter().map(|v| v * factor).collect();
        let rate = RateFunction::new(eq.rate.breakpoints().to_vec(), values)
            .expect("scaling preserves validity");
        Strategy::new(eq.domain.clone(), rate, eq.horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::problems::bm_abs;

    #[test]
    fn immediate_stop_outside_domain() {
        let spec = bm_abs(0.5, 1.0);
        let strat = Strategy::pure_exit(OpenSetUnion::interval(-1.0, 1.0).unwrap(), 1.0);
        let mut rng = path_rng(1, 0, 0);
        let s = sample_stopping(&spec, &strat, 2.0, 1e-3, 10.0, &mut rng);
        assert_eq!(s.tau, 0.0);
        assert_eq!(s.x_tau, 2.0);
        assert_eq!(s.payoff, 2.0);
    }

    #[test]
    fn pure_exit_hits_both_sides_evenly() {
        let spec = bm_abs(0.0, 1.0);
        let strat = Strategy::pure_exit(OpenSetUnion::interval(-1.0, 1.0).unwrap(), 1.0);
        let n = 2000;
        let mut hi = 0usize;
        for i in 0..n {
            let mut rng = path_rng(7, i, 0);
            let s = sample_stopping(&spec, &strat, 0.0, 1e-3, 200.0, &mut rng);
            assert!(s.x_tau.abs() >= 1.0 && s.x_tau.abs() < 1.2);
            if s.x_tau > 0.0 {
                hi += 1;
            }
        }
        let frac = hi as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.05, "upper-exit fraction {frac}");
    }

    #[test]
    fn constant_rate_clock_mean_matches_horizon() {
        let t = 1.0;
        let spec = bm_abs(0.0, t);
        let strat = Strategy::new(OpenSetUnion::full(), RateFunction::constant(1.0 / t), t);
        let (e, _j) = estimate_e_and_j(&spec, &strat, 0.0, 4000, 1e-3, 42).unwrap();
        assert!(
            (e.mean - t).abs() < 4.0 * e.stderr + 0.01,
            "mean {} stderr {}",
            e.mean,
            e.stderr
        );
        assert!(!e.flagged);
    }

    #[test]
    fn estimates_are_bit_identical_across_worker_counts() {
        let t = 1.0;
        let spec = bm_abs(0.0, t);
        let strat = Strategy::new(OpenSetUnion::full(), RateFunction::constant(1.0 / t), t);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| estimate_e_and_j(&spec, &strat, 0.0, 600, 1e-3, 9).unwrap())
        };
        let (e1, j1) = run(1);
        let (e2, j2) = run(2);
        assert_eq!(e1.mean.to_bits(), e2.mean.to_bits());
        assert_eq!(e1.stderr.to_bits(), e2.stderr.to_bits());
        assert_eq!(j1.mean.to_bits(), j2.mean.to_bits());
        assert_eq!(j1.stderr.to_bits(), j2.stderr.to_bits());
    }

    #[test]
    fn self_deviation_gap_is_statistically_zero() {
        let t = 1.0;
        let spec = bm_abs(0.0, t);
        let eq = Strategy::new(OpenSetUnion::full(), RateFunction::constant(1.0 / t), t);
        let gap = estimate_perturbation_gap(&spec, &eq, &eq, 0.0, 0.1, 2000, 5e-4, 11).unwrap();
        assert!(
            gap.gap.mean.abs() <= 3.0 * gap.gap.stderr + 1e-9,
            "gap {} stderr {}",
            gap.gap.mean,
            gap.gap.stderr
        );
        assert!(!gap.inadmissible);
    }

    #[test]
    fn stop_now_gap_recovers_value_minus_payoff() {
        // gap * E[tau_h] -> J(0) - g(0) = J(0) for the r=0 equilibrium
        let t = 1.0;
        let spec = bm_abs(0.0, t);
        let eq = Strategy::new(OpenSetUnion::full(), RateFunction::constant(1.0 / t), t);
        let dev = deviations::stop_now(t);
        let h = 0.05;
        let gap = estimate_perturbation_gap(&spec, &eq, &dev, 0.0, h, 3000, 5e-4, 13).unwrap();
        let j0 = (t / 2.0_f64).sqrt();
        let recovered = gap.gap.mean * gap.tau_h.mean;
        assert!(
            (recovered - j0).abs() < 0.05,
            "gap*tau_h = {recovered}, J(0) = {j0}"
        );
        assert!(gap.gap.mean > 0.0);
    }

    #[test]
    fn occupation_ratio_near_half() {
        let spec = bm_abs(0.0, 1.0);
        let est = occupation_ratio(&spec, 0.0, 0.05, 3000, 1e-5, 17).unwrap();
        assert!((est.mean - 0.5).abs() < 0.03, "ratio {}", est.mean);
    }

    #[test]
    fn widen_and_shrink_deviations() {
        let eq = Strategy::new(
            OpenSetUnion::interval(-2.0, 2.0).unwrap(),
            RateFunction::indicator(-1.0, 1.0, 0.25).unwrap(),
            4.0,
        );
        let wide = deviations::widen_domain(&eq, 0.25).unwrap();
        assert_eq!(wide.domain.intervals(), &[(-3.0, 3.0)]);
        let shrunk = deviations::shrink_rate(&eq, 0.5);
        assert_eq!(shrunk.rate.value(0.0), 0.125);
    }

    #[test]
    fn path_rng_streams_are_distinct_and_reproducible() {
        let a1: u64 = path_rng(1, 2, 3).gen();
        let a2: u64 = path_rng(1, 2, 3).gen();
        let b: u64 = path_rng(1, 2, 4).gen();
        let c: u64 = path_rng(1, 3, 3).gen();
        assert_eq!(a1, a2);
        assert_ne!(a1, b);
        assert_ne!(a1, c);
    }
}
