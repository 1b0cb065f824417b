//! Randomized Markovian stopping strategies: an open set `D` (finite union of
//! open intervals, endpoints may be infinite) together with a càdlàg
//! piecewise-constant randomization rate `psi` supported on the closure of
//! `D`.  The induced stopping time is the minimum of the first exit from `D`
//! and the first ring of an exponential clock run at rate `psi(X_t)`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Finite union of disjoint open intervals, sorted; `-inf`/`+inf` endpoints
/// encode components touching the state-space boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpenSetUnion {
    intervals: Vec<(f64, f64)>,
}

impl OpenSetUnion {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for &(l, u) in &intervals {
            if !(l < u) {
                return Err(Error::InvalidStrategy(format!(
                    "empty or inverted interval ({l}, {u})"
                )));
            }
        }
        for w in intervals.windows(2) {
            if w[0].1 > w[1].0 {
                return Err(Error::InvalidStrategy(format!(
                    "overlapping intervals ({}, {}) and ({}, {})",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(OpenSetUnion { intervals })
    }

    pub fn empty() -> Self {
        OpenSetUnion { intervals: vec![] }
    }

    pub fn interval(l: f64, u: f64) -> Result<Self> {
        OpenSetUnion::new(vec![(l, u)])
    }

    pub fn full() -> Self {
        OpenSetUnion {
            intervals: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.component_of(x).is_some()
    }

    pub fn component_of(&self, x: f64) -> Option<usize> {
        self.intervals.iter().position(|&(l, u)| l < x && x < u)
    }

    /// Finite boundary points of D inside the open state space.
    pub fn boundary_points(&self, alpha: f64, beta: f64) -> Vec<f64> {
        let mut pts = Vec::new();
        for &(l, u) in &self.intervals {
            if l.is_finite() && l > alpha {
                pts.push(l);
            }
            if u.is_finite() && u < beta {
                pts.push(u);
            }
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }

    /// Closed segments of the complement intersected with `[lo, hi]`.
    /// Zero-length gaps (isolated points of D^c) are kept as degenerate
    /// segments.
    pub fn complement_segments(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let mut segs = Vec::new();
        let mut cursor = lo;
        for &(l, u) in &self.intervals {
            if l > cursor {
                segs.push((cursor, l.min(hi)));
            } else if l == cursor && !segs.iter().any(|&(_, b)| b == cursor) && cursor > lo {
                segs.push((cursor, cursor));
            }
            cursor = cursor.max(u);
            if cursor >= hi {
                break;
            }
        }
        if cursor < hi {
            segs.push((cursor, hi));
        }
        segs.retain(|&(a, b)| a <= b && a <= hi && b >= lo);
        segs
    }
}

/// Càdlàg piecewise-constant rate: `values[0]` applies below the first
/// breakpoint, `values[k]` on `[breakpoints[k-1], breakpoints[k])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl RateFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidStrategy(format!(
                "rate needs {} values for {} breakpoints, got {}",
                breakpoints.len() + 1,
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidStrategy(
                "rate breakpoints must be strictly sorted".into(),
            ));
        }
        Ok(RateFunction {
            breakpoints,
            values,
        })
    }

    pub fn zero() -> Self {
        RateFunction {
            breakpoints: vec![],
            values: vec![0.0],
        }
    }

    pub fn constant(v: f64) -> Self {
        RateFunction {
            breakpoints: vec![],
            values: vec![v],
        }
    }

    /// Rate `v` on `[a, b)`, zero elsewhere.
    pub fn indicator(a: f64, b: f64, v: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidStrategy(format!(
                "indicator needs a < b, got [{a}, {b})"
            )));
        }
        let mut breakpoints = Vec::new();
        let mut values = vec![0.0];
        if a.is_finite() {
            breakpoints.push(a);
            values = vec![0.0, v];
        } else {
            values = vec![v];
        }
        if b.is_finite() {
            breakpoints.push(b);
            values.push(0.0);
        }
        Ok(RateFunction {
            breakpoints,
            values,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// psi(x), right-continuous.
    pub fn value(&self, x: f64) -> f64 {
        self.values[self.breakpoints.partition_point(|&b| b <= x)]
    }

    /// Left limit psi(x-).
    pub fn left_limit(&self, x: f64) -> f64 {
        self.values[self.breakpoints.partition_point(|&b| b < x)]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Maximal intervals on which psi > 0, as half-open pieces
    /// `[start, end)`; infinite ends stand in for the state-space boundary.
    pub fn positive_pieces(&self) -> Vec<(f64, f64)> {
        let mut pieces = Vec::new();
        let n = self.values.len();
        let start_of = |k: usize| {
            if k == 0 {
                f64::NEG_INFINITY
            } else {
                self.breakpoints[k - 1]
            }
        };
        let end_of = |k: usize| {
            if k == n - 1 {
                f64::INFINITY
            } else {
                self.breakpoints[k]
            }
        };
        let mut k = 0;
        while k < n {
            if self.values[k] > 0.0 {
                let start = start_of(k);
                let mut end = end_of(k);
                while k + 1 < n && self.values[k + 1] > 0.0 {
                    k += 1;
                    end = end_of(k);
                }
                pieces.push((start, end));
            }
            k += 1;
        }
        pieces
    }

    /// Interior of the support of psi (open intervals).
    pub fn support_interior(&self) -> Vec<(f64, f64)> {
        self.positive_pieces()
    }
}

/// Region label of a state under a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    Stopping,
    Continuation,
    Randomization,
}

/// A maximal interval of one region, with endpoint-inclusion flags so the
/// half-open randomization pieces are reported exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionPartition {
    pub stopping: Vec<RegionInterval>,
    pub continuation: Vec<RegionInterval>,
    pub randomization: Vec<RegionInterval>,
}

/// Structural violation found by [`Strategy::validate`]; data, not an error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: &'static str,
    pub detail: String,
}

impl Violation {
    fn new(kind: &'static str, detail: String) -> Self {
        Violation { kind, detail }
    }
}

/// A randomized Markovian stopping strategy. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Strategy {
    pub domain: OpenSetUnion,
    pub rate: RateFunction,
    pub horizon: f64,
}

impl Strategy {
    pub fn new(domain: OpenSetUnion, rate: RateFunction, horizon: f64) -> Self {
        Strategy {
            domain,
            rate,
            horizon,
        }
    }

    /// Pure first-exit strategy of `domain`.
    pub fn pure_exit(domain: OpenSetUnion, horizon: f64) -> Self {
        Strategy::new(domain, RateFunction::zero(), horizon)
    }

    /// psi(x) and the left limit psi(x-).
    pub fn rate_at(&self, x: f64) -> (f64, f64) {
        (self.rate.value(x), self.rate.left_limit(x))
    }

    pub fn classify(&self, x: f64) -> Region {
        if !self.domain.contains(x) {
            Region::Stopping
        } else if self.rate.value(x) > 0.0 {
            Region::Randomization
        } else {
            Region::Continuation
        }
    }

    /// Partition of `(alpha, beta)` into stopping, continuation and
    /// randomization regions.  Exact on the piecewise-constant structure.
    pub fn region_partition(&self, alpha: f64, beta: f64) -> RegionPartition {
        let mut cuts: Vec<f64> = vec![alpha, beta];
        for &(l, u) in self.domain.intervals() {
            cuts.push(l);
            cuts.push(u);
        }
        cuts.extend_from_slice(self.rate.breakpoints());
        cuts.retain(|c| c.is_finite() && *c >= alpha && *c <= beta || !c.is_finite());
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();

        let mut partition = RegionPartition {
            stopping: Vec::new(),
            continuation: Vec::new(),
            randomization: Vec::new(),
        };
        let push = |p: &mut RegionPartition, region: Region, iv: RegionInterval| {
            let list = match region {
                Region::Stopping => &mut p.stopping,
                Region::Continuation => &mut p.continuation,
                Region::Randomization => &mut p.randomization,
            };
            // merge with the previous interval when they share an endpoint
            if let Some(last) = list.last_mut() {
                if last.hi == iv.lo && (last.hi_closed || iv.lo_closed) {
                    last.hi = iv.hi;
                    last.hi_closed = iv.hi_closed;
                    return;
                }
            }
            list.push(iv);
        };

        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a == b {
                continue;
            }
            let mid = if a.is_finite() && b.is_finite() {
                0.5 * (a + b)
            } else if a.is_finite() {
                a + 1.0
            } else if b.is_finite() {
                b - 1.0
            } else {
                0.0
            };
            let region = self.classify(mid);
            // inspect the cut points themselves for closure flags
            let lo_closed = a.is_finite() && a > alpha && self.classify(a) == region;
            let hi_closed = b.is_finite() && b < beta && self.classify(b) == region;
            push(
                &mut partition,
                region,
                RegionInterval {
                    lo: a,
                    hi: b,
                    lo_closed,
                    hi_closed,
                },
            );
        }
        // cut points not claimed by a neighboring interval (isolated stopping
        // points between touching components) become degenerate intervals
        let covered = |list: &[RegionInterval], c: f64| {
            list.iter().any(|iv| {
                (c > iv.lo || (iv.lo_closed && c == iv.lo))
                    && (c < iv.hi || (iv.hi_closed && c == iv.hi))
            })
        };
        for &c in &cuts {
            if !c.is_finite() || c <= alpha || c >= beta {
                continue;
            }
            let list = match self.classify(c) {
                Region::Stopping => &mut partition.stopping,
                Region::Continuation => &mut partition.continuation,
                Region::Randomization => &mut partition.randomization,
            };
            if !covered(list, c) {
                list.push(RegionInterval {
                    lo: c,
                    hi: c,
                    lo_closed: true,
                    hi_closed: true,
                });
            }
        }
        for list in [
            &mut partition.stopping,
            &mut partition.continuation,
            &mut partition.randomization,
        ] {
            list.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
        }
        partition
    }

    /// Checks type invariants; with `equilibrium_candidate` additionally the
    /// rate-quantization {0, 1/T} and the per-component connected shape of the
    /// randomization set.
    pub fn validate(&self, equilibrium_candidate: bool) -> Vec<Violation> {
        let mut out = Vec::new();
        for w in self.domain.intervals().windows(2) {
            if w[0].1 > w[1].0 {
                out.push(Violation::new(
                    "intervals-overlap",
                    format!(
                        "components ({}, {}) and ({}, {}) overlap",
                        w[0].0, w[0].1, w[1].0, w[1].1
                    ),
                ));
            }
        }
        for &v in self.rate.values() {
            if v < 0.0 {
                out.push(Violation::new(
                    "rate-negative",
                    format!("rate value {v} < 0"),
                ));
            }
        }
        // support of psi must lie in the closure of D: walk the components
        // and check that they cover [s, e] without gaps
        for (s, e) in self.rate.positive_pieces() {
            let mut cursor = s;
            let mut gap = false;
            for &(l, u) in self.domain.intervals() {
                if u < cursor {
                    continue;
                }
                if l > cursor {
                    gap = true;
                    break;
                }
                cursor = u;
                if cursor >= e {
                    break;
                }
            }
            if gap || cursor < e {
                out.push(Violation::new(
                    "support-outside-domain",
                    format!("rate positive on [{s}, {e}) outside the closure of D"),
                ));
            }
        }

        if equilibrium_candidate {
            let inv_t = 1.0 / self.horizon;
            for &v in self.rate.values() {
                if v != 0.0 && (v - inv_t).abs() > 1e-12 * inv_t {
                    out.push(Violation::new(
                        "rate-not-in-{0,1/T}",
                        format!("rate value {v} not in {{0, {inv_t}}}"),
                    ));
                }
            }
            let pieces = self.rate.positive_pieces();
            for (ci, &(l, u)) in self.domain.intervals().iter().enumerate() {
                let in_component: Vec<(f64, f64)> = pieces
                    .iter()
                    .cloned()
                    .filter(|&(s, e)| e > l && s < u)
                    .collect();
                if in_component.len() > 1 {
                    out.push(Violation::new(
                        "randomization-not-connected",
                        format!(
                            "component {ci} has {} disjoint randomization pieces",
                            in_component.len()
                        ),
                    ));
                    continue;
                }
                if let Some(&(s, e)) = in_component.first() {
                    // the randomization set must reach every infinite end of
                    // its component, stay connected, and start strictly
                    // inside at a finite lower end (the left-closed piece
                    // [s, e) cannot begin on the stopping boundary itself);
                    // +-inf marks the state-space boundary
                    let lower_infinite = !l.is_finite();
                    let upper_infinite = !u.is_finite();
                    let touches_lower = !s.is_finite() || s <= l;
                    let touches_upper = !e.is_finite() || e >= u;
                    let ok = match (lower_infinite, upper_infinite) {
                        (true, true) => touches_lower && touches_upper,
                        (true, false) => touches_lower && e.is_finite() && e <= u,
                        (false, true) => touches_upper && s.is_finite() && s > l,
                        (false, false) => s.is_finite() && e.is_finite() && l < s && e <= u,
                    };
                    if !ok {
                        out.push(Violation::new(
                            "randomization-shape",
                            format!(
                                "component {ci} randomization [{s}, {e}) does not touch its infinite ends as required"
                            ),
                        ));
                    }
                }
            }
        }
        out
    }
}
