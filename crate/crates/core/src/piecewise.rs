//! Exact sampler for one-dimensional densities of the form
//!
//! ```text
//! exp{ sum_j f_j(x) I(x > L_j) + sum_k g_k(x) I(x < U_k) } * exp(c1 x^2 + c2 x + c3) I(x in S)
//! ```
//!
//! where every `f_j`, `g_k` is a quadratic. The bounds cut the support `S`
//! into intervals on which the log-density is a single quadratic, so the
//! density is a mixture of truncated normals, truncated exponentials and
//! uniforms. Interval masses are kept in log space.

use rand::Rng;

use crate::error::{Error, Result};
use crate::special::{log1m_exp, log_norm_interval, sample_std_trunc_normal};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Which side of `bound` a piece is active on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Active when `x > bound`.
    Lower,
    /// Active when `x < bound`.
    Upper,
}

/// A quadratic log-density term `a1 x^2 + a2 x + a3` switched on by a bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPiece {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub bound: f64,
    pub side: Side,
}

impl QuadraticPiece {
    pub fn lower(a1: f64, a2: f64, a3: f64, bound: f64) -> Self {
        QuadraticPiece { a1, a2, a3, bound, side: Side::Lower }
    }

    pub fn upper(a1: f64, a2: f64, a3: f64, bound: f64) -> Self {
        QuadraticPiece { a1, a2, a3, bound, side: Side::Upper }
    }

    /// Whether the piece contributes at `x`.
    pub fn active_at(&self, x: f64) -> bool {
        match self.side {
            Side::Lower => x > self.bound,
            Side::Upper => x < self.bound,
        }
    }
}

/// Prior kernel `exp(c1 x^2 + c2 x + c3)` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorKernel {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub lo: f64,
    pub hi: f64,
}

impl PriorKernel {
    /// Normal prior with the given mean and variance on the whole line.
    pub fn normal(mean: f64, var: f64) -> Self {
        PriorKernel {
            c1: -0.5 / var,
            c2: mean / var,
            c3: -0.5 * mean * mean / var,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// Flat prior on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Self {
        PriorKernel { c1: 0.0, c2: 0.0, c3: 0.0, lo, hi }
    }
}

/// Distribution family of one interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceKind {
    TruncNormal,
    TruncExponential,
    Uniform,
    /// Carries no probability mass.
    Null,
}

/// One interval of the partition with its accumulated coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// Quadratic, linear and constant coefficients of the log-density.
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub kind: PieceKind,
    /// Log of the unnormalized mass on the interval.
    pub log_mass: f64,
}

impl Interval {
    fn classify(lo: f64, hi: f64, d: f64, e: f64, f: f64) -> Result<Self> {
        let bounded = lo.is_finite() && hi.is_finite();
        let (kind, log_mass) = if d < 0.0 {
            let mean = -e / (2.0 * d);
            let sd = (-0.5 / d).sqrt();
            let lm = f - e * e / (4.0 * d)
                + sd.ln()
                + LN_SQRT_2PI
                + log_norm_interval((lo - mean) / sd, (hi - mean) / sd);
            (PieceKind::TruncNormal, lm)
        } else if d > 0.0 {
            return Err(Error::ImproperDensity(format!(
                "convex log-density (quadratic coefficient {d}) on [{lo}, {hi}]"
            )));
        } else if e != 0.0 {
            let lm = if e > 0.0 {
                if hi == f64::INFINITY {
                    return Err(Error::ImproperDensity(format!(
                        "exponential piece grows toward +inf (slope {e})"
                    )));
                }
                f + e * hi + log1m_exp(-e * (hi - lo)) - e.ln()
            } else {
                if lo == f64::NEG_INFINITY {
                    return Err(Error::ImproperDensity(format!(
                        "exponential piece grows toward -inf (slope {e})"
                    )));
                }
                f + e * lo + log1m_exp(e * (hi - lo)) - (-e).ln()
            };
            (PieceKind::TruncExponential, lm)
        } else {
            if !bounded {
                return Err(Error::ImproperDensity(
                    "flat piece on an unbounded interval".into(),
                ));
            }
            (PieceKind::Uniform, f + (hi - lo).ln())
        };
        if log_mass.is_nan() || log_mass == f64::INFINITY {
            return Err(Error::ImproperDensity(format!(
                "interval [{lo}, {hi}] has log-mass {log_mass}"
            )));
        }
        let kind = if log_mass == f64::NEG_INFINITY { PieceKind::Null } else { kind };
        Ok(Interval { lo, hi, d, e, f, kind, log_mass })
    }

    fn log_density(&self, x: f64) -> f64 {
        (self.d * x + self.e) * x + self.f
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let x = match self.kind {
            PieceKind::TruncNormal => {
                let mean = -self.e / (2.0 * self.d);
                let sd = (-0.5 / self.d).sqrt();
                let z = sample_std_trunc_normal((self.lo - mean) / sd, (self.hi - mean) / sd, u);
                mean + sd * z
            }
            PieceKind::TruncExponential => {
                // Distance from the heavy end follows an exponential truncated to the width.
                let rate = self.e.abs();
                let width = self.hi - self.lo;
                let y = -(-u * -(-rate * width).exp_m1()).ln_1p() / rate;
                if self.e > 0.0 {
                    self.hi - y
                } else {
                    self.lo + y
                }
            }
            PieceKind::Uniform => self.lo + u * (self.hi - self.lo),
            PieceKind::Null => 0.5 * (self.lo + self.hi),
        };
        x.clamp(self.lo, self.hi)
    }
}

/// A normalized piecewise density ready for sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseDensity {
    intervals: Vec<Interval>,
    log_norm: f64,
    cumulative: Vec<f64>,
}

impl PiecewiseDensity {
    /// Partitions the prior support at every bound strictly inside it,
    /// accumulates the active coefficients on each interval and computes
    /// the interval masses.
    pub fn build(pieces: &[QuadraticPiece], prior: &PriorKernel) -> Result<Self> {
        let (lo, hi) = (prior.lo, prior.hi);
        if !(lo < hi) || lo.is_nan() || hi.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "prior support [{lo}, {hi}] is empty"
            )));
        }
        for piece in pieces {
            if !piece.bound.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "piece bound {} is not finite",
                    piece.bound
                )));
            }
            if ![piece.a1, piece.a2, piece.a3].iter().all(|c| c.is_finite()) {
                return Err(Error::CorruptState("piecewise"));
            }
        }
        let mut sorted: Vec<&QuadraticPiece> = pieces.iter().collect();
        sorted.sort_unstable_by(|a, b| a.bound.total_cmp(&b.bound));
        let lower: Vec<&QuadraticPiece> = sorted.iter().copied().filter(|pc| pc.side == Side::Lower).collect();
        let upper: Vec<&QuadraticPiece> = sorted.iter().copied().filter(|pc| pc.side == Side::Upper).collect();

        let mut edges: Vec<f64> = Vec::with_capacity(pieces.len() + 2);
        edges.push(lo);
        edges.extend(sorted.iter().map(|pc| pc.bound).filter(|&b| b > lo && b < hi));
        edges.dedup();
        edges.push(hi);
        let count = edges.len() - 1;

        // Lower pieces with bound <= left edge are active; sweep left to right.
        let mut lower_sum = vec![[0.0; 3]; count];
        let mut acc = [0.0; 3];
        let mut next = 0;
        for (i, slot) in lower_sum.iter_mut().enumerate() {
            while next < lower.len() && lower[next].bound <= edges[i] {
                let pc = lower[next];
                acc[0] += pc.a1;
                acc[1] += pc.a2;
                acc[2] += pc.a3;
                next += 1;
            }
            *slot = acc;
        }
        // Upper pieces with bound >= right edge are active; sweep right to left.
        let mut upper_sum = vec![[0.0; 3]; count];
        let mut acc = [0.0; 3];
        let mut next = upper.len();
        for i in (0..count).rev() {
            while next > 0 && upper[next - 1].bound >= edges[i + 1] {
                let pc = upper[next - 1];
                acc[0] += pc.a1;
                acc[1] += pc.a2;
                acc[2] += pc.a3;
                next -= 1;
            }
            upper_sum[i] = acc;
        }

        let mut intervals = Vec::with_capacity(count);
        for i in 0..count {
            let d = prior.c1 + lower_sum[i][0] + upper_sum[i][0];
            let e = prior.c2 + lower_sum[i][1] + upper_sum[i][1];
            let f = prior.c3 + lower_sum[i][2] + upper_sum[i][2];
            intervals.push(Interval::classify(edges[i], edges[i + 1], d, e, f)?);
        }
        Self::from_intervals(intervals)
    }

    fn from_intervals(intervals: Vec<Interval>) -> Result<Self> {
        let max = intervals.iter().map(|iv| iv.log_mass).fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::ImproperDensity(format!("total log-mass {max}")));
        }
        let mut cumulative = Vec::with_capacity(intervals.len());
        let mut run = 0.0;
        for iv in &intervals {
            run += (iv.log_mass - max).exp();
            cumulative.push(run);
        }
        let log_norm = max + run.ln();
        for c in cumulative.iter_mut() {
            *c /= run;
        }
        Ok(PiecewiseDensity { intervals, log_norm, cumulative })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    /// Interval edges from the lower to the upper end of the support.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.intervals.iter().map(|iv| iv.lo).collect();
        if let Some(last) = self.intervals.last() {
            out.push(last.hi);
        }
        out
    }

    /// Log of the normalizing constant.
    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    /// Normalized interval probabilities.
    pub fn weights(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .map(|iv| (iv.log_mass - self.log_norm).exp())
            .collect()
    }

    /// Draws an interval by its weight, then a point inside it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        let mut idx = self.cumulative.partition_point(|&c| c <= u);
        idx = idx.min(self.intervals.len() - 1);
        while self.intervals[idx].kind == PieceKind::Null && idx > 0 {
            idx -= 1;
        }
        self.intervals[idx].sample(rng)
    }

    /// Normalized log-density; `-inf` outside the support.
    pub fn logpdf(&self, x: f64) -> f64 {
        let first = &self.intervals[0];
        let last = &self.intervals[self.intervals.len() - 1];
        if x.is_nan() || x < first.lo || x > last.hi {
            return f64::NEG_INFINITY;
        }
        let idx = self
            .intervals
            .partition_point(|iv| iv.hi < x)
            .min(self.intervals.len() - 1);
        self.intervals[idx].log_density(x) - self.log_norm
    }
}
