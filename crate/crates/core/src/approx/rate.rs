use std::fmt;

use crate::error::{Error, Result};

/// Default slope tolerance: an `O(t)` claim passes when the fitted slope is
/// at least `1 - SLOPE_TOL`.
pub const SLOPE_TOL: f64 = 0.15;

/// Residual traces whose largest entry is at most this are reported exact.
pub const EXACT_TOL: f64 = 1e-10;

/// Minimum number of positive residuals for a slope fit.
pub const MIN_FIT_POINTS: usize = 4;

/// Multiple of `f64::EPSILON * scale / t^2` treated as rounding noise.
pub const ROUNDOFF_FACTOR: f64 = 16.0;

/// Rounding floor of a quantity obtained by dividing an `O(scale)`
/// difference by `t^2`, as the transverse slot of `t^{-1}.y` does.
pub fn roundoff_floor(t: f64, scale: f64) -> f64 {
    ROUNDOFF_FACTOR * f64::EPSILON * scale / (t * t)
}

/// Replaces residuals at or below the rounding floor by zero.
pub fn denoise(residuals: Vec<(f64, f64)>, scale: f64) -> Vec<(f64, f64)> {
    residuals
        .into_iter()
        .map(|(t, r)| {
            (
                t,
                if r <= roundoff_floor(t, scale) {
                    0.0
                } else {
                    r
                },
            )
        })
        .collect()
}

/// A strictly decreasing grid of positive scales.
#[derive(Clone, Debug, PartialEq)]
pub struct TGrid {
    ts: Vec<f64>,
}

impl TGrid {
    pub fn new(ts: Vec<f64>) -> Result<Self> {
        if let Some(&t) = ts.iter().find(|t| !t.is_finite() || **t <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scales must be positive and finite, got {t}"
            )));
        }
        if ts.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument(
                "scales must be strictly decreasing".into(),
            ));
        }
        Ok(TGrid { ts })
    }

    /// `t = 2^-k` for `k = first..=last`.
    pub fn dyadic(first: i32, last: i32) -> Self {
        TGrid {
            ts: (first..=last).map(|k| 2f64.powi(-k)).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.ts
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }
}

impl Default for TGrid {
    fn default() -> Self {
        Self::dyadic(2, 12)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Pass,
    Fail,
    /// The numbers pass but sit near a declared cutoff.
    Flagged,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    /// The worse of two verdicts: fail beats flagged beats pass.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Flagged, _) | (_, Verdict::Flagged) => Verdict::Flagged,
            _ => Verdict::Pass,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Flagged => "flagged",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateFit {
    /// Every residual vanished.
    Exact,
    Slope(f64),
}

/// Least-squares slope of `log r` against `log t`. Zero residuals are
/// skipped; an all-zero trace is exact.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: points.len(),
        });
    }
    if let Some(&(t, r)) = points
        .iter()
        .find(|(t, r)| t.is_nan() || *t <= 0.0 || !r.is_finite() || *r < 0.0)
    {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs t > 0 and finite r >= 0, got ({t}, {r})"
        )));
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, r)| *r > 0.0)
        .map(|(t, r)| (t.ln(), r.ln()))
        .collect();
    if logs.is_empty() {
        return Ok(RateFit::Exact);
    }
    if logs.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: logs.len(),
        });
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(RateFit::Slope(sxy / sxx))
}

/// Residual trace of a convergence claim with its fitted rate and verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    /// `(t, sup residual)`, `t` strictly decreasing.
    pub residuals: Vec<(f64, f64)>,
    /// `None` when the trace is exact.
    pub slope: Option<f64>,
    pub slope_tol: f64,
    pub verdict: Verdict,
}

impl RateReport {
    /// Judges an `O(t)` claim: exact traces pass, otherwise the fitted slope
    /// must be at least `1 - slope_tol`.
    pub fn from_residuals(residuals: Vec<(f64, f64)>, slope_tol: f64) -> Result<Self> {
        let max = residuals.iter().map(|p| p.1).fold(0.0, f64::max);
        if residuals.len() < MIN_FIT_POINTS {
            return Err(Error::TooFewPoints {
                needed: MIN_FIT_POINTS,
                got: residuals.len(),
            });
        }
        let positive = residuals.iter().filter(|p| p.1 > 0.0).count();
        let (slope, verdict) = if max <= EXACT_TOL {
            (None, Verdict::Pass)
        } else if positive < MIN_FIT_POINTS {
            // decays below the rounding floor before a rate can be fitted
            (None, Verdict::Flagged)
        } else {
            match rate_fit(&residuals)? {
                RateFit::Exact => (None, Verdict::Pass),
                RateFit::Slope(s) => (Some(s), Verdict::from_bool(s >= 1.0 - slope_tol)),
            }
        };
        Ok(RateReport {
            residuals,
            slope,
            slope_tol,
            verdict,
        })
    }

    pub fn is_exact(&self) -> bool {
        self.slope.is_none()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|p| p.1).fold(0.0, f64::max)
    }
}
