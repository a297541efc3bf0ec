use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::coords::{heisenberg_map, HeisenbergMap};
use crate::error::{Error, Result};
use crate::fields::{HFrame, StructureConstants};
use crate::group::{dilate, GroupElement, TangentGroup};

/// Chart points closer than this (max norm) are identified when testing
/// composability.
pub const POINT_TOL: f64 = 1e-9;

/// Resolution of the base-point key of the Heisenberg-coordinate cache.
pub const CACHE_QUANTUM: f64 = 1e-12;

/// A point of the tangent groupoid in the coordinates of one chart.
///
/// Boundary fiber coordinates are frame-relative: `X = sum X_j X_j(p)`.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupoidElement {
    Interior { p: Vec<f64>, q: Vec<f64>, t: f64 },
    Boundary { p: Vec<f64>, x: GroupElement },
}

impl GroupoidElement {
    pub fn interior(p: Vec<f64>, q: Vec<f64>, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "interior elements need t > 0, got {t}"
            )));
        }
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                actual: q.len(),
            });
        }
        Ok(GroupoidElement::Interior { p, q, t })
    }

    pub fn boundary(p: Vec<f64>, x: GroupElement) -> Result<Self> {
        if p.len() != x.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                actual: x.dim(),
            });
        }
        Ok(GroupoidElement::Boundary { p, x })
    }

    /// The unit `iota(m, t)`: `(m, m, t)` for `t > 0`, `(m, 0)` for `t = 0`.
    pub fn unit(m: &[f64], t: f64) -> Result<Self> {
        if t == 0.0 {
            Self::boundary(m.to_vec(), GroupElement::identity(m.len()))
        } else {
            Self::interior(m.to_vec(), m.to_vec(), t)
        }
    }

    pub fn t(&self) -> f64 {
        match self {
            GroupoidElement::Interior { t, .. } => *t,
            GroupoidElement::Boundary { .. } => 0.0,
        }
    }

    pub fn range(&self) -> UnitElement {
        match self {
            GroupoidElement::Interior { p, t, .. } => UnitElement {
                m: p.clone(),
                t: *t,
            },
            GroupoidElement::Boundary { p, .. } => UnitElement {
                m: p.clone(),
                t: 0.0,
            },
        }
    }

    pub fn source(&self) -> UnitElement {
        match self {
            GroupoidElement::Interior { q, t, .. } => UnitElement {
                m: q.clone(),
                t: *t,
            },
            GroupoidElement::Boundary { p, .. } => UnitElement {
                m: p.clone(),
                t: 0.0,
            },
        }
    }

    /// Largest coordinate difference; infinite across strata or scales.
    pub fn distance(&self, other: &GroupoidElement) -> f64 {
        match (self, other) {
            (
                GroupoidElement::Interior { p, q, t },
                GroupoidElement::Interior {
                    p: p2,
                    q: q2,
                    t: t2,
                },
            ) => max_diff(p, p2).max(max_diff(q, q2)).max((t - t2).abs()),
            (GroupoidElement::Boundary { p, x }, GroupoidElement::Boundary { p: p2, x: x2 }) => {
                max_diff(p, p2).max(x.max_diff(x2))
            }
            _ => f64::INFINITY,
        }
    }
}

/// A unit `(m, t)` of the tangent groupoid, `t >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitElement {
    pub m: Vec<f64>,
    pub t: f64,
}

impl UnitElement {
    pub fn distance(&self, other: &UnitElement) -> f64 {
        max_diff(&self.m, &other.m).max((self.t - other.t).abs())
    }
}

pub(crate) fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn quantize(x: &[f64]) -> Vec<i64> {
    x.iter()
        .map(|v| (v / CACHE_QUANTUM).round() as i64)
        .collect()
}

/// A chart of the tangent groupoid: an H-frame on a box plus memoized
/// Heisenberg coordinates at base points.
#[derive(Debug)]
pub struct GroupoidChart {
    name: String,
    frame: HFrame,
    cache: RwLock<HashMap<Vec<i64>, Arc<HeisenbergMap>>>,
}

impl Clone for GroupoidChart {
    fn clone(&self) -> Self {
        GroupoidChart::new(self.name.clone(), self.frame.clone())
    }
}

impl GroupoidChart {
    pub fn new(name: impl Into<String>, frame: HFrame) -> Self {
        GroupoidChart {
            name: name.into(),
            frame,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn frame(&self) -> &HFrame {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn cached_points(&self) -> usize {
        self.cache.read().map(|c| c.len()).unwrap_or(0)
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        if !self.frame.domain().contains(x) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        Ok(())
    }

    /// Heisenberg coordinates `eps_x`, memoized on `x` rounded to
    /// [`CACHE_QUANTUM`].
    pub fn eps(&self, x: &[f64]) -> Result<Arc<HeisenbergMap>> {
        self.check_domain(x)?;
        let key = quantize(x);
        if let Some(hm) = self.cache.read().ok().and_then(|c| c.get(&key).cloned()) {
            return Ok(hm);
        }
        let hm = Arc::new(heisenberg_map(&self.frame, x)?);
        if let Ok(mut c) = self.cache.write() {
            return Ok(c.entry(key).or_insert(hm).clone());
        }
        Ok(hm)
    }

    pub fn levi(&self, p: &[f64]) -> Result<StructureConstants> {
        self.frame.levi_matrix(p)
    }

    /// The tangent group `G_p M` in frame coordinates.
    pub fn fiber_group(&self, p: &[f64]) -> Result<TangentGroup> {
        Ok(TangentGroup::new(self.levi(p)?))
    }

    /// `gamma(x, X, t) = (x, eps_x^{-1}(t.X), t)` for `t > 0` and `(x, X)` at
    /// `t = 0`.
    pub fn gamma(&self, x: &[f64], v: &GroupElement, t: f64) -> Result<GroupoidElement> {
        self.check_domain(x)?;
        if t < 0.0 || !t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "scale must be >= 0, got {t}"
            )));
        }
        if t == 0.0 {
            return GroupoidElement::boundary(x.to_vec(), v.clone());
        }
        let q = self.eps(x)?.apply_inv(&dilate(t, v.as_slice()));
        self.check_domain(&q)?;
        GroupoidElement::interior(x.to_vec(), q, t)
    }

    /// Inverse chart: `(p, q, t) -> (p, t^{-1}.eps_p(q), t)`, `(p, X) -> (p, X, 0)`.
    pub fn gamma_inv(&self, e: &GroupoidElement) -> Result<(Vec<f64>, GroupElement, f64)> {
        match e {
            GroupoidElement::Interior { p, q, t } => {
                let y = self.eps(p)?.apply(q);
                Ok((
                    p.clone(),
                    GroupElement::from_slice(&dilate(1.0 / t, &y))?,
                    *t,
                ))
            }
            GroupoidElement::Boundary { p, x } => Ok((p.clone(), x.clone(), 0.0)),
        }
    }

    /// `(p, m, t) o (m, q, t) = (p, q, t)` and `(p, X) o (p, Y) = (p, X.Y)`.
    pub fn compose(&self, a: &GroupoidElement, b: &GroupoidElement) -> Result<GroupoidElement> {
        let (s, r) = (a.source(), b.range());
        if s.t != r.t {
            return Err(Error::NotComposable {
                reason: format!("scales differ: {} vs {}", s.t, r.t),
            });
        }
        let gap = max_diff(&s.m, &r.m);
        if gap > POINT_TOL {
            return Err(Error::NotComposable {
                reason: format!("source and range points differ by {gap:.3e}"),
            });
        }
        match (a, b) {
            (GroupoidElement::Interior { p, t, .. }, GroupoidElement::Interior { q, .. }) => {
                GroupoidElement::interior(p.clone(), q.clone(), *t)
            }
            (GroupoidElement::Boundary { p, x }, GroupoidElement::Boundary { x: y, .. }) => {
                let g = self.fiber_group(p)?;
                GroupoidElement::boundary(p.clone(), g.mul(x, y)?)
            }
            _ => Err(Error::NotComposable {
                reason: "elements lie in different strata".into(),
            }),
        }
    }

    /// `(p, q, t)^{-1} = (q, p, t)`, `(p, X)^{-1} = (p, -X)`.
    pub fn inverse(&self, e: &GroupoidElement) -> Result<GroupoidElement> {
        match e {
            GroupoidElement::Interior { p, q, t } => {
                GroupoidElement::interior(q.clone(), p.clone(), *t)
            }
            GroupoidElement::Boundary { p, x } => {
                let g = self.fiber_group(p)?;
                GroupoidElement::boundary(p.clone(), g.inv(x)?)
            }
        }
    }
}
