//! Invertible planar maps as immutable expression trees.
//!
//! Orbits run on a lifted state `(r, s, u)` where `u` is the orbit coordinate of
//! `s`. Nodes that move points along vertical orbits (`f02`, rising maps) update
//! `u` exactly by `±1`, so orbit tails stay resolved after `s` rounds to `±1`.
//! `Conjugate` and `Power` nodes route orbits through their inner map: the
//! conjugating map and its inverse are applied once per orbit point rather than
//! once per step.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclidean_distance, PlanarPoint};
use crate::interval::{f01, f01_inv, orbit_coordinate};
use crate::permeation::CompositivePermeating;
use crate::rising::FiberedRisingMap;
use crate::steering::BumpMap;

/// Distance to an exceptional set below which a conjugated map fixes the point.
pub const EXCEPTIONAL_TOL: f64 = 1e-12;

/// Radial twist of an annulus: the circle at relative height `y ∈ [0,1]` turns by
/// `2π y`. Identity inside the inner circle and outside the outer one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusTwist {
    pub center: PlanarPoint,
    pub inner: f64,
    pub outer: f64,
}

impl Default for AnnulusTwist {
    fn default() -> Self {
        Self {
            center: PlanarPoint::new(0.0, 0.0),
            inner: 0.2,
            outer: 0.9,
        }
    }
}

impl AnnulusTwist {
    pub fn height(&self, rho: f64) -> Option<f64> {
        (rho > self.inner && rho < self.outer)
            .then(|| (rho - self.inner) / (self.outer - self.inner))
    }

    pub fn radius_at(&self, y: f64) -> f64 {
        self.inner + y * (self.outer - self.inner)
    }

    fn turn(&self, x: PlanarPoint, sign: f64) -> PlanarPoint {
        let d = x.sub(self.center);
        let rho = d.norm();
        match self.height(rho) {
            None => x,
            Some(y) => {
                let (sn, cs) = (sign * std::f64::consts::TAU * y).sin_cos();
                PlanarPoint::new(
                    self.center.r + cs * d.r - sn * d.s,
                    self.center.s + sn * d.r + cs * d.s,
                )
            }
        }
    }

    pub fn forward(&self, x: PlanarPoint) -> PlanarPoint {
        self.turn(x, 1.0)
    }

    pub fn inverse(&self, x: PlanarPoint) -> PlanarPoint {
        self.turn(x, -1.0)
    }
}

#[derive(Clone, Debug)]
pub enum MapExpr {
    Identity,
    /// `(r, s) ↦ (r, f01(s))`.
    BaseF02,
    Fibered(Arc<FiberedRisingMap>),
    Bump(BumpMap),
    Permeating(Arc<CompositivePermeating>),
    AnnulusTwist(AnnulusTwist),
    Inverse(Arc<MapExpr>),
    /// `children[0] ∘ children[1] ∘ …`; the last child is applied first.
    Compose(Vec<Arc<MapExpr>>),
    Power(Arc<MapExpr>, i64),
    /// `conj ∘ inner ∘ conj⁻¹`.
    Conjugate {
        conj: Arc<MapExpr>,
        inner: Arc<MapExpr>,
    },
}

/// Orbit point with its orbit coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lifted {
    pub r: f64,
    pub s: f64,
    pub u: f64,
}

impl Lifted {
    pub fn new(p: PlanarPoint) -> Self {
        Self {
            r: p.r,
            s: p.s,
            u: orbit_coordinate(p.s),
        }
    }

    pub fn point(&self) -> PlanarPoint {
        PlanarPoint::new(self.r, self.s)
    }

    fn moved(self, p: PlanarPoint) -> Self {
        if p.r == self.r && p.s == self.s {
            self
        } else if p.s == self.s {
            Self { r: p.r, ..self }
        } else {
            Self::new(p)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub base: PlanarPoint,
    pub n0: i64,
    pub n1: i64,
    pub direction: Direction,
    pub points: Vec<PlanarPoint>,
}

impl OrbitTrace {
    pub fn at(&self, k: i64) -> Option<PlanarPoint> {
        if k < self.n0 || k > self.n1 {
            return None;
        }
        self.points.get((k - self.n0) as usize).copied()
    }

    pub fn last(&self) -> PlanarPoint {
        *self.points.last().expect("orbit traces are nonempty")
    }
}

fn node_name(m: &MapExpr) -> &'static str {
    match m {
        MapExpr::Identity => "identity",
        MapExpr::BaseF02 => "f02",
        MapExpr::Fibered(_) => "fibered",
        MapExpr::Bump(_) => "bump",
        MapExpr::Permeating(_) => "permeating",
        MapExpr::AnnulusTwist(_) => "annulus_twist",
        MapExpr::Inverse(_) => "inverse",
        MapExpr::Compose(_) => "compose",
        MapExpr::Power(..) => "power",
        MapExpr::Conjugate { .. } => "conjugate",
    }
}

impl MapExpr {
    pub fn shared(self) -> Arc<MapExpr> {
        Arc::new(self)
    }

    pub fn inverse_of(m: Arc<MapExpr>) -> MapExpr {
        MapExpr::Inverse(m)
    }

    pub fn conjugate(conj: Arc<MapExpr>, inner: Arc<MapExpr>) -> MapExpr {
        MapExpr::Conjugate { conj, inner }
    }

    pub fn name(&self) -> &'static str {
        node_name(self)
    }

    /// Bi-Lipschitz bound known from construction, when available.
    pub fn claimed_lipschitz(&self) -> Option<f64> {
        match self {
            MapExpr::Identity => Some(1.0),
            MapExpr::BaseF02 => Some(2.0),
            MapExpr::Bump(b) => Some(b.lipschitz_bound()),
            MapExpr::Inverse(c) => c.claimed_lipschitz(),
            MapExpr::Compose(v) => v
                .iter()
                .try_fold(1.0, |acc, c| c.claimed_lipschitz().map(|l| acc * l)),
            MapExpr::Power(c, p) => c
                .claimed_lipschitz()
                .map(|l| l.powi(p.unsigned_abs() as i32)),
            _ => None,
        }
    }

    /// Whether `x` lies on the exceptional set of a permeating factor.
    pub fn is_exceptional(&self, x: PlanarPoint) -> bool {
        match self {
            MapExpr::Permeating(p) => p.is_exceptional(x),
            MapExpr::Inverse(c) | MapExpr::Power(c, _) => c.is_exceptional(x),
            MapExpr::Compose(v) => v.iter().any(|c| c.is_exceptional(x)),
            _ => false,
        }
    }

    fn conj_fixes(conj: &MapExpr, x: PlanarPoint) -> bool {
        x.s.abs() == 1.0 || conj.is_exceptional(x)
    }

    pub(crate) fn fwd(&self, st: Lifted, raw: bool) -> Result<Lifted> {
        Ok(match self {
            MapExpr::Identity => st,
            MapExpr::BaseF02 => Lifted {
                r: st.r,
                s: f01(st.s),
                u: st.u + 1.0,
            },
            MapExpr::Fibered(f) => {
                let (r, s, u) = f.step_lifted(st.r, st.s, st.u);
                Lifted { r, s, u }
            }
            MapExpr::Bump(b) => st.moved(b.forward(st.point())),
            MapExpr::Permeating(p) => st.moved(p.forward(st.point())?),
            MapExpr::AnnulusTwist(a) => st.moved(a.forward(st.point())),
            MapExpr::Inverse(c) => c.inv(st, raw)?,
            MapExpr::Compose(v) => {
                let mut cur = st;
                for c in v.iter().rev() {
                    cur = c.fwd(cur, raw)?;
                }
                cur
            }
            MapExpr::Power(c, p) => {
                let mut cur = st;
                for _ in 0..p.unsigned_abs() {
                    cur = if *p > 0 {
                        c.fwd(cur, raw)?
                    } else {
                        c.inv(cur, raw)?
                    };
                }
                cur
            }
            MapExpr::Conjugate { conj, inner } => {
                if Self::conj_fixes(conj, st.point()) {
                    return Ok(st);
                }
                let y = conj.inv(st, true)?;
                conj.fwd(inner.fwd(y, raw)?, raw)?
            }
        })
    }

    pub(crate) fn inv(&self, st: Lifted, raw: bool) -> Result<Lifted> {
        Ok(match self {
            MapExpr::Identity => st,
            MapExpr::BaseF02 => Lifted {
                r: st.r,
                s: f01_inv(st.s),
                u: st.u - 1.0,
            },
            MapExpr::Fibered(f) => {
                let (r, s, u) = f.step_lifted_inverse(st.r, st.s, st.u);
                Lifted { r, s, u }
            }
            MapExpr::Bump(b) => st.moved(b.inverse(st.point())),
            MapExpr::Permeating(p) => {
                let x = st.point();
                let y = if raw {
                    p.inverse_raw(x)?
                } else {
                    p.inverse(x)?
                };
                st.moved(y)
            }
            MapExpr::AnnulusTwist(a) => st.moved(a.inverse(st.point())),
            MapExpr::Inverse(c) => c.fwd(st, raw)?,
            MapExpr::Compose(v) => {
                let mut cur = st;
                for c in v.iter() {
                    cur = c.inv(cur, raw)?;
                }
                cur
            }
            MapExpr::Power(c, p) => {
                let mut cur = st;
                for _ in 0..p.unsigned_abs() {
                    cur = if *p > 0 {
                        c.inv(cur, raw)?
                    } else {
                        c.fwd(cur, raw)?
                    };
                }
                cur
            }
            MapExpr::Conjugate { conj, inner } => {
                if Self::conj_fixes(conj, st.point()) {
                    return Ok(st);
                }
                let y = conj.inv(st, true)?;
                conj.fwd(inner.inv(y, raw)?, raw)?
            }
        })
    }

    pub fn forward(&self, x: PlanarPoint) -> Result<PlanarPoint> {
        x.check_square()?;
        Ok(self.fwd(Lifted::new(x), false)?.point())
    }

    pub fn inverse(&self, x: PlanarPoint) -> Result<PlanarPoint> {
        x.check_square()?;
        Ok(self.inv(Lifted::new(x), false)?.point())
    }

    /// Lifted orbit `ψ^k(x)` for `k ∈ [n0, n1]`.
    pub(crate) fn orbit_lifted(&self, st: Lifted, n0: i64, n1: i64) -> Result<Vec<Lifted>> {
        let len = (n1 - n0 + 1) as usize;
        match self {
            MapExpr::Identity => Ok(vec![st; len]),
            MapExpr::Conjugate { conj, inner } => {
                if Self::conj_fixes(conj, st.point()) {
                    return Ok(vec![st; len]);
                }
                let y = conj.inv(st, true)?;
                let inner_orbit = inner.orbit_lifted(y, n0, n1)?;
                inner_orbit
                    .into_iter()
                    .zip(n0..)
                    .map(|(p, k)| conj.fwd(p, false).map_err(|e| e.at_step(k)))
                    .collect()
            }
            MapExpr::Power(c, p) => {
                let p = *p;
                if p == 0 {
                    return Ok(vec![st; len]);
                }
                let (a, b) = if p > 0 {
                    (n0 * p, n1 * p)
                } else {
                    (n1 * p, n0 * p)
                };
                let full = c.orbit_lifted(st, a, b)?;
                Ok((n0..=n1).map(|k| full[(k * p - a) as usize]).collect())
            }
            MapExpr::Inverse(c) => {
                let mut v = c.orbit_lifted(st, -n1, -n0)?;
                v.reverse();
                Ok(v)
            }
            _ => self.walk(st, n0, n1),
        }
    }

    fn walk(&self, st: Lifted, n0: i64, n1: i64) -> Result<Vec<Lifted>> {
        let mut out = Vec::with_capacity((n1 - n0 + 1) as usize);
        if n0 >= 0 {
            let mut cur = st;
            for k in 1..=n0 {
                cur = self.fwd(cur, false).map_err(|e| e.at_step(k))?;
            }
            out.push(cur);
            for k in (n0 + 1)..=n1 {
                cur = self.fwd(cur, false).map_err(|e| e.at_step(k))?;
                out.push(cur);
            }
            return Ok(out);
        }
        // backward part, collected in reverse
        let mut back = Vec::new();
        let mut cur = st;
        let top = n1.min(0);
        for k in (top..0).rev() {
            cur = self.inv(cur, false).map_err(|e| e.at_step(k))?;
        }
        // cur is now ψ^top(x)
        back.push(cur);
        for k in (n0..top).rev() {
            cur = self.inv(cur, false).map_err(|e| e.at_step(k))?;
            back.push(cur);
        }
        back.reverse();
        out.extend(back);
        if n1 > 0 {
            let mut cur = st;
            for k in 1..=n1 {
                cur = self.fwd(cur, false).map_err(|e| e.at_step(k))?;
                out.push(cur);
            }
        }
        Ok(out)
    }

    pub fn orbit(&self, x: PlanarPoint, n0: i64, n1: i64) -> Result<OrbitTrace> {
        if n0 > n1 {
            return Err(Error::InvalidInput(format!(
                "empty step range [{n0}, {n1}]"
            )));
        }
        x.check_square()?;
        let pts = self.orbit_lifted(Lifted::new(x), n0, n1)?;
        Ok(OrbitTrace {
            base: x,
            n0,
            n1,
            direction: if n1 <= 0 && n0 < 0 {
                Direction::Backward
            } else {
                Direction::Forward
            },
            points: pts.iter().map(|l| l.point()).collect(),
        })
    }

    /// `ψ^n(x)` via orbit routing.
    pub fn iterate(&self, x: PlanarPoint, n: i64) -> Result<PlanarPoint> {
        x.check_square()?;
        let v = self.orbit_lifted(Lifted::new(x), n, n)?;
        Ok(v[0].point())
    }

    pub fn to_doc(&self) -> ExprDoc {
        match self {
            MapExpr::Identity => ExprDoc::Identity,
            MapExpr::BaseF02 => ExprDoc::BaseF02,
            MapExpr::Fibered(f) => ExprDoc::Fibered { map: (**f).clone() },
            MapExpr::Bump(b) => ExprDoc::Bump { bump: b.clone() },
            MapExpr::Permeating(p) => ExprDoc::Permeating {
                reference: p.id.clone(),
            },
            MapExpr::AnnulusTwist(a) => ExprDoc::AnnulusTwist { twist: a.clone() },
            MapExpr::Inverse(c) => ExprDoc::Inverse {
                child: Box::new(c.to_doc()),
            },
            MapExpr::Compose(v) => ExprDoc::Compose {
                children: v.iter().map(|c| c.to_doc()).collect(),
            },
            MapExpr::Power(c, p) => ExprDoc::Power {
                child: Box::new(c.to_doc()),
                exponent: *p,
            },
            MapExpr::Conjugate { conj, inner } => ExprDoc::Conjugate {
                conj: Box::new(conj.to_doc()),
                inner: Box::new(inner.to_doc()),
            },
        }
    }

    /// Rebuilds an expression; permeating nodes are resolved by reference.
    pub fn from_doc(
        doc: &ExprDoc,
        resolve: &dyn Fn(&str) -> Result<Arc<CompositivePermeating>>,
    ) -> Result<MapExpr> {
        let sub =
            |d: &ExprDoc| -> Result<Arc<MapExpr>> { Ok(Arc::new(MapExpr::from_doc(d, resolve)?)) };
        Ok(match doc {
            ExprDoc::Identity => MapExpr::Identity,
            ExprDoc::BaseF02 => MapExpr::BaseF02,
            ExprDoc::Fibered { map } => MapExpr::Fibered(Arc::new(map.clone())),
            ExprDoc::Bump { bump } => MapExpr::Bump(bump.clone()),
            ExprDoc::Permeating { reference } => MapExpr::Permeating(resolve(reference)?),
            ExprDoc::AnnulusTwist { twist } => MapExpr::AnnulusTwist(twist.clone()),
            ExprDoc::Inverse { child } => MapExpr::Inverse(sub(child)?),
            ExprDoc::Compose { children } => {
                MapExpr::Compose(children.iter().map(&sub).collect::<Result<_>>()?)
            }
            ExprDoc::Power { child, exponent } => MapExpr::Power(sub(child)?, *exponent),
            ExprDoc::Conjugate { conj, inner } => MapExpr::Conjugate {
                conj: sub(conj)?,
                inner: sub(inner)?,
            },
        })
    }
}

/// Serialized form of a [`MapExpr`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExprDoc {
    Identity,
    BaseF02,
    Fibered {
        map: FiberedRisingMap,
    },
    Bump {
        bump: BumpMap,
    },
    Permeating {
        reference: String,
    },
    AnnulusTwist {
        twist: AnnulusTwist,
    },
    Inverse {
        child: Box<ExprDoc>,
    },
    Compose {
        children: Vec<ExprDoc>,
    },
    Power {
        child: Box<ExprDoc>,
        exponent: i64,
    },
    Conjugate {
        conj: Box<ExprDoc>,
        inner: Box<ExprDoc>,
    },
}

/// Empirical distortion `max(d(h x, h y)/d(x,y), d(x,y)/d(h x, h y))` over sampled
/// pairs; a lower bound on the bi-Lipschitz constant.
///
/// A quarter of the pairs are axis-aligned with dyadic coordinates, so linear
/// pieces with dyadic slopes are measured without rounding.
pub fn bilipschitz_estimate(m: &MapExpr, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 1.0;
    let grid = (1u64 << 20) as f64;
    for i in 0..samples {
        let (x, y) = match i % 4 {
            0 | 1 => {
                let x = PlanarPoint::new(
                    (rng.gen_range(-(1i64 << 20)..(1i64 << 20)) as f64) / grid,
                    (rng.gen_range(-(1i64 << 20)..(1i64 << 20)) as f64) / grid,
                );
                let h = (-(rng.gen_range(3..14) as f64)).exp2();
                let y = if i % 4 == 0 {
                    PlanarPoint::new(if x.r + h <= 1.0 { x.r + h } else { x.r - h }, x.s)
                } else {
                    PlanarPoint::new(x.r, if x.s + h <= 1.0 { x.s + h } else { x.s - h })
                };
                (x, y)
            }
            2 => {
                let x = PlanarPoint::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                let scale = 10f64.powf(rng.gen_range(-3.0..0.0));
                let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let y = PlanarPoint::new(
                    (x.r + scale * ang.cos()).clamp(-1.0, 1.0),
                    (x.s + scale * ang.sin()).clamp(-1.0, 1.0),
                );
                (x, y)
            }
            _ => (
                PlanarPoint::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)),
                PlanarPoint::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)),
            ),
        };
        let d = euclidean_distance(x, y);
        if d == 0.0 {
            continue;
        }
        let dh = euclidean_distance(m.forward(x)?, m.forward(y)?);
        if dh == 0.0 {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(dh / d).max(d / dh);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(r: f64, s: f64) -> PlanarPoint {
        PlanarPoint::new(r, s)
    }

    #[test]
    fn base_examples() {
        let f = MapExpr::BaseF02;
        assert_eq!(f.forward(p(0.3, 0.0)).unwrap(), p(0.3, 0.5));
        assert_eq!(f.inverse(p(0.3, 0.5)).unwrap(), p(0.3, 0.0));
        let ff = MapExpr::Compose(vec![Arc::new(MapExpr::BaseF02), Arc::new(MapExpr::BaseF02)]);
        assert_eq!(ff.forward(p(0.0, 0.0)).unwrap(), p(0.0, 0.75));
        assert!(f.forward(p(1.5, 0.0)).is_err());
    }

    #[test]
    fn orbit_examples() {
        let f = MapExpr::BaseF02;
        let o = f.orbit(p(0.0, 0.0), 0, 3).unwrap();
        let s: Vec<f64> = o.points.iter().map(|q| q.s).collect();
        assert_eq!(s, vec![0.0, 0.5, 0.75, 0.875]);
        let o = f.orbit(p(0.0, 0.0), -2, 0).unwrap();
        let s: Vec<f64> = o.points.iter().map(|q| q.s).collect();
        assert_eq!(s, vec![-0.75, -0.5, 0.0]);
        assert_eq!(o.direction, Direction::Backward);
        let o = f.orbit(p(0.2, 0.1), 0, 0).unwrap();
        assert_eq!(o.points, vec![p(0.2, 0.1)]);
        let o = f.orbit(p(0.0, 0.0), -2, 2).unwrap();
        assert_eq!(o.at(2).unwrap().s, 0.75);
        assert_eq!(o.at(-1).unwrap().s, -0.5);
    }

    #[test]
    fn power_and_inverse_routing() {
        let f = Arc::new(MapExpr::BaseF02);
        let f2 = MapExpr::Power(f.clone(), 2);
        let o = f2.orbit(p(0.0, 0.0), 0, 2).unwrap();
        assert_eq!(o.points[2].s, 0.9375);
        let fi = MapExpr::Inverse(f);
        let o = fi.orbit(p(0.0, 0.0), 0, 2).unwrap();
        assert_eq!(o.points[2].s, -0.75);
    }

    #[test]
    fn bilipschitz_examples() {
        assert_eq!(
            bilipschitz_estimate(&MapExpr::Identity, 1000, 1).unwrap(),
            1.0
        );
        assert!(bilipschitz_estimate(&MapExpr::BaseF02, 1000, 1).unwrap() >= 2.0);
    }

    #[test]
    fn annulus_round_trip_and_identity_outside() {
        let a = MapExpr::AnnulusTwist(AnnulusTwist::default());
        assert_eq!(a.forward(p(0.05, 0.0)).unwrap(), p(0.05, 0.0));
        assert_eq!(a.forward(p(0.95, 0.0)).unwrap(), p(0.95, 0.0));
        let x = p(0.4, 0.2);
        let y = a.inverse(a.forward(x).unwrap()).unwrap();
        assert!(euclidean_distance(x, y) < 1e-14);
    }

    #[test]
    fn doc_round_trip() {
        let m = MapExpr::Conjugate {
            conj: Arc::new(MapExpr::Identity),
            inner: Arc::new(MapExpr::Power(Arc::new(MapExpr::BaseF02), 3)),
        };
        let json = serde_json::to_string(&m.to_doc()).unwrap();
        let back: ExprDoc = serde_json::from_str(&json).unwrap();
        let m2 = MapExpr::from_doc(&back, &|_| Err(Error::InvalidInput("none".into()))).unwrap();
        assert_eq!(
            m2.forward(p(0.1, 0.0)).unwrap(),
            m.forward(p(0.1, 0.0)).unwrap()
        );
    }
}
