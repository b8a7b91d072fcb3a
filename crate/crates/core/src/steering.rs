//! Steering homeomorphisms built as finite compositions of radial bumps.
//!
//! Stage `k` takes the current image `z_k = h_{k-1}(x_k)` of the `k`-th enumerated
//! point, picks a target `y_k` in the family of `x_k` close enough that the bump
//! moving `z_k` to `y_k` stays within the stage budget, and sets
//! `h_k = g_k ∘ h_{k-1}`. The bump radius never reaches an earlier target or the
//! boundary, so `h_k(x_j) = y_j` for all `j ≤ k`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::enumerate::PointEnumeration;
use crate::error::{Error, Result};
use crate::expr::{bilipschitz_estimate, MapExpr};
use crate::geometry::{euclidean_distance, PlanarPoint};
use crate::interval::{orbit_coordinate, ordinate_from_coordinate};
use crate::rising::FiberedRisingMap;

/// Inner fraction of the bump radius that is translated rigidly.
pub const BUMP_INNER: f64 = 1.0 / 3.0;
pub const DEFAULT_SCAN_CAP: usize = 1_000_000;
pub const DEFAULT_STAGES: usize = 64;

/// Radial PL bump: `x ↦ x + φ(|x - z|)(y - z)`, `φ = 1` on the inner ball and
/// decreasing linearly to `0` at radius `τ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpMap {
    pub center: PlanarPoint,
    pub target: PlanarPoint,
    pub radius: f64,
    inner: f64,
}

pub fn make_bump(z: PlanarPoint, y: PlanarPoint, tau: f64) -> Result<BumpMap> {
    let d = euclidean_distance(z, y);
    if !(tau > 0.0) || d >= tau {
        return Err(Error::InvalidBump {
            dist: d,
            radius: tau,
        });
    }
    // shrink the rigid core when the displacement is large, keeping the taper injective
    let inner = BUMP_INNER.min(0.5 * (1.0 - d / tau));
    Ok(BumpMap {
        center: z,
        target: y,
        radius: tau,
        inner,
    })
}

impl BumpMap {
    pub fn displacement(&self) -> f64 {
        euclidean_distance(self.center, self.target)
    }

    pub fn is_identity(&self) -> bool {
        self.center == self.target
    }

    /// Bi-Lipschitz constant of the profile: `1 / (1 - |y - z| / (τ (1 - inner)))`.
    pub fn lipschitz_bound(&self) -> f64 {
        1.0 / (1.0 - self.displacement() / (self.radius * (1.0 - self.inner)))
    }

    #[inline]
    fn profile(&self, rho: f64) -> f64 {
        let core = self.inner * self.radius;
        if rho <= core {
            1.0
        } else if rho >= self.radius {
            0.0
        } else {
            (self.radius - rho) / (self.radius - core)
        }
    }

    pub fn forward(&self, x: PlanarPoint) -> PlanarPoint {
        if self.is_identity() {
            return x;
        }
        if x == self.center {
            return self.target;
        }
        let rho = euclidean_distance(x, self.center);
        if rho >= self.radius {
            return x;
        }
        let a = self.profile(rho);
        PlanarPoint::new(
            x.r + a * (self.target.r - self.center.r),
            x.s + a * (self.target.s - self.center.s),
        )
    }

    pub fn inverse(&self, w: PlanarPoint) -> PlanarPoint {
        if self.is_identity() {
            return w;
        }
        if w == self.target {
            return self.center;
        }
        let v = self.target.sub(self.center);
        let q = w.sub(self.center);
        if q.norm() >= self.radius {
            // outside the ball the map is the identity, and the ball is invariant
            return w;
        }
        // a = φ(|q - a v|) has a unique root; the residual is increasing in a
        let resid = |a: f64| a - self.profile(q.sub(v.scale(a)).norm());
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        if resid(1.0) <= 0.0 {
            lo = 1.0;
        } else {
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if resid(mid) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON * 0.5 {
                    break;
                }
            }
        }
        PlanarPoint::new(w.r - lo * v.r, w.s - lo * v.s)
    }
}

/// Per-stage bi-Lipschitz and displacement budgets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringBudget {
    pub lambda: f64,
    pub epsilon: f64,
    pub stage_lambda: Vec<f64>,
    pub stage_epsilon: Vec<f64>,
}

/// Share of the global budget spread over the stages.
const BUDGET_SHARE: f64 = 0.95;

impl SteeringBudget {
    /// `λ_k = λ^(2^-k)`, `ε_k = ε 2^-k`. At double precision `λ_k` rounds to `1`
    /// after about 50 stages.
    pub fn geometric(lambda: f64, epsilon: f64, stages: usize) -> Result<Self> {
        Self::check(lambda, epsilon)?;
        let w: Vec<f64> = (1..=stages).map(|k| (-(k as f64)).exp2()).collect();
        Self::from_weights(lambda, epsilon, &w)
    }

    /// Linearly decreasing weights `∝ 2K + 1 - k`, summing to 0.95.
    pub fn linear(lambda: f64, epsilon: f64, stages: usize) -> Result<Self> {
        Self::check(lambda, epsilon)?;
        let k = stages as f64;
        let total = k * (3.0 * k + 1.0) / 2.0;
        let w: Vec<f64> = (1..=stages)
            .map(|j| BUDGET_SHARE * (2.0 * k + 1.0 - j as f64) / total)
            .collect();
        Self::from_weights(lambda, epsilon, &w)
    }

    fn check(lambda: f64, epsilon: f64) -> Result<()> {
        if !(lambda > 1.0 && epsilon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "steering budget needs lambda > 1 and epsilon > 0, got {lambda}, {epsilon}"
            )));
        }
        Ok(())
    }

    fn from_weights(lambda: f64, epsilon: f64, w: &[f64]) -> Result<Self> {
        Ok(Self {
            lambda,
            epsilon,
            stage_lambda: w.iter().map(|&x| lambda.powf(x)).collect(),
            stage_epsilon: w.iter().map(|&x| epsilon * x).collect(),
        })
    }

    pub fn stages(&self) -> usize {
        self.stage_lambda.len()
    }

    /// `μ_k = Π_{j≤k} λ_j`.
    pub fn running_lambda(&self, k: usize) -> f64 {
        self.stage_lambda[..k].iter().product()
    }

    /// `δ_k = Σ_{j≤k} ε_j`.
    pub fn running_epsilon(&self, k: usize) -> f64 {
        self.stage_epsilon[..k].iter().sum()
    }

    pub fn is_valid(&self) -> bool {
        let k = self.stages();
        let dec = |v: &[f64]| v.windows(2).all(|w| w[0] > w[1]);
        self.stage_lambda.iter().all(|&l| l > 1.0)
            && dec(&self.stage_lambda)
            && dec(&self.stage_epsilon)
            && self.running_lambda(k) < self.lambda
            && self.running_epsilon(k) < self.epsilon
    }
}

/// Families of admissible targets, indexed like the enumerated points.
pub trait TargetFamilies: Sync {
    fn family_count(&self) -> usize;

    /// Candidates for family `n` near `z`; scanning stops at the first one
    /// closer than the bound, or after `cap` candidates.
    fn candidates<'a>(
        &'a self,
        n: usize,
        z: PlanarPoint,
        bound: f64,
    ) -> Box<dyn Iterator<Item = PlanarPoint> + 'a>;

    fn contains(&self, n: usize, y: PlanarPoint) -> bool;
}

/// Targets drawn from the level-structured enumeration; candidates are the
/// family points in the cells around `z`, coarsest level first.
pub struct EnumeratedTargets(pub PointEnumeration);

impl TargetFamilies for EnumeratedTargets {
    fn family_count(&self) -> usize {
        self.0.families
    }

    fn candidates<'a>(
        &'a self,
        n: usize,
        z: PlanarPoint,
        _bound: f64,
    ) -> Box<dyn Iterator<Item = PlanarPoint> + 'a> {
        Box::new(self.0.near(n, z))
    }

    fn contains(&self, n: usize, y: PlanarPoint) -> bool {
        self.0.contains(n, y)
    }
}

/// Explicit finite target lists.
pub struct ExplicitTargets(pub Vec<Vec<PlanarPoint>>);

impl TargetFamilies for ExplicitTargets {
    fn family_count(&self) -> usize {
        self.0.len()
    }

    fn candidates<'a>(
        &'a self,
        n: usize,
        _z: PlanarPoint,
        _bound: f64,
    ) -> Box<dyn Iterator<Item = PlanarPoint> + 'a> {
        Box::new(self.0[n].iter().copied())
    }

    fn contains(&self, n: usize, y: PlanarPoint) -> bool {
        self.0[n].contains(&y)
    }
}

/// The designated fibers of a rising map: points whose ordinate lies on a
/// plateau of family `n`. Candidates keep the abscissa and move vertically to the
/// nearest plateau centers.
pub struct FiberTargets(pub Arc<FiberedRisingMap>);

impl TargetFamilies for FiberTargets {
    fn family_count(&self) -> usize {
        self.0.family_count()
    }

    fn candidates<'a>(
        &'a self,
        n: usize,
        z: PlanarPoint,
        bound: f64,
    ) -> Box<dyn Iterator<Item = PlanarPoint> + 'a> {
        let u = orbit_coordinate(z.s);
        if !u.is_finite() {
            return Box::new(std::iter::empty());
        }
        Box::new(
            self.0
                .family_coordinates_near(n, u)
                .map(move |v| PlanarPoint::new(z.r, ordinate_from_coordinate(v)))
                .take_while(move |y| (y.s - z.s).abs() < bound && y.s.abs() < 1.0),
        )
    }

    fn contains(&self, n: usize, y: PlanarPoint) -> bool {
        y.in_open_square() && self.0.family_of_ordinate(y.s) == Some(n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub index: usize,
    pub family: usize,
    pub source: PlanarPoint,
    pub center: PlanarPoint,
    pub target: PlanarPoint,
    pub radius: f64,
    pub bound: f64,
    pub scanned: usize,
}

#[derive(Clone, Debug)]
pub struct Steering {
    pub map: Arc<MapExpr>,
    pub bumps: Vec<BumpMap>,
    pub stages: Vec<StageRecord>,
    pub budget: SteeringBudget,
    /// Unused displacement budget `ε - δ_K`, bounding the distance to the limit map.
    pub residual: f64,
}

impl Steering {
    /// Composition of the first `k` bumps.
    pub fn partial(&self, k: usize) -> MapExpr {
        compose_bumps(&self.bumps[..k])
    }
}

fn compose_bumps(bumps: &[BumpMap]) -> MapExpr {
    if bumps.is_empty() {
        return MapExpr::Identity;
    }
    // math order: last bump applied last
    MapExpr::Compose(
        bumps
            .iter()
            .rev()
            .map(|b| Arc::new(MapExpr::Bump(b.clone())))
            .collect(),
    )
}

/// Runs `budget.stages()` steering stages over the points `sources[k]` with labels
/// `labels[k]`.
pub fn build_steering(
    sources: &[PlanarPoint],
    labels: &[usize],
    targets: &dyn TargetFamilies,
    budget: &SteeringBudget,
    scan_cap: usize,
) -> Result<Steering> {
    let k_total = budget.stages();
    if sources.len() < k_total || labels.len() < k_total {
        return Err(Error::InvalidInput(format!(
            "steering needs {k_total} source points, got {}",
            sources.len().min(labels.len())
        )));
    }
    let mut bumps: Vec<BumpMap> = Vec::with_capacity(k_total);
    let mut stages = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let x = sources[k];
        let n = labels[k];
        if n >= targets.family_count() {
            return Err(Error::InvalidInput(format!(
                "label {n} has no target family"
            )));
        }
        let z = bumps.iter().fold(x, |p, b| b.forward(p));
        let mut tau = z.boundary_distance();
        for b in &bumps {
            tau = tau.min(euclidean_distance(z, b.target));
        }
        if !(tau > 0.0) {
            return Err(Error::Degenerate { stage: k + 1 });
        }
        let lam = budget.stage_lambda[k];
        let bound = budget.stage_epsilon[k].min((1.0 - BUMP_INNER) * (lam - 1.0) * tau / lam);
        let mut scanned = 0;
        let mut chosen = None;
        for y in targets.candidates(n, z, bound).take(scan_cap) {
            scanned += 1;
            if euclidean_distance(y, z) < bound {
                chosen = Some(y);
                break;
            }
        }
        let y = chosen.ok_or(Error::EnumerationDepth {
            stage: k + 1,
            family: n,
            bound,
            scanned,
        })?;
        let bump = make_bump(z, y, tau)?;
        stages.push(StageRecord {
            index: k + 1,
            family: n,
            source: x,
            center: z,
            target: y,
            radius: tau,
            bound,
            scanned,
        });
        bumps.push(bump);
    }
    let map = Arc::new(compose_bumps(&bumps));
    Ok(Steering {
        map,
        bumps,
        stages,
        budget: budget.clone(),
        residual: budget.epsilon - budget.running_epsilon(k_total),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringReport {
    pub boundary_identity: bool,
    pub max_boundary_error: f64,
    pub sup_displacement: f64,
    pub membership: bool,
    pub first_membership_failure: Option<usize>,
    pub empirical_lambda: f64,
    pub pass: bool,
}

/// Checks a steering map against its stage records: boundary identity on
/// `4·boundary_samples` points, sup-displacement over a `grid × grid` lattice,
/// `h(x_j) = y_j ∈ W_{γ(x_j)}` for every stage, and the empirical λ.
pub fn verify_steering(
    h: &MapExpr,
    stages: &[StageRecord],
    targets: &dyn TargetFamilies,
    budget: &SteeringBudget,
    grid: usize,
    pairs: usize,
    seed: u64,
) -> Result<SteeringReport> {
    let mut max_b: f64 = 0.0;
    let nb = 1000;
    for i in 0..=nb {
        let t = -1.0 + 2.0 * i as f64 / nb as f64;
        for p in [
            PlanarPoint::new(t, 1.0),
            PlanarPoint::new(t, -1.0),
            PlanarPoint::new(1.0, t),
            PlanarPoint::new(-1.0, t),
        ] {
            max_b = max_b.max(euclidean_distance(h.forward(p)?, p));
        }
    }
    let mut sup: f64 = 0.0;
    for i in 0..grid {
        for j in 0..grid {
            let p = PlanarPoint::new(
                -1.0 + 2.0 * (i as f64 + 0.5) / grid as f64,
                -1.0 + 2.0 * (j as f64 + 0.5) / grid as f64,
            );
            sup = sup.max(euclidean_distance(h.forward(p)?, p));
        }
    }
    let mut first_fail = None;
    for st in stages {
        let img = h.forward(st.source)?;
        if img != st.target || !targets.contains(st.family, st.target) {
            first_fail = Some(st.index);
            break;
        }
    }
    let lam = bilipschitz_estimate(h, pairs, seed)?;
    let boundary_identity = max_b == 0.0;
    let pass =
        boundary_identity && first_fail.is_none() && sup < budget.epsilon && lam < budget.lambda;
    Ok(SteeringReport {
        boundary_identity,
        max_boundary_error: max_b,
        sup_displacement: sup,
        membership: first_fail.is_none(),
        first_membership_failure: first_fail,
        empirical_lambda: lam,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_examples() {
        let z = PlanarPoint::new(0.0, 0.0);
        let b = make_bump(z, PlanarPoint::new(0.05, 0.0), 1.0).unwrap();
        assert_eq!(b.forward(z), PlanarPoint::new(0.05, 0.0));
        let far = PlanarPoint::new(0.9, 0.9);
        assert_eq!(b.forward(far), far);
        let id = make_bump(z, z, 0.5).unwrap();
        assert_eq!(id.lipschitz_bound(), 1.0);
        assert!(make_bump(z, PlanarPoint::new(1.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn bump_inverse_round_trip() {
        let b = make_bump(PlanarPoint::new(0.1, -0.2), PlanarPoint::new(0.3, 0.1), 0.6).unwrap();
        for i in 0..50 {
            for j in 0..50 {
                let p = PlanarPoint::new(-0.6 + 0.03 * i as f64, -0.9 + 0.03 * j as f64);
                let q = b.inverse(b.forward(p));
                assert!(euclidean_distance(p, q) < 1e-12, "{p:?} -> {q:?}");
            }
        }
    }

    #[test]
    fn budgets() {
        let g = SteeringBudget::geometric(2.0, 0.2, 1).unwrap();
        assert!((g.stage_lambda[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!((g.stage_epsilon[0] - 0.1).abs() < 1e-15);
        let l = SteeringBudget::linear(2.0, 0.2, 64).unwrap();
        assert!(l.is_valid());
        assert!(l.running_lambda(64) < 2.0);
        assert!(SteeringBudget::geometric(2.0, 0.2, 64)
            .map(|b| !b.is_valid())
            .unwrap());
    }

    #[test]
    fn single_stage_example() {
        let w = ExplicitTargets(vec![vec![PlanarPoint::new(0.05, 0.0)]]);
        let budget = SteeringBudget::geometric(2.0, 0.2, 1).unwrap();
        let st = build_steering(&[PlanarPoint::new(0.0, 0.0)], &[0], &w, &budget, 10).unwrap();
        assert_eq!(
            st.map.forward(PlanarPoint::new(0.0, 0.0)).unwrap(),
            PlanarPoint::new(0.05, 0.0)
        );
        assert!((st.stages[0].bound - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_stages_is_identity() {
        let w = ExplicitTargets(vec![vec![]]);
        let budget = SteeringBudget::linear(2.0, 0.2, 0).unwrap();
        let st = build_steering(&[], &[], &w, &budget, 10).unwrap();
        assert!(matches!(*st.map, MapExpr::Identity));
        assert_eq!(st.residual, 0.2);
    }

    #[test]
    fn collision_is_degenerate() {
        let p = PlanarPoint::new(0.0, 0.0);
        let w = ExplicitTargets(vec![vec![PlanarPoint::new(0.01, 0.0)]]);
        let budget = SteeringBudget::geometric(2.0, 0.2, 2).unwrap();
        let err = build_steering(&[p, p], &[0, 0], &w, &budget, 10).unwrap_err();
        assert!(matches!(err, Error::Degenerate { stage: 2 }));
    }

    #[test]
    fn exhausted_scan_reports_depth() {
        let w = ExplicitTargets(vec![vec![PlanarPoint::new(0.5, 0.5)]]);
        let budget = SteeringBudget::geometric(2.0, 0.2, 1).unwrap();
        let err = build_steering(&[PlanarPoint::new(0.0, 0.0)], &[0], &w, &budget, 10).unwrap_err();
        assert!(matches!(
            err,
            Error::EnumerationDepth {
                stage: 1,
                scanned: 1,
                ..
            }
        ));
    }
}
