//! Normally rising homeomorphisms `f(r,s) = (g_s(r), f01(s))`.
//!
//! Fibers are parametrized by the orbit coordinate `u` of `s`, on which `f01` is
//! `u ↦ u + 1`. The phase `frac(u)` is constant along vertical orbits; plateaus of
//! phase carry a family index, and each family has an ω-target on `J_1` and an
//! α-target on `J_-1`. For `u > 0`, `g_u` contracts a wide window around a pull
//! point `p(u)` in the ω-target by `1 - κ(u)`; for `u < 0`, `g_u` is the inverse of
//! the analogous pull toward the α-target, so backward orbits contract instead.
//! `κ` vanishes at `u = 0` and decays like `1/|u|`, which makes `g_s` continuous
//! up to `s = ±1` where it is the identity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PlanarPoint, Segment1D};
use crate::interval::{f01, f01_inv, orbit_coordinate, ordinate_from_coordinate, PLHomeo1D};

pub const DEFAULT_CONTRACTION: f64 = 0.5;
pub const DEFAULT_MARGIN: f64 = 0.05;
/// Minimum gap between bands of distinct families, measured in `s`.
pub const DEFAULT_GAP_MIN: f64 = 1e-7;
/// Scale at which the pull strength starts to decay.
pub const DEFAULT_DECAY: f64 = 256.0;
/// Fraction of each side of `J` left as an expanding shoulder next to `±1`.
pub const DEFAULT_SHOULDER: f64 = 0.1;

/// One family of fibers and its limit targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    /// Closed subintervals of `(0, 1/2]`; ignored under a comb layout.
    #[serde(default)]
    pub bands: Vec<Segment1D>,
    pub omega: Segment1D,
    pub alpha: Segment1D,
}

/// How the phase circle is split among families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BandLayout {
    /// Each family uses its own `bands`.
    Explicit,
    /// `periods` repetitions of one slot per family, each slot shrunk by `gap_fraction`.
    /// Every family is then `1/periods`-dense in phase.
    Comb { periods: usize, gap_fraction: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RisingSpec {
    pub families: Vec<FamilySpec>,
    pub layout: BandLayout,
    pub contraction: f64,
    pub margin: f64,
    pub gap_min: f64,
    pub decay: f64,
    pub shoulder: f64,
}

impl RisingSpec {
    pub fn new(families: Vec<FamilySpec>, layout: BandLayout) -> Self {
        Self {
            families,
            layout,
            contraction: DEFAULT_CONTRACTION,
            margin: DEFAULT_MARGIN,
            gap_min: DEFAULT_GAP_MIN,
            decay: DEFAULT_DECAY,
            shoulder: DEFAULT_SHOULDER,
        }
    }
}

/// A closed interval of phase carrying one family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub lo: f64,
    pub hi: f64,
    pub family: usize,
}

impl Plateau {
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    Top,
    Bottom,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiberedRisingMap {
    plateaus: Vec<Plateau>,
    targets: Vec<(Segment1D, Segment1D)>,
    /// Plateau centers per family, sorted.
    centers: Vec<Vec<f64>>,
    contraction: f64,
    decay: f64,
    shoulder: f64,
    modulus_u: f64,
}

/// `k`-th point of the back-and-forth dyadic sweep of `[0, 1]`.
pub fn unit_sweep(k: u64) -> f64 {
    match k {
        0 => 0.0,
        1 => 1.0,
        _ => {
            let j = 63 - k.leading_zeros();
            let i = k - (1u64 << j);
            let step = (-(j as f64)).exp2();
            if j % 2 == 1 {
                1.0 - (i + 1) as f64 * step
            } else {
                (i + 1) as f64 * step
            }
        }
    }
}

/// Deterministic back-and-forth sweep, dense in `target`.
pub fn sweep_program(target: Segment1D, step_index: i64) -> f64 {
    if target.is_point() {
        return target.lo;
    }
    target.at(unit_sweep(step_index.unsigned_abs()))
}

/// Strength of the pull at coordinate `u`.
#[inline]
fn strength(contraction: f64, decay: f64, u: f64) -> f64 {
    if !u.is_finite() {
        return 0.0;
    }
    let a = u.abs();
    (1.0 - contraction) * a.min(1.0) * decay / (decay + a)
}

/// The PL pull toward `p` by factor `1 - kappa` on the window, fixing `±1`.
#[inline]
fn pull(p: f64, kappa: f64, shoulder: f64, r: f64) -> f64 {
    let wl = (p + 1.0) * (1.0 - shoulder);
    let wr = (1.0 - p) * (1.0 - shoulder);
    let (a, b) = (p - wl, p + wr);
    let (a2, b2) = (p - (1.0 - kappa) * wl, p + (1.0 - kappa) * wr);
    if r <= -1.0 || r >= 1.0 {
        r
    } else if r < a {
        -1.0 + (r + 1.0) * ((a2 + 1.0) / (a + 1.0))
    } else if r <= b {
        p + (1.0 - kappa) * (r - p)
    } else {
        1.0 - (1.0 - r) * ((1.0 - b2) / (1.0 - b))
    }
}

#[inline]
fn pull_inv(p: f64, kappa: f64, shoulder: f64, y: f64) -> f64 {
    let wl = (p + 1.0) * (1.0 - shoulder);
    let wr = (1.0 - p) * (1.0 - shoulder);
    let (a, b) = (p - wl, p + wr);
    let (a2, b2) = (p - (1.0 - kappa) * wl, p + (1.0 - kappa) * wr);
    if y <= -1.0 || y >= 1.0 {
        y
    } else if y < a2 {
        -1.0 + (y + 1.0) * ((a + 1.0) / (a2 + 1.0))
    } else if y <= b2 {
        p + (y - p) / (1.0 - kappa)
    } else {
        1.0 - (1.0 - y) * ((1.0 - b) / (1.0 - b2))
    }
}

fn pull_homeo(p: f64, kappa: f64, shoulder: f64) -> PLHomeo1D {
    if kappa == 0.0 {
        return PLHomeo1D::identity();
    }
    let wl = (p + 1.0) * (1.0 - shoulder);
    let wr = (1.0 - p) * (1.0 - shoulder);
    PLHomeo1D::new(
        vec![-1.0, p - wl, p + wr, 1.0],
        vec![-1.0, p - (1.0 - kappa) * wl, p + (1.0 - kappa) * wr, 1.0],
    )
    .expect("pull knots are increasing")
}

/// Phase of a (finite) orbit coordinate.
#[inline]
pub fn phase_of(u: f64) -> f64 {
    u - u.floor()
}

fn sigma_to_phase(x: f64) -> f64 {
    -(1.0 - x).log2()
}

fn check_target(seg: &Segment1D, margin: f64, what: &str) -> Result<()> {
    if !(seg.lo.is_finite() && seg.hi.is_finite()) || seg.lo > seg.hi {
        return Err(Error::InvalidSpec(format!(
            "{what} target [{}, {}] is not an interval",
            seg.lo, seg.hi
        )));
    }
    if seg.lo < -1.0 + margin || seg.hi > 1.0 - margin {
        return Err(Error::Margin(format!(
            "{what} target [{}, {}] is closer than {margin} to the corners",
            seg.lo, seg.hi
        )));
    }
    Ok(())
}

fn explicit_plateaus(spec: &RisingSpec) -> Result<Vec<Plateau>> {
    let mut tagged: Vec<(Segment1D, usize)> = Vec::new();
    for (n, fam) in spec.families.iter().enumerate() {
        if fam.bands.is_empty() {
            return Err(Error::InvalidSpec(format!("family {n} has no bands")));
        }
        for b in &fam.bands {
            if !(b.lo > 0.0 && b.lo <= b.hi && b.hi <= 0.5) {
                return Err(Error::InvalidSpec(format!(
                    "band [{}, {}] of family {n} is not inside (0, 1/2]",
                    b.lo, b.hi
                )));
            }
            tagged.push((*b, n));
        }
    }
    tagged.sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo));
    for w in tagged.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.0.lo <= a.0.hi {
            return Err(Error::InvalidSpec(format!(
                "bands [{}, {}] and [{}, {}] overlap",
                a.0.lo, a.0.hi, b.0.lo, b.0.hi
            )));
        }
        if a.1 != b.1 && b.0.lo - a.0.hi < spec.gap_min {
            return Err(Error::InvalidSpec(format!(
                "bands of families {} and {} are closer than gap_min = {}",
                a.1, b.1, spec.gap_min
            )));
        }
    }
    Ok(tagged
        .into_iter()
        .map(|(b, n)| Plateau {
            lo: sigma_to_phase(b.lo),
            hi: sigma_to_phase(b.hi),
            family: n,
        })
        .collect())
}

fn comb_plateaus(m: usize, periods: usize, gap: f64) -> Result<Vec<Plateau>> {
    if periods == 0 || !(gap > 0.0 && gap < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "comb layout needs periods >= 1 and gap_fraction in (0,1), got {periods}, {gap}"
        )));
    }
    let slot = 1.0 / (m * periods) as f64;
    let mut out = Vec::with_capacity(m * periods);
    for p in 0..periods {
        for n in 0..m {
            let a = (p * m + n) as f64 * slot;
            out.push(Plateau {
                lo: a + 0.5 * gap * slot,
                hi: a + (1.0 - 0.5 * gap) * slot,
                family: n,
            });
        }
    }
    Ok(out)
}

impl FiberedRisingMap {
    pub fn plateaus(&self) -> &[Plateau] {
        &self.plateaus
    }

    pub fn family_count(&self) -> usize {
        self.targets.len()
    }

    pub fn omega_target(&self, n: usize) -> Segment1D {
        self.targets[n].0
    }

    pub fn alpha_target(&self, n: usize) -> Segment1D {
        self.targets[n].1
    }

    pub fn contraction(&self) -> f64 {
        self.contraction
    }

    /// Recorded continuity modulus of `u ↦ g_u(r)`, uniform in `r`.
    ///
    /// In `s` the modulus degenerates at `s = ±1` (where `du/ds` blows up), so
    /// continuity there rests on the `1/|u|` decay of the pull strength instead.
    pub fn continuity_modulus(&self) -> f64 {
        self.modulus_u
    }

    /// The plateau containing `phase`, if any.
    pub fn plateau_at(&self, phase: f64) -> Option<&Plateau> {
        let i = self.plateaus.partition_point(|p| p.lo <= phase);
        if i > 0 && self.plateaus[i - 1].hi >= phase {
            return Some(&self.plateaus[i - 1]);
        }
        // a band ending at s = 1/2 reaches phase 1 ≡ 0
        if phase == 0.0 {
            if let Some(last) = self.plateaus.last() {
                if last.hi >= 1.0 {
                    return Some(last);
                }
            }
        }
        None
    }

    /// Family index of the fiber through ordinate `s`.
    pub fn family_of_ordinate(&self, s: f64) -> Option<usize> {
        let u = orbit_coordinate(s);
        if !u.is_finite() {
            return None;
        }
        self.plateau_at(phase_of(u)).map(|p| p.family)
    }

    fn target_at(&self, phase: f64, edge: Edge) -> Segment1D {
        let pick = |n: usize| match edge {
            Edge::Top => self.targets[n].0,
            Edge::Bottom => self.targets[n].1,
        };
        let k = self.plateaus.len();
        if let Some(p) = self.plateau_at(phase) {
            return pick(p.family);
        }
        let i = self.plateaus.partition_point(|p| p.lo <= phase);
        let (prev, prev_hi) = if i == 0 {
            (&self.plateaus[k - 1], self.plateaus[k - 1].hi - 1.0)
        } else {
            (&self.plateaus[i - 1], self.plateaus[i - 1].hi)
        };
        let (next, next_lo) = if i == k {
            (&self.plateaus[0], self.plateaus[0].lo + 1.0)
        } else {
            (&self.plateaus[i], self.plateaus[i].lo)
        };
        let (a, b) = (pick(prev.family), pick(next.family));
        if a == b {
            return a;
        }
        let t = ((phase - prev_hi) / (next_lo - prev_hi)).clamp(0.0, 1.0);
        Segment1D {
            lo: a.lo + (b.lo - a.lo) * t,
            hi: a.hi + (b.hi - a.hi) * t,
        }
    }

    /// Pull point for the fiber with coordinate `u` (`u ≠ 0`, finite).
    pub fn pull_point(&self, u: f64) -> f64 {
        let phase = phase_of(u);
        let (edge, clock) = if u > 0.0 {
            (Edge::Top, u)
        } else {
            (Edge::Bottom, -u)
        };
        let seg = self.target_at(phase, edge);
        if seg.is_point() {
            return seg.lo;
        }
        let k = clock.floor();
        let tau = clock - k;
        let k = k as u64;
        seg.at((1.0 - tau) * unit_sweep(k) + tau * unit_sweep(k + 1))
    }

    /// Horizontal map on the fiber with coordinate `u`.
    #[inline]
    pub fn horizontal(&self, u: f64, r: f64) -> f64 {
        let kappa = self.kappa(u);
        if kappa == 0.0 {
            return r;
        }
        let p = self.pull_point(u);
        if u > 0.0 {
            pull(p, kappa, self.shoulder, r)
        } else {
            pull_inv(p, kappa, self.shoulder, r)
        }
    }

    #[inline]
    pub fn horizontal_inverse(&self, u: f64, r: f64) -> f64 {
        let kappa = self.kappa(u);
        if kappa == 0.0 {
            return r;
        }
        let p = self.pull_point(u);
        if u > 0.0 {
            pull_inv(p, kappa, self.shoulder, r)
        } else {
            pull(p, kappa, self.shoulder, r)
        }
    }

    #[inline]
    fn kappa(&self, u: f64) -> f64 {
        if self.plateaus.is_empty() {
            0.0
        } else {
            strength(self.contraction, self.decay, u)
        }
    }

    /// `g_s` as an explicit PL homeomorphism.
    pub fn fiber_map(&self, s: f64) -> PLHomeo1D {
        let u = orbit_coordinate(s);
        let kappa = self.kappa(u);
        if kappa == 0.0 {
            return PLHomeo1D::identity();
        }
        let h = pull_homeo(self.pull_point(u), kappa, self.shoulder);
        if u > 0.0 {
            h
        } else {
            h.inverse()
        }
    }

    pub fn forward(&self, x: PlanarPoint) -> PlanarPoint {
        let u = orbit_coordinate(x.s);
        PlanarPoint::new(self.horizontal(u, x.r), f01(x.s))
    }

    pub fn inverse(&self, x: PlanarPoint) -> PlanarPoint {
        let s = f01_inv(x.s);
        let u = orbit_coordinate(s);
        PlanarPoint::new(self.horizontal_inverse(u, x.r), s)
    }

    /// One step on the lifted state `(r, s, u)`, which keeps `u` exact after `s`
    /// rounds to `±1`.
    #[inline]
    pub fn step_lifted(&self, r: f64, s: f64, u: f64) -> (f64, f64, f64) {
        (self.horizontal(u, r), f01(s), u + 1.0)
    }

    #[inline]
    pub fn step_lifted_inverse(&self, r: f64, s: f64, u: f64) -> (f64, f64, f64) {
        let u2 = u - 1.0;
        (self.horizontal_inverse(u2, r), f01_inv(s), u2)
    }

    /// Coordinates `u` of fibers in family `n` (at plateau centers), ordered by
    /// distance from `u0`.
    pub fn family_coordinates_near(&self, n: usize, u0: f64) -> impl Iterator<Item = f64> + '_ {
        let centers: &[f64] = self.centers.get(n).map(|v| v.as_slice()).unwrap_or(&[]);
        let len = centers.len() as i64;
        let base = u0.floor();
        let ph = u0 - base;
        let start = centers.partition_point(|&c| c < ph) as i64;
        let at = move |idx: i64| -> f64 {
            let period = idx.div_euclid(len);
            base + period as f64 + centers[idx.rem_euclid(len) as usize]
        };
        let mut hi = start;
        let mut lo = start - 1;
        std::iter::from_fn(move || {
            if len == 0 {
                return None;
            }
            let (a, b) = (at(hi), at(lo));
            if (a - u0).abs() <= (u0 - b).abs() {
                hi += 1;
                Some(a)
            } else {
                lo -= 1;
                Some(b)
            }
        })
    }

    /// Sample ordinates on fibers of family `n` with coordinates in `[u_lo, u_hi]`.
    pub fn family_ordinates(&self, n: usize, u_lo: f64, u_hi: f64, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        for i in 0..count {
            let target = u_lo + (u_hi - u_lo) * (i as f64 + 0.5) / count as f64;
            if let Some(u) = self.family_coordinates_near(n, target).next() {
                out.push(ordinate_from_coordinate(u));
            }
        }
        out
    }

    fn compute_modulus(&self) -> f64 {
        // max slope of the target field across gaps
        let k = self.plateaus.len();
        let mut gap_slope: f64 = 0.0;
        for i in 0..k {
            let a = &self.plateaus[i];
            let b = &self.plateaus[(i + 1) % k];
            let width = if i + 1 == k {
                b.lo + 1.0 - a.hi
            } else {
                b.lo - a.hi
            };
            for (ta, tb) in [
                (self.targets[a.family].0, self.targets[b.family].0),
                (self.targets[a.family].1, self.targets[b.family].1),
            ] {
                let jump = (ta.lo - tb.lo).abs().max((ta.hi - tb.hi).abs());
                if jump > 0.0 {
                    gap_slope = gap_slope.max(jump / width.max(f64::MIN_POSITIVE));
                }
            }
        }
        let max_len = self
            .targets
            .iter()
            .map(|(o, a)| o.len().max(a.len()))
            .fold(0.0, f64::max);
        let kmax = 1.0 - self.contraction;
        // |∂g/∂p| <= κ, |∂g/∂κ| <= 2, inverse branch scaled by 1/(1-κ)
        (kmax * (max_len + gap_slope) + 2.0 * kmax) / self.contraction
    }
}

pub fn build_rising(spec: &RisingSpec) -> Result<FiberedRisingMap> {
    if !(spec.contraction > 0.0 && spec.contraction < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "contraction {} not in (0,1)",
            spec.contraction
        )));
    }
    if !(spec.shoulder > 0.0 && spec.shoulder < 1.0) || !(spec.decay > 0.0) {
        return Err(Error::InvalidSpec(
            "shoulder must be in (0,1) and decay positive".into(),
        ));
    }
    for (n, fam) in spec.families.iter().enumerate() {
        check_target(&fam.omega, spec.margin, &format!("family {n} omega"))?;
        check_target(&fam.alpha, spec.margin, &format!("family {n} alpha"))?;
    }
    let plateaus = if spec.families.is_empty() {
        Vec::new()
    } else {
        match spec.layout {
            BandLayout::Explicit => explicit_plateaus(spec)?,
            BandLayout::Comb {
                periods,
                gap_fraction,
            } => comb_plateaus(spec.families.len(), periods, gap_fraction)?,
        }
    };
    let mut centers = vec![Vec::new(); spec.families.len()];
    for p in &plateaus {
        centers[p.family].push(p.center() - p.center().floor());
    }
    for c in &mut centers {
        c.sort_by(f64::total_cmp);
    }
    let mut map = FiberedRisingMap {
        plateaus,
        targets: spec.families.iter().map(|f| (f.omega, f.alpha)).collect(),
        centers,
        contraction: spec.contraction,
        decay: spec.decay,
        shoulder: spec.shoulder,
        modulus_u: 0.0,
    };
    if !map.plateaus.is_empty() {
        map.modulus_u = map.compute_modulus();
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_family(omega: f64, alpha: f64) -> RisingSpec {
        RisingSpec::new(
            vec![FamilySpec {
                bands: vec![Segment1D::new(0.25, 0.5).unwrap()],
                omega: Segment1D::point(omega),
                alpha: Segment1D::point(alpha),
            }],
            BandLayout::Explicit,
        )
    }

    #[test]
    fn sweep_examples() {
        let t = Segment1D::new(0.0, 1.0).unwrap();
        let got: Vec<f64> = (0..4).map(|k| sweep_program(t, k)).collect();
        assert_eq!(got, vec![0.0, 1.0, 0.5, 0.0]);
        assert_eq!(sweep_program(Segment1D::point(0.2), 17), 0.2);
    }

    #[test]
    fn sweep_consecutive_steps_bounded() {
        for k in 0..5000u64 {
            assert!((unit_sweep(k + 1) - unit_sweep(k)).abs() <= 1.0);
            assert!((0.0..=1.0).contains(&unit_sweep(k)));
        }
    }

    #[test]
    fn pull_is_inverted() {
        for &p in &[-0.9, -0.2, 0.0, 0.7] {
            for &kappa in &[0.0, 0.1, 0.5, 0.9] {
                for i in 0..=40 {
                    let r = -1.0 + i as f64 / 20.0;
                    let y = pull(p, kappa, 0.1, r);
                    assert!((pull_inv(p, kappa, 0.1, y) - r).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn single_family_point_target() {
        let f = build_rising(&one_family(0.2, -0.3)).unwrap();
        let (mut r, mut s, mut u) = (0.0, 0.3, orbit_coordinate(0.3));
        for n in 1..=60 {
            (r, s, u) = f.step_lifted(r, s, u);
            if n >= 30 {
                assert!((r - 0.2).abs() < 0.01, "n = {n}, r = {r}");
            }
        }
        assert!(s > 0.999);
    }

    #[test]
    fn empty_spec_is_f02() {
        let f = build_rising(&RisingSpec::new(vec![], BandLayout::Explicit)).unwrap();
        let mut x = PlanarPoint::new(0.3, 0.0);
        for _ in 0..50 {
            x = f.forward(x);
            assert_eq!(x.r, 0.3);
        }
    }

    #[test]
    fn overlap_and_margin_rejected() {
        let mut spec = one_family(0.2, -0.3);
        spec.families.push(FamilySpec {
            bands: vec![Segment1D::new(0.3, 0.4).unwrap()],
            omega: Segment1D::point(0.0),
            alpha: Segment1D::point(0.0),
        });
        assert!(matches!(build_rising(&spec), Err(Error::InvalidSpec(_))));
        let spec = one_family(0.99, -0.3);
        assert!(matches!(build_rising(&spec), Err(Error::Margin(_))));
    }

    #[test]
    fn fiber_maps_fix_edges() {
        let f = build_rising(&one_family(0.2, -0.3)).unwrap();
        assert!(f.fiber_map(1.0).is_identity());
        assert!(f.fiber_map(-1.0).is_identity());
        let g = f.fiber_map(0.3);
        assert_eq!(g.eval(-1.0).unwrap(), -1.0);
        assert_eq!(g.eval(1.0).unwrap(), 1.0);
    }

    #[test]
    fn comb_families_are_dense_and_ordered() {
        let fams = (0..3)
            .map(|i| FamilySpec {
                bands: vec![],
                omega: Segment1D::point(-0.5 + 0.5 * i as f64),
                alpha: Segment1D::point(0.0),
            })
            .collect();
        let spec = RisingSpec::new(
            fams,
            BandLayout::Comb {
                periods: 64,
                gap_fraction: 0.1,
            },
        );
        let f = build_rising(&spec).unwrap();
        let us: Vec<f64> = f.family_coordinates_near(1, 3.3).take(20).collect();
        for w in us.windows(2) {
            assert!((w[0] - 3.3).abs() <= (w[1] - 3.3).abs() + 1e-15);
        }
        for &u in &us {
            assert_eq!(f.plateau_at(phase_of(u)).map(|p| p.family), Some(1));
        }
        assert!((us[0] - 3.3).abs() <= 1.0 / 64.0);
    }
}
