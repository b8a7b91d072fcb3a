//! Piecewise-linear homeomorphisms of `J = [-1,1]` and the vertical drift `f01`.
//!
//! `f01` is evaluated by branch selection. The orbit coordinate [`orbit_coordinate`]
//! conjugates `f01` on `(-1,1)` to the unit translation `u ↦ u + 1`; on the upper
//! half it coincides with the ladder coordinate `t = -log2(1 - s)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default truncation of the ladder union `⋃_k f01^k(seed)`.
pub const DEFAULT_LADDER_RANGE: (i32, i32) = (-40, 40);

fn check_j(s: f64) -> Result<()> {
    if s.is_finite() && (-1.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{s} outside J = [-1, 1]")))
    }
}

/// The drift `f01`; unchecked.
#[inline]
pub fn f01(s: f64) -> f64 {
    if s >= 0.0 {
        (s + 1.0) / 2.0
    } else if s >= -0.5 {
        s + 0.5
    } else {
        2.0 * s + 1.0
    }
}

/// Inverse of [`f01`]; unchecked.
#[inline]
pub fn f01_inv(s: f64) -> f64 {
    if s >= 0.5 {
        2.0 * s - 1.0
    } else if s >= 0.0 {
        s - 0.5
    } else {
        (s - 1.0) / 2.0
    }
}

pub fn f01_eval(s: f64) -> Result<f64> {
    check_j(s)?;
    Ok(f01(s))
}

pub fn f01_inverse_eval(s: f64) -> Result<f64> {
    check_j(s)?;
    Ok(f01_inv(s))
}

/// Orbit coordinate: `f01` acts as `u ↦ u + 1`. Maps `-1 ↦ -∞`, `0 ↦ 0`, `1 ↦ +∞`.
#[inline]
pub fn orbit_coordinate(s: f64) -> f64 {
    if s >= 0.0 {
        -(1.0 - s).log2()
    } else if s >= -0.5 {
        -1.0 - (0.5 - s).log2()
    } else if s > -1.0 {
        // 1 + s doubles under f01 until s enters [-1/2, 0)
        let v = 1.0 + s;
        let mut k = (-v.log2()).ceil() - 1.0;
        let mut w = v * k.exp2();
        while w < 0.5 {
            w *= 2.0;
            k += 1.0;
        }
        while w >= 1.0 {
            w *= 0.5;
            k -= 1.0;
        }
        -k - 1.0 - (1.5 - w).log2()
    } else {
        f64::NEG_INFINITY
    }
}

/// Inverse of [`orbit_coordinate`].
#[inline]
pub fn ordinate_from_coordinate(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 - (-u).exp2()
    } else if u >= -1.0 {
        0.5 - (-(u + 1.0)).exp2()
    } else if u.is_finite() {
        let k = (-u).ceil() - 1.0;
        let w = 1.5 - (-(u + k + 1.0)).exp2();
        w * (-k).exp2() - 1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LadderRegion {
    /// `s ∈ [0, 1)`
    Upper,
    /// `s ∈ (-1, 0]`
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderCoordinate {
    pub t: f64,
    pub region: LadderRegion,
}

impl LadderCoordinate {
    pub fn ordinate(&self) -> f64 {
        match self.region {
            LadderRegion::Upper => 1.0 - (-self.t).exp2(),
            LadderRegion::Lower => (-self.t).exp2() - 1.0,
        }
    }
}

/// `t = -log2(1 - s)` for `s ∈ [0, 1)`.
pub fn to_ladder_coordinate(s: f64) -> Result<LadderCoordinate> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::Domain(format!(
            "ladder coordinate needs s in [0,1), got {s}"
        )));
    }
    Ok(LadderCoordinate {
        t: -(1.0 - s).log2(),
        region: LadderRegion::Upper,
    })
}

/// Mirror of [`to_ladder_coordinate`] for the lower half: `t = -log2(1 + s)`.
pub fn to_lower_ladder_coordinate(s: f64) -> Result<LadderCoordinate> {
    if !(s > -1.0 && s <= 0.0) {
        return Err(Error::Domain(format!(
            "lower ladder coordinate needs s in (-1,0], got {s}"
        )));
    }
    Ok(LadderCoordinate {
        t: -(1.0 + s).log2(),
        region: LadderRegion::Lower,
    })
}

/// PL homeomorphism of `J` fixing `±1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PLHomeo1D {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl PLHomeo1D {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let ok = breakpoints.len() == values.len()
            && breakpoints.len() >= 2
            && breakpoints.first() == Some(&-1.0)
            && breakpoints.last() == Some(&1.0)
            && values.first() == Some(&-1.0)
            && values.last() == Some(&1.0)
            && strictly_increasing(&breakpoints)
            && strictly_increasing(&values);
        if !ok {
            return Err(Error::InvalidInput(
                "PL homeomorphism needs increasing knots from -1 to 1 on both sides".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    pub fn identity() -> Self {
        Self {
            breakpoints: vec![-1.0, 1.0],
            values: vec![-1.0, 1.0],
        }
    }

    /// `f01` as a PL map with knots `(-1, -1/2, 0, 1)`.
    pub fn f01() -> Self {
        Self {
            breakpoints: vec![-1.0, -0.5, 0.0, 1.0],
            values: vec![-1.0, 0.0, 0.5, 1.0],
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
        // exact at knots
        let i = xs.partition_point(|&b| b <= x);
        if i == 0 {
            return ys[0];
        }
        if i >= xs.len() {
            return ys[ys.len() - 1];
        }
        let (x0, x1) = (xs[i - 1], xs[i]);
        if x == x0 {
            return ys[i - 1];
        }
        let (y0, y1) = (ys[i - 1], ys[i]);
        y0 + (y1 - y0) * ((x - x0) / (x1 - x0))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        check_j(x)?;
        Ok(Self::interp(&self.breakpoints, &self.values, x))
    }

    pub fn eval_inverse(&self, y: f64) -> Result<f64> {
        check_j(y)?;
        Ok(Self::interp(&self.values, &self.breakpoints, y))
    }

    pub fn inverse(&self) -> Self {
        Self {
            breakpoints: self.values.clone(),
            values: self.breakpoints.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.breakpoints == self.values
    }
}

/// `h^k(s)`; negative `k` iterates the inverse.
pub fn pl_iterate(h: &PLHomeo1D, s: f64, k: i64) -> Result<f64> {
    let mut x = s;
    check_j(x)?;
    if k >= 0 {
        for _ in 0..k {
            x = h.eval(x)?;
        }
    } else {
        for _ in 0..(-k) {
            x = h.eval_inverse(x)?;
        }
    }
    Ok(x)
}

/// `{ f01^k(x) : x ∈ seed, k ∈ [k_lo, k_hi] }`, sorted and deduplicated.
pub fn ladder_closure(seed: &[f64], k_range: (i32, i32)) -> Result<Vec<f64>> {
    if let Some(&bad) = seed.iter().find(|&&x| !(x > 0.0 && x <= 0.5)) {
        return Err(Error::InvalidInput(format!(
            "seed value {bad} outside (0, 1/2]"
        )));
    }
    let (lo, hi) = k_range;
    let mut out = Vec::new();
    for &x in seed {
        let mut up = x;
        for k in 0..=hi.max(0) {
            if k >= lo {
                out.push(up);
            }
            up = f01(up);
        }
        let mut down = x;
        for k in 1..=(-lo).max(0) {
            down = f01_inv(down);
            if -k <= hi {
                out.push(down);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f01_branches() {
        assert_eq!(f01_eval(0.0).unwrap(), 0.5);
        assert_eq!(f01_eval(-0.5).unwrap(), 0.0);
        assert_eq!(f01_eval(-0.75).unwrap(), -0.5);
        assert_eq!(f01_eval(1.0).unwrap(), 1.0);
        assert_eq!(f01_eval(-1.0).unwrap(), -1.0);
        assert!(f01_eval(1.5).is_err());
    }

    #[test]
    fn pl_form_matches_branches() {
        let h = PLHomeo1D::f01();
        for k in 0..=200 {
            let s = -1.0 + k as f64 / 100.0;
            assert!((h.eval(s).unwrap() - f01(s)).abs() < 1e-15);
        }
    }

    #[test]
    fn iterate_examples() {
        let h = PLHomeo1D::f01();
        assert_eq!(pl_iterate(&h, 0.0, 3).unwrap(), 0.875);
        assert_eq!(pl_iterate(&h, 0.0, 0).unwrap(), 0.0);
        assert_eq!(pl_iterate(&h, 0.5, -1).unwrap(), 0.0);
    }

    #[test]
    fn ladder_examples() {
        assert_eq!(
            ladder_closure(&[0.5], (0, 2)).unwrap(),
            vec![0.5, 0.75, 0.875]
        );
        assert_eq!(ladder_closure(&[0.5], (0, 0)).unwrap(), vec![0.5]);
        let six = ladder_closure(&[0.25, 0.5], (-1, 1)).unwrap();
        assert_eq!(six.len(), 6);
        assert!(ladder_closure(&[0.6], (0, 1)).is_err());
        assert!(ladder_closure(&[0.0], (0, 1)).is_err());
    }

    #[test]
    fn ladder_coordinates() {
        assert_eq!(to_ladder_coordinate(0.0).unwrap().t, 0.0);
        assert_eq!(to_ladder_coordinate(0.5).unwrap().t, 1.0);
        assert_eq!(to_ladder_coordinate(0.875).unwrap().t, 3.0);
        assert!(to_ladder_coordinate(1.0).is_err());
        let c = to_lower_ladder_coordinate(-0.75).unwrap();
        assert_eq!(c.t, 2.0);
        assert_eq!(c.ordinate(), -0.75);
    }

    #[test]
    fn orbit_coordinate_conjugates_f01() {
        for k in 1..2000 {
            let s = -1.0 + k as f64 / 1000.0;
            let u = orbit_coordinate(s);
            assert!(
                (orbit_coordinate(f01(s)) - (u + 1.0)).abs() < 1e-9,
                "s = {s}"
            );
            assert!((ordinate_from_coordinate(u) - s).abs() < 1e-14);
        }
        assert_eq!(orbit_coordinate(-0.5), -1.0);
        assert_eq!(orbit_coordinate(0.0), 0.0);
        assert_eq!(orbit_coordinate(1.0), f64::INFINITY);
        assert_eq!(orbit_coordinate(-1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_bad_pl() {
        assert!(PLHomeo1D::new(vec![-1.0, 0.0, 1.0], vec![-1.0, -1.0, 1.0]).is_err());
        assert!(PLHomeo1D::new(vec![-1.0, 1.0], vec![-1.0, 0.9]).is_err());
    }
}
