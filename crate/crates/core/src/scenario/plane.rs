//! Extension of open-square maps to the plane via
//! `H(r, s) = (tan(πr/2), tan(πs/2))`.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::MapExpr;
use crate::geometry::PlanarPoint;

pub fn to_plane(p: PlanarPoint) -> Result<[f64; 2]> {
    if !p.in_open_square() {
        return Err(Error::Domain(format!(
            "({}, {}) is not in the open square",
            p.r, p.s
        )));
    }
    Ok([(FRAC_PI_2 * p.r).tan(), (FRAC_PI_2 * p.s).tan()])
}

pub fn from_plane(z: [f64; 2]) -> Result<PlanarPoint> {
    if !(z[0].is_finite() && z[1].is_finite()) {
        return Err(Error::Domain("plane point is not finite".into()));
    }
    Ok(PlanarPoint::new(
        z[0].atan() / FRAC_PI_2,
        z[1].atan() / FRAC_PI_2,
    ))
}

/// `F = H m H⁻¹`.
#[derive(Clone, Debug)]
pub struct PlaneMap {
    pub inner: Arc<MapExpr>,
}

pub fn extend_to_plane(m: Arc<MapExpr>) -> PlaneMap {
    PlaneMap { inner: m }
}

impl PlaneMap {
    pub fn forward(&self, z: [f64; 2]) -> Result<[f64; 2]> {
        to_plane(self.inner.forward(from_plane(z)?)?)
    }

    pub fn inverse(&self, z: [f64; 2]) -> Result<[f64; 2]> {
        to_plane(self.inner.inverse(from_plane(z)?)?)
    }

    /// `F^k(z)` for `k ∈ [n0, n1]`, routed like a conjugate node: `H⁻¹` once, the
    /// square orbit, then `H` on each point.
    pub fn orbit(&self, z: [f64; 2], n0: i64, n1: i64) -> Result<Vec<[f64; 2]>> {
        let tr = self.inner.orbit(from_plane(z)?, n0, n1)?;
        tr.points
            .iter()
            .zip(n0..)
            .map(|(&p, k)| to_plane(p).map_err(|e| e.at_step(k)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_values() {
        assert_eq!(to_plane(PlanarPoint::new(0.0, 0.0)).unwrap(), [0.0, 0.0]);
        let z = to_plane(PlanarPoint::new(0.5, 0.5)).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-15 && (z[1] - 1.0).abs() < 1e-15);
        assert!(to_plane(PlanarPoint::new(1.0, 0.0)).is_err());
        let p = PlanarPoint::new(-0.3, 0.7);
        let q = from_plane(to_plane(p).unwrap()).unwrap();
        assert!((q.r - p.r).abs() < 1e-15 && (q.s - p.s).abs() < 1e-15);
    }

    #[test]
    fn identity_extends_to_identity() {
        let f = extend_to_plane(MapExpr::Identity.shared());
        let z = [2.0, -3.5];
        let w = f.forward(z).unwrap();
        assert!((w[0] - z[0]).abs() < 1e-12 && (w[1] - z[1]).abs() < 1e-12);
    }
}
