//! Numerical dynamics on built maps: limit-set estimates, sensitivity
//! certificates, nonwandering checks and a separated-set growth heuristic.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::MapExpr;
use crate::geometry::{
    euclidean_distance, hausdorff_distance, min_set_distance, PlanarPoint, PointCloud,
};

pub const DEFAULT_BURN_IN: usize = 500;
pub const DEFAULT_WINDOW: usize = 2000;
pub const DEFAULT_CERT_SAMPLES: usize = 200;
/// Cell size used to thin limit clouds before pairwise separation tests.
pub const SEPARATION_CELL: f64 = 1e-3;
pub const FIXED_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitDir {
    Omega,
    Alpha,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSetEstimate {
    pub base: PlanarPoint,
    pub dir: LimitDir,
    pub burn_in: usize,
    pub window: usize,
    pub cloud: PointCloud,
    /// Hausdorff distance between the first and second halves of the window.
    pub diagnostic: f64,
}

/// Orbit tail `m^k(x)` for `k ∈ [N0, N0+N1)` (or `-k` for α), in order of
/// increasing `|k|`.
pub fn estimate_limit_set(
    m: &MapExpr,
    x: PlanarPoint,
    dir: LimitDir,
    n0: usize,
    n1: usize,
) -> Result<LimitSetEstimate> {
    if n0 == 0 || n1 == 0 {
        return Err(Error::InvalidInput(
            "burn-in and window must be positive".into(),
        ));
    }
    let (a, b) = (n0 as i64, (n0 + n1 - 1) as i64);
    let points = match dir {
        LimitDir::Omega => m.orbit(x, a, b)?.points,
        LimitDir::Alpha => {
            let mut p = m.orbit(x, -b, -a)?.points;
            p.reverse();
            p
        }
    };
    let diagnostic = if n1 >= 2 {
        let half = n1 / 2;
        hausdorff_distance(
            &PointCloud::new(points[..half].to_vec()),
            &PointCloud::new(points[half..].to_vec()),
        )?
    } else {
        0.0
    };
    Ok(LimitSetEstimate {
        base: x,
        dir,
        burn_in: n0,
        window: n1,
        cloud: PointCloud::new(points),
        diagnostic,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateParams {
    pub order: usize,
    pub separation: f64,
    pub radius: f64,
    pub dirs: Vec<LimitDir>,
    pub samples: usize,
    pub burn_in: usize,
    pub window: usize,
    pub seed: u64,
}

impl CertificateParams {
    pub fn new(order: usize, separation: f64, radius: f64, dirs: Vec<LimitDir>) -> Self {
        Self {
            order,
            separation,
            radius,
            dirs,
            samples: DEFAULT_CERT_SAMPLES,
            burn_in: DEFAULT_BURN_IN,
            window: DEFAULT_WINDOW,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidInput(
                "certificate order must be at least 2".into(),
            ));
        }
        if !(self.separation > 0.0 && self.radius > 0.0) {
            return Err(Error::InvalidInput(
                "separation and radius must be positive".into(),
            ));
        }
        if self.dirs.is_empty() || self.samples < self.order {
            return Err(Error::InvalidInput(
                "need a direction and at least `order` samples".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterResult {
    pub center: PlanarPoint,
    pub witnesses: Vec<PlanarPoint>,
    /// Pairwise limit separations of the witnesses, per direction, in
    /// `(i, j)` order with `i < j`.
    pub separations: Vec<(LimitDir, Vec<f64>)>,
    /// Smallest recorded separation.
    pub achieved: f64,
    pub pass: bool,
    pub clipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCertificate {
    pub params: CertificateParams,
    pub centers: Vec<CenterResult>,
    pub pass: bool,
    pub worst_center: usize,
    pub worst_separation: f64,
}

fn sample_ball(
    center: PlanarPoint,
    radius: f64,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<PlanarPoint>, bool) {
    let mut out = Vec::with_capacity(count);
    let mut clipped = false;
    let mut tries = 0usize;
    while out.len() < count && tries < 1000 * count {
        tries += 1;
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        let rho = radius * rng.gen::<f64>().sqrt();
        let p = PlanarPoint::new(center.r + rho * a.cos(), center.s + rho * a.sin());
        if p.in_open_square() {
            out.push(p);
        } else {
            clipped = true;
        }
    }
    (out, clipped)
}

fn limit_clouds(
    m: &MapExpr,
    pts: &[PlanarPoint],
    dir: LimitDir,
    n0: usize,
    n1: usize,
) -> Result<Vec<PointCloud>> {
    pts.par_iter()
        .map(|&x| estimate_limit_set(m, x, dir, n0, n1).map(|e| e.cloud.thinned(SEPARATION_CELL)))
        .collect()
}

/// Greedy max-min selection of `n` indices under the distance table `d`.
fn select(d: &[Vec<f64>], n: usize) -> (Vec<usize>, f64) {
    let len = d.len();
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for start in 0..len {
        let mut chosen = vec![start];
        let mut worst = f64::INFINITY;
        while chosen.len() < n {
            let pick = (0..len)
                .filter(|j| !chosen.contains(j))
                .map(|j| {
                    (
                        j,
                        chosen
                            .iter()
                            .map(|&k| d[j][k])
                            .fold(f64::INFINITY, f64::min),
                    )
                })
                .max_by(|a, b| a.1.total_cmp(&b.1));
            match pick {
                Some((j, v)) => {
                    chosen.push(j);
                    worst = worst.min(v);
                }
                None => break,
            }
        }
        if chosen.len() == n && worst > best.1 {
            best = (chosen, worst);
        }
    }
    best
}

/// Searches every probe ball for `order` points with limit sets pairwise at least
/// `separation` apart (min-set distance) in every requested direction.
pub fn sensitivity_certificate(
    m: &MapExpr,
    centers: &[PlanarPoint],
    params: &CertificateParams,
) -> Result<SensitivityCertificate> {
    params.validate()?;
    if centers.is_empty() {
        return Err(Error::InvalidInput("no certificate centers".into()));
    }
    let mut results = Vec::with_capacity(centers.len());
    for (ci, &center) in centers.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(ci as u64));
        let (pts, clipped) = sample_ball(center, params.radius, params.samples, &mut rng);
        if clipped {
            log::warn!(
                "probe ball at ({}, {}) clipped to the square",
                center.r,
                center.s
            );
        }
        let clouds: Vec<(LimitDir, Vec<PointCloud>)> = params
            .dirs
            .iter()
            .map(|&dir| limit_clouds(m, &pts, dir, params.burn_in, params.window).map(|c| (dir, c)))
            .collect::<Result<_>>()?;
        let n = pts.len();
        let tables: Vec<Vec<Vec<f64>>> = clouds
            .iter()
            .map(|(_, cs)| {
                (0..n)
                    .into_par_iter()
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                if i == j {
                                    0.0
                                } else {
                                    min_set_distance(&cs[i], &cs[j]).unwrap_or(0.0)
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let combined: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| tables.iter().map(|t| t[i][j]).fold(f64::INFINITY, f64::min))
                    .collect()
            })
            .collect();
        let (chosen, achieved) = select(&combined, params.order);
        let separations = clouds
            .iter()
            .zip(&tables)
            .map(|((dir, _), t)| {
                let mut v = Vec::new();
                for a in 0..chosen.len() {
                    for b in a + 1..chosen.len() {
                        v.push(t[chosen[a]][chosen[b]]);
                    }
                }
                (*dir, v)
            })
            .collect();
        results.push(CenterResult {
            center,
            witnesses: chosen.iter().map(|&i| pts[i]).collect(),
            separations,
            achieved,
            pass: achieved >= params.separation,
            clipped,
        });
    }
    let (worst_center, worst_separation) = results
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.achieved))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    Ok(SensitivityCertificate {
        params: params.clone(),
        pass: results.iter().all(|r| r.pass),
        centers: results,
        worst_center,
        worst_separation,
    })
}

/// Recomputes the witnesses' limit estimates and checks the stored separations.
pub fn replay_certificate(m: &MapExpr, cert: &SensitivityCertificate) -> Result<bool> {
    let p = &cert.params;
    for c in &cert.centers {
        if c.witnesses
            .iter()
            .any(|&w| euclidean_distance(w, c.center) > p.radius)
        {
            return Ok(false);
        }
        for &dir in &p.dirs {
            let clouds = limit_clouds(m, &c.witnesses, dir, p.burn_in, p.window)?;
            for a in 0..clouds.len() {
                for b in a + 1..clouds.len() {
                    if c.pass && min_set_distance(&clouds[a], &clouds[b])? < p.separation {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonwanderingReport {
    pub candidates: usize,
    pub max_displacement: f64,
    pub worst: Option<PlanarPoint>,
    pub non_fixed: usize,
    pub pass: bool,
}

/// Largest `d(m(x), x)` over `candidates`.
pub fn nonwandering_fixed_check(
    m: &MapExpr,
    candidates: &PointCloud,
) -> Result<NonwanderingReport> {
    let disp: Vec<f64> = candidates
        .points
        .par_iter()
        .map(|&x| m.forward(x).map(|y| euclidean_distance(x, y)))
        .collect::<Result<_>>()?;
    let (worst, max) = disp
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, &d)| (Some(candidates.points[i]), d))
        .unwrap_or((None, 0.0));
    Ok(NonwanderingReport {
        candidates: candidates.len(),
        max_displacement: max,
        worst,
        non_fixed: disp.iter().filter(|&&d| d > FIXED_TOL).count(),
        pass: max <= FIXED_TOL,
    })
}

/// Heuristic trend of greedy `(n, ε)`-separated set sizes on grid orbits. Not an
/// entropy computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub heuristic: bool,
    pub epsilon: f64,
    pub grid: usize,
    pub counts: Vec<usize>,
    pub slope: f64,
}

pub fn entropy_growth_estimate(
    m: &MapExpr,
    epsilon: f64,
    n_max: usize,
    grid: usize,
) -> Result<EntropyEstimate> {
    if grid < 2 || n_max == 0 {
        return Err(Error::InvalidInput(
            "grid must be at least 2 and n_max positive".into(),
        ));
    }
    let pitch = 2.0 / grid as f64;
    if epsilon < 2.0 * pitch {
        return Err(Error::InvalidInput(format!(
            "grid pitch {pitch} is too coarse for epsilon {epsilon}"
        )));
    }
    let starts: Vec<PlanarPoint> = (0..grid)
        .flat_map(|i| {
            (0..grid).map(move |j| {
                PlanarPoint::new(
                    -1.0 + (i as f64 + 0.5) * pitch,
                    -1.0 + (j as f64 + 0.5) * pitch,
                )
            })
        })
        .collect();
    let orbits: Vec<Vec<PlanarPoint>> = starts
        .par_iter()
        .map(|&x| m.orbit(x, 0, n_max as i64 - 1).map(|t| t.points))
        .collect::<Result<_>>()?;
    let cell = |p: PlanarPoint| {
        (
            (p.r / epsilon).floor() as i64,
            (p.s / epsilon).floor() as i64,
        )
    };
    let counts: Vec<usize> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            // points farther than ε at time 0 are separated already
            let mut chosen: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
            let mut count = 0;
            for (i, o) in orbits.iter().enumerate() {
                let (a, b) = cell(o[0]);
                let close = (-1..=1).any(|da| {
                    (-1..=1).any(|db| {
                        chosen.get(&(a + da, b + db)).is_some_and(|v| {
                            v.iter().any(|&j| {
                                (0..n).all(|k| euclidean_distance(o[k], orbits[j][k]) <= epsilon)
                            })
                        })
                    })
                });
                if !close {
                    chosen.entry((a, b)).or_default().push(i);
                    count += 1;
                }
            }
            count
        })
        .collect();
    let xs: Vec<f64> = (1..=n_max).map(|n| n as f64).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let slope = if n_max < 2 {
        0.0
    } else {
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    };
    Ok(EntropyEstimate {
        heuristic: true,
        epsilon,
        grid,
        counts,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::AnnulusTwist;

    #[test]
    fn f02_omega_limit_is_top_point() {
        let e = estimate_limit_set(
            &MapExpr::BaseF02,
            PlanarPoint::new(0.3, 0.0),
            LimitDir::Omega,
            100,
            100,
        )
        .unwrap();
        assert_eq!(e.cloud.len(), 100);
        let top = PointCloud::new(vec![PlanarPoint::new(0.3, 1.0)]);
        assert!(hausdorff_distance(&e.cloud, &top).unwrap() < 1e-6);
        let a = estimate_limit_set(
            &MapExpr::BaseF02,
            PlanarPoint::new(0.3, 0.0),
            LimitDir::Alpha,
            100,
            100,
        )
        .unwrap();
        let bot = PointCloud::new(vec![PlanarPoint::new(0.3, -1.0)]);
        assert!(hausdorff_distance(&a.cloud, &bot).unwrap() < 1e-6);
    }

    #[test]
    fn identity_cloud_is_base() {
        let x = PlanarPoint::new(0.1, -0.2);
        let e = estimate_limit_set(&MapExpr::Identity, x, LimitDir::Omega, 5, 10).unwrap();
        assert!(e.cloud.points.iter().all(|&p| p == x));
        assert_eq!(e.diagnostic, 0.0);
    }

    #[test]
    fn irrational_rotation_fills_circle() {
        let tw = AnnulusTwist::default();
        let y = (5f64.sqrt() - 1.0) / 2.0;
        let rho = tw.radius_at(y);
        let m = MapExpr::AnnulusTwist(tw);
        let e = estimate_limit_set(&m, PlanarPoint::new(rho, 0.0), LimitDir::Omega, 1000, 1000)
            .unwrap();
        let circle = PointCloud::new(
            (0..2000)
                .map(|k| {
                    let a = std::f64::consts::TAU * k as f64 / 2000.0;
                    PlanarPoint::new(rho * a.cos(), rho * a.sin())
                })
                .collect(),
        );
        assert!(hausdorff_distance(&e.cloud, &circle).unwrap() < 0.01);
    }

    #[test]
    fn identity_is_not_sensitive() {
        let mut p = CertificateParams::new(2, 0.1, 0.05, vec![LimitDir::Omega]);
        p.samples = 20;
        p.burn_in = 1;
        p.window = 2;
        let cert =
            sensitivity_certificate(&MapExpr::Identity, &[PlanarPoint::new(0.0, 0.0)], &p).unwrap();
        assert!(!cert.pass);
        assert!(cert.worst_separation <= 0.1);
    }

    #[test]
    fn nonwandering_examples() {
        let rep = nonwandering_fixed_check(
            &MapExpr::BaseF02,
            &PointCloud::new(vec![PlanarPoint::new(0.3, 0.0)]),
        )
        .unwrap();
        assert_eq!(rep.max_displacement, 0.5);
        assert!(!rep.pass);
        let top = PointCloud::new(
            (0..10)
                .map(|k| PlanarPoint::new(-0.9 + 0.2 * k as f64, 1.0))
                .collect(),
        );
        assert!(
            nonwandering_fixed_check(&MapExpr::BaseF02, &top)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn entropy_slopes() {
        let id = entropy_growth_estimate(&MapExpr::Identity, 0.2, 5, 20).unwrap();
        assert_eq!(id.slope, 0.0);
        let f = entropy_growth_estimate(&MapExpr::BaseF02, 0.05, 20, 100).unwrap();
        assert!(f.slope < 0.05, "{f:?}");
        assert!(entropy_growth_estimate(&MapExpr::Identity, 0.01, 5, 20).is_err());
    }
}
