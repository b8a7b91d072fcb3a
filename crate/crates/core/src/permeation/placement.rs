//! Cable and hutch placement for point and tree targets.
//!
//! A point target `y` hangs from the edge on a straight cable of slope `μ`
//! (horizontal run per unit height) inside a parallelogram hutch sheared along
//! the cable. All placement is done in the top-edge frame; bottom-edge targets
//! are reflected in and out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    euclidean_distance, point_segment_distance, segments_intersect, PLTree, PlanarPoint,
    PolygonDisc,
};

use super::{HangingSet, Hutch};

/// Points closer than this to a cable count as lying on it.
pub const CABLE_CLEARANCE: f64 = 1e-9;
const MAX_HALVINGS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointTarget {
    pub point: PlanarPoint,
    /// `+1` for an ω-target (hangs from the top), `-1` for an α-target.
    pub edge: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CablePlacement {
    pub hutch: Hutch,
    pub slope: f64,
    pub delta: f64,
}

fn frame(p: PlanarPoint, edge: i8) -> PlanarPoint {
    if edge < 0 {
        PlanarPoint::new(p.r, -p.s)
    } else {
        p
    }
}

fn segment_distance(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint, d: PlanarPoint) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Places one cable and hutch per target, avoiding `avoid` (typically a prefix
/// of the steering target enumeration) along every cable.
pub fn place_point_targets(
    targets: &[PointTarget],
    avoid: &[PlanarPoint],
) -> Result<Vec<CablePlacement>> {
    for (i, t) in targets.iter().enumerate() {
        if !t.point.in_open_square() {
            return Err(Error::Placement(format!("target {i} is not interior")));
        }
        if t.edge != 1 && t.edge != -1 {
            return Err(Error::Placement(format!("target {i} has edge {}", t.edge)));
        }
        for (j, u) in targets.iter().enumerate().skip(i + 1) {
            if t.point == u.point {
                return Err(Error::Placement(format!("targets {i} and {j} coincide")));
            }
        }
    }
    let min_other = |i: usize| {
        targets
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, u)| euclidean_distance(targets[i].point, u.point))
            .fold(f64::INFINITY, f64::min)
    };
    let delta: Vec<f64> = (0..targets.len())
        .map(|i| 0.99 * (min_other(i) / 5.0).min((1.0 - targets[i].point.r.abs()) / 5.0))
        .collect();

    // slopes, shared by targets on one abscissa and side
    let mut slope = vec![f64::NAN; targets.len()];
    // cables in the true frame: (target, edge point)
    let mut cables: Vec<Option<(PlanarPoint, PlanarPoint)>> = vec![None; targets.len()];
    for i in 0..targets.len() {
        if !slope[i].is_nan() {
            continue;
        }
        let group: Vec<usize> = (0..targets.len())
            .filter(|&j| {
                targets[j].edge == targets[i].edge && targets[j].point.r == targets[i].point.r
            })
            .collect();
        let edge = targets[i].edge;
        let mut mu = group
            .iter()
            .map(|&j| delta[j] / (1.0 - frame(targets[j].point, edge).s))
            .fold(f64::INFINITY, f64::min);
        let mut found = false;
        for _ in 0..MAX_HALVINGS {
            let segs: Vec<(usize, PlanarPoint, PlanarPoint)> = group
                .iter()
                .map(|&j| {
                    let y = frame(targets[j].point, edge);
                    let top = PlanarPoint::new(y.r + mu * (1.0 - y.s), 1.0);
                    (j, targets[j].point, frame(top, edge))
                })
                .collect();
            let clear = segs.iter().all(|&(j, a, b)| {
                avoid
                    .iter()
                    .all(|&p| point_segment_distance(p, a, b) >= CABLE_CLEARANCE)
                    && targets.iter().enumerate().all(|(k, t)| {
                        k == j || point_segment_distance(t.point, a, b) >= CABLE_CLEARANCE
                    })
                    && cables
                        .iter()
                        .flatten()
                        .all(|&(c, d)| !segments_intersect(a, b, c, d))
            });
            if clear {
                for &(j, a, b) in &segs {
                    slope[j] = mu;
                    cables[j] = Some((a, b));
                }
                found = true;
                break;
            }
            mu /= 2.0;
        }
        if !found {
            return Err(Error::Placement(format!("no clear cable for target {i}")));
        }
    }

    let cables: Vec<(PlanarPoint, PlanarPoint)> = cables.into_iter().map(|c| c.unwrap()).collect();
    let mut out = Vec::with_capacity(targets.len());
    for (i, t) in targets.iter().enumerate() {
        let y = frame(t.point, t.edge);
        let len = 1.0 - y.s;
        let (a, b) = cables[i];
        let others = targets
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, u)| point_segment_distance(u.point, a, b))
            .chain(
                cables
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &(c, d))| segment_distance(a, b, c, d)),
            )
            .fold(f64::INFINITY, f64::min);
        let w = (0.25 * len).min(0.45 * delta[i]).min(0.45 * others);
        let depth = (0.2 * len).min(0.45 * min_other(i)).min(0.45 * (1.0 + y.s));
        let mu = slope[i];
        let top = y.r + mu * len;
        let bot = PlanarPoint::new(y.r - mu * depth, y.s - depth);
        let corners = [
            PlanarPoint::new(top + w, 1.0),
            PlanarPoint::new(top - w, 1.0),
            PlanarPoint::new(bot.r - w, bot.s),
            PlanarPoint::new(bot.r + w, bot.s),
        ];
        let disc = PolygonDisc::new(corners.iter().map(|&c| frame(c, t.edge)).collect())?;
        let hanging = HangingSet::with_cable(t.edge, PLTree::new(vec![t.point], vec![]), 0, top);
        let hutch = Hutch::new(disc, hanging)?;
        for (j, u) in targets.iter().enumerate() {
            if j != i && hutch.disc.contains(u.point) {
                return Err(Error::Placement(format!("hutch {i} contains target {j}")));
            }
        }
        out.push(CablePlacement {
            hutch,
            slope: mu,
            delta: delta[i],
        });
    }
    for i in 0..out.len() {
        for j in i + 1..out.len() {
            if out[i].hutch.disc.intersects(&out[j].hutch.disc) {
                return Err(Error::InvalidFamily(i, j));
            }
        }
    }
    Ok(out)
}

/// Hutch for a floating tree `y` hanging by a vertical cable from its highest
/// vertex to the edge, clear of `others` by a margin.
pub fn place_tree_target(
    y: &PLTree,
    edge: i8,
    others: &[PlanarPoint],
    margin: f64,
) -> Result<Hutch> {
    if y.vertices.is_empty() {
        return Err(Error::Placement("empty tree".into()));
    }
    let local: Vec<PlanarPoint> = y.vertices.iter().map(|&p| frame(p, edge)).collect();
    let attach = (0..local.len())
        .max_by(|&a, &b| local[a].s.total_cmp(&local[b].s))
        .unwrap();
    let top_r = local[attach].r;
    let (lo, hi) = PLTree::new(local.clone(), y.edges.clone()).bbox();
    let m = margin.max(0.0);
    let rect = [
        PlanarPoint::new(hi.r + m, 1.0),
        PlanarPoint::new(lo.r - m, 1.0),
        PlanarPoint::new(lo.r - m, lo.s - m),
        PlanarPoint::new(hi.r + m, lo.s - m),
    ];
    if rect.iter().any(|c| !c.in_closed_square()) || hi.s >= 1.0 {
        return Err(Error::Placement("tree hutch leaves the square".into()));
    }
    let disc = PolygonDisc::new(rect.iter().map(|&c| frame(c, edge)).collect())?;
    for (k, &o) in others.iter().enumerate() {
        if disc.contains(o) {
            return Err(Error::Placement(format!("tree hutch contains point {k}")));
        }
    }
    // the vertical cable must not cross the tree
    let cable_foot = local[attach];
    let cable_top = PlanarPoint::new(top_r, 1.0);
    for &(a, b) in &y.edges {
        if a != attach
            && b != attach
            && segments_intersect(cable_foot, cable_top, local[a], local[b])
        {
            return Err(Error::UnsupportedStructure("cable crosses the tree".into()));
        }
    }
    let hanging = HangingSet::with_cable(edge, y.clone(), attach, top_r);
    Hutch::new(disc, hanging)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(r: f64, s: f64) -> PlanarPoint {
        PlanarPoint::new(r, s)
    }

    #[test]
    fn three_omega_three_alpha() {
        let mut t = Vec::new();
        for r in [-0.5, 0.0, 0.5] {
            t.push(PointTarget {
                point: p(r, 0.9),
                edge: 1,
            });
            t.push(PointTarget {
                point: p(r, -0.9),
                edge: -1,
            });
        }
        let pl = place_point_targets(&t, &[]).unwrap();
        assert_eq!(pl.len(), 6);
        for (c, tg) in pl.iter().zip(&t) {
            assert!(c.slope * 0.1 <= c.delta + 1e-15);
            assert_eq!(c.hutch.hanging.edge, tg.edge);
            assert_eq!(c.hutch.hanging.tree.vertices[0], tg.point);
        }
    }

    #[test]
    fn shared_abscissa_shares_slope() {
        let t = [
            PointTarget {
                point: p(0.1, 0.5),
                edge: 1,
            },
            PointTarget {
                point: p(0.1, 0.8),
                edge: 1,
            },
        ];
        let pl = place_point_targets(&t, &[]).unwrap();
        assert_eq!(pl[0].slope, pl[1].slope);
        assert!(!pl[0].hutch.disc.intersects(&pl[1].hutch.disc));
    }

    #[test]
    fn avoids_points_on_cable() {
        let t = [PointTarget {
            point: p(0.0, 0.5),
            edge: 1,
        }];
        let first = place_point_targets(&t, &[]).unwrap()[0].slope;
        let on_cable = p(first * 0.25, 0.75);
        let pl = place_point_targets(&t, &[on_cable]).unwrap();
        assert!(pl[0].slope < first);
    }

    #[test]
    fn tree_hutch_contains_tree() {
        let y = PLTree::star(p(0.0, 0.3), 3, 0.1, 0.5);
        let h = place_tree_target(&y, 1, &[p(0.8, 0.8)], 0.05).unwrap();
        for v in &y.vertices {
            assert!(h.disc.contains(*v));
        }
        assert_eq!(h.hanging.floating.len(), y.vertices.len());
    }
}
