//! Planar primitives on the square `J² = [-1,1]²`.
//!
//! Closed sets are represented by finite samples (`PointCloud`) or by PL
//! structures (`Polyline`, `PLTree`, `PolygonDisc`). Incidence predicates use
//! the fixed tolerance [`GEOM_TOL`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for incidence predicates (on-boundary, on-segment, crossings).
pub const GEOM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub r: f64,
    pub s: f64,
}

impl PlanarPoint {
    #[inline]
    pub const fn new(r: f64, s: f64) -> Self {
        Self { r, s }
    }

    /// Constructs a point and checks membership in `J²`.
    pub fn in_square(r: f64, s: f64) -> Result<Self> {
        let p = Self { r, s };
        p.check_square()?;
        Ok(p)
    }

    pub fn is_finite(&self) -> bool {
        self.r.is_finite() && self.s.is_finite()
    }

    pub fn in_closed_square(&self) -> bool {
        self.is_finite() && self.r.abs() <= 1.0 && self.s.abs() <= 1.0
    }

    pub fn in_open_square(&self) -> bool {
        self.is_finite() && self.r.abs() < 1.0 && self.s.abs() < 1.0
    }

    pub fn on_square_boundary(&self) -> bool {
        self.in_closed_square() && (self.r.abs() == 1.0 || self.s.abs() == 1.0)
    }

    pub fn check_square(&self) -> Result<()> {
        if self.in_closed_square() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "point ({}, {}) outside the square",
                self.r, self.s
            )))
        }
    }

    /// Distance to `∂J²`.
    pub fn boundary_distance(&self) -> f64 {
        (1.0 - self.r.abs()).min(1.0 - self.s.abs())
    }

    #[inline]
    pub fn sub(self, o: Self) -> Self {
        Self::new(self.r - o.r, self.s - o.s)
    }
    #[inline]
    pub fn add(self, o: Self) -> Self {
        Self::new(self.r + o.r, self.s + o.s)
    }
    #[inline]
    pub fn scale(self, k: f64) -> Self {
        Self::new(self.r * k, self.s * k)
    }
    #[inline]
    pub fn dot(self, o: Self) -> f64 {
        self.r * o.r + self.s * o.s
    }
    #[inline]
    pub fn cross(self, o: Self) -> f64 {
        self.r * o.s - self.s * o.r
    }
    #[inline]
    pub fn norm(self) -> f64 {
        self.r.hypot(self.s)
    }
    #[inline]
    pub fn lerp(self, o: Self, t: f64) -> Self {
        Self::new(self.r + (o.r - self.r) * t, self.s + (o.s - self.s) * t)
    }
}

#[inline]
pub fn euclidean_distance(a: PlanarPoint, b: PlanarPoint) -> f64 {
    (a.r - b.r).hypot(a.s - b.s)
}

#[inline]
fn dist2(a: PlanarPoint, b: PlanarPoint) -> f64 {
    let dr = a.r - b.r;
    let ds = a.s - b.s;
    dr * dr + ds * ds
}

/// Closed interval `[lo, hi]`; `lo == hi` is a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment1D {
    pub lo: f64,
    pub hi: f64,
}

impl Segment1D {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidInput(format!("bad interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn at(&self, t: f64) -> f64 {
        self.lo + (self.hi - self.lo) * t
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: PlanarPoint, a: PlanarPoint, b: PlanarPoint) -> f64 {
    let ab = b.sub(a);
    let l2 = ab.dot(ab);
    if l2 == 0.0 {
        return euclidean_distance(p, a);
    }
    let t = (p.sub(a).dot(ab) / l2).clamp(0.0, 1.0);
    euclidean_distance(p, a.lerp(b, t))
}

fn orient(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint) -> f64 {
    b.sub(a).cross(c.sub(a))
}

/// Closed-segment intersection test with tolerance [`GEOM_TOL`].
pub fn segments_intersect(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint, d: PlanarPoint) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > GEOM_TOL && d2 < -GEOM_TOL) || (d1 < -GEOM_TOL && d2 > GEOM_TOL))
        && ((d3 > GEOM_TOL && d4 < -GEOM_TOL) || (d3 < -GEOM_TOL && d4 > GEOM_TOL))
    {
        return true;
    }
    point_segment_distance(a, c, d) <= GEOM_TOL
        || point_segment_distance(b, c, d) <= GEOM_TOL
        || point_segment_distance(c, a, b) <= GEOM_TOL
        || point_segment_distance(d, a, b) <= GEOM_TOL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub vertices: Vec<PlanarPoint>,
}

impl Polyline {
    pub fn new(vertices: Vec<PlanarPoint>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidInput("polyline needs >= 2 vertices".into()));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(
                "polyline has repeated consecutive vertices".into(),
            ));
        }
        Ok(Self { vertices })
    }

    pub fn length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| euclidean_distance(w[0], w[1]))
            .sum()
    }

    pub fn segments(&self) -> impl Iterator<Item = (PlanarPoint, PlanarPoint)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// True when no two non-adjacent segments meet.
    pub fn is_simple_arc(&self) -> bool {
        let segs: Vec<_> = self.segments().collect();
        for i in 0..segs.len() {
            for j in i + 2..segs.len() {
                if segments_intersect(segs[i].0, segs[i].1, segs[j].0, segs[j].1) {
                    return false;
                }
            }
        }
        true
    }

    pub fn distance_to(&self, p: PlanarPoint) -> f64 {
        self.segments()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Points spaced at most `step` apart along the polyline, endpoints included.
    pub fn sample(&self, step: f64) -> Vec<PlanarPoint> {
        sample_segments(self.segments(), step)
    }
}

fn sample_segments(
    segs: impl Iterator<Item = (PlanarPoint, PlanarPoint)>,
    step: f64,
) -> Vec<PlanarPoint> {
    let mut out = Vec::new();
    for (a, b) in segs {
        let n = ((euclidean_distance(a, b) / step).ceil() as usize).max(1);
        for k in 0..=n {
            out.push(a.lerp(b, k as f64 / n as f64));
        }
    }
    out
}

/// Embedded PL tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PLTree {
    pub vertices: Vec<PlanarPoint>,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TreeDiagnostics {
    pub connected: bool,
    pub acyclic: bool,
    /// Pairs of edge indices that meet away from a shared endpoint.
    pub crossings: Vec<(usize, usize)>,
    /// Edges with an out-of-range or repeated endpoint.
    pub bad_edges: Vec<usize>,
}

impl TreeDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.connected && self.acyclic && self.crossings.is_empty() && self.bad_edges.is_empty()
    }
}

impl PLTree {
    pub fn new(vertices: Vec<PlanarPoint>, edges: Vec<(usize, usize)>) -> Self {
        Self { vertices, edges }
    }

    /// A single point (a tree without edges).
    pub fn point(p: PlanarPoint) -> Self {
        Self::new(vec![p], vec![])
    }

    /// `k` straight arms of length `arm` from `center`, the first pointing along `angle0`.
    pub fn star(center: PlanarPoint, k: usize, arm: f64, angle0: f64) -> Self {
        let mut vertices = vec![center];
        let mut edges = Vec::new();
        for i in 0..k {
            let a = angle0 + std::f64::consts::TAU * i as f64 / k as f64;
            vertices.push(PlanarPoint::new(
                center.r + arm * a.cos(),
                center.s + arm * a.sin(),
            ));
            edges.push((0, i + 1));
        }
        Self::new(vertices, edges)
    }

    pub fn segment(&self, e: usize) -> (PlanarPoint, PlanarPoint) {
        let (a, b) = self.edges[e];
        (self.vertices[a], self.vertices[b])
    }

    pub fn total_length(&self) -> f64 {
        (0..self.edges.len())
            .map(|e| {
                let (a, b) = self.segment(e);
                euclidean_distance(a, b)
            })
            .sum()
    }

    pub fn distance_to(&self, p: PlanarPoint) -> f64 {
        if self.edges.is_empty() {
            return self
                .vertices
                .iter()
                .map(|&v| euclidean_distance(v, p))
                .fold(f64::INFINITY, f64::min);
        }
        (0..self.edges.len())
            .map(|e| {
                let (a, b) = self.segment(e);
                point_segment_distance(p, a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sample(&self, step: f64) -> Vec<PlanarPoint> {
        if self.edges.is_empty() {
            return self.vertices.clone();
        }
        sample_segments((0..self.edges.len()).map(|e| self.segment(e)), step)
    }

    pub fn bbox(&self) -> (PlanarPoint, PlanarPoint) {
        let mut lo = PlanarPoint::new(f64::INFINITY, f64::INFINITY);
        let mut hi = PlanarPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = PlanarPoint::new(lo.r.min(v.r), lo.s.min(v.s));
            hi = PlanarPoint::new(hi.r.max(v.r), hi.s.max(v.s));
        }
        (lo, hi)
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            if a < adj.len() && b < adj.len() {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        adj
    }
}

pub fn validate_tree_embedding(t: &PLTree) -> TreeDiagnostics {
    let n = t.vertices.len();
    let mut diag = TreeDiagnostics::default();
    for (i, &(a, b)) in t.edges.iter().enumerate() {
        if a >= n || b >= n || a == b || t.vertices[a] == t.vertices[b] {
            diag.bad_edges.push(i);
        }
    }
    diag.acyclic = n > 0 && t.edges.len() + 1 == n;

    // union-find for connectivity and cycles
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut components = n;
    for &(a, b) in &t.edges {
        if a >= n || b >= n {
            continue;
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            diag.acyclic = false;
        } else {
            parent[ra] = rb;
            components -= 1;
        }
    }
    diag.connected = components == 1;

    for i in 0..t.edges.len() {
        if diag.bad_edges.contains(&i) {
            continue;
        }
        for j in i + 1..t.edges.len() {
            if diag.bad_edges.contains(&j) {
                continue;
            }
            let (ea, eb) = (t.edges[i], t.edges[j]);
            let shared = [ea.0, ea.1]
                .iter()
                .find(|v| **v == eb.0 || **v == eb.1)
                .copied();
            let (a, b) = t.segment(i);
            let (c, d) = t.segment(j);
            let meets = match shared {
                None => segments_intersect(a, b, c, d),
                Some(v) => {
                    // adjacent edges may only share the common vertex
                    let far_i = if ea.0 == v { b } else { a };
                    let far_j = if eb.0 == v { d } else { c };
                    let pv = t.vertices[v];
                    point_segment_distance(far_i, c, d) <= GEOM_TOL
                        || point_segment_distance(far_j, a, b) <= GEOM_TOL
                        || {
                            let u = far_i.sub(pv);
                            let w = far_j.sub(pv);
                            u.cross(w).abs() <= GEOM_TOL * u.norm() * w.norm() && u.dot(w) > 0.0
                        }
                }
            };
            if meets {
                diag.crossings.push((i, j));
            }
        }
    }
    diag
}

/// Simple closed polygon; the closing vertex is implicit (first != last in storage).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonDisc {
    pub boundary: Vec<PlanarPoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiscLocation {
    Inside,
    Boundary,
    Outside,
}

impl PolygonDisc {
    /// Accepts boundaries with or without a repeated closing vertex.
    pub fn new(mut boundary: Vec<PlanarPoint>) -> Result<Self> {
        if boundary.len() >= 2 && boundary.first() == boundary.last() {
            boundary.pop();
        }
        let d = Self { boundary };
        if d.boundary.len() < 3 || d.signed_area().abs() <= GEOM_TOL {
            return Err(Error::InvalidInput("degenerate polygon".into()));
        }
        Ok(d)
    }

    pub fn rect(lo: PlanarPoint, hi: PlanarPoint) -> Result<Self> {
        Self::new(vec![
            lo,
            PlanarPoint::new(hi.r, lo.s),
            hi,
            PlanarPoint::new(lo.r, hi.s),
        ])
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.boundary.len();
        (0..n)
            .map(|i| self.boundary[i].cross(self.boundary[(i + 1) % n]))
            .sum::<f64>()
            * 0.5
    }

    pub fn edges(&self) -> impl Iterator<Item = (PlanarPoint, PlanarPoint)> + '_ {
        let n = self.boundary.len();
        (0..n).map(move |i| (self.boundary[i], self.boundary[(i + 1) % n]))
    }

    pub fn boundary_distance(&self, p: PlanarPoint) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn winding_number(&self, p: PlanarPoint) -> i32 {
        let mut wn = 0;
        for (a, b) in self.edges() {
            if a.s <= p.s {
                if b.s > p.s && orient(a, b, p) > 0.0 {
                    wn += 1;
                }
            } else if b.s <= p.s && orient(a, b, p) < 0.0 {
                wn -= 1;
            }
        }
        wn
    }

    pub fn locate(&self, p: PlanarPoint) -> DiscLocation {
        if self.boundary_distance(p) <= GEOM_TOL {
            DiscLocation::Boundary
        } else if self.winding_number(p) != 0 {
            DiscLocation::Inside
        } else {
            DiscLocation::Outside
        }
    }

    pub fn contains(&self, p: PlanarPoint) -> bool {
        self.locate(p) != DiscLocation::Outside
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.boundary {
            for b in &self.boundary {
                d = d.max(euclidean_distance(*a, *b));
            }
        }
        d
    }

    pub fn bbox(&self) -> (PlanarPoint, PlanarPoint) {
        let mut lo = PlanarPoint::new(f64::INFINITY, f64::INFINITY);
        let mut hi = PlanarPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.boundary {
            lo = PlanarPoint::new(lo.r.min(v.r), lo.s.min(v.s));
            hi = PlanarPoint::new(hi.r.max(v.r), hi.s.max(v.s));
        }
        (lo, hi)
    }

    /// Closed-set intersection test: crossing edges or containment.
    pub fn intersects(&self, other: &PolygonDisc) -> bool {
        for (a, b) in self.edges() {
            for (c, d) in other.edges() {
                if segments_intersect(a, b, c, d) {
                    return true;
                }
            }
        }
        self.contains(other.boundary[0]) || other.contains(self.boundary[0])
    }
}

pub fn point_in_disc(x: PlanarPoint, d: &PolygonDisc) -> Result<DiscLocation> {
    if d.boundary.len() < 3 || d.signed_area().abs() <= GEOM_TOL {
        return Err(Error::InvalidInput("degenerate polygon".into()));
    }
    Ok(d.locate(x))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<PlanarPoint>,
}

impl PointCloud {
    pub fn new(points: Vec<PlanarPoint>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<PlanarPoint> {
        if self.points.is_empty() {
            return None;
        }
        let n = self.points.len() as f64;
        let sum = self
            .points
            .iter()
            .fold(PlanarPoint::new(0.0, 0.0), |acc, p| acc.add(*p));
        Some(sum.scale(1.0 / n))
    }

    /// One representative per grid cell of side `cell`; order of first appearance.
    pub fn thinned(&self, cell: f64) -> PointCloud {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for p in &self.points {
            let key = ((p.r / cell).floor() as i64, (p.s / cell).floor() as i64);
            if seen.insert(key) {
                out.push(*p);
            }
        }
        PointCloud::new(out)
    }
}

fn check_nonempty(a: &PointCloud, b: &PointCloud) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        Err(Error::InvalidInput("empty point cloud".into()))
    } else {
        Ok(())
    }
}

/// sup_{a in A} inf_{b in B} d(a, b), with the usual early-exit pruning.
pub fn directed_hausdorff(a: &PointCloud, b: &PointCloud) -> f64 {
    let mut cmax2: f64 = 0.0;
    for &p in &a.points {
        let mut cmin2 = f64::INFINITY;
        for &q in &b.points {
            let d = dist2(p, q);
            if d < cmin2 {
                cmin2 = d;
                if cmin2 <= cmax2 {
                    break;
                }
            }
        }
        if cmin2 > cmax2 {
            cmax2 = cmin2;
        }
    }
    cmax2.sqrt()
}

pub fn hausdorff_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check_nonempty(a, b)?;
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

pub fn min_set_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check_nonempty(a, b)?;
    let mut best = f64::INFINITY;
    for &p in &a.points {
        for &q in &b.points {
            best = best.min(dist2(p, q));
        }
    }
    Ok(best.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(r: f64, s: f64) -> PlanarPoint {
        PlanarPoint::new(r, s)
    }

    #[test]
    fn distances() {
        assert_eq!(euclidean_distance(p(0.0, 0.0), p(0.0, 0.0)), 0.0);
        assert_eq!(euclidean_distance(p(0.0, 0.0), p(1.0, 0.0)), 1.0);
        assert!(
            (euclidean_distance(p(1.0, 1.0), p(-1.0, -1.0)) - 2.828_427_124_746_19).abs() < 1e-12
        );
    }

    #[test]
    fn hausdorff_examples() {
        let o = PointCloud::new(vec![p(0.0, 0.0)]);
        assert_eq!(hausdorff_distance(&o, &o).unwrap(), 0.0);
        assert_eq!(
            hausdorff_distance(&o, &PointCloud::new(vec![p(1.0, 0.0)])).unwrap(),
            1.0
        );
        let line = PointCloud::new((0..=100).map(|k| p(k as f64 / 100.0, 0.0)).collect());
        assert_eq!(hausdorff_distance(&line, &o).unwrap(), 1.0);
        assert!(hausdorff_distance(&o, &PointCloud::default()).is_err());
    }

    #[test]
    fn min_distance_examples() {
        let a = PointCloud::new(vec![p(0.0, 0.0), p(1.0, 0.0)]);
        let b = PointCloud::new(vec![p(0.5, 0.0)]);
        assert_eq!(min_set_distance(&a, &b).unwrap(), 0.5);
        assert!(min_set_distance(&a, &PointCloud::default()).is_err());
    }

    #[test]
    fn disc_location() {
        let d = PolygonDisc::rect(p(0.0, 0.0), p(1.0, 1.0)).unwrap();
        assert_eq!(
            point_in_disc(p(0.5, 0.5), &d).unwrap(),
            DiscLocation::Inside
        );
        assert_eq!(
            point_in_disc(p(1.0, 1.0), &d).unwrap(),
            DiscLocation::Boundary
        );
        assert_eq!(
            point_in_disc(p(10.0, 10.0), &d).unwrap(),
            DiscLocation::Outside
        );
        let bad = PolygonDisc {
            boundary: vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)],
        };
        assert!(point_in_disc(p(0.0, 0.0), &bad).is_err());
        assert!(PolygonDisc::new(bad.boundary.clone()).is_err());
    }

    #[test]
    fn tree_validation() {
        let single = PLTree::new(vec![p(0.0, 0.0), p(0.0, 0.5)], vec![(0, 1)]);
        assert!(validate_tree_embedding(&single).is_valid());
        let star = PLTree::star(p(0.0, 0.0), 3, 0.2, 0.3);
        assert!(validate_tree_embedding(&star).is_valid());
        // an X shape given as two disjoint edges: disconnected and crossing
        let cross = PLTree::new(
            vec![p(-1.0, -1.0), p(1.0, 1.0), p(-1.0, 1.0), p(1.0, -1.0)],
            vec![(0, 1), (2, 3)],
        );
        let d = validate_tree_embedding(&cross);
        assert_eq!(d.crossings, vec![(0, 1)]);
        assert!(!d.connected);
    }

    #[test]
    fn overlapping_adjacent_edges_flagged() {
        let t = PLTree::new(
            vec![p(0.0, 0.0), p(1.0, 0.0), p(0.5, 0.0)],
            vec![(0, 1), (0, 2)],
        );
        assert_eq!(validate_tree_embedding(&t).crossings, vec![(0, 1)]);
    }

    #[test]
    fn polygon_intersections() {
        let a = PolygonDisc::rect(p(0.0, 0.0), p(1.0, 1.0)).unwrap();
        let b = PolygonDisc::rect(p(0.5, 0.5), p(2.0, 2.0)).unwrap();
        let c = PolygonDisc::rect(p(1.5, 1.5), p(2.0, 2.0)).unwrap();
        let inner = PolygonDisc::rect(p(0.2, 0.2), p(0.3, 0.3)).unwrap();
        assert!(a.intersects(&b));
        assert!(!a.intersects(&c));
        assert!(a.intersects(&inner));
    }
}
