//! Permeating maps: continuous surjections of a hutch that collapse a marked
//! sub-arc of the base onto a hanging tree, bijective from the open hutch onto
//! the open hutch minus the tree.

mod mesh;
pub mod placement;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use mesh::{ContourInfo, MeshDoc, TriMesh};

use crate::error::{Error, Result};
use crate::expr::EXCEPTIONAL_TOL;
use crate::geometry::{
    directed_hausdorff, euclidean_distance, point_segment_distance, validate_tree_embedding,
    DiscLocation, PLTree, PlanarPoint, PointCloud, PolygonDisc, Segment1D, GEOM_TOL,
};

/// A tree meeting the edge `s = edge` in its root vertex only.
///
/// With `floating` nonempty the tree is a floating set `Y` (those vertices)
/// joined to the edge by a cable (the remaining vertices, a path from the root).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HangingSet {
    pub edge: i8,
    pub tree: PLTree,
    pub root: usize,
    #[serde(default)]
    pub floating: Vec<usize>,
}

impl HangingSet {
    pub fn attached(edge: i8, tree: PLTree, root: usize) -> Self {
        Self {
            edge,
            tree,
            root,
            floating: Vec::new(),
        }
    }

    /// A floating tree joined to the edge by a straight cable from `attach` to
    /// `(top_r, edge)`.
    pub fn with_cable(edge: i8, y: PLTree, attach: usize, top_r: f64) -> Self {
        let mut tree = y;
        let floating: Vec<usize> = (0..tree.vertices.len()).collect();
        tree.vertices.push(PlanarPoint::new(top_r, edge as f64));
        let root = tree.vertices.len() - 1;
        tree.edges.push((root, attach));
        Self {
            edge,
            tree,
            root,
            floating,
        }
    }

    pub fn root_point(&self) -> PlanarPoint {
        self.tree.vertices[self.root]
    }

    pub fn distance_to(&self, p: PlanarPoint) -> f64 {
        self.tree.distance_to(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.edge != 1 && self.edge != -1 {
            return Err(Error::InvalidInput(format!(
                "edge must be +1 or -1, got {}",
                self.edge
            )));
        }
        let diag = validate_tree_embedding(&self.tree);
        if !diag.is_valid() {
            return Err(Error::UnsupportedStructure(format!(
                "hanging set is not an embedded tree: {diag:?}"
            )));
        }
        let e = self.edge as f64;
        for (i, v) in self.tree.vertices.iter().enumerate() {
            if i == self.root {
                if v.s != e || v.r.abs() >= 1.0 {
                    return Err(Error::InvalidInput("root must lie on the open edge".into()));
                }
            } else if !v.in_open_square() {
                return Err(Error::InvalidInput(format!(
                    "tree vertex {i} is not interior"
                )));
            }
        }
        if self.floating.contains(&self.root) {
            return Err(Error::InvalidInput(
                "the root cannot belong to the floating set".into(),
            ));
        }
        if !self.floating.is_empty() {
            let inside = |v: usize| self.floating.contains(&v);
            let bridges = self
                .tree
                .edges
                .iter()
                .filter(|&&(a, b)| inside(a) != inside(b))
                .count();
            let adj = self.tree.adjacency();
            let cable_ok = (0..self.tree.vertices.len())
                .filter(|&v| !inside(v))
                .all(|v| adj[v].iter().filter(|&&w| !inside(w)).count() <= 2);
            if bridges != 1 || !cable_ok {
                return Err(Error::InvalidInput(
                    "cable must be an arc meeting the floating set once".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A convex disc whose side on the edge is the base arc.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hutch {
    pub disc: PolygonDisc,
    pub base: Segment1D,
    pub hanging: HangingSet,
}

fn orient_ccw(mut pts: Vec<PlanarPoint>) -> Result<PolygonDisc> {
    let d = PolygonDisc::new(pts.clone())?;
    if d.signed_area() < 0.0 {
        pts.reverse();
        return PolygonDisc::new(pts);
    }
    Ok(d)
}

fn is_convex(d: &PolygonDisc) -> bool {
    let n = d.boundary.len();
    (0..n).all(|i| {
        let (a, b, c) = (
            d.boundary[i],
            d.boundary[(i + 1) % n],
            d.boundary[(i + 2) % n],
        );
        b.sub(a).cross(c.sub(b)) >= -GEOM_TOL
    })
}

impl Hutch {
    pub fn new(disc: PolygonDisc, hanging: HangingSet) -> Result<Self> {
        hanging.validate()?;
        let disc = orient_ccw(disc.boundary)?;
        if !is_convex(&disc) {
            return Err(Error::InvalidInput("hutch polygon must be convex".into()));
        }
        let e = hanging.edge as f64;
        let on: Vec<f64> = disc
            .boundary
            .iter()
            .filter(|p| p.s == e)
            .map(|p| p.r)
            .collect();
        if on.len() != 2 {
            return Err(Error::InvalidInput(
                "hutch must have exactly one side on the edge".into(),
            ));
        }
        if disc.boundary.iter().any(|p| !p.in_closed_square()) {
            return Err(Error::InvalidInput("hutch leaves the square".into()));
        }
        let base = Segment1D::new(on[0].min(on[1]), on[0].max(on[1]))?;
        let root = hanging.root_point();
        if !(root.r > base.lo && root.r < base.hi) {
            return Err(Error::InvalidInput(
                "hanging set must meet the edge inside the base arc".into(),
            ));
        }
        for (i, v) in hanging.tree.vertices.iter().enumerate() {
            if i != hanging.root && disc.locate(*v) != DiscLocation::Inside {
                return Err(Error::InvalidInput(format!(
                    "tree vertex {i} is not inside the hutch"
                )));
            }
        }
        Ok(Self {
            disc,
            base,
            hanging,
        })
    }

    pub fn diameter(&self) -> f64 {
        self.disc.diameter()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Permeating {
    pub hutch: Hutch,
    /// `A'`, collapsed onto the hanging set.
    pub marked: Segment1D,
    /// `A''`, mapped onto the floating set (a point when it is a single point).
    pub inner: Option<Segment1D>,
    pub mesh_h: f64,
    pub contour: ContourInfo,
    mesh: TriMesh,
}

fn reflect(p: PlanarPoint) -> PlanarPoint {
    PlanarPoint::new(p.r, -p.s)
}

impl Permeating {
    fn normalize(&self, p: PlanarPoint) -> PlanarPoint {
        if self.hutch.hanging.edge < 0 {
            reflect(p)
        } else {
            p
        }
    }

    fn clamp(p: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(p.r.clamp(-1.0, 1.0), p.s.clamp(-1.0, 1.0))
    }

    fn on_base(&self, p: PlanarPoint) -> bool {
        (p.s - self.hutch.hanging.edge as f64).abs() <= GEOM_TOL
            && p.r > self.hutch.base.lo
            && p.r < self.hutch.base.hi
    }

    /// Whether `p` lies in the closed hutch minus `∂D - Å`.
    fn acts_on(&self, p: PlanarPoint) -> bool {
        if self.on_base(p) {
            return true;
        }
        self.hutch.disc.locate(p) == DiscLocation::Inside
    }

    pub fn in_hutch(&self, p: PlanarPoint) -> bool {
        self.hutch.disc.contains(p)
    }

    pub fn forward(&self, p: PlanarPoint) -> Result<PlanarPoint> {
        if !self.acts_on(p) {
            return Ok(p);
        }
        let q = self
            .mesh
            .forward(self.normalize(p))
            .ok_or_else(|| Error::MeshLookup(format!("no triangle contains ({}, {})", p.r, p.s)))?;
        Ok(Self::clamp(self.normalize(q)))
    }

    /// Some preimage of `p`; unique off the hanging set.
    pub fn inverse_raw(&self, p: PlanarPoint) -> Result<PlanarPoint> {
        if !self.acts_on(p) {
            return Ok(p);
        }
        let q = self.mesh.inverse(self.normalize(p)).ok_or_else(|| {
            Error::MeshLookup(format!("no image triangle contains ({}, {})", p.r, p.s))
        })?;
        Ok(Self::clamp(self.normalize(q)))
    }

    pub fn inverse(&self, p: PlanarPoint) -> Result<PlanarPoint> {
        if self.acts_on(p) && self.hutch.hanging.distance_to(p) <= self.mesh_h {
            return Err(Error::NearSingular {
                r: p.r,
                s: p.s,
                tol: self.mesh_h,
            });
        }
        self.inverse_raw(p)
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    /// Point of `A'` at contour parameter `t` (0 at the right end of `A'`).
    pub fn marked_point(&self, t: f64) -> f64 {
        self.marked.hi - t * (self.marked.hi - self.marked.lo)
    }
}

/// Builds the permeating for a tree hanging in `hutch` at mesh resolution `mesh_h`.
pub fn build_tree_permeating(hutch: Hutch, mesh_h: f64) -> Result<Permeating> {
    if !(mesh_h > 0.0) {
        return Err(Error::InvalidInput("mesh_h must be positive".into()));
    }
    let hang = &hutch.hanging;
    let flip = hang.edge < 0;
    let norm = |p: PlanarPoint| if flip { reflect(p) } else { p };
    let disc = orient_ccw(hutch.disc.boundary.iter().map(|&p| norm(p)).collect())?;
    let tree = PLTree::new(
        hang.tree.vertices.iter().map(|&p| norm(p)).collect(),
        hang.tree.edges.clone(),
    );
    let clearance = hang
        .tree
        .vertices
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != hang.root)
        .map(|(_, &v)| hutch.disc.boundary_distance(v))
        .fold(f64::INFINITY, f64::min);
    if clearance < mesh_h {
        return Err(Error::Resolution {
            msg: format!("hanging set comes within {clearance} of the hutch boundary"),
            suggested: clearance / 2.0,
        });
    }
    let r0 = hang.root_point().r;
    let w = (r0 - hutch.base.lo).min(hutch.base.hi - r0) / 3.0;
    let marked = Segment1D::new(r0 - w, r0 + w)?;
    let (mesh, contour) = mesh::build_mesh(&disc, hutch.base, marked, &tree, hang.root, mesh_h)?;
    let at = |t: f64| marked.hi - t * (marked.hi - marked.lo);
    let inner = if hang.floating.is_empty() {
        None
    } else {
        let ts: Vec<f64> = hang
            .floating
            .iter()
            .flat_map(|&v| contour.visits[v].iter().copied())
            .collect();
        if ts.is_empty() {
            return Err(Error::MeshLookup(
                "floating set missing from the contour".into(),
            ));
        }
        let (lo, hi) = ts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| {
                (a.min(t), b.max(t))
            });
        Some(Segment1D::new(at(hi), at(lo))?)
    };
    Ok(Permeating {
        hutch,
        marked,
        inner,
        mesh_h,
        contour,
        mesh,
    })
}

/// Permeatings over pairwise disjoint hutches, identity elsewhere.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompositivePermeating {
    pub id: String,
    pub members: Vec<Permeating>,
}

pub fn build_compositive(id: &str, perms: Vec<Permeating>) -> Result<CompositivePermeating> {
    for i in 0..perms.len() {
        for j in i + 1..perms.len() {
            if perms[i].hutch.disc.intersects(&perms[j].hutch.disc) {
                return Err(Error::InvalidFamily(i, j));
            }
        }
    }
    Ok(CompositivePermeating {
        id: id.to_string(),
        members: perms,
    })
}

impl CompositivePermeating {
    pub fn empty(id: &str) -> Self {
        Self {
            id: id.to_string(),
            members: Vec::new(),
        }
    }

    fn member_at(&self, p: PlanarPoint) -> Option<&Permeating> {
        self.members.iter().find(|m| {
            let (lo, hi) = m.hutch.disc.bbox();
            p.r >= lo.r - GEOM_TOL
                && p.r <= hi.r + GEOM_TOL
                && p.s >= lo.s - GEOM_TOL
                && p.s <= hi.s + GEOM_TOL
                && m.in_hutch(p)
        })
    }

    pub fn forward(&self, p: PlanarPoint) -> Result<PlanarPoint> {
        match self.member_at(p) {
            Some(m) => m.forward(p),
            None => Ok(p),
        }
    }

    pub fn inverse(&self, p: PlanarPoint) -> Result<PlanarPoint> {
        if p.s.abs() == 1.0 {
            return Err(Error::NearSingular {
                r: p.r,
                s: p.s,
                tol: 0.0,
            });
        }
        match self.member_at(p) {
            Some(m) => m.inverse(p),
            None => Ok(p),
        }
    }

    pub fn inverse_raw(&self, p: PlanarPoint) -> Result<PlanarPoint> {
        match self.member_at(p) {
            Some(m) => m.inverse_raw(p),
            None => Ok(p),
        }
    }

    /// Distance to the union of the hanging sets.
    pub fn exceptional_distance(&self, p: PlanarPoint) -> f64 {
        self.members
            .iter()
            .map(|m| m.hutch.hanging.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_exceptional(&self, p: PlanarPoint) -> bool {
        self.exceptional_distance(p) <= EXCEPTIONAL_TOL
    }

    pub fn max_mesh_h(&self) -> f64 {
        self.members.iter().map(|m| m.mesh_h).fold(0.0, f64::max)
    }

    pub fn diameters(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.hutch.diameter()).collect()
    }
}

pub fn eval_permeating_forward(xi: &CompositivePermeating, x: PlanarPoint) -> Result<PlanarPoint> {
    x.check_square()?;
    xi.forward(x)
}

pub fn eval_permeating_inverse(xi: &CompositivePermeating, x: PlanarPoint) -> Result<PlanarPoint> {
    x.check_square()?;
    if xi
        .members
        .iter()
        .any(|m| m.hutch.hanging.distance_to(x) <= m.mesh_h)
    {
        return Err(Error::NearSingular {
            r: x.r,
            s: x.s,
            tol: xi.max_mesh_h(),
        });
    }
    xi.inverse(x)
}

/// Numerical checks of the permeating axioms for one member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub mesh_h: f64,
    /// `max d(η(x), x)` over samples of `∂D - Å`.
    pub boundary_identity_error: f64,
    /// Hausdorff distance between `η(A')` and the hanging set.
    pub marked_hausdorff: f64,
    /// Hausdorff distance between `η(A - A')` and the base arc.
    pub base_hausdorff: f64,
    /// Hausdorff distance between `η(A'')` and the floating set, if any.
    pub inner_hausdorff: Option<f64>,
    /// Smallest distance between images of distinct interior samples.
    pub min_image_separation: f64,
    /// Smallest distance from an interior image to the hanging set.
    pub min_image_to_hanging: f64,
    /// Largest distance from a grid point of `D` (away from `X`) to the image of a
    /// domain grid.
    pub coverage_gap: f64,
    pub interior_samples: usize,
}

impl AxiomReport {
    pub fn passes(&self, collision_tol: f64) -> bool {
        self.boundary_identity_error == 0.0
            && self.marked_hausdorff < self.mesh_h
            && self.base_hausdorff < self.mesh_h
            && self.inner_hausdorff.is_none_or(|d| d < self.mesh_h)
            && self.min_image_separation > collision_tol
            && self.min_image_to_hanging > 0.0
            && self.coverage_gap <= 2.0 * self.mesh_h
    }

    /// Discrepancies that should shrink under mesh refinement.
    pub fn discrepancies(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("boundary_identity_error", self.boundary_identity_error),
            ("marked_hausdorff", self.marked_hausdorff),
            ("base_hausdorff", self.base_hausdorff),
            ("coverage_gap", self.coverage_gap),
        ];
        if let Some(d) = self.inner_hausdorff {
            v.push(("inner_hausdorff", d));
        }
        v
    }
}

fn chain_images(p: &Permeating, lo: f64, hi: f64, extra: usize) -> Result<Vec<PlanarPoint>> {
    // mesh nodes on the arc plus `extra` points between consecutive nodes
    let e = p.hutch.hanging.edge as f64;
    let mut rs: Vec<f64> = p
        .mesh
        .preimage_vertices()
        .iter()
        .map(|q| if e < 0.0 { reflect(*q) } else { *q })
        .filter(|q| q.s == e && q.r >= lo && q.r <= hi)
        .map(|q| q.r)
        .collect();
    rs.push(lo);
    rs.push(hi);
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    let mut out = Vec::new();
    for w in rs.windows(2) {
        for k in 0..=extra {
            let r = w[0] + (w[1] - w[0]) * k as f64 / (extra + 1) as f64;
            out.push(p.forward(PlanarPoint::new(r, e))?);
        }
    }
    out.push(p.forward(PlanarPoint::new(*rs.last().unwrap(), e))?);
    Ok(out)
}

fn polyline_hausdorff(
    images: &[PlanarPoint],
    target: &[PlanarPoint],
    set: &dyn Fn(PlanarPoint) -> f64,
) -> f64 {
    let to_set = images.iter().map(|&q| set(q)).fold(0.0, f64::max);
    let from_set = target
        .iter()
        .map(|&x| {
            images
                .windows(2)
                .map(|w| point_segment_distance(x, w[0], w[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    to_set.max(from_set)
}

fn min_pairwise(points: &[PlanarPoint]) -> f64 {
    let cell = 1e-3;
    let mut grid: std::collections::HashMap<(i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    let key = |p: PlanarPoint| ((p.r / cell).floor() as i64, (p.s / cell).floor() as i64);
    for (i, &p) in points.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    let mut best = f64::INFINITY;
    for (i, &p) in points.iter().enumerate() {
        let (a, b) = key(p);
        for da in -1..=1 {
            for db in -1..=1 {
                if let Some(v) = grid.get(&(a + da, b + db)) {
                    for &j in v {
                        if j > i {
                            best = best.min(euclidean_distance(p, points[j]));
                        }
                    }
                }
            }
        }
    }
    best.min(cell)
}

/// Runs the axiom checks on `samples` random interior points.
pub fn check_axioms(p: &Permeating, samples: usize, seed: u64) -> Result<AxiomReport> {
    let hutch = &p.hutch;
    let e = hutch.hanging.edge as f64;
    let x_set = |q: PlanarPoint| hutch.hanging.distance_to(q);

    // (C.1) identity on ∂D - Å
    let mut bid: f64 = 0.0;
    for (a, b) in hutch.disc.edges() {
        let on_edge = a.s == e && b.s == e;
        for k in 0..=200 {
            let q = a.lerp(b, k as f64 / 200.0);
            if on_edge && q.r > hutch.base.lo && q.r < hutch.base.hi {
                continue;
            }
            bid = bid.max(euclidean_distance(p.forward(q)?, q));
        }
    }

    let tree_samples = hutch.hanging.tree.sample(p.mesh_h / 4.0);
    let marked_img = chain_images(p, p.marked.lo, p.marked.hi, 3)?;
    let marked_h = polyline_hausdorff(&marked_img, &tree_samples, &x_set);

    // A - A' maps onto A minus the root
    let left = chain_images(p, hutch.base.lo, p.marked.lo, 3)?;
    let right = chain_images(p, p.marked.hi, hutch.base.hi, 3)?;
    let on_base = |q: PlanarPoint| {
        let r = q.r.clamp(hutch.base.lo, hutch.base.hi);
        euclidean_distance(q, PlanarPoint::new(r, e))
    };
    let base_samples: Vec<PlanarPoint> = (0..=400)
        .map(|k| PlanarPoint::new(hutch.base.at(k as f64 / 400.0), e))
        .collect();
    let mut both = left.clone();
    both.extend(right.iter().copied());
    let to_base = both.iter().map(|&q| on_base(q)).fold(0.0, f64::max);
    let root = hutch.hanging.root_point();
    let from_base = base_samples
        .iter()
        .filter(|x| **x != root)
        .map(|&x| {
            left.windows(2)
                .chain(right.windows(2))
                .map(|w| point_segment_distance(x, w[0], w[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let base_h = to_base.max(from_base);

    let inner_h = match p.inner {
        None => None,
        Some(seg) => {
            let fl = &hutch.hanging.floating;
            let y_edges: Vec<(usize, usize)> = hutch
                .hanging
                .tree
                .edges
                .iter()
                .copied()
                .filter(|(a, b)| fl.contains(a) && fl.contains(b))
                .collect();
            let y_tree = PLTree::new(hutch.hanging.tree.vertices.clone(), y_edges);
            let y_samples: Vec<PlanarPoint> = if y_tree.edges.is_empty() {
                fl.iter().map(|&v| hutch.hanging.tree.vertices[v]).collect()
            } else {
                y_tree.sample(p.mesh_h / 4.0)
            };
            let y_dist = |q: PlanarPoint| {
                if y_tree.edges.is_empty() {
                    y_samples
                        .iter()
                        .map(|&v| euclidean_distance(v, q))
                        .fold(f64::INFINITY, f64::min)
                } else {
                    y_tree.distance_to(q)
                }
            };
            let img = if seg.is_point() {
                vec![p.forward(PlanarPoint::new(seg.lo, e))?; 2]
            } else {
                chain_images(p, seg.lo, seg.hi, 3)?
            };
            Some(polyline_hausdorff(&img, &y_samples, &y_dist))
        }
    };

    // (C.2) interior samples
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = hutch.disc.bbox();
    let mut pts = Vec::with_capacity(samples);
    while pts.len() < samples {
        let q = PlanarPoint::new(rng.gen_range(lo.r..hi.r), rng.gen_range(lo.s..hi.s));
        if hutch.disc.locate(q) == DiscLocation::Inside {
            pts.push(q);
        }
    }
    let imgs: Vec<PlanarPoint> = pts.iter().map(|&q| p.forward(q)).collect::<Result<_>>()?;
    let sep = min_pairwise(&imgs);
    let avoid = imgs.iter().map(|&q| x_set(q)).fold(f64::INFINITY, f64::min);

    // coverage of D away from X by images of mesh-adapted domain samples
    let flip = |q: PlanarPoint| if e < 0.0 { reflect(q) } else { q };
    let pre = p.mesh.preimage_vertices();
    let mut dom = pre.iter().map(|&q| flip(q)).collect::<Vec<_>>();
    for t in p.mesh.triangles() {
        let [a, b, c] = t.map(|i| pre[i as usize]);
        dom.push(flip(a.add(b).add(c).scale(1.0 / 3.0)));
    }
    let mut dom_imgs = Vec::with_capacity(dom.len());
    for q in dom {
        if hutch.disc.contains(q) {
            dom_imgs.push(p.forward(q)?);
        }
    }
    let cloud = PointCloud::new(dom_imgs);
    let mut probe = Vec::new();
    for i in 0..50 {
        for j in 0..50 {
            let q = PlanarPoint::new(
                lo.r + (hi.r - lo.r) * (i as f64 + 0.5) / 50.0,
                lo.s + (hi.s - lo.s) * (j as f64 + 0.5) / 50.0,
            );
            if hutch.disc.locate(q) == DiscLocation::Inside && x_set(q) > 2.0 * p.mesh_h {
                probe.push(q);
            }
        }
    }
    let coverage = if probe.is_empty() {
        0.0
    } else {
        directed_hausdorff(&PointCloud::new(probe), &cloud)
    };

    Ok(AxiomReport {
        mesh_h: p.mesh_h,
        boundary_identity_error: bid,
        marked_hausdorff: marked_h,
        base_hausdorff: base_h,
        inner_hausdorff: inner_h,
        min_image_separation: sep,
        min_image_to_hanging: avoid,
        coverage_gap: coverage,
        interior_samples: samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star_hutch() -> Hutch {
        // root on the top edge, a vertical stem, three arms below
        let v = vec![
            PlanarPoint::new(0.0, 1.0),
            PlanarPoint::new(0.0, 0.7),
            PlanarPoint::new(-0.15, 0.55),
            PlanarPoint::new(0.0, 0.5),
            PlanarPoint::new(0.15, 0.55),
        ];
        let tree = PLTree::new(v, vec![(0, 1), (1, 2), (1, 3), (1, 4)]);
        let disc = PolygonDisc::new(vec![
            PlanarPoint::new(-0.4, 1.0),
            PlanarPoint::new(-0.4, 0.3),
            PlanarPoint::new(0.4, 0.3),
            PlanarPoint::new(0.4, 1.0),
        ])
        .unwrap();
        Hutch::new(disc, HangingSet::attached(1, tree, 0)).unwrap()
    }

    #[test]
    fn identity_outside_and_on_boundary() {
        let p = build_tree_permeating(star_hutch(), 0.02).unwrap();
        for q in [
            PlanarPoint::new(0.9, 0.0),
            PlanarPoint::new(-0.4, 0.5),
            PlanarPoint::new(0.1, 0.3),
        ] {
            assert_eq!(p.forward(q).unwrap(), q);
        }
    }

    #[test]
    fn star_axioms() {
        let p = build_tree_permeating(star_hutch(), 0.02).unwrap();
        let rep = check_axioms(&p, 2000, 1).unwrap();
        assert_eq!(rep.boundary_identity_error, 0.0);
        assert!(rep.marked_hausdorff < 0.02, "{rep:?}");
        assert!(rep.base_hausdorff < 0.02, "{rep:?}");
        assert!(rep.min_image_separation > 1e-9, "{rep:?}");
        assert!(rep.min_image_to_hanging > 0.0, "{rep:?}");
    }

    #[test]
    fn round_trip_off_tree() {
        let p = build_tree_permeating(star_hutch(), 0.02).unwrap();
        for q in [
            PlanarPoint::new(0.2, 0.4),
            PlanarPoint::new(-0.3, 0.9),
            PlanarPoint::new(0.05, 0.8),
        ] {
            let y = p.forward(q).unwrap();
            let back = p.inverse_raw(y).unwrap();
            assert!(
                euclidean_distance(back, q) < 1e-9,
                "{q:?} -> {y:?} -> {back:?}"
            );
        }
    }

    #[test]
    fn bottom_edge_reflects() {
        let h = star_hutch();
        let refl = |p: &PlanarPoint| PlanarPoint::new(p.r, -p.s);
        let tree = PLTree::new(
            h.hanging.tree.vertices.iter().map(refl).collect(),
            h.hanging.tree.edges.clone(),
        );
        let disc = PolygonDisc::new(h.disc.boundary.iter().map(refl).collect()).unwrap();
        let hb = Hutch::new(disc, HangingSet::attached(-1, tree, 0)).unwrap();
        let top = build_tree_permeating(h, 0.02).unwrap();
        let bot = build_tree_permeating(hb, 0.02).unwrap();
        let q = PlanarPoint::new(0.1, 0.6);
        let a = top.forward(q).unwrap();
        let b = bot.forward(refl(&q)).unwrap();
        assert!(euclidean_distance(refl(&a), b) < 1e-9);
    }

    #[test]
    fn point_leaf_maps_inner_point_to_target() {
        use super::placement::{place_point_targets, PointTarget};
        let t = [
            PointTarget {
                point: PlanarPoint::new(-0.3, 0.8),
                edge: 1,
            },
            PointTarget {
                point: PlanarPoint::new(0.4, -0.7),
                edge: -1,
            },
        ];
        for c in place_point_targets(&t, &[]).unwrap() {
            let target = c.hutch.hanging.tree.vertices[0];
            let edge = c.hutch.hanging.edge as f64;
            let h = c.hutch.diameter() / 40.0;
            let p = build_tree_permeating(c.hutch, h).unwrap();
            let inner = p.inner.unwrap();
            assert!(inner.is_point());
            let img = p.forward(PlanarPoint::new(inner.lo, edge)).unwrap();
            assert!(
                euclidean_distance(img, target) < 1e-12,
                "{img:?} vs {target:?}"
            );
            let rep = check_axioms(&p, 2000, 3).unwrap();
            assert!(rep.passes(1e-9), "{rep:?}");
        }
    }

    #[test]
    fn floating_tree_inner_arc() {
        let y = PLTree::star(PlanarPoint::new(0.0, 0.3), 3, 0.1, 0.5);
        let hutch = placement::place_tree_target(&y, 1, &[], 0.08).unwrap();
        let p = build_tree_permeating(hutch, 0.01).unwrap();
        let inner = p.inner.unwrap();
        assert!(!inner.is_point() && p.marked.lo <= inner.lo && inner.hi <= p.marked.hi);
        let rep = check_axioms(&p, 2000, 5).unwrap();
        assert!(rep.inner_hausdorff.unwrap() < 0.01, "{rep:?}");
        assert!(rep.passes(1e-9), "{rep:?}");
    }
}
