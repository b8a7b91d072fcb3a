//! Triangulated realization of a permeating map for a tree hanging on the top edge.
//!
//! The hutch is meshed with the tree as constraint edges and then cut open along
//! the tree: every tree vertex gets one copy per wedge between consecutive tree
//! edges. The cut mesh is a disc whose boundary runs along the base arc and once
//! around the tree. Its *image* positions are the original coordinates, so the
//! cut boundary collapses back onto the tree. Its *preimage* positions come from
//! a Tutte embedding into the hutch with the tree contour spread over the marked
//! arc `A'`, the rest of the base arc squeezed affinely onto `A - A'`, and the
//! remaining boundary fixed. The permeating map sends each preimage triangle
//! affinely onto its image triangle.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use spade::handles::FixedVertexHandle;
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::{
    euclidean_distance, DiscLocation, PLTree, PlanarPoint, PolygonDisc, Segment1D,
};

const ON_TOL: f64 = 1e-12;
const BARY_TOL: f64 = 1e-9;

/// Uniform bucket grid over triangles.
#[derive(Clone, Debug)]
struct TriGrid {
    lo: PlanarPoint,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl TriGrid {
    fn build(pts: &[PlanarPoint], tris: &[[u32; 3]], cell: f64) -> Self {
        let mut lo = PlanarPoint::new(f64::INFINITY, f64::INFINITY);
        let mut hi = PlanarPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pts {
            lo = PlanarPoint::new(lo.r.min(p.r), lo.s.min(p.s));
            hi = PlanarPoint::new(hi.r.max(p.r), hi.s.max(p.s));
        }
        let nx = (((hi.r - lo.r) / cell).ceil() as usize).clamp(1, 2048);
        let ny = (((hi.s - lo.s) / cell).ceil() as usize).clamp(1, 2048);
        let cell = ((hi.r - lo.r) / nx as f64)
            .max((hi.s - lo.s) / ny as f64)
            .max(1e-12);
        let mut cells = vec![Vec::new(); nx * ny];
        let mut g = TriGrid {
            lo,
            cell,
            nx,
            ny,
            cells: Vec::new(),
        };
        for (t, tri) in tris.iter().enumerate() {
            let (a, b, c) = (
                pts[tri[0] as usize],
                pts[tri[1] as usize],
                pts[tri[2] as usize],
            );
            let (i0, j0) = g.cell_of(PlanarPoint::new(
                a.r.min(b.r).min(c.r),
                a.s.min(b.s).min(c.s),
            ));
            let (i1, j1) = g.cell_of(PlanarPoint::new(
                a.r.max(b.r).max(c.r),
                a.s.max(b.s).max(c.s),
            ));
            for i in i0..=i1 {
                for j in j0..=j1 {
                    cells[j * nx + i].push(t as u32);
                }
            }
        }
        g.cells = cells;
        g
    }

    fn cell_of(&self, p: PlanarPoint) -> (usize, usize) {
        let i = ((p.r - self.lo.r) / self.cell)
            .floor()
            .clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((p.s - self.lo.s) / self.cell)
            .floor()
            .clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    fn candidates(&self, p: PlanarPoint) -> &[u32] {
        let (i, j) = self.cell_of(p);
        &self.cells[j * self.nx + i]
    }
}

fn bary(p: PlanarPoint, a: PlanarPoint, b: PlanarPoint, c: PlanarPoint) -> [f64; 3] {
    let det = (b.r - a.r) * (c.s - a.s) - (c.r - a.r) * (b.s - a.s);
    let l1 = ((b.r - p.r) * (c.s - p.s) - (c.r - p.r) * (b.s - p.s)) / det;
    let l2 = ((c.r - p.r) * (a.s - p.s) - (a.r - p.r) * (c.s - p.s)) / det;
    [l1, l2, 1.0 - l1 - l2]
}

fn signed_area(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint) -> f64 {
    0.5 * ((b.r - a.r) * (c.s - a.s) - (c.r - a.r) * (b.s - a.s))
}

/// Piecewise-affine map between two triangulations with shared connectivity.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "MeshDoc", into = "MeshDoc")]
pub struct TriMesh {
    pre: Vec<PlanarPoint>,
    img: Vec<PlanarPoint>,
    tris: Vec<[u32; 3]>,
    cell: f64,
    pre_grid: TriGrid,
    img_grid: TriGrid,
}

/// Serialized mesh: preimage vertices, per-vertex images, triangles.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeshDoc {
    pub vertices: Vec<[f64; 2]>,
    pub images: Vec<[f64; 2]>,
    pub triangles: Vec<[u32; 3]>,
    pub cell: f64,
}

impl From<TriMesh> for MeshDoc {
    fn from(m: TriMesh) -> Self {
        MeshDoc {
            vertices: m.pre.iter().map(|p| [p.r, p.s]).collect(),
            images: m.img.iter().map(|p| [p.r, p.s]).collect(),
            triangles: m.tris,
            cell: m.cell,
        }
    }
}

impl TryFrom<MeshDoc> for TriMesh {
    type Error = String;

    fn try_from(d: MeshDoc) -> std::result::Result<Self, String> {
        if d.vertices.len() != d.images.len() {
            return Err("mesh vertex and image counts differ".into());
        }
        let n = d.vertices.len() as u32;
        if d.triangles.iter().flatten().any(|&i| i >= n) {
            return Err("mesh triangle references a missing vertex".into());
        }
        let to = |v: Vec<[f64; 2]>| v.into_iter().map(|[r, s]| PlanarPoint::new(r, s)).collect();
        Ok(TriMesh::new(
            to(d.vertices),
            to(d.images),
            d.triangles,
            d.cell,
        ))
    }
}

impl TriMesh {
    fn new(pre: Vec<PlanarPoint>, img: Vec<PlanarPoint>, tris: Vec<[u32; 3]>, cell: f64) -> Self {
        let pre_grid = TriGrid::build(&pre, &tris, cell);
        let img_grid = TriGrid::build(&img, &tris, cell);
        Self {
            pre,
            img,
            tris,
            cell,
            pre_grid,
            img_grid,
        }
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.pre.len()
    }

    fn locate(
        &self,
        grid: &TriGrid,
        pts: &[PlanarPoint],
        p: PlanarPoint,
    ) -> Option<(usize, [f64; 3])> {
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in grid.candidates(p) {
            let tri = self.tris[t as usize];
            let w = bary(
                p,
                pts[tri[0] as usize],
                pts[tri[1] as usize],
                pts[tri[2] as usize],
            );
            let m = w[0].min(w[1]).min(w[2]);
            if m >= 0.0 {
                return Some((t as usize, w));
            }
            if best.is_none_or(|b| m > b.2) {
                best = Some((t as usize, w, m));
            }
        }
        best.filter(|b| b.2 >= -BARY_TOL).map(|b| (b.0, b.1))
    }

    fn interp(&self, pts: &[PlanarPoint], t: usize, w: [f64; 3]) -> PlanarPoint {
        let tri = self.tris[t];
        let (a, b, c) = (
            pts[tri[0] as usize],
            pts[tri[1] as usize],
            pts[tri[2] as usize],
        );
        PlanarPoint::new(
            w[0] * a.r + w[1] * b.r + w[2] * c.r,
            w[0] * a.s + w[1] * b.s + w[2] * c.s,
        )
    }

    /// Image of a point of the hutch.
    pub fn forward(&self, p: PlanarPoint) -> Option<PlanarPoint> {
        let (t, w) = self.locate(&self.pre_grid, &self.pre, p)?;
        Some(self.interp(&self.img, t, w))
    }

    /// A preimage; unique off the collapsed tree.
    pub fn inverse(&self, p: PlanarPoint) -> Option<PlanarPoint> {
        let (t, w) = self.locate(&self.img_grid, &self.img, p)?;
        Some(self.interp(&self.pre, t, w))
    }

    pub fn min_preimage_area(&self) -> f64 {
        self.tris
            .iter()
            .map(|t| {
                signed_area(
                    self.pre[t[0] as usize],
                    self.pre[t[1] as usize],
                    self.pre[t[2] as usize],
                )
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn preimage_vertices(&self) -> &[PlanarPoint] {
        &self.pre
    }

    pub fn image_vertices(&self) -> &[PlanarPoint] {
        &self.img
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.tris
    }
}

/// Where the contour around the tree visits each original tree vertex, as a
/// parameter in `[0, 1]` along the marked arc (`0` at the right end of `A'`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContourInfo {
    pub visits: Vec<Vec<f64>>,
    pub length: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Boundary,
    Tree(Option<usize>),
    Interior,
}

struct Cut {
    pos: Vec<PlanarPoint>,
    kind: Vec<Kind>,
    tris: Vec<[u32; 3]>,
}

fn subdivide(a: PlanarPoint, b: PlanarPoint, h: f64) -> Vec<PlanarPoint> {
    let n = ((euclidean_distance(a, b) / h).ceil() as usize).max(1);
    (0..=n).map(|i| a.lerp(b, i as f64 / n as f64)).collect()
}

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

fn insert(cdt: &mut Cdt, p: PlanarPoint) -> Result<FixedVertexHandle> {
    cdt.insert(Point2::new(p.r, p.s))
        .map_err(|e| Error::MeshLookup(format!("triangulation insert failed: {e:?}")))
}

/// Triangulates the hutch with the tree as constraints. Returns positions, kinds
/// and CCW triangles over the original (uncut) vertices.
fn triangulate(disc: &PolygonDisc, tree: &PLTree, root: usize, h: f64) -> Result<Cut> {
    let mut cdt = Cdt::new();
    let mut kinds: HashMap<usize, Kind> = HashMap::new();
    let root_pt = tree.vertices[root];

    // boundary, with the root as a vertex of the top edge
    let bnd = &disc.boundary;
    let mut ring: Vec<PlanarPoint> = Vec::new();
    for i in 0..bnd.len() {
        let (a, b) = (bnd[i], bnd[(i + 1) % bnd.len()]);
        let on_edge = (a.s - 1.0).abs() < ON_TOL
            && (b.s - 1.0).abs() < ON_TOL
            && (root_pt.r - a.r) * (root_pt.r - b.r) < 0.0;
        let mut seg = if on_edge {
            let mut v = subdivide(a, root_pt, h);
            v.pop();
            v.extend(subdivide(root_pt, b, h));
            v
        } else {
            subdivide(a, b, h)
        };
        seg.pop();
        ring.extend(seg);
    }
    let mut ring_h = Vec::with_capacity(ring.len());
    for &p in &ring {
        let v = insert(&mut cdt, p)?;
        kinds.insert(v.index(), Kind::Boundary);
        ring_h.push(v);
    }
    let mut tree_h: Vec<FixedVertexHandle> = Vec::new();
    for (vi, &p) in tree.vertices.iter().enumerate() {
        let v = insert(&mut cdt, p)?;
        kinds.insert(v.index(), Kind::Tree(Some(vi)));
        tree_h.push(v);
    }
    let mut tree_segments: Vec<(FixedVertexHandle, FixedVertexHandle)> = Vec::new();
    for &(a, b) in &tree.edges {
        let pts = subdivide(tree.vertices[a], tree.vertices[b], h);
        let mut prev = tree_h[a];
        for (k, &p) in pts.iter().enumerate().skip(1) {
            let v = if k + 1 == pts.len() {
                tree_h[b]
            } else {
                let v = insert(&mut cdt, p)?;
                kinds.insert(v.index(), Kind::Tree(None));
                v
            };
            tree_segments.push((prev, v));
            prev = v;
        }
    }
    for i in 0..ring_h.len() {
        let (a, b) = (ring_h[i], ring_h[(i + 1) % ring_h.len()]);
        if !cdt.can_add_constraint(a, b) {
            return Err(Error::Resolution {
                msg: "hutch boundary conflicts with the hanging set".into(),
                suggested: h / 2.0,
            });
        }
        cdt.add_constraint(a, b);
    }
    for &(a, b) in &tree_segments {
        if !cdt.can_add_constraint(a, b) {
            return Err(Error::Resolution {
                msg: "tree edges too close to each other or to the hutch boundary".into(),
                suggested: h / 2.0,
            });
        }
        cdt.add_constraint(a, b);
    }
    // interior Steiner points on a triangular lattice of pitch h, clear of the constraints
    let (lo, hi) = disc.bbox();
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = ((hi.s - lo.s) / dy).ceil() as usize;
    let cols = ((hi.r - lo.r) / h).ceil() as usize + 1;
    for j in 0..=rows {
        let s = lo.s + j as f64 * dy;
        let shift = if j % 2 == 1 { h / 2.0 } else { 0.0 };
        for i in 0..=cols {
            let p = PlanarPoint::new(lo.r + shift + i as f64 * h, s);
            if disc.locate(p) == DiscLocation::Inside
                && disc.boundary_distance(p) > 0.4 * h
                && tree.distance_to(p) > 0.4 * h
            {
                insert(&mut cdt, p)?;
            }
        }
    }

    let special = |kinds: &HashMap<usize, Kind>, i: usize| {
        matches!(kinds.get(&i), Some(Kind::Boundary) | Some(Kind::Tree(_)))
    };
    // split interior edges joining two boundary or tree vertices
    for _ in 0..50 {
        let mids: Vec<PlanarPoint> = cdt
            .undirected_edges()
            .filter(|e| !cdt.is_constraint_edge(e.fix()))
            .filter_map(|e| {
                let [a, b] = e.vertices();
                (special(&kinds, a.fix().index()) && special(&kinds, b.fix().index())).then(|| {
                    let (pa, pb) = (a.position(), b.position());
                    PlanarPoint::new(0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y))
                })
            })
            .collect();
        if mids.is_empty() {
            break;
        }
        for m in mids {
            insert(&mut cdt, m)?;
        }
    }

    let n = cdt.num_vertices();
    let mut pos = vec![PlanarPoint::new(0.0, 0.0); n];
    let mut kind = vec![Kind::Interior; n];
    for v in cdt.vertices() {
        let i = v.fix().index();
        let p = v.position();
        pos[i] = PlanarPoint::new(p.x, p.y);
        kind[i] = kinds.get(&i).copied().unwrap_or_else(|| {
            if disc.boundary_distance(pos[i]) < ON_TOL {
                Kind::Boundary
            } else {
                Kind::Interior
            }
        });
    }
    let mut tris = Vec::with_capacity(cdt.num_inner_faces());
    for f in cdt.inner_faces() {
        let [a, b, c] = f.vertices().map(|v| v.fix().index() as u32);
        if signed_area(pos[a as usize], pos[b as usize], pos[c as usize]) > 0.0 {
            tris.push([a, b, c]);
        } else {
            tris.push([a, c, b]);
        }
    }
    // the tree as a set of slit edges over mesh vertices
    let mut cut = Cut { pos, kind, tris };
    let slits: HashSet<(u32, u32)> = tree_segments
        .iter()
        .flat_map(|&(a, b)| {
            let (a, b) = (a.index() as u32, b.index() as u32);
            [(a, b), (b, a)]
        })
        .collect();
    cut_along(&mut cut, &slits);
    Ok(cut)
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Duplicates tree vertices so that no triangle fan crosses a slit edge.
fn cut_along(cut: &mut Cut, slits: &HashSet<(u32, u32)>) {
    let mut incident: HashMap<u32, Vec<usize>> = HashMap::new();
    for (t, tri) in cut.tris.iter().enumerate() {
        for &v in tri {
            if matches!(cut.kind[v as usize], Kind::Tree(_)) {
                incident.entry(v).or_default().push(t);
            }
        }
    }
    let mut keys: Vec<u32> = incident.keys().copied().collect();
    keys.sort_unstable();
    for v in keys {
        let fan = &incident[&v];
        let mut parent: Vec<usize> = (0..fan.len()).collect();
        // edges (v, w) shared by two fan triangles join them unless (v, w) is a slit
        let mut by_edge: HashMap<u32, usize> = HashMap::new();
        for (k, &t) in fan.iter().enumerate() {
            for &w in &cut.tris[t] {
                if w == v || slits.contains(&(v, w)) {
                    continue;
                }
                if let Some(&other) = by_edge.get(&w) {
                    let (a, b) = (find(&mut parent, k), find(&mut parent, other));
                    parent[a] = b;
                } else {
                    by_edge.insert(w, k);
                }
            }
        }
        let mut copy_of: HashMap<usize, u32> = HashMap::new();
        let mut first = true;
        for k in 0..fan.len() {
            let root = find(&mut parent, k);
            let id = *copy_of.entry(root).or_insert_with(|| {
                if first {
                    first = false;
                    v
                } else {
                    cut.pos.push(cut.pos[v as usize]);
                    cut.kind.push(cut.kind[v as usize]);
                    (cut.pos.len() - 1) as u32
                }
            });
            for slot in cut.tris[fan[k]].iter_mut() {
                if *slot == v {
                    *slot = id;
                }
            }
        }
    }
}

/// Solves the Tutte system for interior vertices with conjugate gradients.
fn tutte(pos: &mut [PlanarPoint], fixed: &[bool], tris: &[[u32; 3]]) -> Result<()> {
    let n = pos.len();
    let mut nbrs: Vec<Vec<u32>> = vec![Vec::new(); n];
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            nbrs[a as usize].push(b);
            nbrs[b as usize].push(a);
        }
    }
    for l in &mut nbrs {
        l.sort_unstable();
        l.dedup();
    }
    let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    if free.is_empty() {
        return Ok(());
    }
    let mut slot = vec![usize::MAX; n];
    for (k, &i) in free.iter().enumerate() {
        slot[i] = k;
    }
    let m = free.len();
    let apply = |x: &[f64], out: &mut [f64]| {
        for (k, &i) in free.iter().enumerate() {
            let mut acc = nbrs[i].len() as f64 * x[k];
            for &j in &nbrs[i] {
                let sj = slot[j as usize];
                if sj != usize::MAX {
                    acc -= x[sj];
                }
            }
            out[k] = acc;
        }
    };
    for coord in 0..2 {
        let get = |p: &PlanarPoint| if coord == 0 { p.r } else { p.s };
        let mut b = vec![0.0; m];
        for (k, &i) in free.iter().enumerate() {
            for &j in &nbrs[i] {
                if fixed[j as usize] {
                    b[k] += get(&pos[j as usize]);
                }
            }
        }
        let diag: Vec<f64> = free.iter().map(|&i| nbrs[i].len() as f64).collect();
        let mut x: Vec<f64> = free.iter().map(|&i| get(&pos[i])).collect();
        let mut ax = vec![0.0; m];
        apply(&x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let mut ap = vec![0.0; m];
        let mut converged = false;
        for _ in 0..(20 * m + 1000) {
            let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rn <= 1e-15 * bnorm {
                converged = true;
                break;
            }
            apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            let alpha = rz / pap;
            for k in 0..m {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            for k in 0..m {
                z[k] = r[k] / diag[k];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..m {
                p[k] = z[k] + beta * p[k];
            }
        }
        if !converged {
            log::warn!("embedding solve stopped before reaching full precision");
        }
        for (k, &i) in free.iter().enumerate() {
            if coord == 0 {
                pos[i].r = x[k];
            } else {
                pos[i].s = x[k];
            }
        }
    }
    Ok(())
}

/// Builds the permeating mesh for a tree hanging from `(r0, 1)` inside a convex,
/// counterclockwise hutch whose top side is the base arc `base` on `s = 1`.
pub(crate) fn build_mesh(
    disc: &PolygonDisc,
    base: Segment1D,
    marked: Segment1D,
    tree: &PLTree,
    root: usize,
    h: f64,
) -> Result<(TriMesh, ContourInfo)> {
    let r0 = tree.vertices[root].r;
    let cut = triangulate(disc, tree, root, h)?;
    let n = cut.pos.len();

    // boundary cycle of the cut disc
    let mut directed: HashSet<(u32, u32)> = HashSet::new();
    for t in &cut.tris {
        for k in 0..3 {
            directed.insert((t[k], t[(k + 1) % 3]));
        }
    }
    let mut next: HashMap<u32, u32> = HashMap::new();
    for &(a, b) in &directed {
        if !directed.contains(&(b, a)) && next.insert(a, b).is_some() {
            return Err(Error::MeshLookup(
                "cut mesh boundary is not a simple cycle".into(),
            ));
        }
    }
    let corner = PlanarPoint::new(base.hi, 1.0);
    let start = (0..n as u32)
        .filter(|v| next.contains_key(v))
        .find(|&v| euclidean_distance(cut.pos[v as usize], corner) < ON_TOL)
        .ok_or_else(|| Error::MeshLookup("base arc corner missing from mesh".into()))?;
    let mut chain = vec![start];
    let mut cur = start;
    loop {
        cur = next[&cur];
        chain.push(cur);
        let p = cut.pos[cur as usize];
        if euclidean_distance(p, PlanarPoint::new(base.lo, 1.0)) < ON_TOL {
            break;
        }
        if chain.len() > n {
            return Err(Error::MeshLookup(
                "base chain does not reach the far corner".into(),
            ));
        }
    }
    let is_tree = |v: u32| matches!(cut.kind[v as usize], Kind::Tree(_));
    let first_tree = chain.iter().position(|&v| is_tree(v));
    let last_tree = chain.iter().rposition(|&v| is_tree(v));
    let (ft, lt) = match (first_tree, last_tree) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::MeshLookup(
                "tree contour missing from the base chain".into(),
            ))
        }
    };

    let mut pre = cut.pos.clone();
    let mut fixed = vec![false; n];
    for &v in next.keys() {
        fixed[v as usize] = true;
    }
    let mut length = 0.0;
    let mut cum = vec![0.0; lt - ft + 1];
    for k in ft + 1..=lt {
        length += euclidean_distance(cut.pos[chain[k - 1] as usize], cut.pos[chain[k] as usize]);
        cum[k - ft] = length;
    }
    let mut visits = vec![Vec::new(); tree.vertices.len()];
    for (k, &v) in chain.iter().enumerate() {
        let q = cut.pos[v as usize];
        let r = if k < ft {
            marked.hi + (q.r - r0) * (base.hi - marked.hi) / (base.hi - r0)
        } else if k <= lt {
            let t = cum[k - ft] / length;
            if let Kind::Tree(Some(i)) = cut.kind[v as usize] {
                visits[i].push(t);
            }
            marked.hi - t * (marked.hi - marked.lo)
        } else {
            base.lo + (q.r - base.lo) * (marked.lo - base.lo) / (r0 - base.lo)
        };
        pre[v as usize] = PlanarPoint::new(r, 1.0);
    }
    // pin the exact corners
    pre[chain[0] as usize] = PlanarPoint::new(base.hi, 1.0);
    pre[*chain.last().unwrap() as usize] = PlanarPoint::new(base.lo, 1.0);
    tutte(&mut pre, &fixed, &cut.tris)?;

    let mesh = TriMesh::new(pre, cut.pos, cut.tris, h);
    let min_area = mesh.min_preimage_area();
    if !(min_area > 0.0) {
        return Err(Error::Resolution {
            msg: format!("embedded mesh has a folded triangle (area {min_area:e})"),
            suggested: h / 2.0,
        });
    }
    Ok((mesh, ContourInfo { visits, length }))
}
