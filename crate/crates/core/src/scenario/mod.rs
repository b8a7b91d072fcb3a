//! Scenario files, validation and the build pipeline.
//!
//! A scenario is a TOML document; see `scenarios/README.md` for the schema.

mod pipeline;
pub mod plane;
pub mod report;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use pipeline::{run_pipeline, steered_w_points, PipelineArtifacts, SteeredPoint};

use crate::analysis::LimitDir;
use crate::error::{Error, Result};
use crate::expr::AnnulusTwist;
use crate::geometry::{
    euclidean_distance, validate_tree_embedding, PLTree, PlanarPoint, PointCloud, Segment1D,
};
use crate::rising::{
    DEFAULT_CONTRACTION, DEFAULT_DECAY, DEFAULT_GAP_MIN, DEFAULT_MARGIN, DEFAULT_SHOULDER,
};
use crate::steering::{SteeringBudget, DEFAULT_SCAN_CAP, DEFAULT_STAGES};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    EdgeLimits,
    PointTargets,
    TreeTargets,
    AnnulusControl,
    /// Built like the point or tree scenario it carries, then conjugated to the plane.
    Plane,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuildKind {
    Edge,
    Points,
    Trees,
    Annulus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RisingConfig {
    pub contraction: f64,
    /// Comb periods per unit of orbit coordinate.
    pub periods: usize,
    pub gap_fraction: f64,
    pub margin: f64,
    pub gap_min: f64,
    pub decay: f64,
    pub shoulder: f64,
}

impl Default for RisingConfig {
    fn default() -> Self {
        Self {
            contraction: DEFAULT_CONTRACTION,
            periods: 128,
            gap_fraction: 0.1,
            margin: DEFAULT_MARGIN,
            gap_min: DEFAULT_GAP_MIN,
            decay: DEFAULT_DECAY,
            shoulder: DEFAULT_SHOULDER,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Linear,
    Geometric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteeringConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub stages: usize,
    pub schedule: Schedule,
    pub scan_cap: usize,
}

impl Default for SteeringConfig {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            epsilon: 0.2,
            stages: DEFAULT_STAGES,
            schedule: Schedule::Linear,
            scan_cap: DEFAULT_SCAN_CAP,
        }
    }
}

impl SteeringConfig {
    pub fn budget(&self) -> Result<SteeringBudget> {
        match self.schedule {
            Schedule::Linear => SteeringBudget::linear(self.lambda, self.epsilon, self.stages),
            Schedule::Geometric => {
                SteeringBudget::geometric(self.lambda, self.epsilon, self.stages)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PermeationConfig {
    pub mesh_h: f64,
}

impl Default for PermeationConfig {
    fn default() -> Self {
        Self { mesh_h: 0.01 }
    }
}

/// Edge arcs `[lo, hi]` on the top (ω) and bottom (α) edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeTarget {
    pub omega: [f64; 2],
    pub alpha: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointPair {
    pub omega: [f64; 2],
    pub alpha: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSpec {
    pub vertices: Vec<[f64; 2]>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
}

impl TreeSpec {
    pub fn tree(&self) -> PLTree {
        PLTree::new(
            self.vertices
                .iter()
                .map(|v| PlanarPoint::new(v[0], v[1]))
                .collect(),
            self.edges.iter().map(|e| (e[0], e[1])).collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreePair {
    pub omega: TreeSpec,
    pub alpha: TreeSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateConfig {
    pub order: usize,
    /// Multiple of the minimum pairwise target separation, used when
    /// `separation` is absent.
    pub separation_factor: f64,
    pub separation: Option<f64>,
    pub radius: f64,
    /// Centers form a `grid × grid` lattice over `[-extent, extent]²`.
    pub grid: usize,
    pub extent: f64,
    pub samples: usize,
    pub dirs: Vec<LimitDir>,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self {
            order: 3,
            separation_factor: 0.8,
            separation: None,
            radius: 0.05,
            grid: 5,
            extent: 0.8,
            samples: 200,
            dirs: vec![LimitDir::Omega, LimitDir::Alpha],
        }
    }
}

impl CertificateConfig {
    pub fn centers(&self) -> Vec<PlanarPoint> {
        let at = |i: usize| {
            if self.grid == 1 {
                0.0
            } else {
                -self.extent + 2.0 * self.extent * i as f64 / (self.grid - 1) as f64
            }
        };
        (0..self.grid)
            .flat_map(|i| (0..self.grid).map(move |j| PlanarPoint::new(at(i), at(j))))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropyConfig {
    pub epsilon: f64,
    pub n_max: usize,
    pub grid: usize,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            n_max: 20,
            grid: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub burn_in: usize,
    pub window: usize,
    /// Enumerated W points tested per family.
    pub tested_per_family: usize,
    pub tolerance: f64,
    pub nonwandering_samples: usize,
    pub certificate: Option<CertificateConfig>,
    pub entropy: Option<EntropyConfig>,
    /// Base points of the orbit traces written by `export`.
    pub trace_points: Vec<[f64; 2]>,
    pub trace_steps: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            burn_in: crate::analysis::DEFAULT_BURN_IN,
            window: crate::analysis::DEFAULT_WINDOW,
            tested_per_family: 10,
            tolerance: 0.05,
            nonwandering_samples: 1000,
            certificate: None,
            entropy: None,
            trace_points: Vec::new(),
            trace_steps: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    pub mode: Mode,
    /// Seed of the W enumeration.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rising: RisingConfig,
    #[serde(default)]
    pub steering: SteeringConfig,
    #[serde(default)]
    pub permeation: PermeationConfig,
    /// Edge-limit families; in tree mode, the arc family listed first.
    #[serde(default)]
    pub edge_targets: Vec<EdgeTarget>,
    #[serde(default)]
    pub point_targets: Vec<PointPair>,
    #[serde(default)]
    pub tree_targets: Vec<TreePair>,
    #[serde(default)]
    pub annulus: Option<AnnulusTwist>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

fn pt(a: [f64; 2]) -> PlanarPoint {
    PlanarPoint::new(a[0], a[1])
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn build_kind(&self) -> BuildKind {
        match self.mode {
            Mode::EdgeLimits => BuildKind::Edge,
            Mode::PointTargets => BuildKind::Points,
            Mode::TreeTargets => BuildKind::Trees,
            Mode::AnnulusControl => BuildKind::Annulus,
            Mode::Plane => {
                if !self.tree_targets.is_empty() {
                    BuildKind::Trees
                } else if !self.point_targets.is_empty() {
                    BuildKind::Points
                } else {
                    BuildKind::Edge
                }
            }
        }
    }

    /// Number of families (W enumerations).
    pub fn family_count(&self) -> usize {
        match self.build_kind() {
            BuildKind::Edge => self.edge_targets.len(),
            BuildKind::Points => self.point_targets.len(),
            BuildKind::Trees => self.edge_targets.len() + self.tree_targets.len(),
            BuildKind::Annulus => 0,
        }
    }

    /// Declared ω and α targets of family `n` as point clouds.
    pub fn declared_targets(&self, n: usize, spacing: f64) -> Option<(PointCloud, PointCloud)> {
        let arc = |a: [f64; 2], s: f64| {
            let seg = Segment1D { lo: a[0], hi: a[1] };
            let k = ((seg.len() / spacing).ceil() as usize).max(1);
            PointCloud::new(
                (0..=k)
                    .map(|i| PlanarPoint::new(seg.at(i as f64 / k as f64), s))
                    .collect(),
            )
        };
        match self.build_kind() {
            BuildKind::Edge => self
                .edge_targets
                .get(n)
                .map(|t| (arc(t.omega, 1.0), arc(t.alpha, -1.0))),
            BuildKind::Points => self.point_targets.get(n).map(|t| {
                (
                    PointCloud::new(vec![pt(t.omega)]),
                    PointCloud::new(vec![pt(t.alpha)]),
                )
            }),
            BuildKind::Trees => {
                let e = self.edge_targets.len();
                if n < e {
                    let t = &self.edge_targets[n];
                    Some((arc(t.omega, 1.0), arc(t.alpha, -1.0)))
                } else {
                    self.tree_targets.get(n - e).map(|t| {
                        (
                            PointCloud::new(t.omega.tree().sample(spacing)),
                            PointCloud::new(t.alpha.tree().sample(spacing)),
                        )
                    })
                }
            }
            BuildKind::Annulus => None,
        }
    }

    /// Smallest distance between declared targets of distinct families, per direction.
    pub fn min_target_separation(&self) -> Option<f64> {
        let m = self.family_count();
        let clouds: Vec<(PointCloud, PointCloud)> = (0..m)
            .filter_map(|n| self.declared_targets(n, 0.005))
            .collect();
        let mut best: Option<f64> = None;
        for i in 0..clouds.len() {
            for j in i + 1..clouds.len() {
                for (a, b) in [(&clouds[i].0, &clouds[j].0), (&clouds[i].1, &clouds[j].1)] {
                    let d = crate::geometry::min_set_distance(a, b).ok()?;
                    best = Some(best.map_or(d, |x: f64| x.min(d)));
                }
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: String,
    pub indices: Vec<usize>,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Finite-case readings of the hypotheses (not violations).
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, code: &str, indices: Vec<usize>, message: String) {
        self.violations.push(Violation {
            code: code.into(),
            indices,
            message,
        });
    }
}

fn check_edge_arc(rep: &mut ValidationReport, a: [f64; 2], margin: f64, n: usize, what: &str) {
    if !(a[0].is_finite() && a[1].is_finite()) || a[0] > a[1] {
        rep.push(
            "arc",
            vec![n],
            format!("{what} arc of family {n} is not an interval"),
        );
    } else if a[0] < -1.0 + margin || a[1] > 1.0 - margin {
        rep.push(
            "margin",
            vec![n],
            format!("{what} arc of family {n} is within {margin} of a corner"),
        );
    }
}

pub fn validate_scenario(sc: &Scenario) -> ValidationReport {
    let mut rep = ValidationReport::default();
    if sc.version != SCENARIO_VERSION {
        rep.push(
            "version",
            vec![],
            format!(
                "unsupported version {} (expected {SCENARIO_VERSION})",
                sc.version
            ),
        );
    }
    if let Err(e) = sc.steering.budget() {
        rep.push("steering", vec![], e.to_string());
    } else if let Ok(b) = sc.steering.budget() {
        if !b.is_valid() {
            rep.push(
                "steering",
                vec![],
                "running λ or ε exceeds the budget".into(),
            );
        }
    }
    if !(sc.permeation.mesh_h > 0.0) {
        rep.push("mesh", vec![], "mesh_h must be positive".into());
    }
    let r = &sc.rising;
    if !(r.contraction > 0.0 && r.contraction < 1.0)
        || r.periods == 0
        || !(0.0..1.0).contains(&r.gap_fraction)
    {
        rep.push(
            "rising",
            vec![],
            "contraction in (0,1), periods > 0 and gap_fraction in [0,1) required".into(),
        );
    }
    let margin = r.margin;
    let kind = sc.build_kind();
    match kind {
        BuildKind::Edge => {
            if sc.edge_targets.is_empty() {
                rep.push(
                    "empty",
                    vec![],
                    "edge-limits mode needs edge_targets".into(),
                );
            }
            for (n, t) in sc.edge_targets.iter().enumerate() {
                check_edge_arc(&mut rep, t.omega, margin, n, "omega");
                check_edge_arc(&mut rep, t.alpha, margin, n, "alpha");
            }
        }
        BuildKind::Points => {
            if sc.point_targets.is_empty() {
                rep.push(
                    "empty",
                    vec![],
                    "point-targets mode needs point_targets".into(),
                );
            }
            let pts: Vec<(usize, &str, PlanarPoint)> = sc
                .point_targets
                .iter()
                .enumerate()
                .flat_map(|(n, t)| [(n, "omega", pt(t.omega)), (n, "alpha", pt(t.alpha))])
                .collect();
            for &(n, what, p) in &pts {
                if !p.in_open_square() {
                    rep.push(
                        "interior",
                        vec![n],
                        format!("{what} target of family {n} is not interior"),
                    );
                }
            }
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    if euclidean_distance(pts[i].2, pts[j].2) == 0.0 {
                        rep.push(
                            "disjoint",
                            vec![pts[i].0, pts[j].0],
                            format!(
                                "{} target of family {} coincides with {} target of family {}",
                                pts[i].1, pts[i].0, pts[j].1, pts[j].0
                            ),
                        );
                    }
                }
            }
            for (n, t) in sc.point_targets.iter().enumerate() {
                rep.notes.push(format!(
                    "family {n}: finite index set; edge distances {:.6} (omega) and {:.6} (alpha) are recorded instead of limits",
                    1.0 - t.omega[1].abs(),
                    1.0 - t.alpha[1].abs()
                ));
            }
        }
        BuildKind::Trees => {
            if sc.tree_targets.is_empty() {
                rep.push(
                    "empty",
                    vec![],
                    "tree-targets mode needs tree_targets".into(),
                );
            }
            for (n, t) in sc.edge_targets.iter().enumerate() {
                check_edge_arc(&mut rep, t.omega, margin, n, "omega");
                check_edge_arc(&mut rep, t.alpha, margin, n, "alpha");
            }
            let e = sc.edge_targets.len();
            let mut trees: Vec<(usize, PLTree)> = Vec::new();
            for (k, t) in sc.tree_targets.iter().enumerate() {
                for (what, spec) in [("omega", &t.omega), ("alpha", &t.alpha)] {
                    let tree = spec.tree();
                    let n = e + k;
                    if spec
                        .edges
                        .iter()
                        .any(|ed| ed[0] >= spec.vertices.len() || ed[1] >= spec.vertices.len())
                    {
                        rep.push(
                            "tree",
                            vec![n],
                            format!("{what} tree of family {n} has an edge to a missing vertex"),
                        );
                        continue;
                    }
                    if !validate_tree_embedding(&tree).is_valid() {
                        rep.push(
                            "tree",
                            vec![n],
                            format!("{what} tree of family {n} is not an embedded tree"),
                        );
                    }
                    if tree.vertices.iter().any(|v| !v.in_open_square()) {
                        rep.push(
                            "interior",
                            vec![n],
                            format!("{what} tree of family {n} is not interior"),
                        );
                    }
                    trees.push((n, tree));
                }
            }
            for i in 0..trees.len() {
                for j in i + 1..trees.len() {
                    let a = PointCloud::new(trees[i].1.sample(0.005));
                    let b = PointCloud::new(trees[j].1.sample(0.005));
                    if crate::geometry::min_set_distance(&a, &b).map_or(true, |d| d < 1e-9) {
                        rep.push(
                            "disjoint",
                            vec![trees[i].0, trees[j].0],
                            "trees intersect".into(),
                        );
                    }
                }
            }
            rep.notes.push(
                "finite family of trees; hutch diameters are recorded instead of a limit".into(),
            );
        }
        BuildKind::Annulus => {
            let a = sc.annulus.clone().unwrap_or_default();
            if !(a.inner > 0.0 && a.inner < a.outer)
                || a.center.r.abs() + a.outer >= 1.0
                || a.center.s.abs() + a.outer >= 1.0
            {
                rep.push(
                    "annulus",
                    vec![],
                    "annulus must satisfy 0 < inner < outer and lie inside the square".into(),
                );
            }
        }
    }
    if kind != BuildKind::Annulus
        && sc.analysis.tested_per_family * sc.family_count() > sc.steering.stages
    {
        rep.notes.push(format!(
            "only the first {} W points are steered; later tested points follow generic orbits",
            sc.steering.stages
        ));
    }
    rep
}
