use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{pt, BuildKind, Scenario};
use crate::analysis::LimitDir;
use crate::enumerate::PointEnumeration;
use crate::error::{Error, Result};
use crate::expr::MapExpr;
use crate::geometry::{PlanarPoint, Segment1D};
use crate::permeation::placement::{place_point_targets, place_tree_target, PointTarget};
use crate::permeation::{
    build_compositive, build_tree_permeating, CompositivePermeating, Hutch, Permeating,
};
use crate::rising::{build_rising, BandLayout, FamilySpec, FiberedRisingMap, RisingSpec};
use crate::steering::{build_steering, FiberTargets, Steering};

/// An enumerated W point and its preimage under the compositive permeating.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeredPoint {
    pub index: u64,
    pub family: usize,
    pub w: PlanarPoint,
    pub v: PlanarPoint,
}

pub struct PipelineArtifacts {
    pub scenario: Scenario,
    pub enumeration: Option<PointEnumeration>,
    pub rising_spec: Option<RisingSpec>,
    pub rising: Option<Arc<FiberedRisingMap>>,
    pub steering: Option<Steering>,
    pub xi: Arc<CompositivePermeating>,
    /// Family and direction served by each permeating member.
    pub member_roles: Vec<(usize, LimitDir)>,
    /// Enumeration order, skipping points near the exceptional set.
    pub steered: Vec<SteeredPoint>,
    pub skipped: Vec<u64>,
    pub f: Arc<MapExpr>,
    pub h: Arc<MapExpr>,
    pub phi: Arc<MapExpr>,
    pub psi: Arc<MapExpr>,
    pub provenance: BTreeMap<String, String>,
}

impl PipelineArtifacts {
    /// The first `count` steered W points of family `n`.
    pub fn tested_points(&self, n: usize, count: usize) -> Vec<PlanarPoint> {
        self.steered
            .iter()
            .filter(|p| p.family == n)
            .take(count)
            .map(|p| p.w)
            .collect()
    }

    pub fn family_count(&self) -> usize {
        self.rising.as_ref().map_or(0, |r| r.family_count())
    }
}

fn sha(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn json_sha<T: Serialize>(v: &T) -> String {
    sha(serde_json::to_string(v).unwrap_or_default().as_bytes())
}

/// Attempts at the finer mesh size suggested by a resolution error.
pub const MESH_RETRIES: usize = 4;

/// Upper limit for automatic comb refinement.
pub const MAX_PERIODS: usize = 1 << 20;

/// Walks the W enumeration, skipping points within `mesh_h` of a hanging set,
/// until `count` points have a preimage.
pub fn steered_w_points(
    en: &PointEnumeration,
    xi: &CompositivePermeating,
    count: usize,
) -> Result<(Vec<SteeredPoint>, Vec<u64>)> {
    let mut out = Vec::with_capacity(count);
    let mut skipped = Vec::new();
    let mut k = 0u64;
    while out.len() < count {
        let w = en.point(k);
        let near = xi
            .members
            .iter()
            .any(|m| m.hutch.hanging.distance_to(w) <= m.mesh_h);
        if near {
            log::info!(
                "skipping W point {k} at ({}, {}): within mesh_h of a hanging set",
                w.r,
                w.s
            );
            skipped.push(k);
        } else {
            out.push(SteeredPoint {
                index: k,
                family: en.family_of(k),
                w,
                v: xi.inverse_raw(w)?,
            });
        }
        k += 1;
        if k > 1000 * (count as u64 + 1) {
            return Err(Error::Placement(
                "W enumeration keeps hitting the exceptional set".into(),
            ));
        }
    }
    Ok((out, skipped))
}

fn build_members(hutches: Vec<Hutch>, mesh_h: f64) -> Result<Vec<Permeating>> {
    hutches
        .into_par_iter()
        .map(|h| {
            let mut step = mesh_h;
            for _ in 0..MESH_RETRIES {
                match build_tree_permeating(h.clone(), step) {
                    Err(Error::Resolution { suggested, msg }) => {
                        log::info!("{msg}; retrying with mesh_h = {suggested}");
                        step = suggested;
                    }
                    other => return other,
                }
            }
            build_tree_permeating(h, step)
        })
        .collect()
}

fn inner_arc(p: &Permeating) -> Result<Segment1D> {
    p.inner
        .ok_or_else(|| Error::MeshLookup("permeating has no inner arc".into()))
}

/// Placement, permeation, rising map, steering and conjugation, in that order.
pub fn run_pipeline(sc: &Scenario) -> Result<PipelineArtifacts> {
    let report = super::validate_scenario(sc);
    if !report.is_valid() {
        let msg = report
            .violations
            .iter()
            .map(|v| v.message.clone())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::InvalidSpec(msg));
    }
    let mut provenance = BTreeMap::new();
    provenance.insert("scenario".to_string(), sha(sc.to_toml()?.as_bytes()));

    if sc.build_kind() == BuildKind::Annulus {
        let m = MapExpr::AnnulusTwist(sc.annulus.clone().unwrap_or_default()).shared();
        return Ok(PipelineArtifacts {
            scenario: sc.clone(),
            enumeration: None,
            rising_spec: None,
            rising: None,
            steering: None,
            xi: Arc::new(CompositivePermeating::empty("xi")),
            member_roles: Vec::new(),
            steered: Vec::new(),
            skipped: Vec::new(),
            f: m.clone(),
            h: MapExpr::Identity.shared(),
            phi: m.clone(),
            psi: m,
            provenance,
        });
    }

    let m = sc.family_count();
    let en = PointEnumeration::new(sc.seed, m);
    let k_stages = sc.steering.stages;
    let mesh_h = sc.permeation.mesh_h;
    let avoid = en.prefix(k_stages + 2 * m * sc.analysis.tested_per_family);

    // placement and permeation
    let (hutches, roles, edge_families): (
        Vec<Hutch>,
        Vec<(usize, LimitDir)>,
        Vec<(Segment1D, Segment1D)>,
    ) = match sc.build_kind() {
        BuildKind::Edge => (
            Vec::new(),
            Vec::new(),
            sc.edge_targets
                .iter()
                .map(|t| {
                    Ok((
                        Segment1D::new(t.omega[0], t.omega[1])?,
                        Segment1D::new(t.alpha[0], t.alpha[1])?,
                    ))
                })
                .collect::<Result<_>>()?,
        ),
        BuildKind::Points => {
            let targets: Vec<PointTarget> = sc
                .point_targets
                .iter()
                .flat_map(|t| {
                    [
                        PointTarget {
                            point: pt(t.omega),
                            edge: 1,
                        },
                        PointTarget {
                            point: pt(t.alpha),
                            edge: -1,
                        },
                    ]
                })
                .collect();
            let placed =
                place_point_targets(&targets, &avoid).map_err(|e| e.in_stage("placement"))?;
            let roles = (0..m)
                .flat_map(|n| [(n, LimitDir::Omega), (n, LimitDir::Alpha)])
                .collect();
            (
                placed.into_iter().map(|c| c.hutch).collect(),
                roles,
                Vec::new(),
            )
        }
        BuildKind::Trees => {
            let arcs: Vec<(Segment1D, Segment1D)> = sc
                .edge_targets
                .iter()
                .map(|t| {
                    Ok((
                        Segment1D::new(t.omega[0], t.omega[1])?,
                        Segment1D::new(t.alpha[0], t.alpha[1])?,
                    ))
                })
                .collect::<Result<_>>()?;
            let e = arcs.len();
            let trees: Vec<(usize, LimitDir, crate::geometry::PLTree)> = sc
                .tree_targets
                .iter()
                .enumerate()
                .flat_map(|(k, t)| {
                    [
                        (e + k, LimitDir::Omega, t.omega.tree()),
                        (e + k, LimitDir::Alpha, t.alpha.tree()),
                    ]
                })
                .collect();
            let mut hutches = Vec::new();
            let mut roles = Vec::new();
            for (i, (n, dir, tree)) in trees.iter().enumerate() {
                let others: Vec<PlanarPoint> = trees
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .flat_map(|(_, t)| t.2.sample(0.005))
                    .collect();
                let clear = others
                    .iter()
                    .map(|&o| tree.distance_to(o))
                    .fold(f64::INFINITY, f64::min);
                let margin = (0.3 * clear).min(0.08);
                let edge = if *dir == LimitDir::Omega { 1 } else { -1 };
                let h = place_tree_target(tree, edge, &others, margin)
                    .map_err(|e| e.in_stage("placement"))?;
                hutches.push(h);
                roles.push((*n, *dir));
            }
            (hutches, roles, arcs)
        }
        BuildKind::Annulus => unreachable!(),
    };
    provenance.insert("hutches".to_string(), json_sha(&hutches));
    let members = build_members(hutches, mesh_h).map_err(|e| e.in_stage("permeation"))?;
    let xi = Arc::new(build_compositive("xi", members).map_err(|e| e.in_stage("permeation"))?);

    // rising map with the pulled-back arcs as edge targets
    let mut families: Vec<FamilySpec> = edge_families
        .iter()
        .map(|&(omega, alpha)| FamilySpec {
            bands: Vec::new(),
            omega,
            alpha,
        })
        .collect();
    families.resize(
        m,
        FamilySpec {
            bands: Vec::new(),
            omega: Segment1D { lo: 0.0, hi: 0.0 },
            alpha: Segment1D { lo: 0.0, hi: 0.0 },
        },
    );
    for (member, &(n, dir)) in xi.members.iter().zip(&roles) {
        let arc = inner_arc(member).map_err(|e| e.in_stage("permeation"))?;
        match dir {
            LimitDir::Omega => families[n].omega = arc,
            LimitDir::Alpha => families[n].alpha = arc,
        }
    }
    for (n, &(omega, alpha)) in edge_families.iter().enumerate() {
        for member in &xi.members {
            let base = member.hutch.base;
            let arc = if member.hutch.hanging.edge > 0 {
                omega
            } else {
                alpha
            };
            if arc.lo <= base.hi && base.lo <= arc.hi {
                return Err(
                    Error::Placement(format!("edge arc of family {n} meets a hutch base"))
                        .in_stage("placement"),
                );
            }
        }
    }
    // steering V prefixes onto family fibers; the comb is refined until every
    // stage finds a fiber within its displacement bound
    let (steered, skipped) =
        steered_w_points(&en, &xi, k_stages).map_err(|e| e.in_stage("steering"))?;
    let sources: Vec<PlanarPoint> = steered.iter().map(|p| p.v).collect();
    let labels: Vec<usize> = steered.iter().map(|p| p.family).collect();
    provenance.insert("steering_sources".to_string(), json_sha(&sources));
    let budget = sc.steering.budget()?;
    let r = &sc.rising;
    let mut periods = r.periods;
    let (spec, rising, steering) = loop {
        let spec = RisingSpec {
            families: families.clone(),
            layout: BandLayout::Comb {
                periods,
                gap_fraction: r.gap_fraction,
            },
            contraction: r.contraction,
            margin: r.margin,
            gap_min: r.gap_min,
            decay: r.decay,
            shoulder: r.shoulder,
        };
        let rising = Arc::new(build_rising(&spec).map_err(|e| e.in_stage("rising"))?);
        match build_steering(
            &sources,
            &labels,
            &FiberTargets(rising.clone()),
            &budget,
            sc.steering.scan_cap,
        ) {
            Ok(st) => break (spec, rising, st),
            Err(Error::EnumerationDepth { stage, .. }) if periods < MAX_PERIODS => {
                log::info!(
                    "steering stage {stage} found no fiber with {periods} comb periods; refining"
                );
                periods *= 4;
            }
            Err(e) => return Err(e.in_stage("steering")),
        }
    };
    provenance.insert("rising_spec".to_string(), json_sha(&spec));

    let f = MapExpr::Fibered(rising.clone()).shared();
    let h = steering.map.clone();
    let phi = MapExpr::conjugate(MapExpr::inverse_of(h.clone()).shared(), f.clone()).shared();
    let psi = if xi.members.is_empty() {
        phi.clone()
    } else {
        MapExpr::conjugate(MapExpr::Permeating(xi.clone()).shared(), phi.clone()).shared()
    };
    Ok(PipelineArtifacts {
        scenario: sc.clone(),
        enumeration: Some(en),
        rising_spec: Some(spec),
        rising: Some(rising),
        steering: Some(steering),
        xi,
        member_roles: roles,
        steered,
        skipped,
        f,
        h,
        phi,
        psi,
        provenance,
    })
}
