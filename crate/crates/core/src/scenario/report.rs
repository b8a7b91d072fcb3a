//! Analysis drivers and report files.
//!
//! Every file written here is a pure function of the scenario and its seeds.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BuildKind, PipelineArtifacts};
use crate::analysis::{
    entropy_growth_estimate, estimate_limit_set, nonwandering_fixed_check, sensitivity_certificate,
    CertificateParams, EntropyEstimate, LimitDir, LimitSetEstimate, NonwanderingReport,
    SensitivityCertificate,
};
use crate::error::{Error, Result};
use crate::geometry::{hausdorff_distance, PlanarPoint, PointCloud};
use crate::permeation::{check_axioms, AxiomReport};
use crate::steering::{verify_steering, FiberTargets, SteeringReport};

/// Stated in every report: finite families stand in for countable ones.
pub const FINITE_NOTE: &str =
    "finite instance: finitely many families, targets and enumerated points; \
countable families with vanishing hutch diameters are not represented";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub family: usize,
    pub dir: LimitDir,
    pub base: PlanarPoint,
    pub hausdorff: f64,
    pub diagnostic: f64,
    pub centroid: PlanarPoint,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildSummary {
    pub name: String,
    pub mode: super::Mode,
    pub families: usize,
    pub hutch_diameters: Vec<f64>,
    pub mesh_h: f64,
    pub steering_stages: usize,
    pub steering_residual: Option<f64>,
    pub skipped_w_points: Vec<u64>,
    pub provenance: std::collections::BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub note: String,
    pub build: BuildSummary,
    pub tolerance: f64,
    pub limits: Vec<LimitCheck>,
    pub limits_pass: bool,
    pub steering: Option<SteeringReport>,
    pub permeation: Vec<AxiomReport>,
    pub nonwandering: Option<NonwanderingReport>,
    /// Heuristic separated-set growth trend, not an entropy value.
    pub entropy: Option<EntropyEstimate>,
    pub pass: bool,
}

pub fn build_summary(arts: &PipelineArtifacts) -> BuildSummary {
    let sc = &arts.scenario;
    BuildSummary {
        name: sc.name.clone(),
        mode: sc.mode,
        families: sc.family_count(),
        hutch_diameters: arts.xi.diameters(),
        mesh_h: sc.permeation.mesh_h,
        steering_stages: arts.steering.as_ref().map_or(0, |s| s.stages.len()),
        steering_residual: arts.steering.as_ref().map(|s| s.residual),
        skipped_w_points: arts.skipped.clone(),
        provenance: arts.provenance.clone(),
    }
}

/// Limit estimates of the tested W points against the declared targets.
pub fn limit_checks(
    arts: &PipelineArtifacts,
    per_family: usize,
) -> Result<(Vec<LimitCheck>, Vec<LimitSetEstimate>)> {
    let sc = &arts.scenario;
    let a = &sc.analysis;
    let mut jobs = Vec::new();
    for n in 0..sc.family_count() {
        let (om, al) = sc
            .declared_targets(n, 0.002)
            .ok_or_else(|| Error::InvalidInput(format!("family {n} has no targets")))?;
        for w in arts.tested_points(n, per_family) {
            jobs.push((n, LimitDir::Omega, w, om.clone()));
            jobs.push((n, LimitDir::Alpha, w, al.clone()));
        }
    }
    let out: Vec<(LimitCheck, LimitSetEstimate)> = jobs
        .par_iter()
        .map(|(n, dir, w, target)| {
            let est = estimate_limit_set(&arts.psi, *w, *dir, a.burn_in, a.window)?;
            let d = hausdorff_distance(&est.cloud, target)?;
            Ok((
                LimitCheck {
                    family: *n,
                    dir: *dir,
                    base: *w,
                    hausdorff: d,
                    diagnostic: est.diagnostic,
                    centroid: est.cloud.centroid().unwrap_or(*w),
                    pass: d < a.tolerance,
                },
                est,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().unzip())
}

/// Samples of the top and bottom edges and of every hanging set.
pub fn fixed_set_samples(arts: &PipelineArtifacts, count: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trees: Vec<Vec<PlanarPoint>> = arts
        .xi
        .members
        .iter()
        .map(|m| m.hutch.hanging.tree.sample(1e-3))
        .collect();
    let mut pts = Vec::with_capacity(count);
    for i in 0..count {
        let p = match (i % 3, trees.is_empty()) {
            (0, _) | (2, true) => PlanarPoint::new(rng.gen_range(-1.0..=1.0), 1.0),
            (1, _) => PlanarPoint::new(rng.gen_range(-1.0..=1.0), -1.0),
            _ => {
                let t = &trees[rng.gen_range(0..trees.len())];
                t[rng.gen_range(0..t.len())]
            }
        };
        pts.push(p);
    }
    PointCloud::new(pts)
}

pub fn analyze(arts: &PipelineArtifacts) -> Result<(AnalysisReport, Vec<LimitSetEstimate>)> {
    let sc = &arts.scenario;
    let a = &sc.analysis;
    let (limits, clouds) = if sc.build_kind() == BuildKind::Annulus {
        (Vec::new(), Vec::new())
    } else {
        limit_checks(arts, a.tested_per_family)?
    };
    let limits_pass = limits.iter().all(|c| c.pass);
    let steering = match (&arts.steering, &arts.rising) {
        (Some(st), Some(f)) => Some(verify_steering(
            &arts.h,
            &st.stages,
            &FiberTargets(f.clone()),
            &st.budget,
            100,
            10_000,
            sc.seed,
        )?),
        _ => None,
    };
    let permeation: Vec<AxiomReport> = arts
        .xi
        .members
        .par_iter()
        .enumerate()
        .map(|(i, m)| check_axioms(m, 10_000, sc.seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    let nonwandering = if sc.build_kind() == BuildKind::Annulus || a.nonwandering_samples == 0 {
        None
    } else {
        Some(nonwandering_fixed_check(
            &arts.psi,
            &fixed_set_samples(arts, a.nonwandering_samples, sc.seed),
        )?)
    };
    let entropy = match &a.entropy {
        Some(e) => Some(entropy_growth_estimate(
            &arts.psi, e.epsilon, e.n_max, e.grid,
        )?),
        None => None,
    };
    let pass = limits_pass
        && steering.as_ref().is_none_or(|s| s.pass)
        && permeation.iter().all(|r| r.passes(1e-9))
        && nonwandering.as_ref().is_none_or(|n| n.pass)
        && entropy.as_ref().is_none_or(|e| e.slope < 0.05);
    Ok((
        AnalysisReport {
            note: FINITE_NOTE.to_string(),
            build: build_summary(arts),
            tolerance: a.tolerance,
            limits,
            limits_pass,
            steering,
            permeation,
            nonwandering,
            entropy,
            pass,
        },
        clouds,
    ))
}

/// Runs the configured sensitivity certificate.
pub fn certify(arts: &PipelineArtifacts) -> Result<SensitivityCertificate> {
    let sc = &arts.scenario;
    let cfg = sc.analysis.certificate.clone().unwrap_or_default();
    let separation = match cfg.separation {
        Some(c) => c,
        None => {
            cfg.separation_factor
                * sc.min_target_separation().ok_or_else(|| {
                    Error::InvalidInput(
                        "certificate needs two families or an explicit separation".into(),
                    )
                })?
        }
    };
    let params = CertificateParams {
        order: cfg.order,
        separation,
        radius: cfg.radius,
        dirs: cfg.dirs.clone(),
        samples: cfg.samples,
        burn_in: sc.analysis.burn_in,
        window: sc.analysis.window,
        seed: sc.seed,
    };
    sensitivity_certificate(&arts.psi, &cfg.centers(), &params)
}

fn write(dir: &Path, name: &str, body: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, body)?;
    out.push(p);
    Ok(())
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Serde(e.to_string()))
}

/// `step,r,s` rows.
pub fn orbit_csv(steps: impl IntoIterator<Item = i64>, points: &[PlanarPoint]) -> String {
    let mut s = String::from("step,r,s\n");
    for (k, p) in steps.into_iter().zip(points) {
        let _ = writeln!(s, "{k},{:.17e},{:.17e}", p.r, p.s);
    }
    s
}

fn polylines_csv(arts: &PipelineArtifacts) -> String {
    // consecutive rows sharing an id form one polyline
    let mut s = String::from("id,kind,member,r,s\n");
    let mut id = 0;
    for (i, m) in arts.xi.members.iter().enumerate() {
        let b = &m.hutch.disc.boundary;
        for p in b.iter().chain(b.first()) {
            let _ = writeln!(s, "{id},hutch,{i},{:.17e},{:.17e}", p.r, p.s);
        }
        id += 1;
        let t = &m.hutch.hanging;
        for &(a, c) in &t.tree.edges {
            let cable =
                !t.floating.is_empty() && !(t.floating.contains(&a) && t.floating.contains(&c));
            let kind = if cable { "cable" } else { "tree" };
            for p in [t.tree.vertices[a], t.tree.vertices[c]] {
                let _ = writeln!(s, "{id},{kind},{i},{:.17e},{:.17e}", p.r, p.s);
            }
            id += 1;
        }
    }
    s
}

/// Writes build summaries and, when given, analysis and certificate reports.
pub fn emit_reports(
    arts: &PipelineArtifacts,
    analysis: Option<(&AnalysisReport, &[LimitSetEstimate])>,
    cert: Option<&SensitivityCertificate>,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    #[derive(Serialize)]
    struct Summary<'a> {
        note: &'a str,
        build: BuildSummary,
    }
    write(
        dir,
        "build.json",
        &json(&Summary {
            note: FINITE_NOTE,
            build: build_summary(arts),
        })?,
        &mut out,
    )?;
    if !arts.xi.members.is_empty() {
        write(dir, "geometry.csv", &polylines_csv(arts), &mut out)?;
    }
    if let Some(st) = &arts.steering {
        write(dir, "steering_stages.json", &json(&st.stages)?, &mut out)?;
    }
    let a = &arts.scenario.analysis;
    for (i, z) in a.trace_points.iter().enumerate() {
        let tr = arts
            .psi
            .orbit(PlanarPoint::new(z[0], z[1]), 0, a.trace_steps as i64)?;
        write(
            dir,
            &format!("orbit_{i:03}.csv"),
            &orbit_csv(tr.n0..=tr.n1, &tr.points),
            &mut out,
        )?;
    }
    if let Some((rep, clouds)) = analysis {
        write(dir, "analysis.json", &json(rep)?, &mut out)?;
        for (c, est) in rep.limits.iter().zip(clouds) {
            let tag = match c.dir {
                LimitDir::Omega => "omega",
                LimitDir::Alpha => "alpha",
            };
            let k = rep
                .limits
                .iter()
                .take_while(|x| !std::ptr::eq(*x, c))
                .filter(|x| x.family == c.family && x.dir == c.dir)
                .count();
            let steps: Vec<i64> = (0..est.window as i64)
                .map(|j| match c.dir {
                    LimitDir::Omega => est.burn_in as i64 + j,
                    LimitDir::Alpha => -(est.burn_in as i64 + j),
                })
                .collect();
            write(
                dir,
                &format!("limit_f{}_{tag}_{k:02}.csv", c.family),
                &orbit_csv(steps, &est.cloud.points),
                &mut out,
            )?;
        }
    }
    if let Some(c) = cert {
        write(dir, "certificate.json", &json(c)?, &mut out)?;
    }
    Ok(out)
}
