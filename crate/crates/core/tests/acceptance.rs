//! Acceptance criteria 1 to 11. Prints one line per criterion and exits nonzero
//! if any criterion fails.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use omega_square::analysis::{
    entropy_growth_estimate, estimate_limit_set, nonwandering_fixed_check, sensitivity_certificate,
    CertificateParams, LimitDir,
};
use omega_square::enumerate::PointEnumeration;
use omega_square::expr::{bilipschitz_estimate, MapExpr};
use omega_square::geometry::{
    euclidean_distance, hausdorff_distance, PLTree, PlanarPoint, PointCloud, PolygonDisc, Segment1D,
};
use omega_square::interval::f01;
use omega_square::permeation::{build_tree_permeating, check_axioms, HangingSet, Hutch};
use omega_square::rising::{build_rising, BandLayout, FamilySpec, RisingSpec};
use omega_square::scenario::plane::{extend_to_plane, to_plane};
use omega_square::scenario::report::{certify, fixed_set_samples, limit_checks};
use omega_square::scenario::{run_pipeline, PipelineArtifacts, Scenario};
use omega_square::steering::{build_steering, verify_steering, EnumeratedTargets, SteeringBudget};

type Outcome = omega_square::Result<(bool, String)>;

fn scenario(name: &str) -> Scenario {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    Scenario::load(&p).expect("reference scenario")
}

fn p(r: f64, s: f64) -> PlanarPoint {
    PlanarPoint::new(r, s)
}

fn c1() -> Outcome {
    let mut ok = true;
    for k in 0..=1000 {
        let s = k as f64 / 1000.0;
        ok &= f01(s) == (s + 1.0) / 2.0;
        let s = -0.5 + 0.5 * k as f64 / 1001.0;
        ok &= f01(s) == s + 0.5;
        let s = -1.0 + 0.5 * k as f64 / 1001.0;
        ok &= f01(s) == 2.0 * s + 1.0;
    }
    let mut x = 0.0;
    let mut ladder = true;
    for n in 1..=40 {
        x = f01(x);
        ladder &= x.to_bits() == (1.0 - 2f64.powi(-n)).to_bits();
    }
    Ok((
        ok && ladder,
        format!("branches exact: {ok}; f01^n(0) = 1 - 2^-n bitwise for n <= 40: {ladder}"),
    ))
}

fn c2() -> Outcome {
    let fam = |o: f64, a: f64| FamilySpec {
        bands: vec![],
        omega: Segment1D { lo: o, hi: o },
        alpha: Segment1D { lo: a, hi: a },
    };
    let spec = RisingSpec::new(
        vec![fam(-0.5, 0.4), fam(0.0, -0.3), fam(0.5, 0.1)],
        BandLayout::Comb {
            periods: 128,
            gap_fraction: 0.1,
        },
    );
    let f = MapExpr::Fibered(Arc::new(build_rising(&spec)?));
    let rng_pts = PointEnumeration::new(99, 1);
    let mut fiber = true;
    for k in 0..1000 {
        let x = rng_pts.point(k);
        fiber &= f.forward(x)?.s == f01(x.s);
    }
    let mut boundary = true;
    for k in 0..250 {
        let t = -1.0 + 2.0 * k as f64 / 249.0;
        for x in [p(t, 1.0), p(t, -1.0), p(1.0, t), p(-1.0, t)] {
            let y = f.forward(x)?;
            boundary &= y == PlanarPoint::new(x.r, f01(x.s));
        }
    }
    Ok((fiber && boundary, format!("fiber ordinates exact on 1000 samples: {fiber}; f = f02 on 1000 boundary samples: {boundary}")))
}

fn c3() -> Outcome {
    let budget = SteeringBudget::linear(2.0, 0.2, 64)?;
    let w = EnumeratedTargets(PointEnumeration::new(1, 3));
    let src = PointEnumeration::new(2, 3);
    let sources: Vec<PlanarPoint> = (0..64).map(|k| src.point(k)).collect();
    let labels: Vec<usize> = (0..64).map(|k| k % 3).collect();
    let st = build_steering(&sources, &labels, &w, &budget, 1_000_000)?;
    let rep = verify_steering(&st.map, &st.stages, &w, &budget, 100, 10_000, 3)?;
    let lip = bilipschitz_estimate(&st.map, 10_000, 4)?;
    let pass = rep.membership
        && rep.boundary_identity
        && rep.sup_displacement < 0.2
        && rep.empirical_lambda < 2.0
        && lip < 2.0;
    Ok((
        pass,
        format!(
            "membership {}; boundary identity {}; sup displacement {:.3e} < 0.2; empirical lambda {:.4} < 2",
            rep.membership, rep.boundary_identity, rep.sup_displacement, rep.empirical_lambda.max(lip)
        ),
    ))
}

fn star_hutch() -> omega_square::Result<Hutch> {
    let v = vec![
        p(0.0, 1.0),
        p(0.0, 0.7),
        p(-0.15, 0.55),
        p(0.0, 0.5),
        p(0.15, 0.55),
    ];
    let tree = PLTree::new(v, vec![(0, 1), (1, 2), (1, 3), (1, 4)]);
    let disc = PolygonDisc::rect(p(-0.4, 0.3), p(0.4, 1.0))?;
    Hutch::new(disc, HangingSet::attached(1, tree, 0))
}

fn c4() -> Outcome {
    let coarse = check_axioms(&build_tree_permeating(star_hutch()?, 0.01)?, 10_000, 1)?;
    let fine = check_axioms(&build_tree_permeating(star_hutch()?, 0.005)?, 10_000, 1)?;
    let floor = 1e-12;
    let shrink = coarse
        .discrepancies()
        .iter()
        .zip(fine.discrepancies())
        .all(|(a, b)| (a.1 <= floor && b.1 <= floor) || a.1 >= 1.5 * b.1);
    let pass = coarse.boundary_identity_error == 0.0
        && coarse.marked_hausdorff < 0.01
        && coarse.min_image_separation > 1e-9
        && coarse.min_image_to_hanging > 0.0
        && shrink;
    Ok((
        pass,
        format!(
            "boundary error {}; Hausdorff(eta(A'), T) {:.2e}; min image separation {:.2e}; min d(image, X) {:.2e}; coverage gap {:.2e} -> {:.2e}; shrink {}",
            coarse.boundary_identity_error,
            coarse.marked_hausdorff,
            coarse.min_image_separation,
            coarse.min_image_to_hanging,
            coarse.coverage_gap,
            fine.coverage_gap,
            shrink
        ),
    ))
}

fn twenty_points(arts: &PipelineArtifacts) -> Vec<PlanarPoint> {
    let m = arts.family_count();
    let mut out: Vec<PlanarPoint> = (0..m)
        .flat_map(|n| arts.tested_points(n, 20 / m + 1))
        .collect();
    out.truncate(20);
    out
}

fn c5(arts: &PipelineArtifacts) -> Outcome {
    let xi = MapExpr::Permeating(arts.xi.clone());
    let pts = twenty_points(arts);
    let mut worst: f64 = 0.0;
    for &w in &pts {
        let routed = arts.psi.orbit(w, 0, 1000)?;
        let v = arts.xi.inverse_raw(w)?;
        let inner = arts.phi.orbit(v, 0, 1000)?;
        for (a, b) in routed.points.iter().zip(&inner.points) {
            worst = worst.max(euclidean_distance(*a, xi.forward(*b)?));
        }
    }
    let a = &arts.scenario.analysis;
    let mut transport: f64 = 0.0;
    let en = PointEnumeration::new(1234, 1);
    for k in 0..20 {
        let x = en.point(k);
        let lhs = estimate_limit_set(
            &arts.psi,
            xi.forward(x)?,
            LimitDir::Omega,
            a.burn_in,
            a.window,
        )?;
        let rhs = estimate_limit_set(&arts.phi, x, LimitDir::Omega, a.burn_in, a.window)?;
        let img = PointCloud::new(
            rhs.cloud
                .points
                .iter()
                .map(|&q| xi.forward(q))
                .collect::<omega_square::Result<_>>()?,
        );
        transport = transport.max(hausdorff_distance(&lhs.cloud, &img)?);
    }
    Ok((
        worst <= 1e-7 && transport < 0.02,
        format!("power identity max error {worst:.2e} <= 1e-7 (20 points x 1000 steps); limit transport {transport:.2e} < 0.02"),
    ))
}

fn c6(arts: &PipelineArtifacts) -> Outcome {
    let (checks, _) = limit_checks(arts, 10)?;
    let worst_o = checks
        .iter()
        .filter(|c| c.dir == LimitDir::Omega)
        .map(|c| c.hausdorff)
        .fold(0.0, f64::max);
    let worst_a = checks
        .iter()
        .filter(|c| c.dir == LimitDir::Alpha)
        .map(|c| c.hausdorff)
        .fold(0.0, f64::max);
    let pass = checks.len() == 60 && worst_o < 0.05 && worst_a < 0.05;
    Ok((
        pass,
        format!(
            "{} estimates; worst omega {worst_o:.2e}, worst alpha {worst_a:.2e} < 0.05",
            checks.len()
        ),
    ))
}

fn c7(arts: &PipelineArtifacts) -> Outcome {
    let cert = certify(arts)?;
    Ok((
        cert.pass && cert.centers.len() == 25,
        format!(
            "order {}, c = {:.3}, radius {}; {} centers; worst separation {:.3}",
            cert.params.order,
            cert.params.separation,
            cert.params.radius,
            cert.centers.len(),
            cert.worst_separation
        ),
    ))
}

fn c8(arts: &PipelineArtifacts) -> Outcome {
    let nw = nonwandering_fixed_check(&arts.psi, &fixed_set_samples(arts, 1000, 8))?;
    let ent = entropy_growth_estimate(&arts.psi, 0.05, 20, 100)?;
    Ok((
        nw.max_displacement == 0.0 && ent.slope < 0.05,
        format!("fixed-set max displacement {:.1e} on 1000 samples; heuristic growth slope {:.4} < 0.05", nw.max_displacement, ent.slope),
    ))
}

fn c9() -> Outcome {
    let arts = run_pipeline(&scenario("annulus.toml"))?;
    let mut wide = CertificateParams::new(3, 0.1, 0.34, vec![LimitDir::Omega]);
    wide.samples = 60;
    wide.burn_in = 1000;
    wide.window = 1000;
    let full = sensitivity_certificate(&arts.psi, &[p(0.55, 0.0)], &wide)?;
    let mut local = CertificateParams::new(2, 0.1, 0.01, vec![LimitDir::Omega]);
    local.samples = 30;
    local.burn_in = 1000;
    local.window = 1000;
    let centers: Vec<PlanarPoint> = (0..5)
        .flat_map(|i| {
            (0..5).map(move |j| {
                (
                    0.3 + 0.12 * i as f64,
                    std::f64::consts::TAU * j as f64 / 5.0,
                )
            })
        })
        .map(|(rho, a)| p(rho * a.cos(), rho * a.sin()))
        .collect();
    let near = sensitivity_certificate(&arts.psi, &centers, &local)?;
    let all_fail = near.centers.iter().all(|c| !c.pass);
    let best_local = near.centers.iter().map(|c| c.achieved).fold(0.0, f64::max);
    Ok((
        full.pass && all_fail,
        format!(
            "full-annulus n=3 search separation {:.3} >= 0.1: {}; local searches (c = 0.1, radius 0.01) best {:.3}, all fail: {all_fail}",
            full.worst_separation, full.pass, best_local
        ),
    ))
}

fn c10() -> Outcome {
    let sc = scenario("one_tree.toml");
    let arts = run_pipeline(&sc)?;
    let tree = PointCloud::new(sc.tree_targets[0].omega.tree().sample(0.002));
    let a = &sc.analysis;
    let pts = arts.tested_points(sc.edge_targets.len(), 10);
    let mut worst: f64 = 0.0;
    for &w in &pts {
        let est = estimate_limit_set(&arts.psi, w, LimitDir::Omega, a.burn_in, a.window)?;
        worst = worst.max(hausdorff_distance(&est.cloud, &tree)?);
    }
    Ok((
        pts.len() == 10 && worst < 0.05,
        format!(
            "{} W points; worst Hausdorff to the tree {worst:.2e} < 0.05",
            pts.len()
        ),
    ))
}

fn c11(arts: &PipelineArtifacts) -> Outcome {
    let f = extend_to_plane(arts.psi.clone());
    let mut worst: f64 = 0.0;
    let pts = twenty_points(arts);
    for &w in &pts {
        let plane = f.orbit(to_plane(w)?, 0, 100)?;
        let square = arts.psi.orbit(w, 0, 100)?;
        for (z, q) in plane.iter().zip(&square.points) {
            let hq = to_plane(*q)?;
            worst = worst.max((z[0] - hq[0]).abs().max((z[1] - hq[1]).abs()));
        }
    }
    Ok((
        worst <= 1e-9,
        format!(
            "{} points x 100 steps; max |F^k(H w) - H(psi^k w)| = {worst:.2e}",
            pts.len()
        ),
    ))
}

fn main() {
    let base = Arc::new(run_pipeline(&scenario("three_points.toml")).expect("reference pipeline"));
    type Job = Box<dyn Fn() -> Outcome>;
    let b = |f: fn(&PipelineArtifacts) -> Outcome| -> Job {
        let a = base.clone();
        Box::new(move || f(&a))
    };
    let jobs: Vec<(u8, &str, f64, Job)> = vec![
        (1, "base-map exactness", 1.0, Box::new(c1)),
        (2, "normally rising contract", 1.0, Box::new(c2)),
        (3, "steering suite", 30.0, Box::new(c3)),
        (4, "permeating axioms", 60.0, Box::new(c4)),
        (5, "conjugation transport", 60.0, b(c5)),
        (6, "three-family limit sets", 300.0, b(c6)),
        (7, "(omega, alpha, 3)-sensitivity certificate", 600.0, b(c7)),
        (8, "zero-entropy consistency", 300.0, b(c8)),
        (9, "negative control", 120.0, Box::new(c9)),
        (10, "tree-limit scenario", 300.0, Box::new(c10)),
        (11, "plane extension", 10.0, b(c11)),
    ];
    let mut failed = 0;
    for (id, name, budget, job) in jobs {
        let t = Instant::now();
        let res = job();
        let secs = t.elapsed().as_secs_f64();
        let (ok, detail) = match res {
            Ok((ok, d)) => (ok && secs < budget, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} [{}] {name}: {detail} ({secs:.2} s, budget {budget} s)",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
