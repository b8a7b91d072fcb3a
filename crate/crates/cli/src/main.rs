use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use omega_square::geometry::PlanarPoint;
use omega_square::scenario::plane::{extend_to_plane, to_plane};
use omega_square::scenario::report::{analyze, certify, emit_reports};
use omega_square::scenario::{run_pipeline, validate_scenario, PipelineArtifacts, Scenario};

#[derive(Parser)]
#[command(
    name = "omega-square",
    version,
    about = "Square homeomorphisms with prescribed limit sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    scenario: PathBuf,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Override the W enumeration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the limit-set burn-in N0.
    #[arg(long)]
    burn_in: Option<usize>,
    /// Override the limit-set window N1.
    #[arg(long)]
    window: Option<usize>,
    /// Override the permeation mesh size.
    #[arg(long)]
    mesh_h: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario against the construction's hypotheses.
    Validate { scenario: PathBuf },
    /// Build all maps and write build summaries.
    Build(Common),
    /// Build, then check limit sets, steering, permeation axioms and fixed sets.
    Analyze(Common),
    /// Build, then search for a sensitivity certificate.
    Certify(Common),
    /// Build, then write geometry, orbit traces and serialized maps.
    Export(Common),
    /// Build, then write orbits of the plane extension.
    Plane(Common),
}

fn load(c: &Common) -> Result<Scenario> {
    let mut sc =
        Scenario::load(&c.scenario).with_context(|| format!("reading {}", c.scenario.display()))?;
    if let Some(s) = c.seed {
        sc.seed = s;
    }
    if let Some(n) = c.burn_in {
        sc.analysis.burn_in = n;
    }
    if let Some(n) = c.window {
        sc.analysis.window = n;
    }
    if let Some(h) = c.mesh_h {
        sc.permeation.mesh_h = h;
    }
    Ok(sc)
}

fn build(c: &Common) -> Result<PipelineArtifacts> {
    let sc = load(c)?;
    Ok(run_pipeline(&sc)?)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), body)?;
    Ok(())
}

fn plane_orbits(arts: &PipelineArtifacts, dir: &Path) -> Result<()> {
    let f = extend_to_plane(arts.psi.clone());
    let a = &arts.scenario.analysis;
    let mut bases: Vec<PlanarPoint> = a
        .trace_points
        .iter()
        .map(|z| PlanarPoint::new(z[0], z[1]))
        .collect();
    for n in 0..arts.scenario.family_count() {
        bases.extend(arts.tested_points(n, 1));
    }
    for (i, p) in bases.iter().enumerate() {
        let z = to_plane(*p)?;
        let orbit = f.orbit(z, 0, a.trace_steps as i64)?;
        let mut s = String::from("step,x,y\n");
        for (k, q) in orbit.iter().enumerate() {
            writeln!(s, "{k},{:.17e},{:.17e}", q[0], q[1])?;
        }
        write(dir, &format!("plane_orbit_{i:03}.csv"), &s)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Validate { scenario } => {
            let sc = Scenario::load(&scenario)?;
            let rep = validate_scenario(&sc);
            println!("{}", serde_json::to_string_pretty(&rep)?);
            Ok(rep.is_valid())
        }
        Command::Build(c) => {
            let arts = build(&c)?;
            for p in emit_reports(&arts, None, None, &c.out)? {
                println!("{}", p.display());
            }
            Ok(true)
        }
        Command::Analyze(c) => {
            let arts = build(&c)?;
            let (rep, clouds) = analyze(&arts)?;
            emit_reports(&arts, Some((&rep, &clouds)), None, &c.out)?;
            let failed = rep.limits.iter().filter(|l| !l.pass).count();
            println!(
                "limit checks: {} of {} pass",
                rep.limits.len() - failed,
                rep.limits.len()
            );
            if let Some(s) = &rep.steering {
                println!(
                    "steering: pass={} sup displacement {:.3e}, lambda {:.4}",
                    s.pass, s.sup_displacement, s.empirical_lambda
                );
            }
            for (i, p) in rep.permeation.iter().enumerate() {
                println!(
                    "permeating {i}: pass={} coverage gap {:.3e}",
                    p.passes(1e-9),
                    p.coverage_gap
                );
            }
            if let Some(n) = &rep.nonwandering {
                println!(
                    "fixed-set check: pass={} max displacement {:.3e}",
                    n.pass, n.max_displacement
                );
            }
            if let Some(e) = &rep.entropy {
                println!("separated-set growth slope (heuristic): {:.4}", e.slope);
            }
            println!("overall: {}", if rep.pass { "pass" } else { "FAIL" });
            Ok(rep.pass)
        }
        Command::Certify(c) => {
            let arts = build(&c)?;
            let cert = certify(&arts)?;
            emit_reports(&arts, None, Some(&cert), &c.out)?;
            let worst = &cert.centers[cert.worst_center];
            println!(
                "certificate order {} at c = {:.4}: {} (worst center ({:.3}, {:.3}), separation {:.4})",
                cert.params.order,
                cert.params.separation,
                if cert.pass { "pass" } else { "FAIL" },
                worst.center.r,
                worst.center.s,
                cert.worst_separation
            );
            Ok(cert.pass)
        }
        Command::Export(c) => {
            let arts = build(&c)?;
            emit_reports(&arts, None, None, &c.out)?;
            write(
                &c.out,
                "psi.json",
                &serde_json::to_string(&arts.psi.to_doc())?,
            )?;
            write(&c.out, "xi.json", &serde_json::to_string(&*arts.xi)?)?;
            println!("wrote {}", c.out.display());
            Ok(true)
        }
        Command::Plane(c) => {
            let arts = build(&c)?;
            plane_orbits(&arts, &c.out)?;
            println!("wrote {}", c.out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
