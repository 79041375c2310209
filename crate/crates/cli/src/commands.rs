use std::sync::Arc;

use conewalk::harmonic::{build_h_detailed, check_positive, HarmonicSpec};
use conewalk::monte_carlo::{
    absorption_curve, martin_ratio_experiment, nearest_interior_point, overshoot_moment, MCEstimate, McOptions,
    RngSpec, DEFAULT_HORIZON, UNIT_MOVES,
};
use conewalk::solver::harmonicity_residual;
use conewalk::step_law::{Aperiodicity, DEFAULT_A2_RADIUS};
use conewalk::tilt::{boundary_polyline, gamma_arc, BOUNDARY_TOL};
use conewalk::verify::{run_criterion, VerifyOptions, CRITERIA};
use conewalk::{a_of, q_of, BoundaryStatus, LatticePoint, TruncatedDomain, Vec2, Wall};

use crate::config::ModelConfig;
use crate::output::{header, table, Output};
use crate::{Cli, Command, Failure};

pub fn parse_vec2(s: &str) -> Result<Vec2, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok(Vec2::new(num(x)?, num(y)?))
}

pub fn parse_point(s: &str) -> Result<LatticePoint, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("`{t}`: {e}"));
    Ok(LatticePoint::new(num(x)?, num(y)?))
}

pub fn parse_wall(s: &str) -> Result<Wall, String> {
    match s {
        "c1" | "1" => Ok(Wall::First),
        "c2" | "2" => Ok(Wall::Second),
        _ => Err(format!("expected `c1` or `c2`, got `{s}`")),
    }
}

fn e(v: f64) -> String {
    format!("{v:e}")
}

fn wall_label(w: Wall) -> &'static str {
    match w {
        Wall::First => "c1",
        Wall::Second => "c2",
    }
}

pub fn run(cli: &Cli, config: &ModelConfig) -> Result<(), Failure> {
    let say = |line: &str| {
        if !cli.quiet {
            println!("{line}");
        }
    };
    let out = Output::new(&cli.out).map_err(|err| Failure::Io(format!("{}: {err}", cli.out.display())))?;
    let (law, cone) = (&config.law, &config.cone);

    match &cli.command {
        Command::Validate => {
            let report = conewalk::validate(law, cone, DEFAULT_A2_RADIUS);
            let verdict = |ok: bool| if ok { "pass" } else { "fail" }.to_string();
            let mut rows = vec![
                vec!["drift_nonzero".into(), verdict(report.drift_nonzero), format!("drift {}", report.drift)],
                vec!["generates_lattice".into(), verdict(report.generates_lattice), String::new()],
                vec!["spans_plane".into(), verdict(report.spans_plane), String::new()],
                vec![
                    "killed_irreducible".into(),
                    verdict(report.killed_irreducible),
                    format!("box radius {}", report.a2_box_radius),
                ],
            ];
            for (i, ap) in report.aperiodicity.iter().enumerate() {
                let (status, detail) = match ap {
                    Aperiodicity::Aperiodic => ("pass", String::new()),
                    Aperiodicity::Periodic { period } => ("warn", format!("period {period}")),
                    Aperiodicity::NotCheckable => ("warn", "irrational normal, not checkable".into()),
                };
                rows.push(vec![format!("aperiodic_f{}", i + 1), status.into(), detail]);
            }
            for w in &report.warnings {
                rows.push(vec!["warning".into(), "warn".into(), w.clone()]);
            }
            out.write("validate.csv", |w| table(w, &header("validate", config), &["check", "status", "detail"], &rows))?;
            for row in &rows {
                let line = format!("{:<20} {:<5} {}", row[0], row[1], row[2]);
                if row[1] == "fail" {
                    println!("{line}");
                } else {
                    say(&line);
                }
            }
            if !report.passes() {
                let hard: Vec<String> = report.failures().into_iter().filter(|f| !f.starts_with("A4")).collect();
                return Err(Failure::Check(hard.join("; ")));
            }
            say("assumptions hold");
        }

        Command::Boundary { points } => {
            if *points < 3 {
                return Err(Failure::Check(format!("--points {points}: need at least 3")));
            }
            let poly = boundary_polyline(law, *points)?;
            let arc = gamma_arc(law, cone)?;
            let mut comments = header("boundary", config);
            for wall in Wall::both() {
                let a = arc.endpoint(wall);
                let q = q_of(a)?;
                comments.push(format!(
                    "gamma {} a={:e},{:e} phi_residual={:e} q_residual={:e}",
                    wall_label(wall),
                    a.a.x,
                    a.a.y,
                    a.phi - 1.0,
                    q.angle_to(cone.c(wall))
                ));
            }
            comments.push(format!("arc_step {:e}", std::f64::consts::TAU / *points as f64));
            let mut worst = 0.0f64;
            let mut rows = Vec::with_capacity(poly.len());
            for (k, (a, q)) in poly.iter().enumerate() {
                let residual = law.phi(a.a)? - 1.0;
                worst = worst.max(residual.abs());
                rows.push(vec![
                    k.to_string(),
                    e(std::f64::consts::TAU * k as f64 / *points as f64),
                    e(q.x),
                    e(q.y),
                    e(a.a.x),
                    e(a.a.y),
                    e(a.phi),
                    e(residual),
                    arc.is_in_gamma(a).to_string(),
                ]);
            }
            let columns = ["index", "angle", "q_x", "q_y", "a_x", "a_y", "phi", "phi_residual", "in_gamma"];
            let path = out.write("boundary.csv", |w| table(w, &comments, &columns, &rows))?;
            say(&format!("{} boundary points, max |phi - 1| = {worst:e}", rows.len()));
            say(&format!("wrote {}", path.display()));
            if worst > BOUNDARY_TOL {
                return Err(Failure::Numerical(format!("boundary residual {worst:e} exceeds {BOUNDARY_TOL:e}")));
            }
        }

        Command::Harmonic { q, endpoint } => {
            let spec = match (q, endpoint) {
                (Some(q), None) => HarmonicSpec::for_direction(law, cone, *q)?,
                (None, Some(w)) => HarmonicSpec::endpoint(law, cone, *w)?,
                _ => return Err(Failure::Check("give one of --q or --endpoint".into())),
            };
            let domain = Arc::new(TruncatedDomain::build(cone, law, config.radius)?);
            let build = build_h_detailed(&spec, &domain, &config.solve_options())?;
            let h = build.h;
            let positivity = check_positive(&h);
            let residual = harmonicity_residual(&h, law);
            let mut comments = header("harmonic", config);
            comments.push(format!(
                "branch {} a={:e},{:e} radius={} states={}",
                spec.branch.label(),
                spec.a.a.x,
                spec.a.a.y,
                config.radius,
                domain.len()
            ));
            comments.extend(h.warnings().iter().map(|w| format!("warning {w}")));
            let name = format!("h_{}.csv", spec.branch.label());
            let path = out.write(&name, |w| h.write_csv(w, &comments))?;
            say(&format!("branch {} a = {}", spec.branch.label(), spec.a.a));
            say(&format!(
                "positivity: {} positive, {} inconclusive, {} negative",
                positivity.positive,
                positivity.inconclusive.len(),
                positivity.violations.len()
            ));
            say(&format!(
                "harmonicity: relative residual {:e} (tolerance {:e})",
                residual.relative,
                conewalk::solver::HARMONICITY_TOL
            ));
            say(&format!("solve residual {:e}, widest scaled bracket {:e}", h.solve_residual(), h.max_width_scaled()));
            for w in h.warnings() {
                say(&format!("warning: {w}"));
            }
            say(&format!("wrote {}", path.display()));
            if !positivity.passes() || !residual.passes {
                return Err(Failure::Check(format!(
                    "h is not positive harmonic: {} negative states, relative residual {:e}",
                    positivity.violations.len(),
                    residual.relative
                )));
            }
        }

        Command::Verify { criteria } => {
            let ids: Vec<&str> = if criteria.is_empty() {
                CRITERIA.to_vec()
            } else {
                criteria.iter().map(String::as_str).collect()
            };
            let mut opts = VerifyOptions { seed: config.seed, ..VerifyOptions::default() };
            if let Some(n) = cli.samples {
                opts.mc_samples = n;
            }
            let models = [config.model()];
            let mut rows = Vec::new();
            let mut failed = Vec::new();
            for id in ids {
                let r = run_criterion(id, &models, &opts)?;
                if r.passed {
                    say(&r.line());
                } else {
                    println!("{}", r.line());
                    failed.push(r.id);
                }
                for d in &r.details {
                    say(&format!("      {d}"));
                }
                rows.push(vec![r.id.to_string(), r.name.to_string(), r.passed.to_string(), r.details.join(" | ")]);
            }
            let mut comments = header("verify", config);
            comments.push(format!("mc_samples {}", opts.mc_samples));
            out.write("verify.csv", |w| table(w, &comments, &["id", "name", "passed", "details"], &rows))?;
            if !failed.is_empty() {
                return Err(Failure::Check(format!("criteria failed: {}", failed.join(", "))));
            }
        }

        Command::Martin { q, radii, probes, z_ref } => {
            let q = match q {
                Some(q) => *q,
                None => gamma_arc(law, cone)?.direction_at(0.5),
            };
            let z_ref = match z_ref {
                Some(z) => *z,
                None => nearest_interior_point(cone, q, 3.0)
                    .ok_or_else(|| Failure::Check(format!("no interior point near 3q for q = {q}")))?,
            };
            let probes = match probes {
                Some(p) => p.clone(),
                None => UNIT_MOVES
                    .iter()
                    .map(|m| LatticePoint::new(z_ref.x + m.x, z_ref.y + m.y))
                    .filter(|z| cone.which_boundary(*z) == BoundaryStatus::None)
                    .collect(),
            };
            let table_ =
                martin_ratio_experiment(law, cone, q, radii, &probes, z_ref, config.radius, &config.solve_options())?;
            let mut comments = header("martin", config);
            comments.push(format!("q={:e},{:e} z_ref={},{} radius={}", table_.q.x, table_.q.y, z_ref.x, z_ref.y, config.radius));
            let path = out.write("martin.csv", |w| {
                let mut w = w;
                table_.write_csv(&mut w, &comments)
            })?;
            for row in &table_.rows {
                say(&format!(
                    "r={:<4} z_n={:<10} probe={:<10} M={:.6e} h_ratio={:.6e}{}",
                    row.r,
                    row.z_n.to_string(),
                    row.probe.to_string(),
                    row.m,
                    row.h_ratio,
                    if row.degenerate { " degenerate" } else { "" }
                ));
            }
            say(&format!("wrote {}", path.display()));
        }

        Command::Absorption { tilt, endpoint, start, horizons } => {
            let a = match (tilt, endpoint) {
                (Some(a), None) => *a,
                (None, Some(w)) => a_of(law, cone.c(*w))?.a,
                _ => return Err(Failure::Check("give one of --tilt or --endpoint".into())),
            };
            let horizons = if horizons.is_empty() {
                vec![cli.horizon.unwrap_or(DEFAULT_HORIZON)]
            } else {
                horizons.clone()
            };
            let opts = mc_options(cli, config);
            let curve = absorption_curve(law, cone, a, *start, &horizons, &opts)?;
            let rows: Vec<_> = curve
                .horizons
                .iter()
                .zip(&curve.estimates)
                .map(|(h, est)| estimate_row("absorption", a, *start, *h, est))
                .collect();
            write_estimates(&out, "absorption.csv", "absorption", config, &rows, &say)?;
        }

        Command::Overshoot { wall, start } => {
            let opts = mc_options(cli, config);
            let a = a_of(law, cone.c(*wall))?.a;
            let est = overshoot_moment(law, cone, *wall, *start, &opts)?;
            let rows = vec![estimate_row(&format!("overshoot_{}", wall_label(*wall)), a, *start, opts.horizon, &est)];
            write_estimates(&out, "overshoot.csv", "overshoot", config, &rows, &say)?;
        }
    }
    Ok(())
}

fn mc_options(cli: &Cli, config: &ModelConfig) -> McOptions {
    let defaults = McOptions::default();
    McOptions {
        samples: cli.samples.unwrap_or(defaults.samples),
        horizon: cli.horizon.unwrap_or(defaults.horizon),
        rng: RngSpec::new(config.seed, 0),
        ..defaults
    }
}

const ESTIMATE_COLUMNS: [&str; 10] =
    ["operation", "a_x", "a_y", "start_x", "start_y", "horizon", "mean", "stderr", "n", "truncated_fraction"];

fn estimate_row(operation: &str, a: Vec2, start: LatticePoint, horizon: usize, est: &MCEstimate) -> Vec<String> {
    vec![
        operation.to_string(),
        e(a.x),
        e(a.y),
        start.x.to_string(),
        start.y.to_string(),
        horizon.to_string(),
        e(est.mean),
        e(est.stderr),
        est.n.to_string(),
        e(est.truncated_fraction),
    ]
}

fn write_estimates(
    out: &Output,
    name: &str,
    command: &str,
    config: &ModelConfig,
    rows: &[Vec<String>],
    say: &dyn Fn(&str),
) -> Result<(), Failure> {
    let mut comments = header(command, config);
    comments.push(format!("seed {}", config.seed));
    let path = out.write(name, |w| table(w, &comments, &ESTIMATE_COLUMNS, rows))?;
    for row in rows {
        say(&format!(
            "{} horizon={} mean={} stderr={} n={} truncated={}",
            row[0], row[5], row[6], row[7], row[8], row[9]
        ));
    }
    say(&format!("wrote {}", path.display()));
    Ok(())
}
