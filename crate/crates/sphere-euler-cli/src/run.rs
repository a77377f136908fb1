//! Execution of a resolved configuration.

use crate::config::{Certification, CommandKind, MapSpec, RunConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphere_euler::blowup;
use sphere_euler::characteristics::{self, fmt17, CharError};
use sphere_euler::euler::pde_residual_detail;
use sphere_euler::field::SolutionField;
use sphere_euler::hodograph::{self, GridRow};
use sphere_euler::invariants;
use sphere_euler::transforms::{self, FrameMap};
use sphere_euler::verify::{self, SuiteReport};
use std::fmt;
use std::fs;
use std::path::PathBuf;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical { subcase: String, message: String },
    Acceptance(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical { .. } => 2,
            Failure::Acceptance(_) => 3,
        }
    }

    fn numerical(subcase: impl Into<String>, err: impl fmt::Display) -> Self {
        Failure::Numerical { subcase: subcase.into(), message: err.to_string() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Numerical { subcase, message } => write!(f, "numerical failure in {subcase}: {message}"),
            Failure::Acceptance(m) => write!(f, "acceptance failure: {m}"),
        }
    }
}

pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
    pub quiet: bool,
}

impl Context {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
        fs::create_dir_all(&self.out).map_err(|e| Failure::Config(format!("cannot create {}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        fs::write(&path, bytes).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn run(command: CommandKind, cfg: &RunConfig, ctx: &Context) -> Result<(), Failure> {
    let comment = format!("config-hash {} seed {}", cfg.hash(), ctx.seed);
    let name = cfg.output_name(command);
    match command {
        CommandKind::Integrate => integrate(cfg, ctx, &name, &comment),
        CommandKind::Invariants => invariant_table(cfg, ctx, &name, &comment),
        CommandKind::Solve => {
            let job = cfg.solve.as_ref().expect("resolved");
            export_field(&job.field, job.t, &job.theta.nodes(), &job.phi.nodes(), &job.certify, "solve", ctx, &name, &comment)
        }
        CommandKind::Blowup => locate_blowup(cfg, ctx, &name, &comment),
        CommandKind::Residual => residual_sample(cfg, ctx, &name, &comment),
        CommandKind::Transform => {
            let job = cfg.transform.as_ref().expect("resolved");
            let mapped = match job.map {
                MapSpec::Frame { direction } => transforms::map_field(FrameMap { direction, omega: job.field.omega }, &job.field),
                MapSpec::Physical { to_physical } => transforms::physical_map(&job.field, to_physical),
            }
            .map_err(|e| Failure::Config(format!("transform: {e}")))?;
            ctx.say(format!("transform: {:?} {:?} -> {:?} {:?}", job.field.regime, job.field.frame, mapped.regime, mapped.frame));
            export_field(&mapped, job.t, &job.theta.nodes(), &job.phi.nodes(), &job.certify, "transform", ctx, &name, &comment)
        }
        CommandKind::VerifyAll => verify_all(cfg, ctx, &name),
    }
}

fn integrate(cfg: &RunConfig, ctx: &Context, name: &str, comment: &str) -> Result<(), Failure> {
    let job = cfg.integrate.as_ref().expect("resolved");
    let (traj, hit) = match characteristics::integrate(job.regime, job.start.state(), job.omega, job.t_end, job.rel_tol, job.abs_tol) {
        Ok(t) => (t, None),
        Err(CharError::BoundaryHit { partial }) => {
            let msg = format!("reached the polar guard band at t = {}", partial.end().t);
            (*partial, Some(Failure::numerical("integrate/pole", msg)))
        }
        Err(e) => return Err(Failure::numerical("integrate/trajectory", e)),
    };
    let series = if job.invariants {
        Some(characteristics::invariant_series(&traj, job.sigma).map_err(|e| Failure::numerical("integrate/invariants", e))?)
    } else {
        None
    };
    let mut buf = Vec::new();
    characteristics::write_csv(&mut buf, &traj, series.as_deref(), Some(comment)).map_err(|e| Failure::numerical("integrate/export", e))?;
    let path = ctx.write(name, &buf)?;
    let end = traj.end();
    ctx.say(format!(
        "integrate: {} states, t = {} .. {}, end theta = {} -> {}",
        traj.states.len(),
        fmt17(traj.start().t),
        fmt17(end.t),
        fmt17(end.theta),
        path.display()
    ));
    if let Some(series) = &series {
        for (n, d) in characteristics::drift_of(series) {
            ctx.say(format!("  drift {n}: {d:.3e}"));
        }
    }
    hit.map_or(Ok(()), Err)
}

fn invariant_table(cfg: &RunConfig, ctx: &Context, name: &str, comment: &str) -> Result<(), Failure> {
    let job = cfg.invariants.as_ref().expect("resolved");
    if job.states.is_empty() {
        return Err(Failure::Config("invariants: no states given".into()));
    }
    let sets = job
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            invariants::integrals_for(job.regime, &s.state(), job.omega, job.sigma, None)
                .map_err(|e| Failure::numerical(format!("invariants/state {i}"), e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut buf = Vec::new();
    let push = |w: &mut csv::Writer<&mut Vec<u8>>, rec: Vec<String>| w.write_record(rec).map_err(|e| Failure::numerical("invariants/export", e));
    buf.extend(format!("# {comment}\n").bytes());
    let mut w = csv::Writer::from_writer(&mut buf);
    let mut header: Vec<String> = ["index", "t", "theta", "phi", "u", "v"].map(String::from).to_vec();
    header.extend(sets[0].names().into_iter().map(String::from));
    push(&mut w, header)?;
    for (i, (s, set)) in job.states.iter().zip(&sets).enumerate() {
        let mut row = vec![i.to_string()];
        row.extend([s.t, s.theta, s.phi, s.u, s.v].map(fmt17));
        row.extend(set.values.iter().map(|&(_, x)| fmt17(x)));
        push(&mut w, row)?;
    }
    w.flush().map_err(|e| Failure::numerical("invariants/export", e))?;
    drop(w);
    let path = ctx.write(name, &buf)?;
    ctx.say(format!("invariants: {} states -> {}", sets.len(), path.display()));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn export_field(
    field: &SolutionField,
    t: f64,
    thetas: &[f64],
    phis: &[f64],
    certify: &Certification,
    label: &str,
    ctx: &Context,
    name: &str,
    comment: &str,
) -> Result<(), Failure> {
    let rows = field.grid(t, thetas, phis);
    let mut buf = Vec::new();
    hodograph::write_grid_csv(&mut buf, &rows, Some(comment)).map_err(|e| Failure::numerical(format!("{label}/export"), e))?;
    let path = ctx.write(name, &buf)?;
    let valid = rows.iter().filter(|r| r.valid).count();
    ctx.say(format!("{label}: {valid} of {} grid nodes valid -> {}", rows.len(), path.display()));
    if valid == 0 {
        return Err(Failure::numerical(format!("{label}/grid"), "no valid grid node"));
    }
    certify_rows(field, t, &rows, certify, label, ctx)
}

/// Scaled PDE residual at randomly chosen valid nodes whose stencil is
/// defined. Scaling by the largest term keeps steep regions near a singular
/// line from failing on truncation error alone.
fn certify_rows(field: &SolutionField, t: f64, rows: &[GridRow], c: &Certification, label: &str, ctx: &Context) -> Result<(), Failure> {
    if c.points == 0 {
        return Ok(());
    }
    let mut valid: Vec<&GridRow> = rows.iter().filter(|r| r.valid).collect();
    valid.shuffle(&mut ChaCha8Rng::seed_from_u64(ctx.seed));
    let (mut checked, mut worst, mut at) = (0, 0.0f64, (0.0, 0.0));
    for r in valid {
        if checked == c.points {
            break;
        }
        let Ok(res) = pde_residual_detail(field, field.regime, t, r.theta, r.phi, c.h) else { continue };
        let e = res.relative();
        if e.is_nan() || e > worst {
            worst = e;
            at = (r.theta, r.phi);
        }
        checked += 1;
    }
    ctx.say(format!("  scaled residual at {checked} nodes: max {worst:.3e}"));
    if worst.is_nan() || worst > c.tol {
        let msg = format!("residual {worst:e} exceeds {:e} at theta = {}, phi = {}", c.tol, at.0, at.1);
        return Err(Failure::numerical(format!("{label}/certification"), msg));
    }
    Ok(())
}

fn locate_blowup(cfg: &RunConfig, ctx: &Context, name: &str, comment: &str) -> Result<(), Failure> {
    let job = cfg.blowup.as_ref().expect("resolved");
    let locus = job.problem.locate(&job.grid).map_err(|e| Failure::numerical("blowup/scan", e))?;
    let mut buf = Vec::new();
    blowup::write_locus_csv(&mut buf, &locus, Some(comment)).map_err(|e| Failure::numerical("blowup/export", e))?;
    let path = ctx.write(name, &buf)?;
    ctx.say(format!(
        "blowup: {} points in {} components, {} undefined nodes -> {}",
        locus.points.len(),
        locus.components.len(),
        locus.undefined_nodes,
        path.display()
    ));
    Ok(())
}

fn residual_sample(cfg: &RunConfig, ctx: &Context, name: &str, comment: &str) -> Result<(), Failure> {
    let job = cfg.residual.as_ref().expect("resolved");
    for (axis, (lo, hi)) in [("t", job.t), ("theta", job.theta), ("phi", job.phi)] {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Failure::Config(format!("residual: empty {axis} range")));
        }
    }
    let regime = job.regime.unwrap_or(job.field.regime);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let draw = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| if lo == hi { lo } else { rng.random_range(lo..hi) };
    let mut rows = Vec::new();
    for _ in 0..100 * job.points {
        if rows.len() == job.points {
            break;
        }
        let (t, th, ph) = (draw(&mut rng, job.t), draw(&mut rng, job.theta), draw(&mut rng, job.phi));
        if let Ok(r) = pde_residual_detail(&job.field, regime, t, th, ph, job.h) {
            let measure = if job.scaled { r.relative() } else { r.u.abs().max(r.v.abs()) };
            rows.push([t, th, ph, r.u, r.v, r.scale_u, r.scale_v, measure]);
        }
    }
    let mut buf = format!("# {comment}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let export = |e: csv::Error| Failure::numerical("residual/export", e);
        w.write_record(["t", "theta", "phi", "residual_u", "residual_v", "scale_u", "scale_v", "measure"]).map_err(export)?;
        for r in &rows {
            w.write_record(r.map(fmt17)).map_err(export)?;
        }
        w.flush().map_err(|e| Failure::numerical("residual/export", e))?;
    }
    let path = ctx.write(name, &buf)?;
    let worst = rows.iter().max_by(|a, b| a[7].total_cmp(&b[7]));
    let max = worst.map_or(0.0, |r| r[7]);
    ctx.say(format!("residual: {} points, max {max:.3e} -> {}", rows.len(), path.display()));
    if rows.len() < job.points {
        return Err(Failure::numerical("residual/sampling", format!("only {} valid points found", rows.len())));
    }
    if let Some(r) = worst.filter(|_| max.is_nan() || max > job.tol) {
        let msg = format!("residual {max:e} exceeds {:e} at t = {}, theta = {}, phi = {}", job.tol, r[0], r[1], r[2]);
        return Err(Failure::numerical("residual/point", msg));
    }
    Ok(())
}

fn verify_all(cfg: &RunConfig, ctx: &Context, name: &str) -> Result<(), Failure> {
    let job = cfg.verify_all.clone().unwrap_or_default();
    let known = verify::criterion_ids();
    let ids = job.criteria.unwrap_or_else(|| known.clone());
    if let Some(bad) = ids.iter().find(|id| !known.contains(id)) {
        return Err(Failure::Config(format!("verify-all: no criterion {bad}")));
    }
    let criteria: Vec<_> = ids.iter().filter_map(|&id| verify::run_criterion(id, ctx.seed)).collect();
    for c in &criteria {
        ctx.say(format!(
            "criterion {:>2} {:<42} {}  measured {:.3e} threshold {:.3e}  {:.2}s",
            c.id,
            c.title,
            if c.pass { "PASS" } else { "FAIL" },
            c.measured,
            c.threshold,
            c.wall_time_s
        ));
    }
    let report = SuiteReport { seed: ctx.seed, pass: criteria.iter().all(|c| c.pass), criteria };
    let json = serde_json::to_vec_pretty(&report).map_err(|e| Failure::numerical("verify-all/report", e))?;
    let path = ctx.write(name, &json)?;
    ctx.say(format!("report -> {}", path.display()));
    let failed: Vec<String> = report.criteria.iter().filter(|c| !c.pass).map(|c| c.id.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Acceptance(format!("criteria {} failed", failed.join(", "))))
    }
}
