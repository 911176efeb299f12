//! The subcommands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context};
use log::{info, warn};
use qlab_core::audit::BoundaryAuditOptions;
use qlab_core::el::{initial_field, SolveError};
use qlab_core::hedgehog::lift_to_3d;
use qlab_core::io::{
    read_field_file, write_beta_map, write_decomposition, write_extra_residual, write_field,
    write_profile,
};
use qlab_core::uniaxial::extra_residual;
use qlab_core::{
    audit_field, relax, sn_relax, solve_profile, AuditOptions, BulkPotential, DomainSpec, Error,
    Grid, MaterialParams, ProfileMethod, QField, Shape, SolveOptions, SolveReport,
};
use serde::Serialize;

use crate::plot;
use crate::presets::{self, Preset};
use crate::{
    AuditArgs, DecomposeArgs, DomainArgs, DomainKind, HedgehogArgs, MaterialArgs, PlotArgs,
    SolveArgs, SolveSnArgs,
};

/// A failed run and its exit status.
#[derive(Debug)]
pub enum Failure {
    Invalid(anyhow::Error),
    NoConvergence(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::NoConvergence(_) => 3,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Invalid(e) | Failure::NoConvergence(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Invalid(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence(_) => Failure::NoConvergence(e.into()),
            other => Failure::Invalid(other.into()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn params(m: &MaterialArgs) -> anyhow::Result<MaterialParams<f64>> {
    let c: Vec<f64> = m
        .bulk
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| anyhow!("--bulk expects three numbers a,b,c, got '{}'", m.bulk))?;
    if c.len() != 3 || c.iter().any(|v| !v.is_finite()) {
        bail!(
            "--bulk expects three finite numbers a,b,c, got '{}'",
            m.bulk
        );
    }
    Ok(MaterialParams::new(
        m.l,
        BulkPotential::quartic(c[0], c[1], c[2]),
    )?)
}

fn grid(d: &DomainArgs) -> anyhow::Result<Arc<Grid<f64>>> {
    let shape = match d.domain {
        DomainKind::Interval => Shape::Interval { length: d.length },
        DomainKind::Rectangle => Shape::Rectangle { lx: d.lx, ly: d.ly },
        DomainKind::Disk => Shape::Disk { radius: d.radius },
        DomainKind::Ball => Shape::Ball { radius: d.radius },
    };
    Ok(Arc::new(Grid::build(DomainSpec::new(shape, d.h))?))
}

/// Output paths must sit in an existing directory; checked before any work.
fn check_outputs<'a>(paths: impl IntoIterator<Item = Option<&'a PathBuf>>) -> anyhow::Result<()> {
    for p in paths.into_iter().flatten() {
        let dir = match p.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        if !dir.is_dir() {
            bail!(
                "cannot write {}: {} is not a directory",
                p.display(),
                dir.display()
            );
        }
        if p.is_dir() {
            bail!("cannot write {}: it is a directory", p.display());
        }
    }
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> qlab_core::Result<()>,
) -> anyhow::Result<()> {
    let mut w = create(path)?;
    f(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[derive(Serialize)]
struct Metadata {
    command: &'static str,
    version: &'static str,
    /// Seconds since the Unix epoch.
    timestamp: u64,
}

fn metadata(command: &'static str) -> Metadata {
    Metadata {
        command,
        version: env!("CARGO_PKG_VERSION"),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    }
}

#[derive(Serialize)]
struct SolveJson<'a> {
    iterations: usize,
    final_residual: f64,
    converged: bool,
    energy_initial: f64,
    energy_final: f64,
    max_energy_increase: f64,
    /// Set when the run was stopped by the divergence guard.
    diverged: Option<&'a str>,
    flags: &'a [String],
    metadata: Metadata,
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn solve_json<'a>(
    command: &'static str,
    r: &'a SolveReport<f64>,
    diverged: Option<&'a str>,
) -> SolveJson<'a> {
    SolveJson {
        iterations: r.iterations,
        final_residual: r.final_residual,
        converged: r.converged,
        energy_initial: r.energy_initial,
        energy_final: r.energy_final,
        max_energy_increase: r.max_energy_increase,
        diverged,
        flags: &r.flags,
        metadata: metadata(command),
    }
}

struct Setup {
    params: MaterialParams<f64>,
    grid: Arc<Grid<f64>>,
    preset: Preset,
    s0: f64,
    opts: SolveOptions<f64>,
}

fn setup(a: &SolveArgs) -> anyhow::Result<Setup> {
    let params = params(&a.material)?;
    let (preset, s0) = presets::parse(&a.bc.bc, a.bc.angle, a.bc.s0)?;
    let grid = grid(&a.domain)?;
    preset.check_domain(&grid.spec().shape)?;
    let s0 = match s0 {
        Some(s) if s.is_finite() => s,
        Some(s) => bail!("--s0 must be finite, got {s}"),
        None => params.preferred_s()?,
    };
    let opts = SolveOptions {
        tol: a.solver.tol,
        max_iters: a.solver.max_iters,
        dt_safety: a.solver.dt_safety,
        scheme: a.solver.scheme.parse()?,
        ..SolveOptions::default()
    };
    opts.validate()?;
    Ok(Setup {
        params,
        grid,
        preset,
        s0,
        opts,
    })
}

fn finish(
    command: &'static str,
    report: &SolveReport<f64>,
    diverged: Option<&str>,
    json: Option<&Path>,
) -> Outcome {
    for f in &report.flags {
        warn!("{f}");
    }
    if let Some(p) = json {
        write_json(p, &solve_json(command, report, diverged))?;
    }
    if let Some(reason) = diverged {
        return Err(Failure::NoConvergence(anyhow!("{reason}")));
    }
    if !report.converged {
        return Err(Failure::NoConvergence(anyhow!(
            "not converged after {} iterations (residual {:e})",
            report.iterations,
            report.final_residual
        )));
    }
    Ok(())
}

pub fn solve(a: &SolveArgs) -> Outcome {
    check_outputs([a.out.as_ref(), a.report.as_ref()])?;
    let s = setup(a)?;
    let bc = s.preset.tensor_bc(&s.grid, s.s0)?;
    for w in &bc.warnings {
        warn!("{w}");
    }
    let start = initial_field(s.grid.clone(), &bc)?;
    info!("relaxing {} nodes", s.grid.len());
    let (field, report, diverged) = match relax(&s.params, &start, &s.opts) {
        Ok((f, r)) => (f, r, None),
        Err(SolveError::Invalid(e)) => return Err(e.into()),
        Err(SolveError::Diverged(d)) => {
            let reason = format!("diverged at iteration {}: {}", d.iteration, d.reason);
            (d.last_valid, d.report, Some(reason))
        }
    };
    if let Some(p) = &a.out {
        write_with(p, |w| write_field(&field, w))?;
    }
    finish("solve", &report, diverged.as_deref(), a.report.as_deref())
}

pub fn solve_sn(a: &SolveSnArgs) -> Outcome {
    check_outputs([
        a.base.out.as_ref(),
        a.base.report.as_ref(),
        a.extra_residual.as_ref(),
    ])?;
    let s = setup(&a.base)?;
    let start = s.preset.sn_start(s.grid.clone(), s.s0)?;
    info!("relaxing {} nodes", s.grid.len());
    let (field, report, diverged) = match sn_relax(&s.params, &start, &s.opts) {
        Ok((f, r)) => (f, r, None),
        Err(SolveError::Invalid(e)) => return Err(e.into()),
        Err(SolveError::Diverged(d)) => {
            let reason = format!("diverged at iteration {}: {}", d.iteration, d.reason);
            (d.last_valid, d.report, Some(reason))
        }
    };
    if let Some(p) = &a.base.out {
        let lift = field.lift();
        write_with(p, |w| write_field(&lift, w))?;
    }
    if let Some(p) = &a.extra_residual {
        let extra = extra_residual(&field);
        info!(
            "extra-equation residual: sup {:e}, L2 {:e}",
            extra.sup, extra.l2
        );
        write_with(p, |w| write_extra_residual(&extra, w))?;
    }
    finish(
        "solve-sn",
        &report,
        diverged.as_deref(),
        a.base.report.as_deref(),
    )
}

#[derive(Serialize)]
struct HedgehogJson<'a> {
    s0: f64,
    radius: f64,
    nodes: usize,
    method: ProfileMethod,
    s1: f64,
    shooting_roots: &'a [f64],
    flags: &'a [String],
    metadata: Metadata,
}

pub fn hedgehog(a: &HedgehogArgs) -> Outcome {
    check_outputs([a.out.as_ref(), a.lift.as_ref(), a.report.as_ref()])?;
    let params = params(&a.material)?;
    let method: ProfileMethod = a.method.parse()?;
    let profile = solve_profile(&params, a.s0, a.radius, a.nodes, method)?;
    for f in &profile.flags {
        warn!("{f}");
    }
    if let Some(p) = &a.out {
        write_with(p, |w| write_profile(&profile, w))?;
    }
    if let Some(p) = &a.lift {
        let h = a.h.unwrap_or(a.radius / 16.0);
        let g = Arc::new(Grid::build(DomainSpec::new(
            Shape::Ball { radius: a.radius },
            h,
        ))?);
        let field = lift_to_3d(&profile, g)?;
        write_with(p, |w| write_field(&field, w))?;
    }
    if let Some(p) = &a.report {
        let json = HedgehogJson {
            s0: profile.s0,
            radius: profile.radius,
            nodes: profile.r.len(),
            method: profile.method,
            s1: profile.s1,
            shooting_roots: &profile.shooting_roots,
            flags: &profile.flags,
            metadata: metadata("hedgehog"),
        };
        write_json(p, &json)?;
    }
    Ok(())
}

fn read(path: &Path) -> Result<QField<f64>, Failure> {
    read_field_file(path).map_err(|e| {
        Failure::Invalid(anyhow::Error::from(e).context(format!("{}", path.display())))
    })
}

pub fn audit(a: &AuditArgs) -> Outcome {
    check_outputs([a.report.as_ref(), a.beta_map.as_ref()])?;
    let field = read(&a.input)?;
    let params = params(&a.material)?;
    let opts = AuditOptions {
        tol: a.tol,
        angle_tol: a.angle_tol,
        symmetry_samples: a.samples,
        boundary: BoundaryAuditOptions::default(),
    };
    let report = audit_field(&field, &params, a.s0, &opts)?;
    for f in &report.flags {
        info!("{f}");
    }
    if let Some(p) = &a.beta_map {
        write_with(p, |w| write_beta_map(&field, a.tol, w))?;
    }
    if let Some(p) = &a.report {
        let mut json = serde_json::to_value(&report).map_err(anyhow::Error::from)?;
        json["metadata"] = serde_json::to_value(metadata("audit")).map_err(anyhow::Error::from)?;
        write_json(p, &json)?;
    } else {
        let text = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
        println!("{text}");
    }
    Ok(())
}

pub fn decompose(a: &DecomposeArgs) -> Outcome {
    check_outputs([a.out.as_ref()])?;
    let field = read(&a.input)?;
    match &a.out {
        Some(p) => write_with(p, |w| write_decomposition(&field, a.tol, w))?,
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            write_decomposition(&field, a.tol, &mut w)?;
            w.flush().map_err(anyhow::Error::from)?;
        }
    }
    Ok(())
}

pub fn plot(a: &PlotArgs) -> Outcome {
    check_outputs([Some(&a.out)])?;
    let field = read(&a.input)?;
    let svg = plot::render(&field, a.quantity, a.tol)?;
    std::fs::write(&a.out, svg).with_context(|| format!("cannot write {}", a.out.display()))?;
    Ok(())
}
