//! Full-tensor equilibria: free energy, the equilibrium residual and
//! gradient-flow relaxation.

use std::fmt;

use serde::Serialize;

use crate::bulk::MaterialParams;
use crate::error::{invalid, Error, Result};
use crate::grid::{par_map_nodes, Arm, BoundaryValues, Field, Grid, NodeClass, QField, Shape};
use crate::scalar::{lit, Real};
use crate::tensor::QTensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Scheme {
    /// Forward Euler with a per-node step from the stencil diagonal.
    Explicit,
    /// Laplacian implicit (Gauss-Seidel sweeps), bulk term explicit.
    SemiImplicit,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "explicit" => Ok(Scheme::Explicit),
            "semi-implicit" | "semiimplicit" | "semi_implicit" => Ok(Scheme::SemiImplicit),
            _ => Err(invalid(format!(
                "unknown scheme '{s}' (explicit, semi-implicit)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions<T> {
    /// Target sup norm of the residual.
    pub tol: T,
    pub max_iters: usize,
    /// Fraction of the stability limit used as time step, in `(0, 1]`.
    pub dt_safety: T,
    pub scheme: Scheme,
    /// Largest tolerated energy increase per step. On grids with cut cells a
    /// rise above it is reported, and only a rise beyond
    /// `energy_slack + 1e-6 |E|` aborts the run.
    pub energy_slack: T,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-8),
            max_iters: 1_000_000,
            dt_safety: lit(0.9),
            scheme: Scheme::Explicit,
            energy_slack: lit(1e-10),
        }
    }
}

impl<T: Real> SolveOptions<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero()) || !self.tol.is_finite() {
            return Err(invalid("tol must be positive"));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be positive"));
        }
        if !(self.dt_safety > T::zero() && self.dt_safety <= T::one()) {
            return Err(invalid("dt_safety must lie in (0, 1]"));
        }
        if !(self.energy_slack >= T::zero()) {
            return Err(invalid("energy_slack must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport<T> {
    pub iterations: usize,
    pub final_residual: T,
    /// `(iteration, energy)` after every accepted step, starting with the
    /// initial state at iteration 0.
    pub energy_trace: Vec<(usize, T)>,
    pub converged: bool,
    pub energy_initial: T,
    pub energy_final: T,
    /// Largest single-step energy increase observed (0 if monotone).
    pub max_energy_increase: T,
    pub flags: Vec<String>,
}

/// A relaxation that blew up, with the last state that passed the checks.
#[derive(Debug)]
pub struct Diverged<F, T> {
    pub iteration: usize,
    pub reason: String,
    pub last_valid: F,
    pub report: SolveReport<T>,
}

#[derive(Debug)]
pub enum SolveError<F, T> {
    Invalid(Error),
    Diverged(Box<Diverged<F, T>>),
}

impl<F, T> fmt::Display for SolveError<F, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Invalid(e) => write!(f, "{e}"),
            SolveError::Diverged(d) => {
                write!(f, "diverged at iteration {}: {}", d.iteration, d.reason)
            }
        }
    }
}

impl<F: fmt::Debug, T: fmt::Debug> std::error::Error for SolveError<F, T> {}

impl<F, T> From<Error> for SolveError<F, T> {
    fn from(e: Error) -> Self {
        SolveError::Invalid(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyParts<T> {
    pub elastic: T,
    pub bulk: T,
}

impl<T: Real> EnergyParts<T> {
    pub fn total(&self) -> T {
        self.elastic + self.bulk
    }
}

/// Calls `f(a, b, weight)` for every discrete edge: lattice edges between
/// active nodes and partial edges from interior nodes to cut points. The
/// weight turns `|b - a|^2` into `|grad|^2` integrated over the edge's share
/// of the domain.
pub(crate) fn for_each_edge<T: Real>(grid: &Grid<T>, mut f: impl FnMut(usize, Arm, T)) {
    let h = grid.h();
    let d = grid.dim();
    let w_full = h.powi(d as i32 - 2);
    let straight = matches!(
        grid.spec().shape,
        Shape::Interval { .. } | Shape::Rectangle { .. }
    );
    for i in 0..grid.len() {
        let ijk = grid.lattice_coords(i);
        for axis in 0..d {
            let mut nb = ijk.map(|v| v as i64);
            nb[axis] += 1;
            if let Some(j) = grid.active_at(nb) {
                let both_boundary = grid.class_of(i) == NodeClass::Boundary
                    && grid.class_of(j) == NodeClass::Boundary;
                let w = if straight && both_boundary {
                    w_full / lit(2.0)
                } else {
                    w_full
                };
                f(i, Arm::Node(j), w);
            }
        }
        for c in grid.cut_range(i) {
            f(i, Arm::Cut(c), w_full / grid.cuts()[c].theta);
        }
    }
}

/// Elastic and bulk parts of the discrete free energy
/// `sum_edges (L/2)|dQ/l|^2 l h^(d-1) + sum_nodes w phi(Q)`.
pub fn energy_parts<T: Real>(params: &MaterialParams<T>, field: &QField<T>) -> EnergyParts<T> {
    let grid = field.grid();
    let half_l = params.elastic() / lit(2.0);
    let mut elastic = T::zero();
    for_each_edge(grid, |i, arm, w| {
        let diff = field.arm_value(arm) - field.value(i);
        elastic = elastic + w * diff.norm_sq();
    });
    let mut bulk = T::zero();
    for i in 0..grid.len() {
        let w = grid.quadrature_weight(i);
        if w != T::zero() {
            bulk = bulk + w * params.bulk.density(&field.value(i));
        }
    }
    EnergyParts {
        elastic: half_l * elastic,
        bulk,
    }
}

pub fn energy<T: Real>(params: &MaterialParams<T>, field: &QField<T>) -> T {
    energy_parts(params, field).total()
}

/// `L lap(Q) - bulk_gradient(Q)` at interior nodes, zero elsewhere.
pub fn el_residual<T: Real>(params: &MaterialParams<T>, field: &QField<T>) -> QField<T> {
    let grid = field.grid();
    let l = params.elastic();
    let values = par_map_nodes(grid, |i| {
        if grid.is_interior(i) {
            field.laplacian_at(i).scale(l) - params.bulk.bulk_gradient(&field.value(i))
        } else {
            QTensor::zero()
        }
    });
    let cuts = vec![QTensor::zero(); grid.cuts().len()];
    Field::from_parts(grid.clone(), values, cuts).expect("shapes match")
}

/// Sup norm of a residual over interior nodes.
pub fn residual_sup<T: Real>(residual: &QField<T>) -> T {
    residual.interior_sup()
}

/// The maximum principle bound: `max |Q| <= max(M, max boundary |Q|)`.
pub fn linf_check<T: Real>(field: &QField<T>, m: T) -> bool {
    let bound = m.max(field.boundary_sup()) + lit(1e-10);
    field.sup() <= bound
}

/// Field with boundary data `bc` and a deterministic interior start:
/// linear interpolation in 1D, a harmonic extension otherwise.
pub fn initial_field<T: Real>(
    grid: std::sync::Arc<Grid<T>>,
    bc: &BoundaryValues<T, QTensor<T>>,
) -> Result<QField<T>> {
    let mut f = QField::zeros(grid);
    f.apply_boundary(bc)?;
    f.fill_harmonic(400);
    Ok(f)
}

/// Dirichlet data on the two plates `x = 0` and `x = length` of an interval.
pub fn plate_bc<T: Real>(
    grid: &Grid<T>,
    left: QTensor<T>,
    right: QTensor<T>,
) -> Result<BoundaryValues<T, QTensor<T>>> {
    if !matches!(grid.spec().shape, Shape::Interval { .. }) {
        return Err(invalid("plate anchoring is defined on interval domains"));
    }
    let last = grid.len() - 1;
    let mut bc = BoundaryValues::from_fn(grid, |_| QTensor::zero());
    bc.nodes = vec![(0, left), (last, right)];
    Ok(bc)
}

/// Gradient-flow relaxation `dQ/dt = L lap(Q) - bulk_gradient(Q)` with fixed
/// boundary data, until the residual sup norm drops below `opts.tol`.
pub fn relax<T: Real>(
    params: &MaterialParams<T>,
    field: &QField<T>,
    opts: &SolveOptions<T>,
) -> Result<(QField<T>, SolveReport<T>), SolveError<QField<T>, T>> {
    opts.validate()?;
    if field
        .values()
        .iter()
        .chain(field.cut_values())
        .any(|q| !q.is_finite())
    {
        return Err(invalid("initial field is not finite").into());
    }
    let grid = field.grid().clone();
    let l = params.elastic();
    let diag: Vec<T> = (0..grid.len())
        .map(|i| {
            if grid.is_interior(i) {
                grid.stencil_diagonal(i)
            } else {
                T::zero()
            }
        })
        .collect();
    let d = lit::<T>(grid.dim() as f64);
    let h2 = grid.h() * grid.h();
    // uniform-stencil explicit step; cut cells get their own local limit
    let dt_uniform = opts.dt_safety * h2 / (lit::<T>(2.0) * d * l);

    let mut current = field.clone();
    let e0 = energy(params, &current);
    let mut report = SolveReport {
        iterations: 0,
        final_residual: T::infinity(),
        energy_trace: vec![(0, e0)],
        converged: false,
        energy_initial: e0,
        energy_final: e0,
        max_energy_increase: T::zero(),
        flags: Vec::new(),
    };
    // On cut-cell grids only a gross rise (relative to the energy scale)
    // counts as divergence; smaller rises are reported.
    let cut_cells = grid.cuts().iter().any(|c| c.theta < T::one());
    if cut_cells {
        report
            .flags
            .push("cut-cell nodes use a local time step from their stencil diagonal".into());
    }
    let mut e_prev = e0;
    let mut iter = 0usize;
    let mut rises = 0usize;
    loop {
        let residual = el_residual(params, &current);
        let sup = residual_sup(&residual);
        report.final_residual = sup;
        if !sup.is_finite() {
            return Err(diverged(iter, "residual is not finite", current, report));
        }
        if sup < opts.tol {
            report.converged = true;
            break;
        }
        if iter >= opts.max_iters {
            break;
        }
        let next = match opts.scheme {
            Scheme::Explicit => explicit_step(&current, &residual, &diag, opts.dt_safety / l),
            Scheme::SemiImplicit => {
                semi_implicit_step(params, &current, dt_uniform * lit(4.0), opts.tol)
            }
        };
        iter += 1;
        let e = energy(params, &next);
        if !e.is_finite() || next.values().iter().any(|q| !q.is_finite()) {
            report.iterations = iter - 1;
            return Err(diverged(iter, "field became non-finite", current, report));
        }
        let increase = e - e_prev;
        if increase > report.max_energy_increase {
            report.max_energy_increase = increase;
        }
        if increase > opts.energy_slack {
            if !cut_cells || increase > opts.energy_slack + lit::<T>(1e-6) * e_prev.abs() {
                report.iterations = iter - 1;
                let reason = format!(
                    "energy increased by {increase:e} (slack {:e})",
                    opts.energy_slack
                );
                return Err(diverged(iter, &reason, current, report));
            }
            rises += 1;
        }
        report.energy_trace.push((iter, e));
        e_prev = e;
        current = next;
    }
    report.iterations = iter;
    report.energy_final = e_prev;
    if rises > 0 {
        report.flags.push(format!(
            "energy rose by more than the slack on {rises} steps (worst {:e}); the unequal-arm \
             stencil at cut cells is not symmetric, so the flow is not an exact energy gradient",
            report.max_energy_increase
        ));
    }
    if !report.converged {
        report.flags.push(format!(
            "stopped at max_iters = {} with residual {:e}",
            opts.max_iters, report.final_residual
        ));
    }
    Ok((current, report))
}

fn diverged<T: Real>(
    iteration: usize,
    reason: &str,
    last_valid: QField<T>,
    report: SolveReport<T>,
) -> SolveError<QField<T>, T> {
    SolveError::Diverged(Box::new(Diverged {
        iteration,
        reason: reason.to_string(),
        last_valid,
        report,
    }))
}

fn explicit_step<T: Real>(
    current: &QField<T>,
    residual: &QField<T>,
    diag: &[T],
    k: T,
) -> QField<T> {
    let grid = current.grid();
    let values = par_map_nodes(grid, |i| {
        let q = current.value(i);
        if grid.is_interior(i) {
            q + residual.value(i).scale(k / diag[i])
        } else {
            q
        }
    });
    Field::from_parts(grid.clone(), values, current.cut_values().to_vec()).expect("shapes match")
}

/// Solves `(1 - dt L lap) Q' = Q - dt g(Q)` by Gauss-Seidel sweeps.
fn semi_implicit_step<T: Real>(
    params: &MaterialParams<T>,
    current: &QField<T>,
    dt: T,
    tol: T,
) -> QField<T> {
    let grid = current.grid().clone();
    let l = params.elastic();
    let rhs: Vec<QTensor<T>> = (0..grid.len())
        .map(|i| current.value(i) - params.bulk.bulk_gradient(&current.value(i)).scale(dt))
        .collect();
    let mut next = current.clone();
    let target = tol * dt * lit(1e-2);
    for _ in 0..50 {
        let mut change = T::zero();
        for i in grid.interior() {
            let mut acc = rhs[i];
            let mut diag = T::zero();
            for a in 0..grid.dim() {
                let st = grid.axis_stencil(i, a);
                let (wm, wp) = st.second_weights();
                acc += next.arm_value(st.minus).scale(dt * l * wm);
                acc += next.arm_value(st.plus).scale(dt * l * wp);
                diag = diag + wm + wp;
            }
            let v = acc.scale(T::one() / (T::one() + dt * l * diag));
            change = change.max((v - next.value(i)).norm());
            next.values_mut()[i] = v;
        }
        if change < target {
            break;
        }
    }
    next
}
