//! Uniaxial fields `Q = s (n n - I/3)` handled through the pair `(s, n)`.
//!
//! The discrete energy is the full-tensor edge energy of the lifted field,
//! written in `(s, n)` form via
//! `|Q_j - Q_i|^2 = 2/3 (s_j - s_i)^2 + 2 s_i s_j (1 - (n_i . n_j)^2)`.
//! Every expression depends on `n` only through `n n`, so the fields are line
//! fields: flipping the sign of `n` anywhere changes nothing.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::bulk::MaterialParams;
use crate::el::{SolveError, SolveOptions, SolveReport};
use crate::error::{invalid, Result};
use crate::grid::{par_map_nodes, Arm, AxisStencil, Field, Grid, QField, ScalarField, VectorField};
use crate::scalar::{lit, Real};
use crate::tensor::QTensor;
use crate::vec3::{self, Mat3, Vec3};

/// `|s|` below which the director of a node is not updated.
pub const FREEZE_S: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SNField<T> {
    s: ScalarField<T>,
    n: VectorField<T>,
}

impl<T: Real> SNField<T> {
    pub fn new(s: ScalarField<T>, n: VectorField<T>) -> Result<Self> {
        if !Arc::ptr_eq(s.grid(), n.grid()) {
            return Err(invalid("s and n live on different grids"));
        }
        let f = Self { s, n };
        let defect = f.unit_defect();
        if !(defect <= lit(1e-10)) {
            return Err(invalid(format!(
                "director field is not unit length (defect {defect:e})"
            )));
        }
        Ok(f)
    }

    /// Samples `f(x) = (s, n)` at every node and cut point; `n` is normalized.
    pub fn from_fn(grid: Arc<Grid<T>>, f: impl Fn(&Vec3<T>) -> (T, Vec3<T>)) -> Result<Self> {
        let unit = |x: &Vec3<T>| {
            let (_, n) = f(x);
            vec3::normalize(&n).unwrap_or([T::nan(); 3])
        };
        let s = ScalarField::from_fn(grid.clone(), |x| f(x).0);
        let n = VectorField::from_fn(grid, unit);
        Self::new(s, n)
    }

    /// Spectral split of a uniaxial tensor field (no uniaxiality check).
    pub fn from_qfield(q: &QField<T>) -> Self {
        let tol = lit(crate::tensor::DEFAULT_PHASE_TOL);
        let s = q.map(|q| q.decompose(tol).s);
        let n = q.map(|q| q.decompose(tol).n);
        Self { s, n }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.s.grid()
    }

    pub fn s(&self) -> &ScalarField<T> {
        &self.s
    }

    pub fn n(&self) -> &VectorField<T> {
        &self.n
    }

    /// Largest `| |n| - 1 |` over nodes and cut points.
    pub fn unit_defect(&self) -> T {
        self.n
            .values()
            .iter()
            .chain(self.n.cut_values())
            .map(|n| (vec3::norm(n) - T::one()).abs())
            .fold(T::zero(), |a, b| if b.is_nan() { b } else { a.max(b) })
    }

    /// The tensor field `s (n n - I/3)`.
    pub fn lift(&self) -> QField<T> {
        let values = (0..self.grid().len())
            .map(|i| QTensor::uniaxial_unchecked(self.s.value(i), &self.n.value(i)))
            .collect();
        let cuts = self
            .s
            .cut_values()
            .iter()
            .zip(self.n.cut_values())
            .map(|(s, n)| QTensor::uniaxial_unchecked(*s, n))
            .collect();
        Field::from_parts(self.grid().clone(), values, cuts).expect("shapes match")
    }

    fn arm(&self, arm: Arm) -> (T, Vec3<T>) {
        (self.s.arm_value(arm), self.n.arm_value(arm))
    }

    /// Aligns the director signs: breadth-first from the boundary, each node
    /// takes the orientation preferred by its already-visited neighbours,
    /// weighted by `|s|`. Returns the number of edges between ordered nodes
    /// whose directors still point in opposite directions.
    pub fn fix_gauge(&mut self) -> usize {
        let grid = self.grid().clone();
        let len = grid.len();
        let mut visited = vec![false; len];
        let mut queue = VecDeque::new();
        for (i, v) in visited.iter_mut().enumerate() {
            if !grid.is_interior(i) {
                *v = true;
                queue.push_back(i);
            }
        }
        // nodes owning cut points are oriented by their boundary data first
        for i in grid.interior() {
            if !grid.cut_range(i).is_empty() {
                let ni = self.n.value(i);
                let vote = grid
                    .cut_range(i)
                    .map(|c| {
                        let w = self.s.cut_values()[c].abs() + lit(1e-300);
                        w * vec3::dot(&ni, &self.n.cut_values()[c])
                    })
                    .fold(T::zero(), |a, b| a + b);
                if vote < T::zero() {
                    self.n.values_mut()[i] = vec3::scale(&ni, -T::one());
                }
                visited[i] = true;
                queue.push_back(i);
            }
        }
        if queue.is_empty() && len > 0 {
            visited[0] = true;
            queue.push_back(0);
        }
        while let Some(i) = queue.pop_front() {
            let nbrs: Vec<usize> = grid.neighbors(i).collect();
            for j in nbrs {
                if visited[j] {
                    continue;
                }
                let nj = self.n.value(j);
                let vote = grid
                    .neighbors(j)
                    .filter(|&k| visited[k])
                    .map(|k| {
                        let w = self.s.value(k).abs() + lit(1e-300);
                        w * vec3::dot(&nj, &self.n.value(k))
                    })
                    .fold(T::zero(), |a, b| a + b);
                if vote < T::zero() {
                    self.n.values_mut()[j] = vec3::scale(&nj, -T::one());
                }
                visited[j] = true;
                queue.push_back(j);
            }
        }
        let tiny = lit::<T>(FREEZE_S);
        let mut failures = 0;
        for i in 0..len {
            if self.s.value(i).abs() < tiny {
                continue;
            }
            let ijk = grid.lattice_coords(i);
            for axis in 0..grid.dim() {
                let mut nb = ijk.map(|v| v as i64);
                nb[axis] += 1;
                if let Some(j) = grid.active_at(nb) {
                    if self.s.value(j).abs() >= tiny
                        && vec3::dot(&self.n.value(i), &self.n.value(j)) < T::zero()
                    {
                        failures += 1;
                    }
                }
            }
        }
        failures
    }
}

/// Energy of the `(s, n)` pair: the full-tensor discrete energy of the lift,
/// evaluated edge by edge in `(s, n)` form.
pub fn sn_energy<T: Real>(params: &MaterialParams<T>, field: &SNField<T>) -> T {
    let grid = field.grid();
    let two_thirds = lit::<T>(2.0) / lit(3.0);
    let two = lit::<T>(2.0);
    let mut elastic = T::zero();
    crate::el::for_each_edge(grid, |i, arm, w| {
        let (si, ni) = (field.s.value(i), field.n.value(i));
        let (sj, nj) = field.arm(arm);
        let c = vec3::dot(&ni, &nj);
        let ds = sj - si;
        elastic = elastic + w * (two_thirds * ds * ds + two * si * sj * (T::one() - c * c));
    });
    let mut bulk = T::zero();
    for i in 0..grid.len() {
        let w = grid.quadrature_weight(i);
        if w != T::zero() {
            bulk = bulk + w * params.bulk.uniaxial_density(field.s.value(i));
        }
    }
    params.elastic() / two * elastic + bulk
}

/// Stencil arms of a node with weights `w` of the unequal-arm Laplacian.
fn weighted_arms<T: Real>(grid: &Grid<T>, i: usize) -> impl Iterator<Item = (Arm, T)> + '_ {
    (0..grid.dim()).flat_map(move |a| {
        let st: AxisStencil<T> = grid.axis_stencil(i, a);
        let (wm, wp) = st.second_weights();
        [(st.minus, wm), (st.plus, wp)]
    })
}

fn tangent<T: Real>(n: &Vec3<T>, v: &Vec3<T>) -> Vec3<T> {
    vec3::sub(v, &vec3::scale(n, vec3::dot(n, v)))
}

/// `(r_s, r_n)` at one interior node.
fn node_residual<T: Real>(
    params: &MaterialParams<T>,
    field: &SNField<T>,
    i: usize,
) -> (T, Vec3<T>) {
    let grid = field.grid();
    let (si, ni) = (field.s.value(i), field.n.value(i));
    let mut lap_s = T::zero();
    let mut twist = T::zero();
    let mut pull = [T::zero(); 3];
    for (arm, w) in weighted_arms(grid, i) {
        let (sk, nk) = field.arm(arm);
        let c = vec3::dot(&ni, &nk);
        lap_s = lap_s + w * (sk - si);
        twist = twist + w * sk * (T::one() - c * c);
        pull = vec3::add(&pull, &vec3::scale(&nk, w * sk * c));
    }
    let rs = lap_s - lit::<T>(1.5) * twist - params.psi(si);
    (rs, tangent(&ni, &pull))
}

/// Residuals of the uniaxial system at interior nodes (zero elsewhere):
/// `r_s = lap s - 3 |grad n|^2 s - psi(s)` and `r_n`, the tangential part of
/// `s lap n + 2 (grad s . grad) n`. Both are discretized as the gradient of
/// the discrete energy, so `|grad n|^2` enters as `sum w (1 - (n . n_k)^2)`.
pub fn u_residual<T: Real>(
    params: &MaterialParams<T>,
    field: &SNField<T>,
) -> (ScalarField<T>, VectorField<T>) {
    let grid = field.grid();
    let both = par_map_nodes(grid, |i| {
        if grid.is_interior(i) {
            node_residual(params, field, i)
        } else {
            (T::zero(), [T::zero(); 3])
        }
    });
    let m = grid.cuts().len();
    let rs = Field::from_parts(
        grid.clone(),
        both.iter().map(|v| v.0).collect(),
        vec![T::zero(); m],
    );
    let rn = Field::from_parts(
        grid.clone(),
        both.iter().map(|v| v.1).collect(),
        vec![[T::zero(); 3]; m],
    );
    (rs.expect("shapes match"), rn.expect("shapes match"))
}

/// Tangential first derivatives of `n` at an interior node, one per axis,
/// with neighbour signs aligned to `n`.
pub fn director_gradient<T: Real>(n: &VectorField<T>, i: usize) -> [Vec3<T>; 3] {
    let grid = n.grid();
    let ni = n.value(i);
    let align = |v: Vec3<T>| {
        if vec3::dot(&v, &ni) < T::zero() {
            vec3::scale(&v, -T::one())
        } else {
            v
        }
    };
    let mut out = [[T::zero(); 3]; 3];
    for (a, slot) in out.iter_mut().enumerate().take(grid.dim()) {
        let st = grid.axis_stencil(i, a);
        let (hm, hp) = (st.h_minus, st.h_plus);
        let vm = align(n.arm_value(st.minus));
        let vp = align(n.arm_value(st.plus));
        let den = hm * hp * (hm + hp);
        let d = vec3::add(
            &vec3::scale(&vec3::sub(&vp, &ni), hm * hm / den),
            &vec3::scale(&vec3::sub(&ni, &vm), hp * hp / den),
        );
        *slot = tangent(&ni, &d);
    }
    out
}

/// The symmetry-breaking tensor `2 sum_k dn_k dn_k - |grad n|^2 (I - n n)`.
fn extra_tensor<T: Real>(n: &Vec3<T>, dn: &[Vec3<T>; 3]) -> Mat3<T> {
    let mut m = vec3::zero_mat();
    let mut g2 = T::zero();
    for d in dn {
        g2 = g2 + vec3::dot(d, d);
        let o = vec3::outer(d, d);
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] = m[r][c] + lit::<T>(2.0) * o[r][c];
            }
        }
    }
    let nn = vec3::outer(n, n);
    let id: Mat3<T> = vec3::identity();
    for r in 0..3 {
        for c in 0..3 {
            m[r][c] = m[r][c] - g2 * (id[r][c] - nn[r][c]);
        }
    }
    m
}

#[derive(Clone, Debug)]
pub struct ExtraResidual<T> {
    /// The residual tensor per node (exactly traceless: derivatives are
    /// projected onto the tangent plane of `n`).
    pub tensor: QField<T>,
    /// Frobenius norm per node.
    pub norms: ScalarField<T>,
    pub sup: T,
    /// Discrete `L^2` norm over the domain.
    pub l2: T,
}

/// Violation of the extra equation `2 sum_k dn_k dn_k = |grad n|^2 (I - n n)`
/// at interior nodes.
pub fn extra_residual<T: Real>(field: &SNField<T>) -> ExtraResidual<T> {
    let grid = field.grid();
    let tensors = par_map_nodes(grid, |i| {
        if grid.is_interior(i) {
            let ni = field.n.value(i);
            extra_tensor(&ni, &director_gradient(&field.n, i))
        } else {
            vec3::zero_mat()
        }
    });
    let m = grid.cuts().len();
    let norms: Vec<T> = tensors.iter().map(vec3::frobenius).collect();
    let sup = grid.interior().map(|i| norms[i]).fold(T::zero(), T::max);
    let hd = grid.h().powi(grid.dim() as i32);
    let l2 = grid
        .interior()
        .map(|i| norms[i] * norms[i] * hd)
        .fold(T::zero(), |a, b| a + b)
        .sqrt();
    let tensor = Field::from_parts(
        grid.clone(),
        tensors.iter().map(QTensor::from_matrix).collect(),
        vec![QTensor::zero(); m],
    )
    .expect("shapes match");
    let norms = Field::from_parts(grid.clone(), norms, vec![T::zero(); m]).expect("shapes match");
    ExtraResidual {
        tensor,
        norms,
        sup,
        l2,
    }
}

/// The three mutually orthogonal parts of the equilibrium residual of a
/// uniaxial field, with the convention
/// `L lap(Q) - bulk_gradient(Q) = L (scalar + tangent + extra)`:
/// `scalar = r_s (n n - I/3)`, `tangent = n r_n + r_n n`, `extra = s E`.
#[derive(Clone, Debug)]
pub struct ResidualParts<T> {
    pub scalar: QField<T>,
    pub tangent: QField<T>,
    pub extra: QField<T>,
}

impl<T: Real> ResidualParts<T> {
    /// `L (scalar + tangent + extra)`.
    pub fn assembled(&self, params: &MaterialParams<T>) -> QField<T> {
        let l = params.elastic();
        let grid = self.scalar.grid().clone();
        let values = (0..grid.len())
            .map(|i| (self.scalar.value(i) + self.tangent.value(i) + self.extra.value(i)).scale(l))
            .collect();
        let m = grid.cuts().len();
        Field::from_parts(grid, values, vec![QTensor::zero(); m]).expect("shapes match")
    }
}

pub fn residual_parts<T: Real>(params: &MaterialParams<T>, field: &SNField<T>) -> ResidualParts<T> {
    let grid = field.grid();
    let parts = par_map_nodes(grid, |i| {
        if !grid.is_interior(i) {
            return [QTensor::zero(); 3];
        }
        let (si, ni) = (field.s.value(i), field.n.value(i));
        let (rs, rn) = node_residual(params, field, i);
        let scalar = QTensor::uniaxial_unchecked(rs, &ni);
        let mut t = vec3::outer(&ni, &rn);
        let tt = vec3::transpose(&t);
        for r in 0..3 {
            for c in 0..3 {
                t[r][c] = t[r][c] + tt[r][c];
            }
        }
        let tangent = QTensor::from_matrix(&t);
        let extra =
            QTensor::from_matrix(&extra_tensor(&ni, &director_gradient(&field.n, i))).scale(si);
        [scalar, tangent, extra]
    });
    let m = grid.cuts().len();
    let pick = |k: usize| {
        Field::from_parts(
            grid.clone(),
            parts.iter().map(|p| p[k]).collect(),
            vec![QTensor::zero(); m],
        )
        .expect("shapes match")
    };
    ResidualParts {
        scalar: pick(0),
        tangent: pick(1),
        extra: pick(2),
    }
}

/// Projected gradient flow for `(s, n)` with `|n| = 1` enforced by tangent
/// steps and renormalization. Stops when `max(|r_s|, |r_n|) < tol` over
/// interior nodes whose director is not frozen.
///
/// Energy is recorded but only a relative increase above `1e-6` (or
/// non-finite values) stops the run: at cut cells the flow is not an exact
/// gradient of the discrete energy.
pub fn sn_relax<T: Real>(
    params: &MaterialParams<T>,
    field: &SNField<T>,
    opts: &SolveOptions<T>,
) -> Result<(SNField<T>, SolveReport<T>), SolveError<SNField<T>, T>> {
    opts.validate()?;
    let grid = field.grid().clone();
    let tiny = lit::<T>(FREEZE_S);
    let safety = opts.dt_safety;
    let diag: Vec<T> = (0..grid.len())
        .map(|i| {
            if grid.is_interior(i) {
                grid.stencil_diagonal(i)
            } else {
                T::zero()
            }
        })
        .collect();

    let mut current = field.clone();
    let gauge_failures = current.fix_gauge();
    let e0 = sn_energy(params, &current);
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
    let mut e_prev = e0;
    let mut iter = 0;
    let mut last_failures = gauge_failures;
    loop {
        let (rs, rn) = u_residual(params, &current);
        let sup = grid
            .interior()
            .map(|i| {
                let a = rs.value(i).abs();
                if current.s.value(i).abs() < tiny {
                    a
                } else {
                    a.max(vec3::norm(&rn.value(i)))
                }
            })
            .fold(T::zero(), T::max);
        report.final_residual = sup;
        if !sup.is_finite() {
            report.iterations = iter;
            return Err(sn_diverged(iter, "residual is not finite", current, report));
        }
        if sup < opts.tol {
            report.converged = true;
            break;
        }
        if iter >= opts.max_iters {
            break;
        }
        let updated = par_map_nodes(&grid, |i| {
            let (s, n) = (current.s.value(i), current.n.value(i));
            if !grid.is_interior(i) {
                return (s, n);
            }
            let dt_s = safety / (diag[i] + params.psi_prime(s).abs());
            let s_new = s + dt_s * rs.value(i);
            if s.abs() < tiny {
                return (s_new, n);
            }
            let pull: T = weighted_arms(&grid, i)
                .map(|(arm, w)| w * current.s.arm_value(arm).abs())
                .fold(T::zero(), |a, b| a + b);
            if !(pull > T::zero()) {
                return (s_new, n);
            }
            let moved = vec3::add(&n, &vec3::scale(&rn.value(i), safety / pull));
            (s_new, vec3::normalize(&moved).unwrap_or(n))
        });
        let mut next = current.clone();
        for (i, (s, n)) in updated.into_iter().enumerate() {
            next.s.values_mut()[i] = s;
            next.n.values_mut()[i] = n;
        }
        last_failures = next.fix_gauge();
        iter += 1;
        let e = sn_energy(params, &next);
        if !e.is_finite() {
            report.iterations = iter - 1;
            return Err(sn_diverged(
                iter,
                "field became non-finite",
                current,
                report,
            ));
        }
        let increase = e - e_prev;
        report.max_energy_increase = report.max_energy_increase.max(increase);
        if increase > opts.energy_slack + lit::<T>(1e-6) * e_prev.abs() {
            report.iterations = iter - 1;
            let reason = format!("energy increased by {increase:e}");
            return Err(sn_diverged(iter, &reason, current, report));
        }
        report.energy_trace.push((iter, e));
        e_prev = e;
        current = next;
    }
    report.iterations = iter;
    report.energy_final = e_prev;
    let frozen = grid
        .interior()
        .filter(|&i| current.s.value(i).abs() < tiny)
        .count();
    if frozen > 0 {
        report.flags.push(format!(
            "{frozen} node(s) with |s| < {FREEZE_S:e}: director frozen"
        ));
    }
    if last_failures > 0 {
        report.flags.push(format!(
            "gauge: {last_failures} edge(s) with opposite director orientation"
        ));
    }
    if report.max_energy_increase > opts.energy_slack {
        report.flags.push(format!(
            "energy not monotone: largest step increase {:e}",
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

fn sn_diverged<T: Real>(
    iteration: usize,
    reason: &str,
    last_valid: SNField<T>,
    report: SolveReport<T>,
) -> SolveError<SNField<T>, T> {
    SolveError::Diverged(Box::new(crate::el::Diverged {
        iteration,
        reason: reason.to_string(),
        last_valid,
        report,
    }))
}

/// Tilt of the escaped director `cos t e_r + sin t e_z` solving
/// `r t' = cos t`: `t(r) = 2 atan(r / r0) - pi/2`.
pub fn escape_tilt<T: Real>(r: T, r0: T) -> T {
    lit::<T>(2.0) * (r / r0).atan() - T::FRAC_PI_2()
}

/// The escaped-radial director of a disk cross-section, at every node and
/// cut point of a 2D grid.
pub fn cladis_kleman<T: Real>(r0: T, grid: Arc<Grid<T>>) -> Result<VectorField<T>> {
    if !(r0 > T::zero()) || !r0.is_finite() {
        return Err(invalid("r0 must be positive"));
    }
    if grid.dim() != 2 {
        return Err(invalid("the escaped director is defined on 2D grids"));
    }
    Ok(VectorField::from_fn(grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let den = r0 * r0 + r2;
        let two = lit::<T>(2.0);
        [
            two * r0 * x[0] / den,
            two * r0 * x[1] / den,
            (r2 - r0 * r0) / den,
        ]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DomainSpec, Shape};

    fn interval(h: f64) -> Arc<Grid<f64>> {
        Arc::new(Grid::build(DomainSpec::new(Shape::Interval { length: 1.0 }, h)).unwrap())
    }

    #[test]
    fn zero_order_has_zero_energy() {
        let p = MaterialParams::reference();
        let f = SNField::from_fn(interval(0.125), |x| (0.0, [x[0], 1.0, 0.0])).unwrap();
        assert_eq!(sn_energy(&p, &f), 0.0);
        let (rs, rn) = u_residual(&p, &f);
        assert!(rs.values().iter().all(|v| *v == 0.0));
        assert!(rn.values().iter().all(|v| vec3::norm(v) == 0.0));
    }

    #[test]
    fn constant_preferred_state() {
        let p = MaterialParams::<f64>::reference();
        let s = p.preferred_s().unwrap();
        let f = SNField::from_fn(interval(0.125), |_| (s, [0.0, 0.6, 0.8])).unwrap();
        let fb = p.bulk.uniaxial_density(s);
        assert!((sn_energy(&p, &f) - fb).abs() < 1e-14);
        let (rs, rn) = u_residual(&p, &f);
        assert!(rs.interior_sup() < 1e-10 && rn.interior_sup() < 1e-10);
        assert_eq!(extra_residual(&f).sup, 0.0);
    }

    #[test]
    fn twist_extra_residual() {
        let k = 2.0;
        let h = 1.0 / 256.0;
        let f = SNField::from_fn(interval(h), |x| {
            (1.0, [(k * x[0]).cos(), (k * x[0]).sin(), 0.0])
        })
        .unwrap();
        let e = extra_residual(&f);
        let want = k * k * 2f64.sqrt();
        for i in f.grid().interior() {
            assert!(
                (e.norms.value(i) - want).abs() < 1e-3,
                "{}",
                e.norms.value(i)
            );
        }
    }

    #[test]
    fn escape_profile() {
        assert_eq!(escape_tilt(1.5, 1.5), 0.0);
        assert!((escape_tilt(1e9, 1.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
        // r t' = cos t holds for the closed form
        for r in [0.1f64, 0.5, 2.0] {
            let d = (escape_tilt(r + 1e-6, 0.7) - escape_tilt(r - 1e-6, 0.7)) / 2e-6;
            assert!((r * d - escape_tilt(r, 0.7).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn gauge_fixes_random_flips() {
        let mut f = SNField::from_fn(interval(1.0 / 32.0), |x| {
            (1.0, [x[0].cos(), 0.0, x[0].sin()])
        })
        .unwrap();
        let reference = f.clone();
        for i in (1..f.grid().len() - 1).step_by(3) {
            let n = f.n.value(i);
            f.n.values_mut()[i] = vec3::scale(&n, -1.0);
        }
        assert_eq!(f.fix_gauge(), 0);
        for (a, b) in f.n.values().iter().zip(reference.n.values()) {
            assert!(vec3::dot(a, b) > 0.0);
        }
    }
}
