//! Diagnostics on solved tensor fields: phase maps, director constancy per
//! ordered component, spherical symmetry and the boundary relation of
//! radially anchored equilibria.

use std::collections::VecDeque;

use serde::Serialize;

use crate::bulk::MaterialParams;
use crate::error::{Error, Result};
use crate::grid::{QField, ScalarField, Shape};
use crate::scalar::{lit, Real};
use crate::tensor::{Phase, QTensor, Rotation};
use crate::util::{halton, least_squares};
use crate::vec3::{self, Vec3};

#[derive(Clone, Debug)]
pub struct Classification<T> {
    /// Phase per active node.
    pub phases: Vec<Phase>,
    pub beta: ScalarField<T>,
    /// Face-connected components of `{|Q| >= tol}`, as sorted node lists.
    pub components: Vec<Vec<usize>>,
}

impl<T: Real> Classification<T> {
    /// Fractions of isotropic, uniaxial and biaxial nodes.
    pub fn fractions(&self) -> [T; 3] {
        let mut counts = [0usize; 3];
        for p in &self.phases {
            counts[match p {
                Phase::Isotropic => 0,
                Phase::Uniaxial => 1,
                Phase::Biaxial => 2,
            }] += 1;
        }
        let total = lit::<T>(self.phases.len().max(1) as f64);
        counts.map(|c| lit::<T>(c as f64) / total)
    }
}

/// Nodewise phases and biaxiality, and the ordered components.
pub fn classify_field<T: Real>(field: &QField<T>, tol: T) -> Classification<T> {
    let grid = field.grid();
    let spectra: Vec<_> = field.values().iter().map(|q| q.decompose(tol)).collect();
    let phases: Vec<Phase> = spectra.iter().map(|d| d.phase).collect();
    let beta = ScalarField::from_parts(
        grid.clone(),
        spectra.iter().map(|d| d.beta).collect(),
        field.cut_values().iter().map(|q| q.biaxiality()).collect(),
    )
    .expect("shapes match");
    let mut label = vec![usize::MAX; grid.len()];
    let mut components = Vec::new();
    for start in 0..grid.len() {
        if label[start] != usize::MAX || phases[start] == Phase::Isotropic {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        label[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in grid.neighbors(i) {
                if label[j] == usize::MAX && phases[j] != Phase::Isotropic {
                    label[j] = id;
                    members.push(j);
                    queue.push_back(j);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    Classification {
        phases,
        beta,
        components,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentDirector<T> {
    pub id: usize,
    pub nodes: usize,
    /// Largest angle between a node's director line and the mean line, in
    /// `[0, pi/2]`.
    pub spread: T,
    pub beta_max: T,
    /// Mean director line (principal axis of `sum n n^T`).
    pub director: Vec3<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Constancy<T> {
    pub components: Vec<ComponentDirector<T>>,
    /// Every component is uniaxial (`beta_max < tol`) with constant
    /// director.
    pub uniaxial_constant: bool,
    /// Every uniaxial component has constant director; biaxial components
    /// are not constrained.
    pub dichotomy_holds: bool,
    pub flags: Vec<String>,
}

/// Director spread per ordered component; directors are compared as lines.
pub fn director_constancy<T: Real>(field: &QField<T>, tol: T, angle_tol: T) -> Constancy<T> {
    let cls = classify_field(field, tol);
    let mut components = Vec::new();
    for (id, members) in cls.components.iter().enumerate() {
        let dirs: Vec<Vec3<T>> = members
            .iter()
            .map(|&i| field.value(i).decompose(tol).n)
            .collect();
        let mut m = vec3::zero_mat();
        for n in &dirs {
            let o = vec3::outer(n, n);
            for r in 0..3 {
                for c in 0..3 {
                    m[r][c] = m[r][c] + o[r][c];
                }
            }
        }
        let (_, vecs) = QTensor::from_matrix(&m).eigen();
        let mean = vecs[0];
        let spread = dirs
            .iter()
            .map(|n| vec3::dot(n, &mean).abs().min(T::one()).acos())
            .fold(T::zero(), T::max);
        let beta_max = members
            .iter()
            .map(|&i| cls.beta.value(i))
            .fold(T::zero(), T::max);
        components.push(ComponentDirector {
            id,
            nodes: members.len(),
            spread,
            beta_max,
            director: crate::tensor::normalize_sign(&mean),
        });
    }
    let constant = |c: &ComponentDirector<T>| c.spread < angle_tol;
    let uniaxial = |c: &ComponentDirector<T>| c.beta_max < tol;
    let uniaxial_constant = components.iter().all(|c| uniaxial(c) && constant(c));
    let dichotomy_holds = components.iter().filter(|c| uniaxial(c)).all(constant);
    let mut flags = Vec::new();
    for (a, ca) in components.iter().enumerate() {
        for cb in components.iter().skip(a + 1) {
            let angle = vec3::dot(&ca.director, &cb.director)
                .abs()
                .min(T::one())
                .acos();
            if angle > angle_tol {
                flags.push(format!(
                    "components {} and {} have different directors ({:.3e} rad)",
                    ca.id, cb.id, angle
                ));
            }
        }
    }
    Constancy {
        components,
        uniaxial_constant,
        dichotomy_holds,
        flags,
    }
}

/// Uniformly distributed rotations from a Halton sequence.
pub fn sampled_rotations<T: Real>(samples: usize) -> Vec<Rotation<T>> {
    (0..samples)
        .filter_map(|k| {
            let [u1, u2, u3]: [T; 3] = halton(k as u64 + 1);
            let tau = T::PI() + T::PI();
            let a = (T::one() - u1).sqrt();
            let b = u1.sqrt();
            Rotation::from_quaternion([
                b * (tau * u3).cos(),
                a * (tau * u2).sin(),
                a * (tau * u2).cos(),
                b * (tau * u3).sin(),
            ])
            .ok()
        })
        .collect()
}

/// `sup |Q(g x) - g Q(x) g^T| / max |Q|` over the 24 axis-aligned rotations,
/// `samples` further rotations, and all interior nodes `x` whose image lies
/// in a fully active lattice cell (multilinear interpolation).
pub fn symmetry_deviation<T: Real>(field: &QField<T>, samples: usize) -> Result<T> {
    let grid = field.grid();
    if !matches!(grid.spec().shape, Shape::Ball { .. }) {
        return Err(Error::InvalidInput(
            "symmetry deviation needs a ball field".into(),
        ));
    }
    let scale = field.sup();
    if scale == T::zero() {
        return Ok(T::zero());
    }
    let mut rotations = Rotation::axis_aligned();
    rotations.extend(sampled_rotations(samples));
    let nodes: Vec<usize> = grid.interior().collect();
    let per_rotation = |g: &Rotation<T>| -> T {
        nodes
            .iter()
            .filter_map(|&i| {
                let x = grid.position(i);
                let at_gx = field.interpolate(&g.apply(&x))?;
                Some((at_gx - field.value(i).rotate(g)).norm())
            })
            .fold(T::zero(), T::max)
    };
    let worst = crate::grid::par_collect(&rotations, per_rotation)
        .into_iter()
        .fold(T::zero(), T::max);
    Ok(worst / scale)
}

#[derive(Clone, Debug)]
pub struct BoundaryAuditOptions<T> {
    pub n_lat: usize,
    pub n_lon: usize,
    /// Largest biaxiality tolerated near the boundary.
    pub beta_tol: T,
}

impl<T: Real> Default for BoundaryAuditOptions<T> {
    fn default() -> Self {
        Self {
            n_lat: 8,
            n_lon: 16,
            beta_tol: lit(1e-6),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryAudit<T> {
    pub samples: usize,
    /// `sup |d n / d r|` at the boundary.
    pub dn_sup: T,
    pub s1_mean: T,
    pub s1_std: T,
    pub s2_mean: T,
    /// `sup |s2 + s1 - 3 s0 - psi(s0)/2|` in units where `R = 1`.
    pub star1_discrepancy: T,
    pub flags: Vec<String>,
}

/// Monomials of total degree <= 3 in three variables.
fn cubic_monomials<T: Real>(u: &Vec3<T>) -> [T; 20] {
    let [x, y, z] = *u;
    [
        T::one(),
        x,
        y,
        z,
        x * x,
        y * y,
        z * z,
        x * y,
        x * z,
        y * z,
        x * x * x,
        y * y * y,
        z * z * z,
        x * x * y,
        x * x * z,
        y * y * x,
        y * y * z,
        z * z * x,
        z * z * y,
        x * y * z,
    ]
}

/// Radial boundary data of a ball field at the points of a latitude /
/// longitude net.
///
/// Along each inward ray the field is sampled at spacing `h/2` from a local
/// least-squares cubic fit of the nodal and cut-point data within `3.5 h`;
/// the scalar order parameter is fitted directly, the director through the
/// fitted tensor. Radial derivatives use one-sided 3-point (first) and
/// 4-point (second) stencils. For `R != 1` the relation is checked in
/// rescaled form: `R^2 s''/2 + R s1 - 3 s0 - R^2 psi(s0)/2`.
pub fn boundary_audit<T: Real>(
    field: &QField<T>,
    params: &MaterialParams<T>,
    s0: T,
    opts: &BoundaryAuditOptions<T>,
) -> Result<BoundaryAudit<T>> {
    let grid = field.grid();
    let Shape::Ball { radius } = grid.spec().shape else {
        return Err(Error::InvalidInput(
            "boundary audit needs a ball field".into(),
        ));
    };
    if opts.n_lat == 0 || opts.n_lon == 0 {
        return Err(Error::InvalidInput("empty sample net".into()));
    }
    let h = grid.h();
    let delta = h / lit(2.0);
    let reach = h * lit(3.5);
    let tol = lit::<T>(crate::tensor::DEFAULT_PHASE_TOL);
    let kmax = (reach / h).ceil().to_i64().unwrap_or(4);
    let center_idx = ((grid.counts()[0] - 1) / 2) as i64;
    let psi0 = params.psi(s0);

    let mut s1s = Vec::new();
    let mut s2s = Vec::new();
    let mut dn_sup = T::zero();
    let mut star = T::zero();
    for a in 0..opts.n_lat {
        let theta = T::PI() * lit((a as f64 + 0.5) / opts.n_lat as f64);
        for b in 0..opts.n_lon {
            let phi = (T::PI() + T::PI()) * lit(b as f64 / opts.n_lon as f64);
            let omega = [
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ];
            let center = vec3::scale(&omega, radius - delta * lit(1.5));
            // gather data near the ray
            let mut pts: Vec<(Vec3<T>, QTensor<T>)> = Vec::new();
            let base: [i64; 3] =
                std::array::from_fn(|k| (center[k] / h).round().to_i64().unwrap_or(0) + center_idx);
            for di in -kmax..=kmax {
                for dj in -kmax..=kmax {
                    for dk in -kmax..=kmax {
                        let Some(i) = grid.active_at([base[0] + di, base[1] + dj, base[2] + dk])
                        else {
                            continue;
                        };
                        let x = grid.position(i);
                        if vec3::norm(&vec3::sub(&x, &center)) <= reach {
                            pts.push((x, field.value(i)));
                        }
                        for c in grid.cut_range(i) {
                            let p = grid.cuts()[c].position;
                            if vec3::norm(&vec3::sub(&p, &center)) <= reach {
                                pts.push((p, field.cut_values()[c]));
                            }
                        }
                    }
                }
            }
            if let Some(q) = pts.iter().find(|(_, q)| q.biaxiality() > opts.beta_tol) {
                return Err(Error::AuditRefused(format!(
                    "biaxial data near the boundary (beta = {:e}); the boundary relation assumes a uniaxial shell",
                    q.1.biaxiality().as_f64()
                )));
            }
            let rows = pts.len();
            let mut mat = Vec::with_capacity(rows * 20);
            let mut rhs = vec![Vec::new(); 6];
            for (x, q) in &pts {
                let u = vec3::scale(&vec3::sub(x, &center), T::one() / h);
                mat.extend_from_slice(&cubic_monomials(&u));
                rhs[0].push(q.decompose(tol).s);
                for (k, v) in q.coeffs().iter().enumerate() {
                    rhs[k + 1].push(*v);
                }
            }
            let coef = least_squares(&mat, rows, 20, &rhs).ok_or_else(|| {
                Error::AuditRefused("too few data points near the boundary for a cubic fit".into())
            })?;
            let eval = |k: usize, p: &Vec3<T>| -> T {
                let u = vec3::scale(&vec3::sub(p, &center), T::one() / h);
                cubic_monomials(&u)
                    .iter()
                    .zip(&coef[k])
                    .fold(T::zero(), |acc, (m, c)| acc + *m * *c)
            };
            let mut f = [T::zero(); 4];
            let mut dirs = [[T::zero(); 3]; 3];
            for (step, slot) in f.iter_mut().enumerate() {
                let p = vec3::scale(&omega, radius - delta * lit(step as f64));
                *slot = eval(0, &p);
                if step < 3 {
                    let q = QTensor::from_coeffs(std::array::from_fn(|k| eval(k + 1, &p)));
                    dirs[step] = q.decompose(tol).n;
                }
            }
            let s1 = (lit::<T>(3.0) * f[0] - lit::<T>(4.0) * f[1] + f[2]) / (delta + delta);
            let s_rr = (lit::<T>(2.0) * f[0] - lit::<T>(5.0) * f[1] + lit::<T>(4.0) * f[2] - f[3])
                / (delta * delta);
            let s2 = s_rr / lit(2.0);
            let first = dirs[0];
            for d in dirs.iter_mut().skip(1) {
                if vec3::dot(d, &first) < T::zero() {
                    *d = vec3::scale(d, -T::one());
                }
            }
            let dn: Vec3<T> = std::array::from_fn(|k| {
                (lit::<T>(3.0) * dirs[0][k] - lit::<T>(4.0) * dirs[1][k] + dirs[2][k])
                    / (delta + delta)
            });
            dn_sup = dn_sup.max(vec3::norm(&dn));
            let r2 = radius * radius;
            let disc = (r2 * s2 + radius * s1 - lit::<T>(3.0) * s0 - r2 * psi0 / lit(2.0)).abs();
            star = star.max(disc);
            s1s.push(s1);
            s2s.push(s2);
        }
    }
    let count = lit::<T>(s1s.len() as f64);
    let mean = |v: &[T]| v.iter().fold(T::zero(), |a, b| a + *b) / count;
    let s1_mean = mean(&s1s);
    let s1_std = (s1s
        .iter()
        .map(|v| (*v - s1_mean) * (*v - s1_mean))
        .fold(T::zero(), |a, b| a + b)
        / count)
        .sqrt();
    let mut flags = Vec::new();
    if star > lit(1e-2) {
        flags.push(format!(
            "boundary relation violated by {:.3e}: not an equilibrium of the radial problem",
            star.as_f64()
        ));
    }
    Ok(BoundaryAudit {
        samples: s1s.len(),
        dn_sup,
        s1_mean,
        s1_std,
        s2_mean: mean(&s2s),
        star1_discrepancy: star,
        flags,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentSummary<T> {
    pub id: usize,
    pub nodes: usize,
    pub spread: T,
}

/// Combined diagnostics of one field.
#[derive(Clone, Debug, Serialize)]
pub struct AuditReport<T> {
    pub beta_max: T,
    pub beta_mean: T,
    /// `[isotropic, uniaxial, biaxial]`.
    pub phase_fractions: [T; 3],
    pub components: Vec<ComponentSummary<T>>,
    pub uniaxial_constant: bool,
    pub dichotomy_holds: bool,
    pub symmetry_deviation: Option<T>,
    pub star1_discrepancy: Option<T>,
    pub boundary: Option<BoundaryAudit<T>>,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct AuditOptions<T> {
    pub tol: T,
    pub angle_tol: T,
    pub symmetry_samples: usize,
    pub boundary: BoundaryAuditOptions<T>,
}

impl<T: Real> Default for AuditOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-6),
            angle_tol: lit(1e-3),
            symmetry_samples: 32,
            boundary: BoundaryAuditOptions::default(),
        }
    }
}

/// Runs every diagnostic that applies to the field's domain. On balls the
/// boundary relation uses `s0`, or the mean boundary order parameter when
/// `s0` is `None`.
pub fn audit_field<T: Real>(
    field: &QField<T>,
    params: &MaterialParams<T>,
    s0: Option<T>,
    opts: &AuditOptions<T>,
) -> Result<AuditReport<T>> {
    let grid = field.grid();
    let cls = classify_field(field, opts.tol);
    let betas: Vec<T> = (0..grid.len()).map(|i| cls.beta.value(i)).collect();
    let beta_max = betas.iter().copied().fold(T::zero(), T::max);
    let beta_mean = betas.iter().fold(T::zero(), |a, b| a + *b) / lit(betas.len().max(1) as f64);
    let constancy = director_constancy(field, opts.tol, opts.angle_tol);
    let mut flags = constancy.flags.clone();
    let mut report = AuditReport {
        beta_max,
        beta_mean,
        phase_fractions: cls.fractions(),
        components: constancy
            .components
            .iter()
            .map(|c| ComponentSummary {
                id: c.id,
                nodes: c.nodes,
                spread: c.spread,
            })
            .collect(),
        uniaxial_constant: constancy.uniaxial_constant,
        dichotomy_holds: constancy.dichotomy_holds,
        symmetry_deviation: None,
        star1_discrepancy: None,
        boundary: None,
        flags: Vec::new(),
    };
    if matches!(grid.spec().shape, Shape::Ball { .. }) {
        report.symmetry_deviation = Some(symmetry_deviation(field, opts.symmetry_samples)?);
        let s0 = s0.unwrap_or_else(|| {
            let vals: Vec<T> = field
                .cut_values()
                .iter()
                .map(|q| q.decompose(opts.tol).s)
                .collect();
            vals.iter().fold(T::zero(), |a, b| a + *b) / lit(vals.len().max(1) as f64)
        });
        match boundary_audit(field, params, s0, &opts.boundary) {
            Ok(b) => {
                report.star1_discrepancy = Some(b.star1_discrepancy);
                flags.extend(b.flags.iter().cloned());
                report.boundary = Some(b);
            }
            Err(Error::AuditRefused(msg)) => flags.push(format!("boundary audit refused: {msg}")),
            Err(e) => return Err(e),
        }
    }
    report.flags = flags;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::{DomainSpec, Grid};

    fn grid(shape: Shape<f64>, h: f64) -> Arc<Grid<f64>> {
        Arc::new(Grid::build(DomainSpec::new(shape, h)).unwrap())
    }

    #[test]
    fn constant_and_zero_fields() {
        let g = grid(Shape::Rectangle { lx: 1.0, ly: 1.0 }, 0.125);
        let q = QTensor::uniaxial(0.5, &[0.0, 0.0, 1.0]).unwrap();
        let f = QField::from_fn(g.clone(), |_| q);
        let c = classify_field(&f, 1e-9);
        assert_eq!(c.fractions(), [0.0, 1.0, 0.0]);
        assert_eq!(c.components.len(), 1);
        let d = director_constancy(&f, 1e-9, 1e-3);
        assert_eq!(d.components[0].spread, 0.0);
        assert!(d.uniaxial_constant && d.dichotomy_holds);

        let z = QField::zeros(g);
        let c = classify_field(&z, 1e-9);
        assert_eq!(c.fractions(), [1.0, 0.0, 0.0]);
        assert!(c.components.is_empty());
    }

    #[test]
    fn two_blobs_with_different_directors() {
        let g = grid(Shape::Interval { length: 1.0 }, 1.0 / 16.0);
        let f = QField::from_fn(g, |x| {
            if x[0] < 0.3 {
                QTensor::uniaxial(0.5, &[1.0, 0.0, 0.0]).unwrap()
            } else if x[0] > 0.7 {
                QTensor::uniaxial(0.5, &[0.0, 0.0, 1.0]).unwrap()
            } else {
                QTensor::zero()
            }
        });
        let d = director_constancy(&f, 1e-9, 1e-3);
        assert_eq!(d.components.len(), 2);
        assert!(d.components.iter().all(|c| c.spread == 0.0));
        assert!(d.uniaxial_constant);
        assert_eq!(d.flags.len(), 1);
    }

    #[test]
    fn twist_spread_is_right_angle() {
        let g = grid(Shape::Interval { length: 1.0 }, 1.0 / 64.0);
        let pi = std::f64::consts::PI;
        let f = QField::from_fn(g, |x| {
            QTensor::uniaxial(0.5, &[(pi * x[0]).cos(), (pi * x[0]).sin(), 0.0]).unwrap()
        });
        let d = director_constancy(&f, 1e-9, 1e-3);
        assert_eq!(d.components.len(), 1);
        assert!((d.components[0].spread - pi / 2.0).abs() < 1e-9);
        assert!(!d.uniaxial_constant && !d.dichotomy_holds);
    }

    #[test]
    fn sign_flips_do_not_change_spread() {
        let g = grid(Shape::Interval { length: 1.0 }, 1.0 / 32.0);
        let f = QField::from_fn(g, |x| {
            QTensor::uniaxial(0.5, &[x[0].cos(), 0.0, x[0].sin()]).unwrap()
        });
        let g2 = f.grid().clone();
        let flipped = QField::from_fn(g2, |x| {
            let s = if (x[0] * 32.0).round() as i64 % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            QTensor::uniaxial(0.5, &[s * x[0].cos(), 0.0, s * x[0].sin()]).unwrap()
        });
        let a = director_constancy(&f, 1e-9, 1e-3);
        let b = director_constancy(&flipped, 1e-9, 1e-3);
        assert!((a.components[0].spread - b.components[0].spread).abs() < 1e-14);
    }

    #[test]
    fn constant_director_on_ball_is_not_symmetric() {
        let g = grid(Shape::Ball { radius: 1.0 }, 0.25);
        let q = QTensor::uniaxial(1.0, &[0.0, 0.0, 1.0]).unwrap();
        let f = QField::from_fn(g, |_| q);
        assert!(symmetry_deviation(&f, 8).unwrap() >= 0.5);
    }

    #[test]
    fn rotations_are_well_spread() {
        let rs = sampled_rotations::<f64>(64);
        assert_eq!(rs.len(), 64);
        // mean of g e_z should be near zero for a uniform sample
        let mut m = [0.0; 3];
        for r in &rs {
            m = vec3::add(&m, &r.apply(&[0.0, 0.0, 1.0]));
        }
        assert!(vec3::norm(&m) / 64.0 < 0.15);
    }
}
