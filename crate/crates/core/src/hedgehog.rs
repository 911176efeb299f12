//! Radial hedgehog: the profile ODE
//! `s'' + 2 s'/r - 6 s/r^2 = psi(s)`, `s(0) = 0`, `s(R) = s0`,
//! and its spherically symmetric lift `Q = s(r) (x/r x/r - I/3)`.
//!
//! Near the origin the linear part has solutions `r^2` and `r^-3`; only the
//! regular branch `s ~ C r^2` is compatible with `s(0) = 0`.

use std::sync::Arc;

use serde::Serialize;

use crate::bulk::MaterialParams;
use crate::error::{invalid, Error, Result};
use crate::grid::{radial_bc, Field, Grid, QField};
use crate::scalar::{lit, Real};
use crate::tensor::QTensor;
use crate::util::solve_tridiagonal;
use crate::vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProfileMethod {
    Shooting,
    Collocation,
}

impl std::str::FromStr for ProfileMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "shooting" => Ok(ProfileMethod::Shooting),
            "collocation" => Ok(ProfileMethod::Collocation),
            _ => Err(invalid(format!(
                "unknown method '{s}' (shooting, collocation)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HedgehogProfile<T> {
    /// Uniform radii `0 = r_0 < ... < r_{N-1} = R`.
    pub r: Vec<T>,
    pub s: Vec<T>,
    /// `ds/dr` at `r = R`.
    pub s1: T,
    pub params: MaterialParams<T>,
    pub s0: T,
    pub radius: T,
    pub method: ProfileMethod,
    /// Shooting only: every `C` in `s ~ C r^2` that hits `s(R) = s0`.
    pub shooting_roots: Vec<T>,
    pub flags: Vec<String>,
}

impl<T: Real> HedgehogProfile<T> {
    pub fn spacing(&self) -> T {
        self.radius / lit((self.r.len() - 1) as f64)
    }

    /// Cubic Lagrange interpolation of the profile; `r` is clamped to
    /// `[0, R]`.
    pub fn value_at(&self, r: T) -> T {
        let n = self.r.len();
        let dr = self.spacing();
        let u = (r / dr).max(T::zero()).min(lit((n - 1) as f64));
        let k = u.floor().to_usize().unwrap_or(0).min(n - 2);
        let start = k.saturating_sub(1).min(n - 4);
        let mut acc = T::zero();
        for a in 0..4 {
            let ia = start + a;
            let mut w = T::one();
            for b in 0..4 {
                if a != b {
                    let ib = start + b;
                    w = w * (u - lit(ib as f64)) / lit(ia as f64 - ib as f64);
                }
            }
            acc = acc + w * self.s[ia];
        }
        acc
    }
}

fn ode_rhs<T: Real>(params: &MaterialParams<T>, r: T, s: T, ds: T) -> T {
    params.psi(s) - lit::<T>(2.0) * ds / r + lit::<T>(6.0) * s / (r * r)
}

/// Integrates from `r = R 1e-6` with `s = C r^2`, recording `s` at the grid
/// radii. Returns `(samples, s'(R))`, or `None` if the solution blows up.
fn shoot<T: Real>(params: &MaterialParams<T>, c: T, radius: T, n: usize) -> Option<(Vec<T>, T)> {
    let dr = radius / lit((n - 1) as f64);
    let eps = radius * lit(1e-6);
    let mut r = eps;
    let mut s = c * eps * eps;
    let mut ds = lit::<T>(2.0) * c * eps;
    let mut out = vec![T::zero(); n];
    let blow = lit::<T>(1e8) * (T::one() + c.abs() * radius * radius);
    for (i, slot) in out.iter_mut().enumerate().skip(1) {
        let target = dr * lit(i as f64);
        while r < target {
            let step = (lit::<T>(0.01) * r).min(dr).min(target - r);
            let f = |r: T, s: T, ds: T| (ds, ode_rhs(params, r, s, ds));
            let half = step / lit(2.0);
            let (k1s, k1d) = f(r, s, ds);
            let (k2s, k2d) = f(r + half, s + half * k1s, ds + half * k1d);
            let (k3s, k3d) = f(r + half, s + half * k2s, ds + half * k2d);
            let (k4s, k4d) = f(r + step, s + step * k3s, ds + step * k3d);
            let sixth = step / lit(6.0);
            s = s + sixth * (k1s + lit::<T>(2.0) * (k2s + k3s) + k4s);
            ds = ds + sixth * (k1d + lit::<T>(2.0) * (k2d + k3d) + k4d);
            r = if target - r <= step { target } else { r + step };
            if !s.is_finite() || s.abs() > blow {
                return None;
            }
        }
        *slot = s;
    }
    Some((out, ds))
}

/// Solves the hedgehog profile on `nodes` uniform radii.
pub fn solve_profile<T: Real>(
    params: &MaterialParams<T>,
    s0: T,
    radius: T,
    nodes: usize,
    method: ProfileMethod,
) -> Result<HedgehogProfile<T>> {
    if nodes < 32 {
        return Err(invalid(format!(
            "need at least 32 radial nodes, got {nodes}"
        )));
    }
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(invalid("radius must be positive"));
    }
    if !s0.is_finite() {
        return Err(invalid("s0 must be finite"));
    }
    let dr = radius / lit((nodes - 1) as f64);
    let r: Vec<T> = (0..nodes).map(|i| dr * lit(i as f64)).collect();
    let mut profile = HedgehogProfile {
        r,
        s: vec![T::zero(); nodes],
        s1: T::zero(),
        params: params.clone(),
        s0,
        radius,
        method,
        shooting_roots: Vec::new(),
        flags: Vec::new(),
    };
    if s0 == T::zero() {
        profile
            .flags
            .push("s0 = 0: the isotropic profile s = 0 is returned".into());
        return Ok(profile);
    }
    match method {
        ProfileMethod::Shooting => shooting(&mut profile)?,
        ProfileMethod::Collocation => collocation(&mut profile)?,
    }
    Ok(profile)
}

fn shooting<T: Real>(p: &mut HedgehogProfile<T>) -> Result<()> {
    let n = p.r.len();
    let (s0, radius) = (p.s0, p.radius);
    let params = p.params.clone();
    let miss = |c: T| -> T {
        match shoot(&params, c, radius, n) {
            Some((s, _)) => s[n - 1] - s0,
            None => {
                if c > T::zero() {
                    T::infinity()
                } else {
                    T::neg_infinity()
                }
            }
        }
    };
    let span = lit::<T>(10.0) * s0.abs() / (radius * radius);
    let cells = 64;
    let cs: Vec<T> = (0..=cells)
        .map(|k| -span + lit::<T>(2.0) * span * lit(k as f64 / cells as f64))
        .collect();
    let gs: Vec<T> = cs.iter().map(|&c| miss(c)).collect();
    let mut roots = Vec::new();
    for k in 0..cells {
        let (a, b) = (gs[k], gs[k + 1]);
        if a == T::zero() {
            roots.push(cs[k]);
        } else if a.signum() != b.signum() && b != T::zero() {
            roots.push(refine(&miss, cs[k], cs[k + 1], a, b, s0));
        }
    }
    if gs[cells] == T::zero() {
        roots.push(cs[cells]);
    }
    if roots.is_empty() {
        return Err(Error::NoConvergence(format!(
            "no shooting bracket for C in [{}, {}]",
            -span, span
        )));
    }
    let guess = s0 / (radius * radius);
    let c = *roots
        .iter()
        .min_by(|a, b| {
            (**a - guess)
                .abs()
                .partial_cmp(&(**b - guess).abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("non-empty");
    if roots.len() > 1 {
        p.flags.push(format!(
            "{} shooting roots found; using C = {c} (closest to s0/R^2)",
            roots.len()
        ));
    }
    let (mut s, s1) = shoot(&params, c, radius, n).expect("root was integrable");
    s[0] = T::zero();
    s[n - 1] = s0;
    p.s = s;
    p.s1 = s1;
    p.shooting_roots = roots;
    Ok(())
}

/// Illinois-modified regula falsi on a sign-changing bracket.
fn refine<T: Real>(f: &impl Fn(T) -> T, mut a: T, mut b: T, mut fa: T, mut fb: T, s0: T) -> T {
    let target = lit::<T>(1e-13) * (T::one() + s0.abs());
    let mut side = 0i8;
    for _ in 0..300 {
        let c = if fa.is_finite() && fb.is_finite() {
            let c = (a * fb - b * fa) / (fb - fa);
            if c > a.min(b) && c < a.max(b) {
                c
            } else {
                (a + b) / lit(2.0)
            }
        } else {
            (a + b) / lit(2.0)
        };
        let fc = f(c);
        if fc.abs() < target || (b - a).abs() <= T::epsilon() * (a.abs() + b.abs()) {
            return c;
        }
        if fc.signum() == fa.signum() {
            a = c;
            fa = fc;
            if side == -1 && fb.is_finite() {
                fb = fb / lit(2.0);
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 && fa.is_finite() {
                fa = fa / lit(2.0);
            }
            side = 1;
        }
    }
    (a + b) / lit(2.0)
}

/// Residual of the centered scheme at radius index `i`.
fn scheme_residual<T: Real>(params: &MaterialParams<T>, s: &[T], r: &[T], dr: T, i: usize) -> T {
    let two = lit::<T>(2.0);
    (s[i + 1] - two * s[i] + s[i - 1]) / (dr * dr) + (s[i + 1] - s[i - 1]) / (r[i] * dr)
        - lit::<T>(6.0) * s[i] / (r[i] * r[i])
        - params.psi(s[i])
}

fn collocation<T: Real>(p: &mut HedgehogProfile<T>) -> Result<()> {
    let n = p.r.len();
    let dr = p.spacing();
    let params = p.params.clone();
    let r = p.r.clone();
    let mut s: Vec<T> = r
        .iter()
        .map(|&ri| p.s0 * (ri / p.radius) * (ri / p.radius))
        .collect();
    s[0] = T::zero();
    s[n - 1] = p.s0;
    let norm = |s: &[T]| -> T {
        (1..n - 1)
            .map(|i| scheme_residual(&params, s, &r, dr, i).abs())
            .fold(T::zero(), T::max)
    };
    let mut res = norm(&s);
    let mut trace = vec![res];
    let tol = lit::<T>(1e-10);
    let m = n - 2;
    for _ in 0..100 {
        if res < tol {
            break;
        }
        let mut lower = vec![T::zero(); m];
        let mut diag = vec![T::zero(); m];
        let mut upper = vec![T::zero(); m];
        let mut rhs = vec![T::zero(); m];
        for k in 0..m {
            let i = k + 1;
            let inv2 = T::one() / (dr * dr);
            let adv = T::one() / (r[i] * dr);
            lower[k] = inv2 - adv;
            upper[k] = inv2 + adv;
            diag[k] =
                -lit::<T>(2.0) * inv2 - lit::<T>(6.0) / (r[i] * r[i]) - params.psi_prime(s[i]);
            rhs[k] = -scheme_residual(&params, &s, &r, dr, i);
        }
        let step = solve_tridiagonal(&lower, &diag, &upper, &rhs)
            .ok_or_else(|| Error::NoConvergence("singular Newton matrix".into()))?;
        let max_step = step.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<T> = s
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    if i == 0 || i == n - 1 {
                        v
                    } else {
                        v + lambda * step[i - 1]
                    }
                })
                .collect();
            let tr = norm(&trial);
            if tr.is_finite() && tr < res {
                s = trial;
                res = tr;
                accepted = true;
                break;
            }
            lambda = lambda / lit(2.0);
        }
        trace.push(res);
        if !accepted {
            // at the rounding floor the full step no longer lowers the residual
            if max_step <= lit::<T>(1e-13) * (T::one() + p.s0.abs()) {
                break;
            }
            return Err(Error::NoConvergence(format!(
                "damped Newton stalled; residual trace {:?}",
                trace.iter().map(|v| v.as_f64()).collect::<Vec<_>>()
            )));
        }
        if max_step * lambda <= lit::<T>(1e-15) * (T::one() + p.s0.abs()) {
            break;
        }
    }
    if !(res < tol) && !(res < lit::<T>(1e-6)) {
        return Err(Error::NoConvergence(format!(
            "Newton did not converge; residual trace {:?}",
            trace.iter().map(|v| v.as_f64()).collect::<Vec<_>>()
        )));
    }
    if !(res < tol) {
        p.flags.push(format!(
            "collocation residual {:e} limited by rounding",
            res.as_f64()
        ));
    }
    let three = lit::<T>(3.0);
    p.s1 = (three * s[n - 1] - lit::<T>(4.0) * s[n - 2] + s[n - 3]) / (lit::<T>(2.0) * dr);
    p.s = s;
    Ok(())
}

/// Centered-difference residual of the profile ODE at each radius (zero at
/// the two end points).
pub fn profile_residual<T: Real>(profile: &HedgehogProfile<T>) -> Vec<T> {
    let n = profile.r.len();
    let dr = profile.spacing();
    let mut out = vec![T::zero(); n];
    for (i, slot) in out.iter_mut().enumerate().take(n - 1).skip(1) {
        *slot = scheme_residual(&profile.params, &profile.s, &profile.r, dr, i);
    }
    out
}

/// The spherically symmetric tensor field of the profile on a ball grid of
/// the same radius. Boundary nodes and cut points carry the radial anchoring
/// values exactly.
pub fn lift_to_3d<T: Real>(profile: &HedgehogProfile<T>, grid: Arc<Grid<T>>) -> Result<QField<T>> {
    match grid.spec().shape {
        crate::grid::Shape::Ball { radius }
            if (radius - profile.radius).abs() <= lit::<T>(1e-12) * radius => {}
        _ => return Err(invalid("lift needs a ball grid with the profile's radius")),
    }
    let bc = radial_bc(profile.s0, &grid)?;
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            let r = vec3::symmetric_norm(&x);
            if r == T::zero() {
                return QTensor::zero();
            }
            let n = vec3::scale(&x, T::one() / r);
            QTensor::uniaxial_unchecked(profile.value_at(r), &n)
        })
        .collect();
    let mut field = Field::from_parts(grid.clone(), values, bc.cuts.clone())?;
    field.apply_boundary(&bc)?;
    Ok(field)
}
