//! Frame-invariant bulk free energy `phi(tr Q^2, tr Q^3)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::scalar::{lit, Real};
use crate::tensor::QTensor;
use crate::util::halton;

/// Real function of the two invariants `(x, y) = (tr Q^2, tr Q^3)`.
pub type InvariantFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// User-supplied potential with its partial derivatives.
///
/// The callbacks must be reentrant. Nothing checks that they are mutually
/// consistent or analytic; that is the caller's responsibility.
#[derive(Clone)]
pub struct CustomBulk<T> {
    pub phi: InvariantFn<T>,
    pub d1: InvariantFn<T>,
    pub d2: InvariantFn<T>,
    /// Interval searched by [`BulkPotential::stationary_s`].
    pub bracket: Option<(T, T)>,
}

impl<T> fmt::Debug for CustomBulk<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomBulk").finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum BulkPotential<T> {
    /// `phi(x, y) = -a x - b y + c x^2`.
    Quartic {
        a: T,
        b: T,
        c: T,
    },
    Custom(CustomBulk<T>),
}

impl<T: Real> BulkPotential<T> {
    pub fn quartic(a: T, b: T, c: T) -> Self {
        BulkPotential::Quartic { a, b, c }
    }

    pub fn phi(&self, x: T, y: T) -> T {
        match self {
            BulkPotential::Quartic { a, b, c } => -*a * x - *b * y + *c * x * x,
            BulkPotential::Custom(f) => (f.phi)(x, y),
        }
    }

    /// Partial derivative with respect to `tr Q^2`.
    pub fn d1(&self, x: T, y: T) -> T {
        match self {
            BulkPotential::Quartic { a, c, .. } => -*a + lit::<T>(2.0) * *c * x,
            BulkPotential::Custom(f) => (f.d1)(x, y),
        }
    }

    /// Partial derivative with respect to `tr Q^3`.
    pub fn d2(&self, x: T, y: T) -> T {
        match self {
            BulkPotential::Quartic { b, .. } => -*b,
            BulkPotential::Custom(f) => (f.d2)(x, y),
        }
    }

    /// Bulk energy density of `q`.
    pub fn density(&self, q: &QTensor<T>) -> T {
        let (x, y) = q.invariants();
        self.phi(x, y)
    }

    /// `2 d1 Q + 3 d2 (Q^2 - |Q|^2/3 I)`, the bulk term of the equilibrium
    /// equation. It is also the gradient of the density with respect to the
    /// five basis coefficients.
    pub fn bulk_gradient(&self, q: &QTensor<T>) -> QTensor<T> {
        let (x, y) = q.invariants();
        let g1 = lit::<T>(2.0) * self.d1(x, y);
        let g2 = lit::<T>(3.0) * self.d2(x, y);
        q.scale(g1) + q.square_traceless().scale(g2)
    }

    /// `2 |Q|^2 d1 + 3 d2 tr(Q^3)`.
    pub fn growth_expression(&self, q: &QTensor<T>) -> T {
        let (x, y) = q.invariants();
        lit::<T>(2.0) * x * self.d1(x, y) + lit::<T>(3.0) * self.d2(x, y) * y
    }

    /// Sampled check of the growth condition on `|Q| in [m, 4m]`.
    ///
    /// Directions come from a Halton sequence mapped to the unit sphere of
    /// the 5-dimensional space, plus both uniaxial extremes of `tr Q^3`.
    /// Passing is a necessary condition only.
    pub fn growth_check(&self, m: T, samples: usize) -> bool {
        if !(m > T::zero()) || samples == 0 {
            return false;
        }
        let ez = [T::zero(), T::zero(), T::one()];
        let uni = QTensor::uniaxial_unchecked(T::one(), &ez);
        let uni = uni.scale(T::one() / uni.norm());
        for factor in [1.0, 2.0, 4.0] {
            for sign in [1.0, -1.0] {
                let q = uni.scale(m * lit(factor * sign));
                if self.growth_expression(&q) < T::zero() {
                    return false;
                }
            }
        }
        for i in 0..samples {
            let u = halton::<T, 7>(i as u64 + 1);
            let g = gaussian_5(&u);
            let len = g.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
            if !(len > T::zero()) {
                continue;
            }
            let radius = m * (T::one() + lit::<T>(3.0) * u[6]);
            let q = QTensor::from_coeffs(g.map(|v| v / len * radius));
            if self.growth_expression(&q) < T::zero() {
                return false;
            }
        }
        true
    }

    /// Smallest sampled radius `M` (up to bisection accuracy, approached from
    /// above) for which [`growth_check`](Self::growth_check) passes.
    pub fn growth_threshold(&self, samples: usize) -> Option<T> {
        let mut hi = lit::<T>(1e-6);
        let mut lo = T::zero();
        let mut found = false;
        for _ in 0..80 {
            if self.growth_check(hi, samples) {
                found = true;
                break;
            }
            lo = hi;
            hi = hi * lit(2.0);
        }
        if !found {
            return None;
        }
        if lo == T::zero() {
            return Some(hi);
        }
        for _ in 0..50 {
            let mid = (lo + hi) / lit(2.0);
            if self.growth_check(mid, samples) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }

    /// Real roots of `psi(s) = 0`, ascending. The roots do not depend on the
    /// elastic constant.
    pub fn stationary_s(&self) -> Result<Vec<T>> {
        match self {
            BulkPotential::Quartic { a, b, c } => {
                if !(*c > T::zero()) {
                    return Err(Error::Unsupported(
                        "closed-form stationary values need c > 0".into(),
                    ));
                }
                // psi(s) = s (-2a - b s + 8c/3 s^2)
                let disc = lit::<T>(9.0) * *b * *b + lit::<T>(192.0) * *a * *c;
                let mut roots = vec![T::zero()];
                if disc >= T::zero() {
                    let sq = disc.sqrt();
                    let den = lit::<T>(16.0) * *c;
                    roots.push((lit::<T>(3.0) * *b - sq) / den);
                    roots.push((lit::<T>(3.0) * *b + sq) / den);
                }
                Ok(sorted_unique(roots))
            }
            BulkPotential::Custom(f) => {
                let (lo, hi) = f.bracket.ok_or_else(|| {
                    Error::Unsupported("custom potential needs a search bracket".into())
                })?;
                if !(hi > lo) {
                    return Err(invalid("empty search bracket"));
                }
                let psi = |s: T| self.psi_numerator(s);
                Ok(bracketed_roots(psi, lo, hi, 2000))
            }
        }
    }

    /// `2 s d1 + s^2 d2` evaluated on the uniaxial invariants; `L psi(s)`.
    fn psi_numerator(&self, s: T) -> T {
        let x = lit::<T>(2.0) / lit(3.0) * s * s;
        let y = lit::<T>(2.0) / lit(9.0) * s * s * s;
        lit::<T>(2.0) * s * self.d1(x, y) + s * s * self.d2(x, y)
    }

    /// Bulk density of a uniaxial tensor with scalar order parameter `s`.
    pub fn uniaxial_density(&self, s: T) -> T {
        let x = lit::<T>(2.0) / lit(3.0) * s * s;
        let y = lit::<T>(2.0) / lit(9.0) * s * s * s;
        self.phi(x, y)
    }
}

/// Elastic constant and bulk potential.
#[derive(Clone, Debug)]
pub struct MaterialParams<T> {
    l: T,
    pub bulk: BulkPotential<T>,
}

impl<T: Real> MaterialParams<T> {
    pub fn new(l: T, bulk: BulkPotential<T>) -> Result<Self> {
        if !(l > T::zero()) || !l.is_finite() {
            return Err(invalid(format!(
                "elastic constant must be positive, got {l}"
            )));
        }
        if let BulkPotential::Quartic { a, b, c } = &bulk {
            if !(a.is_finite() && b.is_finite() && c.is_finite()) {
                return Err(invalid("bulk coefficients must be finite"));
            }
        }
        Ok(Self { l, bulk })
    }

    /// `a = b = c = L = 1`; arbitrary but fixed reference values.
    pub fn reference() -> Self {
        Self {
            l: T::one(),
            bulk: BulkPotential::quartic(T::one(), T::one(), T::one()),
        }
    }

    pub fn elastic(&self) -> T {
        self.l
    }

    pub fn with_elastic(&self, l: T) -> Result<Self> {
        Self::new(l, self.bulk.clone())
    }

    /// `psi(s) = (2 s d1 + s^2 d2) / L` at the uniaxial invariants of `s`.
    pub fn psi(&self, s: T) -> T {
        self.bulk.psi_numerator(s) / self.l
    }

    /// Derivative of [`psi`](Self::psi); exact for the quartic potential,
    /// central difference otherwise.
    pub fn psi_prime(&self, s: T) -> T {
        match &self.bulk {
            BulkPotential::Quartic { a, b, c } => {
                (-lit::<T>(2.0) * *a - lit::<T>(2.0) * *b * s + lit::<T>(8.0) * *c * s * s) / self.l
            }
            BulkPotential::Custom(_) => {
                let h = T::epsilon().cbrt() * (T::one() + s.abs());
                (self.psi(s + h) - self.psi(s - h)) / (h + h)
            }
        }
    }

    /// Largest stationary scalar order parameter, the reference value used
    /// for anchoring presets.
    pub fn preferred_s(&self) -> Result<T> {
        let roots = self.bulk.stationary_s()?;
        roots
            .into_iter()
            .filter(|s| *s != T::zero())
            .max_by(|a, b| {
                a.abs()
                    .partial_cmp(&b.abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .ok_or_else(|| Error::Unsupported("potential has no ordered stationary state".into()))
    }
}

fn sorted_unique<T: Real>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * (T::one() + a.abs()));
    v
}

fn bracketed_roots<T: Real>(f: impl Fn(T) -> T, lo: T, hi: T, cells: usize) -> Vec<T> {
    let mut roots = Vec::new();
    let step = (hi - lo) / lit(cells as f64);
    let mut x0 = lo;
    let mut f0 = f(x0);
    if f0 == T::zero() {
        roots.push(x0);
    }
    for i in 1..=cells {
        let x1 = if i == cells {
            hi
        } else {
            lo + step * lit(i as f64)
        };
        let f1 = f(x1);
        if f1 == T::zero() {
            roots.push(x1);
        } else if f0 * f1 < T::zero() {
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            for _ in 0..200 {
                let m = (a + b) / lit(2.0);
                let fm = f(m);
                if fm == T::zero() || (b - a).abs() <= T::epsilon() * (T::one() + m.abs()) {
                    a = m;
                    b = m;
                    break;
                }
                if fa * fm < T::zero() {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            roots.push((a + b) / lit(2.0));
        }
        x0 = x1;
        f0 = f1;
    }
    sorted_unique(roots)
}

/// Five standard normals from six uniforms (Box-Muller).
fn gaussian_5<T: Real>(u: &[T; 7]) -> [T; 5] {
    let tiny = lit::<T>(1e-300).max(T::min_positive_value());
    let mut g = [T::zero(); 6];
    for k in 0..3 {
        let r = (-lit::<T>(2.0) * u[2 * k].max(tiny).ln()).sqrt();
        let (s, c) = (lit::<T>(2.0) * T::PI() * u[2 * k + 1]).sin_cos();
        g[2 * k] = r * c;
        g[2 * k + 1] = r * s;
    }
    [g[0], g[1], g[2], g[3], g[4]]
}
