//! Small numerical helpers shared by several modules.

use crate::scalar::{lit, Real};

const PRIMES: [u64; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

/// Point `index` of the `N`-dimensional Halton sequence (radical inverses in
/// the first `N` primes). Deterministic and low-discrepancy.
pub fn halton<T: Real, const N: usize>(index: u64) -> [T; N] {
    assert!(N <= PRIMES.len(), "Halton dimension too large");
    std::array::from_fn(|d| {
        let base = PRIMES[d];
        let mut f = 1.0f64;
        let mut r = 0.0f64;
        let mut i = index;
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        T::lit(r)
    })
}

/// Solves a tridiagonal system in place (Thomas algorithm).
///
/// `lower[i]` couples row `i` to `i - 1` (`lower[0]` unused), `upper[i]`
/// couples row `i` to `i + 1` (last entry unused). Returns `None` on a zero
/// pivot.
pub fn solve_tridiagonal<T: Real>(
    lower: &[T],
    diag: &[T],
    upper: &[T],
    rhs: &[T],
) -> Option<Vec<T>> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut denom = diag[0];
    if denom == T::zero() {
        return None;
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == T::zero() || !denom.is_finite() {
            return None;
        }
        c[i] = if i + 1 < n {
            upper[i] / denom
        } else {
            T::zero()
        };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] = d[i] - c[i] * d[i + 1];
    }
    Some(d)
}

/// Dense least-squares solve of `A x = b` for several right-hand sides via
/// Householder QR. `a` is row-major `rows x cols`, each `rhs[k]` has `rows`
/// entries. Returns one solution per right-hand side, or `None` when `A` is
/// numerically rank deficient.
pub fn least_squares<T: Real>(
    a: &[T],
    rows: usize,
    cols: usize,
    rhs: &[Vec<T>],
) -> Option<Vec<Vec<T>>> {
    if rows < cols {
        return None;
    }
    let mut m = a.to_vec();
    let mut bs: Vec<Vec<T>> = rhs.to_vec();
    let mut diag_max = T::zero();
    for k in 0..cols {
        let mut norm = T::zero();
        for i in k..rows {
            norm = norm + m[i * cols + k] * m[i * cols + k];
        }
        let norm = norm.sqrt();
        if norm == T::zero() {
            return None;
        }
        let alpha = if m[k * cols + k] > T::zero() {
            -norm
        } else {
            norm
        };
        let mut v: Vec<T> = (k..rows).map(|i| m[i * cols + k]).collect();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().fold(T::zero(), |s, &x| s + x * x);
        if vnorm2 > T::zero() {
            for j in k..cols {
                let dot = (k..rows).fold(T::zero(), |s, i| s + v[i - k] * m[i * cols + j]);
                let f = lit::<T>(2.0) * dot / vnorm2;
                for i in k..rows {
                    m[i * cols + j] = m[i * cols + j] - f * v[i - k];
                }
            }
            for b in bs.iter_mut() {
                let dot = (k..rows).fold(T::zero(), |s, i| s + v[i - k] * b[i]);
                let f = lit::<T>(2.0) * dot / vnorm2;
                for i in k..rows {
                    b[i] = b[i] - f * v[i - k];
                }
            }
        }
        diag_max = diag_max.max(m[k * cols + k].abs());
    }
    let cutoff = diag_max * T::epsilon() * lit((rows * cols) as f64);
    let mut out = Vec::with_capacity(bs.len());
    for b in &bs {
        let mut x = vec![T::zero(); cols];
        for k in (0..cols).rev() {
            let r = m[k * cols + k];
            if r.abs() <= cutoff {
                return None;
            }
            let mut acc = b[k];
            for j in k + 1..cols {
                acc = acc - m[k * cols + j] * x[j];
            }
            x[k] = acc / r;
        }
        out.push(x);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_first_points() {
        let p: [f64; 2] = halton(1);
        assert_eq!(p, [0.5, 1.0 / 3.0]);
        let p: [f64; 2] = halton(2);
        assert_eq!(p, [0.25, 2.0 / 3.0]);
        let p: [f64; 1] = halton(3);
        assert_eq!(p, [0.75]);
    }

    #[test]
    fn tridiagonal_matches_dense() {
        // [2 1 0; 1 3 1; 0 1 4] x = [3, 5, 5] -> x = [1, 1, 1]
        let x = solve_tridiagonal(
            &[0.0, 1.0, 1.0],
            &[2.0f64, 3.0, 4.0],
            &[1.0, 1.0, 0.0],
            &[3.0, 5.0, 5.0],
        )
        .unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn least_squares_recovers_polynomial() {
        // Fit y = 1 - 2t + 0.5 t^2 exactly from 7 samples.
        let ts: Vec<f64> = (0..7).map(|i| i as f64 * 0.3 - 1.0).collect();
        let a: Vec<f64> = ts.iter().flat_map(|&t| [1.0, t, t * t]).collect();
        let y: Vec<f64> = ts.iter().map(|&t| 1.0 - 2.0 * t + 0.5 * t * t).collect();
        let x = least_squares(&a, 7, 3, &[y]).unwrap();
        assert!((x[0][0] - 1.0).abs() < 1e-13);
        assert!((x[0][1] + 2.0).abs() < 1e-13);
        assert!((x[0][2] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn least_squares_detects_rank_deficiency() {
        let a = [1.0, 2.0, 2.0, 4.0, 3.0, 6.0];
        assert!(least_squares(&a, 3, 2, &[vec![1.0, 2.0, 3.0]]).is_none());
    }
}
