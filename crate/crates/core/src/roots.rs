//! Bracketing root finding and unimodal maximisation on the real line.

use crate::scalar::Scalar;

/// Outcome of a bisection: the final bracket and the point reported as the root.
#[derive(Debug, Clone, Copy)]
pub struct Bracket<T> {
    pub lo: T,
    pub hi: T,
    pub root: T,
    pub iterations: usize,
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Only the sign of `f` is used, so infinite values at an endpoint are fine.
/// `f(lo)` and `f(hi)` must have opposite (weak) signs; the caller checks that.
/// Stops when the bracket is narrower than `rel_tol * max(|lo|, |hi|) + abs_tol`
/// or when the midpoint collides with an endpoint.
pub fn bisect<T, F>(mut f: F, mut lo: T, mut hi: T, rel_tol: T, abs_tol: T, max_iter: usize) -> Bracket<T>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let two = T::lit(2.0);
    let lo_positive = f(lo) > T::zero();
    let mut iterations = 0;
    while iterations < max_iter {
        let width = hi - lo;
        if width <= rel_tol * lo.abs().max(hi.abs()) + abs_tol {
            break;
        }
        let mid = lo + width / two;
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let fm = f(mid);
        if fm == T::zero() {
            return Bracket {
                lo: mid,
                hi: mid,
                root: mid,
                iterations,
            };
        }
        if (fm > T::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Bracket {
        lo,
        hi,
        root: lo + (hi - lo) / two,
        iterations,
    }
}

/// Golden-section search for the maximiser of a unimodal `f` on `[lo, hi]`.
pub fn golden_max<T, F>(mut f: F, mut lo: T, mut hi: T, tol: T) -> T
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..300 {
        if hi - lo <= tol * (T::one() + lo.abs().max(hi.abs())) {
            break;
        }
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// Inverse of a continuous increasing function by bisection on `[0, ∞)`,
/// growing the upper end geometrically from `start`.
pub fn invert_increasing<T, F>(mut f: F, target: T, start: T, cap: T) -> Option<T>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    if target <= f(T::zero()) {
        return Some(T::zero());
    }
    let mut hi = start.max(T::epsilon());
    while f(hi) < target {
        hi = hi * T::lit(2.0);
        if hi > cap || !hi.is_finite() {
            return None;
        }
    }
    let b = bisect(|x| f(x) - target, T::zero(), hi, T::resolution(), T::zero(), 400);
    Some(b.root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let b = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-15, 0.0, 200);
        assert!((b.root - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bisect_only_uses_signs() {
        let b = bisect(
            |x: f64| if x < 0.3 { f64::INFINITY } else { -1.0 },
            0.0,
            1.0,
            1e-15,
            0.0,
            200,
        );
        assert!((b.root - 0.3).abs() < 1e-14);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let x = golden_max(|x: f64| -(x - 0.7) * (x - 0.7), 0.0, 2.0, 1e-12);
        assert!((x - 0.7).abs() < 1e-6);
    }

    #[test]
    fn inverse_of_square() {
        let x = invert_increasing(|x: f64| x * x, 9.0, 0.5, 1e6).unwrap();
        assert!((x - 3.0).abs() < 1e-12);
        assert!(invert_increasing(|x: f64| x.min(1.0), 2.0, 0.5, 1e3).is_none());
    }
}
