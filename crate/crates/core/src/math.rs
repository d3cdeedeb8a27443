//! Small numerical helpers: deterministic reductions, periodic arithmetic,
//! a Gaussian tail bound, least squares, and a dense Hermitian eigensolver.

use crate::C64;

/// Below this length a straight loop is used; above it the sum is split in
/// half recursively. Keeps the reduction tree, and therefore the rounding,
/// independent of how callers chunk their data.
const PAIRWISE_CUTOFF: usize = 32;

/// Pairwise (cascade) summation of real values.
///
/// Error grows like `O(log n)` in ulps instead of `O(n)`, and the result is a
/// pure function of the slice contents — no accumulator-order dependence.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_CUTOFF {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Pairwise summation of complex values.
pub fn pairwise_sum_c64(xs: &[C64]) -> C64 {
    if xs.len() <= PAIRWISE_CUTOFF {
        let mut acc = C64::new(0.0, 0.0);
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum_c64(&xs[..mid]) + pairwise_sum_c64(&xs[mid..])
    }
}

/// Pairwise-summed dot product `Σ conj(a_i)·b_i`.
pub fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len(), "dot_conj: length mismatch");
    fn go(a: &[C64], b: &[C64]) -> C64 {
        if a.len() <= PAIRWISE_CUTOFF {
            let mut acc = C64::new(0.0, 0.0);
            for (x, y) in a.iter().zip(b) {
                acc += x.conj() * y;
            }
            acc
        } else {
            let mid = a.len() / 2;
            go(&a[..mid], &b[..mid]) + go(&a[mid..], &b[mid..])
        }
    }
    go(a, b)
}

/// Wrap a displacement into the minimum image on `[-π, π)`.
pub fn min_image(d: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = d.rem_euclid(two_pi);
    if r >= std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Wrap an absolute coordinate into `[-π, π)`.
pub fn wrap_position(x: f64) -> f64 {
    min_image(x)
}

/// Complementary error function, Abramowitz–Stegun 7.1.26 rational fit.
/// Absolute error below 1.5e-7, which is plenty for tail-mass *guards*;
/// not intended for high-precision work.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    poly * (-x * x).exp()
}

/// Probability mass of a normal distribution with variance `var` lying
/// farther than `cut` from its mean (both tails).
pub fn gaussian_tail_mass(var: f64, cut: f64) -> f64 {
    erfc(cut / (2.0 * var).sqrt())
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = pairwise_sum(x) / n;
    let my = pairwise_sum(y) / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    sxy / sxx
}

/// Eigenvalues of a dense Hermitian matrix (row-major, `n x n`).
///
/// The complex problem `H = A + iB` is embedded as the real symmetric
/// `2n x 2n` block matrix `[[A, -B], [B, A]]`, whose spectrum is that of `H`
/// with every eigenvalue doubled, and solved by cyclic Jacobi rotations.
/// Intended for the small matrices of the oracle paths (`n ≤ 64`), where
/// robustness matters more than speed. Returns eigenvalues in ascending order.
pub fn hermitian_eigenvalues(h: &[C64], n: usize) -> Vec<f64> {
    assert_eq!(h.len(), n * n, "hermitian_eigenvalues: bad shape");
    let m = 2 * n;
    let mut a = vec![0.0f64; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[i * n + j];
            a[i * m + j] = z.re;
            a[(i + n) * m + (j + n)] = z.re;
            a[i * m + (j + n)] = -z.im;
            a[(i + n) * m + j] = z.im;
        }
    }
    jacobi_eigenvalues(&mut a, m)
        .chunks(2)
        .map(|pair| 0.5 * (pair[0] + pair[1]))
        .collect()
}

/// Cyclic Jacobi eigenvalue iteration for a dense symmetric matrix.
/// Destroys `a`; returns eigenvalues ascending.
fn jacobi_eigenvalues(a: &mut [f64], n: usize) -> Vec<f64> {
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[i * n + j] * a[i * n + j];
            }
        }
        s
    };
    let scale: f64 = (0..n).map(|i| a[i * n + i].abs()).fold(1e-300, f64::max);
    let tol = (scale * 1e-14) * (scale * 1e-14) * n as f64;
    for _sweep in 0..60 {
        if off(a) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= scale * 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                // tan of the rotation angle, smaller root for stability
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}
