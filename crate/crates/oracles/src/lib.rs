//! Slow, independent reference computations.
//!
//! Nothing here shares code with `qsl-core`: matrices are flat row-major
//! slices, eigenvalues come from closed forms or repeated squaring, exponentials
//! from a Taylor series, and product-state extremes from a brute-force grid
//! over the Bloch sphere.

use num_complex::Complex64 as C64;

/// Eigenvalues `(low, high)` of `[[a, b], [b*, c]]`.
pub fn hermitian2_eigenvalues(a: f64, b: C64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (a + c);
    let radius = (0.25 * (a - c) * (a - c) + b.norm_sqr()).sqrt();
    (mean - radius, mean + radius)
}

/// `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`
pub fn bloch_ket(theta: f64, phi: f64) -> [C64; 2] {
    [C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)]
}

/// `<a| H |a>` on the first qubit of a two-qubit operator, as the entries
/// `(h00, h01, h11)` of the 2x2 operator left on the second qubit.
fn reduce_first(h: &[C64], a: &[C64; 2]) -> (f64, C64, f64) {
    let entry = |r: usize, c: usize| -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..2 {
            for k in 0..2 {
                s += a[i].conj() * h[(2 * i + r) * 4 + 2 * k + c] * a[k];
            }
        }
        s
    };
    (entry(0, 0).re, entry(0, 1), entry(1, 1).re)
}

/// Extreme product-state energy for a fixed first-qubit ket; the second qubit
/// is optimized exactly.
fn best_given_first(h: &[C64], theta: f64, phi: f64, maximize: bool) -> f64 {
    let (a, b, c) = reduce_first(h, &bloch_ket(theta, phi));
    let (lo, hi) = hermitian2_eigenvalues(a, b, c);
    if maximize {
        hi
    } else {
        lo
    }
}

/// `(min, max)` of `<a,b|H|a,b>` over product states of two qubits.
///
/// The first qubit is scanned on a `theta x phi` grid of `200 x 400` points,
/// the second is optimized in closed form, and the best grid point is
/// refined by a compass search.
pub fn two_qubit_product_extremes(h: &[C64]) -> (f64, f64) {
    assert_eq!(h.len(), 16, "two-qubit operator expected");
    let (nt, np) = (200usize, 400usize);
    let dt = std::f64::consts::PI / nt as f64;
    let dp = std::f64::consts::TAU / np as f64;
    let search = |maximize: bool| -> f64 {
        let sign = if maximize { 1.0 } else { -1.0 };
        let f = |t: f64, p: f64| sign * best_given_first(h, t, p, maximize);
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 0..=nt {
            for j in 0..np {
                let (t, p) = (i as f64 * dt, j as f64 * dp);
                let v = f(t, p);
                if v > best.0 {
                    best = (v, t, p);
                }
            }
        }
        let (mut v, mut t, mut p) = best;
        let mut step = dt;
        while step > 1e-12 {
            let mut improved = false;
            for (dt_, dp_) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                let w = f(t + dt_, p + dp_);
                if w > v {
                    v = w;
                    t += dt_;
                    p += dp_;
                    improved = true;
                    break;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        sign * v
    };
    (search(false), search(true))
}

fn matmul(a: &[C64], b: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let x = a[i * n + k];
            for j in 0..n {
                out[i * n + j] += x * b[k * n + j];
            }
        }
    }
    out
}

/// `exp(-i t H)` by scaling and squaring of a Taylor series.
pub fn expm_taylor(h: &[C64], n: usize, t: f64) -> Vec<C64> {
    let norm: f64 = h.iter().map(|z| z.norm()).sum::<f64>() * t.abs();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = t / 2f64.powi(squarings as i32);
    let a: Vec<C64> = h.iter().map(|z| z * C64::new(0.0, -scale)).collect();
    let mut result = vec![C64::new(0.0, 0.0); n * n];
    let mut term = result.clone();
    for i in 0..n {
        result[i * n + i] = C64::new(1.0, 0.0);
        term[i * n + i] = C64::new(1.0, 0.0);
    }
    for k in 1..40 {
        term = matmul(&term, &a, n).into_iter().map(|z| z / k as f64).collect();
        result.iter_mut().zip(&term).for_each(|(r, t)| *r += t);
    }
    for _ in 0..squarings {
        result = matmul(&result, &result, n);
    }
    result
}

/// Largest singular value of `A`, from repeated squaring of `A^+ A`.
///
/// Each squaring doubles the power, so after 64 rounds every direction
/// outside the top eigenspace is suppressed by `(s_2/s_1)^(2^65)` even for
/// nearly degenerate singular values, where plain power iteration stalls.
/// The largest column of the result lies in the top eigenspace, and its
/// Rayleigh quotient with `A^+ A` gives `s_1^2`.
pub fn power_spectral_norm(m: &[C64], n: usize) -> f64 {
    let adjoint: Vec<C64> = (0..n * n).map(|k| m[(k % n) * n + k / n].conj()).collect();
    let gram = matmul(&adjoint, m, n);
    let trace = |p: &[C64]| (0..n).map(|i| p[i * n + i].re).sum::<f64>();
    let t0 = trace(&gram);
    if t0 == 0.0 {
        return 0.0;
    }
    let mut p: Vec<C64> = gram.iter().map(|z| z / t0).collect();
    for _ in 0..64 {
        let sq = matmul(&p, &p, n);
        let t = trace(&sq);
        p = sq.into_iter().map(|z| z / t).collect();
    }
    let column = |c: usize| -> Vec<C64> { (0..n).map(|r| p[r * n + c]).collect() };
    let v = (0..n)
        .map(column)
        .max_by(|a, b| {
            let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
            na.total_cmp(&nb)
        })
        .expect("non-empty matrix");
    let gv = apply(&gram, &v, n);
    let num: C64 = v.iter().zip(&gv).map(|(x, y)| x.conj() * y).sum();
    let den: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    (num.re / den).max(0.0).sqrt()
}

/// Sum of absolute eigenvalues of a 2x2 Hermitian matrix.
pub fn trace_norm2(a: f64, b: C64, c: f64) -> f64 {
    let (lo, hi) = hermitian2_eigenvalues(a, b, c);
    lo.abs() + hi.abs()
}

/// `|| rho(t + eps) - rho(t - eps) ||_1 / (2 eps)` for a pure state under
/// `exp(-i H t)`, using that the difference of two pure projectors has the
/// eigenvalues `+- sqrt(1 - |<a|b>|^2)`.
pub fn finite_difference_rate(h: &[C64], n: usize, psi: &[C64], eps: f64) -> f64 {
    let forward = apply(&expm_taylor(h, n, eps), psi, n);
    let backward = apply(&expm_taylor(h, n, -eps), psi, n);
    let overlap: C64 = backward.iter().zip(&forward).map(|(x, y)| x.conj() * y).sum();
    // sqrt(1 - |<a|b>|^2) evaluated as the norm of the orthogonal component.
    let orthogonal = forward.iter().zip(&backward).map(|(y, x)| (y - x * overlap).norm_sqr()).sum::<f64>().sqrt();
    2.0 * orthogonal / (2.0 * eps)
}

fn apply(m: &[C64], v: &[C64], n: usize) -> Vec<C64> {
    (0..n).map(|i| (0..n).map(|k| m[i * n + k] * v[k]).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_eigenvalues() {
        let (lo, hi) = hermitian2_eigenvalues(1.0, C64::new(0.0, 1.0), 1.0);
        assert!((lo - 0.0).abs() < 1e-15 && (hi - 2.0).abs() < 1e-15);
    }

    #[test]
    fn product_extremes_of_zz() {
        let mut h = vec![C64::new(0.0, 0.0); 16];
        for (i, s) in [1.0, -1.0, -1.0, 1.0].iter().enumerate() {
            h[i * 4 + i] = C64::new(*s, 0.0);
        }
        let (lo, hi) = two_qubit_product_extremes(&h);
        assert!((lo + 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn taylor_exponential_of_sigma_x() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let u = expm_taylor(&[zero, one, one, zero], 2, 0.7);
        assert!((u[0] - C64::new(0.7f64.cos(), 0.0)).norm() < 1e-14);
        assert!((u[1] - C64::new(0.0, -0.7f64.sin())).norm() < 1e-14);
    }

    #[test]
    fn power_norm_of_diagonal() {
        let z = C64::new(0.0, 0.0);
        let m = [C64::new(-3.0, 0.0), z, z, C64::new(2.0, 0.0)];
        assert!((power_spectral_norm(&m, 2) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn power_norm_with_nearly_degenerate_top() {
        let z = C64::new(0.0, 0.0);
        let m = [C64::new(1.0, 0.0), z, z, C64::new(-(1.0 - 1e-9), 0.0)];
        assert!((power_spectral_norm(&m, 2) - 1.0).abs() < 1e-14);
        let c = C64::new(0.0, 1.0);
        let m = [C64::new(0.5, 0.0), c, -c, C64::new(0.5, 0.0)];
        assert!((power_spectral_norm(&m, 2) - 1.5).abs() < 1e-14);
    }
}
