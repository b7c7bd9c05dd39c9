#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn max_abs(m: &Array2<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc: f64, z| acc.max(z.norm()))
}

/// Square complex matrix from interleaved (re, im) values.
pub fn complex_matrix(dim: usize, values: &[f64]) -> Array2<Complex64> {
    assert!(values.len() >= 2 * dim * dim);
    Array2::from_shape_fn((dim, dim), |(i, j)| {
        let k = 2 * (i * dim + j);
        c(values[k], values[k + 1])
    })
}

pub fn dagger(m: &Array2<Complex64>) -> Array2<Complex64> {
    m.t().mapv(|z| z.conj())
}

/// `M M† / Tr(M M†)`.
pub fn density_from(dim: usize, values: &[f64]) -> Array2<Complex64> {
    let m = complex_matrix(dim, values);
    let rho = m.dot(&dagger(&m));
    let tr: Complex64 = rho.diag().sum();
    rho.mapv(|z| z / tr)
}

pub fn hermitian_from(dim: usize, values: &[f64]) -> Array2<Complex64> {
    let m = complex_matrix(dim, values);
    (&m + &dagger(&m)).mapv(|z| z * 0.5)
}

/// Kronecker product by explicit index arithmetic.
pub fn kron_reference(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[[i * rb + k, j * cb + l]] = a[[i, j]] * b[[k, l]];
                }
            }
        }
    }
    out
}

fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Complex adaptive Simpson over `n` equal panels.
pub fn simpson_complex(f: impl Fn(f64) -> Complex64, a: f64, b: f64, panels: usize, tol: f64) -> Complex64 {
    let h = (b - a) / panels as f64;
    let mut total = c(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let hi = lo + h;
        total.re += simpson(|x| f(x).re, lo, hi, tol / panels as f64);
        total.im += simpson(|x| f(x).im, lo, hi, tol / panels as f64);
    }
    total
}

pub fn bose(omega: f64, beta: f64) -> f64 {
    1.0 / ((beta * omega).exp() - 1.0)
}
