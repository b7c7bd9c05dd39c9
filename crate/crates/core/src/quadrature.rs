//! Numerical integration used by the principal-value shift, the continuum
//! Markov coefficients, and the first-order Gibbs correlation.

// Gauss–Kronrod 7/15 nodes on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]`.
///
/// Panels are bisected until the summed error estimate falls under
/// `max(abs_tol, rel_tol * |I|)` or the panel budget is spent.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut panels = vec![(lo, hi, kronrod_panel(&f, lo, hi))];
    for _ in 0..2000 {
        let total: f64 = panels.iter().map(|p| p.2 .0).sum();
        let error: f64 = panels.iter().map(|p| p.2 .1).sum();
        if error <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.2 .1 > acc.1 { (i, p.2 .1) } else { acc });
        let (pa, pb, _) = panels.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        panels.push((pa, mid, kronrod_panel(&f, pa, mid)));
        panels.push((mid, pb, kronrod_panel(&f, mid, pb)));
    }
    // Sum in position order so the result does not depend on refinement history.
    panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    sign * panels.iter().map(|p| p.2 .0).sum::<f64>()
}

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let n = order.max(1);
    let mut rule = Vec::with_capacity(n);
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    for i in 0..n {
        // Newton iteration from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let prev = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - prev) / (x * x - 1.0);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((center + half * x, half * w));
    }
    rule.reverse();
    rule
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_polynomials_and_exponentials() {
        let v = integrate(|x| x.powi(5) - 3.0 * x, 0.0, 2.0, 1e-14, 1e-14);
        assert!((v - (64.0 / 6.0 - 6.0)).abs() < 1e-12);
        let v = integrate(|x| (-x).exp(), 0.0, 30.0, 1e-14, 1e-14);
        assert!((v - (1.0 - (-30f64).exp())).abs() < 1e-13);
        let v = integrate(|x| x.sin(), 1.0, 0.0, 1e-14, 1e-14);
        assert!((v + (1.0 - 1f64.cos())).abs() < 1e-14);
    }

    #[test]
    fn legendre_rule_integrates_high_degree_exactly() {
        let rule = gauss_legendre(12, -1.0, 3.0);
        let weights: f64 = rule.iter().map(|r| r.1).sum();
        assert!((weights - 4.0).abs() < 1e-13);
        let v: f64 = rule.iter().map(|&(x, w)| w * x.powi(20)).sum();
        let exact = (3f64.powi(21) + 1.0) / 21.0;
        assert!((v - exact).abs() / exact < 1e-13);
    }
}
