//! Numerical helpers: zeta tails and adaptive Gauss-Kronrod quadrature.

use alloc::vec::Vec;

use num_traits::Float;

/// Sum of `n^-k` over `n > n0`, for `k > 1`.
///
/// Explicit terms up to `n0 + 64`, then Euler-Maclaurin with three Bernoulli
/// corrections; the remainder is below `1e-18` relative for `k <= 8`.
pub fn zeta_tail(k: f64, n0: u64) -> f64 {
    let m = n0 + 64;
    let mut s = 0.0;
    for n in (n0 + 1)..m {
        s += Float::powf(n as f64, -k);
    }
    let mf = m as f64;
    let f = Float::powf(mf, -k);
    let integral = Float::powf(mf, 1.0 - k) / (k - 1.0);
    let d1 = k * f / mf;
    let d3 = k * (k + 1.0) * (k + 2.0) * f / (mf * mf * mf);
    let d5 = k * (k + 1.0) * (k + 2.0) * (k + 3.0) * (k + 4.0) * f / (mf * mf * mf * mf * mf);
    s + integral + f / 2.0 + d1 / 12.0 - d3 / 720.0 + d5 / 30240.0
}

pub fn zeta(k: f64) -> f64 {
    zeta_tail(k, 0)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod panel: (estimate, error estimate).
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Globally adaptive Gauss-Kronrod (7/15) on `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, max_panels: usize) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error: 0.0, panels: 0 };
    }
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&mut f, a, b);
    panels.push((a, b, v, e));
    loop {
        let total_err: f64 = panels.iter().map(|p| p.3).sum();
        if total_err <= abs_tol || panels.len() >= max_panels {
            break;
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
    let value = panels.iter().map(|p| p.2).sum();
    let error = panels.iter().map(|p| p.3).sum();
    Quadrature { value, error, panels: panels.len() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_two_and_four() {
        let pi = core::f64::consts::PI;
        assert!((zeta(2.0) - pi * pi / 6.0).abs() < 1e-14);
        assert!((zeta(4.0) - pi.powi(4) / 90.0).abs() < 1e-14);
    }

    #[test]
    fn zeta_tail_matches_difference() {
        let k = 3f64.ln() / 2f64.ln();
        let direct: f64 = (1..=10).map(|n| (n as f64).powf(-k)).sum();
        assert!((zeta(k) - direct - zeta_tail(k, 10)).abs() < 1e-13);
    }

    #[test]
    fn kronrod_polynomial_exact() {
        let q = integrate(|x| x.powi(9) - 3.0 * x * x, 0.0, 2.0, 1e-14, 50);
        assert!((q.value - (102.4 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn kronrod_log_singular_endpoint() {
        // integral of ln(x) on (0,1] is -1
        let q = integrate(|x: f64| x.ln(), 0.0, 1.0, 1e-12, 2000);
        assert!((q.value + 1.0).abs() < 1e-10);
    }
}
