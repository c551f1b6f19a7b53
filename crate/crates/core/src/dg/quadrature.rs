use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one quadrature point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess for the i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Classical (unnormalised) Legendre polynomial `P_n(x)` and its derivative.
pub(crate) fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    let (mut d_prev, mut d) = (0.0, 1.0);
    for m in 1..n {
        let mf = m as f64;
        let p_next = ((2.0 * mf + 1.0) * x * p - mf * p_prev) / (mf + 1.0);
        let d_next = d_prev + (2.0 * mf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// Tensor-product Gauss rule on the reference square `[-1, 1]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Reference coordinates `(ξ, η)`, ξ running fastest.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Product of `npts_1d`-point Gauss-Legendre rules; exact for degree `2·npts_1d − 1` per direction.
pub fn quadrature_rule(npts_1d: usize) -> Result<QuadratureRule> {
    if npts_1d == 0 {
        return Err(Error::config("quadrature needs at least one point per direction"));
    }
    let (x, w) = gauss_legendre(npts_1d);
    let mut points = Vec::with_capacity(npts_1d * npts_1d);
    let mut weights = Vec::with_capacity(npts_1d * npts_1d);
    for (&eta, &weta) in x.iter().zip(&w) {
        for (&xi, &wxi) in x.iter().zip(&w) {
            points.push([xi, eta]);
            weights.push(wxi * weta);
        }
    }
    Ok(QuadratureRule { points, weights })
}
