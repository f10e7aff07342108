//! Gauss rules. `gauss_hermite` is normalized to the standard normal law.

use crate::error::{invalid, Error, Result};

pub const DEFAULT_ORDER: usize = 61;
/// Largest Gauss-Hermite order supported; the root guesses degrade beyond it.
pub const MAX_HERMITE_ORDER: usize = 180;

/// Nodes and weights of a one-dimensional quadrature rule.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Weighted sum of `f` over the nodes; fails on the first non-finite value.
    pub fn expect(&self, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (x, w) in self.iter() {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFinite { node: x, value: v });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Tensor-product expectation over two independent copies of the rule.
    pub fn expect2(&self, mut f: impl FnMut(f64, f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (x, wx) in self.iter() {
            let mut inner = 0.0;
            for (y, wy) in self.iter() {
                let v = f(x, y);
                if !v.is_finite() {
                    return Err(Error::NonFinite { node: x, value: v });
                }
                inner += wy * v;
            }
            acc += wx * inner;
        }
        Ok(acc)
    }
}

/// `E{f(G)}` for `G ~ N(0, 1)` using `rule`.
pub fn expect_g(f: impl FnMut(f64) -> f64, rule: &QuadratureRule) -> Result<f64> {
    rule.expect(f)
}

/// Gauss-Hermite rule for the standard normal density.
///
/// Nodes are the roots of the Hermite polynomial found by Newton iteration on
/// the recurrence for the orthonormal Hermite functions (polynomials times
/// `exp(-z^2/2)`, which stay bounded for large orders), starting from the
/// usual asymptotic guesses.
pub fn gauss_hermite(order: usize) -> Result<QuadratureRule> {
    if order == 0 || order > MAX_HERMITE_ORDER {
        return Err(invalid(format!(
            "Gauss-Hermite order must lie in 1..={MAX_HERMITE_ORDER}, got {order}"
        )));
    }
    let n = order;
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    let nf = n as f64;
    let mut z = 0.0_f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..200 {
            let mut p1 = pim4 * (-0.5 * z * z).exp();
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numeric(format!(
                "Hermite root {i} of order {n} did not converge"
            )));
        }
        if n % 2 == 1 && i == m - 1 {
            z = 0.0;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        // pp carries the factor exp(-z^2/2); the weight for exp(-x^2) is 2 / p'(z)^2.
        w[i] = 2.0 * (-z * z).exp() / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut nodes: Vec<f64> = x.iter().rev().map(|v| v * sqrt2).collect();
    let mut weights: Vec<f64> = w.iter().rev().copied().collect();
    let total: f64 = weights.iter().sum();
    let distinct = x.windows(2).all(|p| p[0] > p[1]);
    if !distinct || (total - std::f64::consts::PI.sqrt()).abs() > 1e-10 {
        return Err(Error::Numeric(format!("Gauss-Hermite rule of order {n} failed its self-check")));
    }
    for v in &mut weights {
        *v /= total;
    }
    // Enforce exact antisymmetry of the nodes.
    for i in 0..n / 2 {
        let s = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -s;
        nodes[n - 1 - i] = s;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(invalid("quadrature order must be positive"));
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = mid - half * z;
        nodes[n - 1 - i] = mid + half * z;
        weights[i] = 2.0 * half / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    Ok(QuadratureRule { nodes, weights })
}
