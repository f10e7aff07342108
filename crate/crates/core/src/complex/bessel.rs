//! Exponentially scaled modified Bessel functions of orders 0 and 1.

/// Above this argument the asymptotic expansion is accurate to machine precision.
const ASYMPTOTIC_FROM: f64 = 20.0;

fn series(x: f64, order: u32) -> f64 {
    // I_nu(x) = sum_k (x/2)^{2k+nu} / (k! (k+nu)!)
    let q = 0.25 * x * x;
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (k + order as f64));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum * (-x).exp()
}

fn asymptotic(x: f64, order: u32) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// `exp(-|x|) I_0(x)`.
pub fn bessel_i0e(x: f64) -> f64 {
    let x = x.abs();
    if x < ASYMPTOTIC_FROM {
        series(x, 0)
    } else {
        asymptotic(x, 0)
    }
}

/// `exp(-|x|) I_1(x)`.
pub fn bessel_i1e(x: f64) -> f64 {
    let v = if x.abs() < ASYMPTOTIC_FROM {
        series(x.abs(), 1)
    } else {
        asymptotic(x.abs(), 1)
    };
    v.copysign(x)
}

/// `I_1(x) / I_0(x)` for `x >= 0`, in `[0, 1)`.
pub fn bessel_ratio(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        bessel_i1e(x) / bessel_i0e(x)
    }
}
