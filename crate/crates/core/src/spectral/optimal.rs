//! Weak-recovery threshold and the optimal preprocessing maps.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::models::{Channel, Preprocessing};
use crate::numerics::{integrate, AdaptiveOptions};

/// `int f(y) dy` over the channel's domain, substituting `y = lo + s^2` to
/// absorb integrable singularities at the lower end.
fn integrate_over_y(channel: &dyn Channel, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let (lo, hi) = channel.y_domain();
    let s_hi = (hi - lo).sqrt();
    let pts: Vec<f64> = channel
        .y_breakpoints()
        .into_iter()
        .filter(|&b| b > lo && b < hi)
        .map(|b| (b - lo).sqrt())
        .collect();
    let mut failure = None;
    let value = integrate(
        |s| {
            let y = lo + s * s;
            match f(y) {
                Ok(v) => 2.0 * s * v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        s_hi,
        &pts,
        AdaptiveOptions { rel_tol: 1e-9, abs_tol: 1e-13, ..Default::default() },
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Weak-recovery threshold
/// `delta_u = ( int (E{p(y|G)(G^2 - 1)})^2 / E{p(y|G)} dy )^{-1}`.
pub fn delta_u(channel: &dyn Channel) -> Result<f64> {
    let integral = integrate_over_y(channel, |y| {
        let [m0, _, m2] = channel.density_moments(y, 0.0, 1.0)?.unscaled();
        Ok(if m0 > 0.0 { (m2 - m0).powi(2) / m0 } else { 0.0 })
    })?;
    if !(integral > 0.0) {
        return Err(Error::InfiniteThreshold);
    }
    Ok(1.0 / integral)
}

/// `int (E{G p(y|G)})^2 / E{p(y|G)} dy`; zero exactly when linear estimators
/// carry no information about the signal.
pub fn linear_degeneracy_integral(channel: &dyn Channel) -> Result<f64> {
    integrate_over_y(channel, |y| {
        let [m0, m1, _] = channel.density_moments(y, 0.0, 1.0)?.unscaled();
        Ok(if m0 > 0.0 { m1 * m1 / m0 } else { 0.0 })
    })
}

/// `T*(y) = 1 - E{p(y|G)} / E{G^2 p(y|G)}`; unbounded below.
pub fn optimal_t_star(channel: Arc<dyn Channel>) -> Result<Preprocessing> {
    let domain = channel.y_domain();
    let ch = channel.clone();
    Preprocessing::on_domain(
        format!("t-star:{}", channel.name()),
        move |y| ch.second_moment_ratio(y).map_or(f64::NAN, |r| 1.0 - r),
        domain,
    )
}

/// The bounded map `sqrt(delta_u) T* / (sqrt(delta) - (sqrt(delta) - sqrt(delta_u)) T*)`
/// designed for aspect ratio `delta > delta_u`.
pub fn optimal_t_bar(channel: Arc<dyn Channel>, delta: f64, delta_u: f64) -> Result<Preprocessing> {
    if !(delta_u > 0.0 && delta_u.is_finite()) {
        return Err(invalid(format!("weak-recovery threshold must be finite and positive, got {delta_u}")));
    }
    if !(delta > delta_u) {
        return Err(invalid(format!(
            "optimal preprocessing needs delta > delta_u ({delta} <= {delta_u})"
        )));
    }
    let (su, sd) = (delta_u.sqrt(), delta.sqrt());
    let domain = channel.y_domain();
    let ch = channel.clone();
    Preprocessing::on_domain(
        format!("t-bar:{}:{delta}", channel.name()),
        move |y| match ch.second_moment_ratio(y) {
            // Written in terms of r = 1 - T* so that r = inf is handled.
            Ok(r) if r.is_infinite() => -su / (sd - su),
            Ok(r) => su * (1.0 - r) / (su + (sd - su) * r),
            Err(_) => f64::NAN,
        },
        domain,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::PhaseRetrieval;

    #[test]
    fn noiseless_threshold_is_one_half() {
        let du = delta_u(&PhaseRetrieval::Noiseless).unwrap();
        assert!((du - 0.5).abs() < 1e-6, "{du}");
    }

    #[test]
    fn even_channel_has_no_linear_information() {
        for ch in [PhaseRetrieval::Noiseless, PhaseRetrieval::noisy(0.4).unwrap()] {
            let v = linear_degeneracy_integral(&ch).unwrap();
            assert!(v.abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn t_bar_matches_noiseless_closed_form() {
        let (d, du) = (2.0_f64, 0.5_f64);
        let t = optimal_t_bar(Arc::new(PhaseRetrieval::Noiseless), d, du).unwrap();
        for y in [0.0, 0.01, 0.5, 1.0, 3.0, 30.0] {
            let closed = du.sqrt() * (y - 1.0) / (du.sqrt() * y + d.sqrt() - du.sqrt());
            assert!((t.apply(y) - closed).abs() < 1e-12, "{y}");
        }
        assert!(t.tau() <= 1.0 && t.tau() > 0.98);
    }

    #[test]
    fn t_bar_rejects_delta_below_threshold() {
        assert!(optimal_t_bar(Arc::new(PhaseRetrieval::Noiseless), 0.4, 0.5).is_err());
    }
}
