//! Preprocessing maps `T_s` applied to observations before the spectral step.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Result};

/// Points in the grid used to bound `sup T_s` and its Lipschitz constant.
pub const TAU_GRID: usize = 10_000;

type MapFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A bounded preprocessing function together with `tau = sup T_s`.
#[derive(Clone)]
pub struct Preprocessing {
    label: String,
    map: Arc<MapFn>,
    tau: f64,
    lipschitz: f64,
}

impl fmt::Debug for Preprocessing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Preprocessing")
            .field("label", &self.label)
            .field("tau", &self.tau)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl Preprocessing {
    /// Wraps a map with a known supremum `tau` and Lipschitz bound.
    pub fn new(
        label: impl Into<String>,
        map: impl Fn(f64) -> f64 + Send + Sync + 'static,
        tau: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        if !tau.is_finite() {
            return Err(invalid("preprocessing supremum must be finite"));
        }
        Ok(Self {
            label: label.into(),
            map: Arc::new(map),
            tau,
            lipschitz,
        })
    }

    /// Estimates `tau` (plus a `1e-9` margin) and the Lipschitz constant on an
    /// evenly spaced grid over `domain`.
    pub fn on_domain(
        label: impl Into<String>,
        map: impl Fn(f64) -> f64 + Send + Sync + 'static,
        domain: (f64, f64),
    ) -> Result<Self> {
        let (lo, hi) = domain;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(invalid(format!("invalid preprocessing domain [{lo}, {hi}]")));
        }
        let step = (hi - lo) / (TAU_GRID - 1) as f64;
        let values: Vec<f64> = (0..TAU_GRID)
            .into_par_iter()
            .map(|k| map(lo + step * k as f64))
            .collect();
        if let Some(k) = values.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(invalid(format!(
                "preprocessing is not finite at y = {}",
                lo + step * k as f64
            )));
        }
        // Maps unbounded below (such as T* at y = 0) get an infinite Lipschitz bound.
        let tau = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1e-9;
        if !tau.is_finite() {
            return Err(invalid("preprocessing has no finite value on its domain"));
        }
        let lipschitz = values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs() / step)
            .map(|v| if v.is_nan() { f64::INFINITY } else { v })
            .fold(0.0, f64::max);
        Self::new(label, map, tau, lipschitz)
    }

    /// `T_s(y) = c`.
    pub fn constant(c: f64) -> Result<Self> {
        Self::new(format!("constant:{c}"), move |_| c, c, 0.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn apply(&self, y: f64) -> f64 {
        (self.map)(y)
    }

    pub fn apply_all(&self, ys: &[f64]) -> Vec<f64> {
        ys.par_iter().with_min_len(256).map(|&y| (self.map)(y)).collect()
    }
}
