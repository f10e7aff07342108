//! Globally adaptive Gauss-Kronrod (7/15) integration on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{numeric, Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-300,
            rel_tol: 1e-11,
            max_intervals: 4000,
        }
    }
}

struct Segment<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: f64,
}

impl<const K: usize> PartialEq for Segment<K> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const K: usize> Eq for Segment<K> {}
impl<const K: usize> PartialOrd for Segment<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Segment<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<const K: usize>(
    f: &mut impl FnMut(f64) -> [f64; K],
    a: f64,
    b: f64,
) -> Result<Segment<K>> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = [0.0; K];
    let mut gauss = [0.0; K];
    let mut eval = |x: f64| -> Result<[f64; K]> {
        let v = f(x);
        if let Some(bad) = v.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: x, value: *bad });
        }
        Ok(v)
    };
    let fc = eval(c)?;
    for k in 0..K {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = eval(c - dx)?;
        let f2 = eval(c + dx)?;
        for k in 0..K {
            let s = f1[k] + f2[k];
            kron[k] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut error = 0.0_f64;
    let mut value = [0.0; K];
    for k in 0..K {
        value[k] = kron[k] * h;
        error = error.max(((kron[k] - gauss[k]) * h).abs());
    }
    Ok(Segment { a, b, value, error })
}

/// Integrates a vector-valued function over `[a, b]`, splitting first at the
/// supplied breakpoints (those outside `(a, b)` are ignored).
pub fn integrate_vec<const K: usize>(
    mut f: impl FnMut(f64) -> [f64; K],
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: AdaptiveOptions,
) -> Result<[f64; K]> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(numeric(format!("invalid integration interval [{a}, {b}]")));
    }
    if a == b {
        return Ok([0.0; K]);
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > a && *p < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![a];
    edges.extend(cuts);
    edges.push(b);

    let mut heap = BinaryHeap::new();
    for win in edges.windows(2) {
        heap.push(gk15(&mut f, win[0], win[1])?);
    }
    loop {
        let mut total = [0.0; K];
        let mut err = 0.0;
        for s in heap.iter() {
            for k in 0..K {
                total[k] += s.value[k];
            }
            err += s.error;
        }
        let scale = total.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if err <= opts.abs_tol.max(opts.rel_tol * scale) {
            return Ok(total);
        }
        if heap.len() >= opts.max_intervals {
            // Accept when the remaining error is dominated by rounding.
            if err <= 1e-8 * scale.max(f64::MIN_POSITIVE) {
                return Ok(total);
            }
            return Err(numeric(format!(
                "adaptive quadrature on [{a}, {b}] did not reach tolerance (error {err:e})"
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            let total = heap.iter().fold([0.0; K], |mut acc, s| {
                for k in 0..K {
                    acc[k] += s.value[k];
                }
                acc
            });
            return Ok(total);
        }
        heap.push(gk15(&mut f, worst.a, mid)?);
        heap.push(gk15(&mut f, mid, worst.b)?);
    }
}

/// Scalar version of [`integrate_vec`].
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: AdaptiveOptions,
) -> Result<f64> {
    integrate_vec(|x| [f(x)], a, b, breakpoints, opts).map(|v| v[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_integrals() {
        let v = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, &[], Default::default()).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate(|x| (-x * x).exp(), -10.0, 10.0, &[], Default::default()).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sharp_peak_with_breakpoint() {
        let w = 1e-4;
        let f = |x: f64| (-(x - 0.3) * (x - 0.3) / (2.0 * w * w)).exp() / (w * (2.0 * std::f64::consts::PI).sqrt());
        let pts: Vec<f64> = [-20.0, -6.0, -2.0, 0.0, 2.0, 6.0, 20.0].iter().map(|k| 0.3 + k * w).collect();
        let v = integrate(f, -1.0, 1.0, &pts, Default::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn integrable_endpoint_singularity() {
        let v = integrate(|x| 1.0 / x.sqrt(), 1e-300, 1.0, &[], AdaptiveOptions { rel_tol: 1e-9, ..Default::default() });
        let v = v.unwrap();
        assert!((v - 2.0).abs() < 1e-7, "{v}");
    }
}
