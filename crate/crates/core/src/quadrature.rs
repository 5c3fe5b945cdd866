//! Globally adaptive 15-point Gauss–Kronrod quadrature, plus a nested
//! variant for two-dimensional integrals over `x ∈ [a, b], y ∈ [c(x), d(x)]`.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

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

// 7-point Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Stopping rule: accept when `error <= max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Panels the interval is split into before adaptation starts.
    pub initial_panels: usize,
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-300, rel: 1e-8, initial_panels: 4, max_panels: 400 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center)?;
    let mut res_k = f_center * WGK[7];
    let mut res_g = f_center * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    Ok(Panel {
        a,
        b,
        value: res_k * half,
        error: rescale_error((res_k - res_g) * half, res_abs * scale, res_asc * scale),
    })
}

/// Integrates a fallible integrand over `[a, b]`.
pub fn integrate_fallible<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Argument(format!("integration limits must be finite: [{a}, {b}]")));
    }
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let n0 = tol.initial_panels.max(1);
    let width = (b - a) / n0 as f64;
    let mut panels = Vec::with_capacity(tol.max_panels.max(n0) + 1);
    for k in 0..n0 {
        let lo = a + k as f64 * width;
        let hi = if k + 1 == n0 { b } else { a + (k + 1) as f64 * width };
        panels.push(gk15(&mut f, lo, hi)?);
    }
    let mut evaluations = 15 * n0;
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target {
            return Ok(Estimate { value, error, evaluations });
        }
        if panels.len() >= tol.max_panels {
            return Err(Error::Quadrature { estimate: value, achieved: error, requested: target });
        }
        let (worst, _) =
            panels.iter().enumerate().max_by(|x, y| x.1.error.total_cmp(&y.1.error)).expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // interval exhausted at floating-point resolution
            return Err(Error::Quadrature { estimate: value, achieved: error, requested: target });
        }
        panels.push(gk15(&mut f, p.a, mid)?);
        panels.push(gk15(&mut f, mid, p.b)?);
        evaluations += 30;
    }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate>
where
    F: FnMut(f64) -> f64,
{
    integrate_fallible(|x| Ok(f(x)), a, b, tol)
}

/// Nested adaptive quadrature of `f(x, y)` over `x ∈ [a, b]` and
/// `y ∈ limits(x)`. The inner integral runs at `inner` tolerance; an empty
/// inner range (`lo >= hi`) contributes zero.
pub fn integrate_2d<F, L>(f: F, a: f64, b: f64, limits: L, outer: Tolerance, inner: Tolerance) -> Result<Estimate>
where
    F: Fn(f64, f64) -> f64,
    L: Fn(f64) -> (f64, f64),
{
    let mut inner_evals = 0usize;
    let est = integrate_fallible(
        |x| {
            let (lo, hi) = limits(x);
            if !(lo < hi) {
                return Ok(0.0);
            }
            let e = integrate(|y| f(x, y), lo, hi, inner)?;
            inner_evals += e.evaluations;
            Ok(e.value)
        },
        a,
        b,
        outer,
    )?;
    Ok(Estimate { evaluations: inner_evals, ..est })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let e = integrate(|x| 3.0 * x * x + 1.0, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((e.value - 10.0).abs() < 1e-13);
    }

    #[test]
    fn narrow_peak_is_found_with_initial_panels() {
        let tol = Tolerance { initial_panels: 16, ..Tolerance::default() };
        let e = integrate(|x| (-(x - 0.3).powi(2) / (2.0 * 0.01f64.powi(2))).exp(), -1.0, 1.0, tol).unwrap();
        let exact = 0.01 * (2.0 * std::f64::consts::PI).sqrt();
        assert!((e.value - exact).abs() / exact < 1e-9);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let f = |x: f64| x.sin();
        let fwd = integrate(f, 0.0, 1.0, Tolerance::default()).unwrap().value;
        let back = integrate(f, 1.0, 0.0, Tolerance::default()).unwrap().value;
        assert!((fwd + back).abs() < 1e-15);
    }

    #[test]
    fn budget_exhaustion_reports_achieved_error() {
        let tol = Tolerance { rel: 1e-15, abs: 0.0, initial_panels: 1, max_panels: 2 };
        match integrate(|x| x.abs().sqrt(), -1.0, 1.0, tol) {
            Err(Error::Quadrature { achieved, .. }) => assert!(achieved > 0.0),
            other => panic!("expected quadrature error, got {other:?}"),
        }
    }

    #[test]
    fn nested_unit_disk_area() {
        let e = integrate_2d(
            |_, _| 1.0,
            -1.0,
            1.0,
            |x| {
                let h = (1.0 - x * x).max(0.0).sqrt();
                (-h, h)
            },
            Tolerance { rel: 1e-10, ..Tolerance::default() },
            Tolerance { rel: 1e-12, ..Tolerance::default() },
        )
        .unwrap();
        assert!((e.value - std::f64::consts::PI).abs() < 1e-8);
    }
}
