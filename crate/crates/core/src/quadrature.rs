//! Globally adaptive 7/15-point Gauss-Kronrod quadrature for complex-valued
//! integrands on a finite interval.
//!
//! The interval is first cut into equal panels no wider than a caller-given
//! width (used to resolve oscillating integrands), then the panel with the
//! largest error estimate is bisected until the summed estimate meets the
//! tolerance.

use num_complex::Complex64;

/// Kronrod abscissae on [0, 1], descending; odd indices are the Gauss nodes.
#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
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

/// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper bound on the number of subintervals before giving up.
    pub max_intervals: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_intervals: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: Complex64,
    error: f64,
}

fn gauss_kronrod<F>(f: &F, lo: f64, hi: f64) -> Segment
where
    F: Fn(f64) -> Complex64,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += sum * WGK[j];
        if j % 2 == 1 {
            gauss += sum * WG[j / 2];
        }
    }
    Segment {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).norm(),
    }
}

/// Integrates `f` over `[lo, hi]`, starting from panels of width at most
/// `max_panel`.
pub fn integrate<F>(f: F, lo: f64, hi: f64, max_panel: f64, settings: &QuadratureSettings) -> QuadratureResult
where
    F: Fn(f64) -> Complex64,
{
    if hi <= lo {
        return QuadratureResult {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            intervals: 0,
            converged: true,
        };
    }
    let n_panels = ((hi - lo) / max_panel).ceil().max(1.0) as usize;
    let width = (hi - lo) / n_panels as f64;
    let mut segments: Vec<Segment> = (0..n_panels)
        .map(|k| {
            let a = lo + k as f64 * width;
            let b = if k + 1 == n_panels { hi } else { a + width };
            gauss_kronrod(&f, a, b)
        })
        .collect();

    loop {
        let value: Complex64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let target = settings.abs_tol.max(settings.rel_tol * value.norm());
        if error <= target || segments.len() >= settings.max_intervals {
            return QuadratureResult {
                value,
                error,
                intervals: segments.len(),
                converged: error <= target,
            };
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .expect("segment list is never empty");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.lo + s.hi);
        if mid <= s.lo || mid >= s.hi {
            // interval exhausted at machine precision; keep its estimate
            return QuadratureResult {
                value,
                error,
                intervals: segments.len() + 1,
                converged: false,
            };
        }
        segments.push(gauss_kronrod(&f, s.lo, mid));
        segments.push(gauss_kronrod(&f, mid, s.hi));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(f: impl Fn(f64) -> f64) -> impl Fn(f64) -> Complex64 {
        move |x| Complex64::new(f(x), 0.0)
    }

    #[test]
    fn integrates_polynomials_exactly() {
        let r = integrate(real(|x| x.powi(5) - 3.0 * x * x), 0.0, 2.0, 10.0, &QuadratureSettings::default());
        assert!(r.converged);
        assert!((r.value.re - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
        assert_eq!(r.intervals, 1);
    }

    #[test]
    fn oscillatory_integrand() {
        // int_0^50 cos(20 x) e^{-x/5} dx in closed form
        let a: f64 = 0.2;
        let w = 20.0;
        let exact = |x: f64| (-a * x).exp() * (w * (w * x).sin() - a * (w * x).cos()) / (a * a + w * w);
        let r = integrate(
            |x| Complex64::new((w * x).cos() * (-a * x).exp(), -(w * x).sin() * (-a * x).exp()),
            0.0,
            50.0,
            std::f64::consts::PI / (4.0 * w),
            &QuadratureSettings::default(),
        );
        assert!(r.converged);
        assert!((r.value.re - (exact(50.0) - exact(0.0))).abs() < 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let settings = QuadratureSettings {
            max_intervals: 4,
            ..Default::default()
        };
        let r = integrate(real(|x: f64| (1.0 / x.max(1e-300)).sin()), 0.0, 1.0, 1.0, &settings);
        assert!(!r.converged);
    }

    #[test]
    fn empty_interval() {
        let r = integrate(real(|_| 1.0), 1.0, 1.0, 1.0, &QuadratureSettings::default());
        assert_eq!(r.value, Complex64::new(0.0, 0.0));
    }
}
