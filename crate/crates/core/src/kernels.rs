//! Bath correlation kernels and the dephasing functions derived from them.
//!
//! Notation used throughout:
//!
//! * `alpha_eff(t) = int_0^inf J(w) [coth(w / 2T) cos(wt) - i sin(wt)] dw`
//! * `G(t) = int_0^t alpha_eff`, `H(t) = int_0^t G`
//! * `D(t) = 4 Re G(t)` (time-dependent dephasing rate)
//! * `Gamma(t) = int_0^t D = 4 Re H(t)` (accumulated decoherence exponent)
//! * `D~(t1, t2) = 4 int_0^t2 alpha_eff(t1 - s) ds = 4 [G(t1) - G(t1 - t2)]`
//!
//! `alpha_eff(-t) = conj(alpha_eff(t))`, hence `G(-t) = -conj(G(t))` and
//! `H(-t) = conj(H(t))`; the cache stores nonnegative times only.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quadrature::{integrate, QuadratureSettings};

/// Frequency cutoff of the quadrature in units of `Lambda`; the exponential
/// tail beyond it is below 1e-16 of the peak.
pub const OMEGA_MAX_IN_CUTOFFS: f64 = 40.0;

/// Absolute tolerance of the frequency quadratures.
pub const FREQUENCY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralKind {
    /// `J(w) = gamma w exp(-w / Lambda)`.
    OhmicExponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    pub kind: SpectralKind,
    pub gamma: f64,
    pub cutoff: f64,
}

impl SpectralDensity {
    pub fn ohmic(gamma: f64, cutoff: f64) -> Self {
        Self {
            kind: SpectralKind::OhmicExponential,
            gamma,
            cutoff,
        }
    }

    pub fn from_params(params: &ModelParams) -> Self {
        Self::ohmic(params.gamma, params.cutoff)
    }

    pub fn evaluate(&self, omega: f64) -> Result<f64> {
        if omega.is_nan() || omega < 0.0 {
            return Err(Error::Domain {
                what: "omega",
                value: omega,
            });
        }
        Ok(self.raw(omega))
    }

    fn raw(&self, omega: f64) -> f64 {
        match self.kind {
            SpectralKind::OhmicExponential => self.gamma * omega * (-omega / self.cutoff).exp(),
        }
    }

    /// `J(w) nbar(w)` with its `w -> 0` limit `gamma T` substituted.
    fn thermal_weight(&self, omega: f64, temperature: f64) -> f64 {
        if temperature == 0.0 {
            return 0.0;
        }
        match self.kind {
            SpectralKind::OhmicExponential => {
                if omega == 0.0 {
                    self.gamma * temperature
                } else {
                    self.gamma * omega * (-omega / self.cutoff).exp() / (omega / temperature).exp_m1()
                }
            }
        }
    }
}

/// Ohmic spectral density with exponential cutoff.
pub fn spectral_density(omega: f64, sd: &SpectralDensity) -> Result<f64> {
    sd.evaluate(omega)
}

/// Thermal occupation `1 / (exp(w / T) - 1)`; zero at `T = 0`.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        0.0
    } else {
        1.0 / (omega / temperature).exp_m1()
    }
}

fn panel_width(t: f64, range: f64) -> f64 {
    if t == 0.0 {
        range
    } else {
        PI / (4.0 * t.abs())
    }
}

fn frequency_integral<F>(t: f64, omega_max: f64, f: F) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let settings = QuadratureSettings {
        abs_tol: FREQUENCY_TOLERANCE,
        ..Default::default()
    };
    let r = integrate(f, 0.0, omega_max, panel_width(t, omega_max), &settings);
    if r.converged {
        Ok(r.value)
    } else {
        Err(Error::Quadrature {
            t,
            estimate: r.value.norm(),
            error: r.error,
            intervals: r.intervals,
        })
    }
}

/// `alpha(t) = int J(w) (nbar(w) + 1) exp(-i w t) dw`, by direct quadrature.
pub fn alpha_kernel(t: f64, params: &ModelParams) -> Result<Complex64> {
    let sd = SpectralDensity::from_params(params);
    let temp = params.temperature;
    frequency_integral(t, OMEGA_MAX_IN_CUTOFFS * params.cutoff, |w| {
        let weight = sd.thermal_weight(w, temp) + sd.raw(w);
        Complex64::from_polar(weight, -w * t)
    })
}

/// `beta(t) = int J(w) nbar(w) exp(+i w t) dw`; identically zero at `T = 0`.
pub fn beta_kernel(t: f64, params: &ModelParams) -> Result<Complex64> {
    if params.is_zero_temperature() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let sd = SpectralDensity::from_params(params);
    let temp = params.temperature;
    frequency_integral(t, OMEGA_MAX_IN_CUTOFFS * params.cutoff, |w| {
        Complex64::from_polar(sd.thermal_weight(w, temp), w * t)
    })
}

/// Effective bath correlation function `alpha + beta`.
///
/// Splits `coth(w / 2T) = 1 + 2 nbar(w)`: the vacuum part is integrated in
/// closed form and only the real thermal part `int 2 J nbar cos(wt)` goes
/// through quadrature, over the range where `exp(-w / Lambda - w / T)` is
/// above 1e-17.
pub fn alpha_eff(t: f64, params: &ModelParams) -> Result<Complex64> {
    let vacuum = zero_temperature::alpha_eff(t, params);
    if params.is_zero_temperature() {
        return Ok(vacuum);
    }
    let sd = SpectralDensity::from_params(params);
    let temp = params.temperature;
    let omega_max = thermal_omega_max(params);
    let thermal = frequency_integral(t, omega_max, |w| {
        Complex64::new(2.0 * sd.thermal_weight(w, temp) * (w * t).cos(), 0.0)
    })?;
    Ok(vacuum + thermal)
}

fn thermal_omega_max(params: &ModelParams) -> f64 {
    let decay = 1.0 / params.cutoff + 1.0 / params.temperature;
    (OMEGA_MAX_IN_CUTOFFS / decay).min(OMEGA_MAX_IN_CUTOFFS * params.cutoff)
}

/// Markovian dephasing rate `D_inf = lim D(t) = 4 pi gamma T`.
pub fn markovian_rate(params: &ModelParams) -> f64 {
    4.0 * params.gamma * PI * params.temperature
}

/// Closed forms of the kernels for a zero-temperature ohmic bath.
pub mod zero_temperature {
    use num_complex::Complex64;

    use crate::model::ModelParams;

    pub fn alpha_eff(t: f64, params: &ModelParams) -> Complex64 {
        let (g, l) = (params.gamma, params.cutoff);
        let q = 1.0 + l * l * t * t;
        Complex64::new(g * l * l * (1.0 - l * l * t * t) / (q * q), -2.0 * g * l * l * l * t / (q * q))
    }

    /// `G(t) = gamma Lambda^2 t / (1 + i Lambda t)`.
    pub fn antiderivative(t: f64, params: &ModelParams) -> Complex64 {
        let (g, l) = (params.gamma, params.cutoff);
        Complex64::new(g * l * l * t, 0.0) / Complex64::new(1.0, l * t)
    }

    /// `H(t) = gamma [ln(1 + i Lambda t) - i Lambda t]`.
    pub fn second_antiderivative(t: f64, params: &ModelParams) -> Complex64 {
        let (g, l) = (params.gamma, params.cutoff);
        let x = l * t;
        Complex64::new(0.5 * g * (x * x).ln_1p(), g * (x.atan() - x))
    }

    pub fn dephasing_rate(t: f64, params: &ModelParams) -> f64 {
        let (g, l) = (params.gamma, params.cutoff);
        4.0 * g * l * l * t / (1.0 + l * l * t * t)
    }

    pub fn decoherence_exponent(t: f64, params: &ModelParams) -> f64 {
        let (g, l) = (params.gamma, params.cutoff);
        2.0 * g * (l * l * t * t).ln_1p()
    }

    pub fn cross_kernel(t1: f64, t2: f64, params: &ModelParams) -> Complex64 {
        let (g, l) = (params.gamma, params.cutoff);
        let num = Complex64::new(1.0 - l * l * t1 * (t1 - t2), -l * (2.0 * t1 - t2)) * (4.0 * g * l * l * t2);
        let den = (1.0 + l * l * t1 * t1) * (1.0 + l * l * (t1 - t2) * (t1 - t2));
        num / den
    }

    /// Exponent `-Gamma(t1) - Gamma(t2) + int_0^t1 D~(tau, t2) dtau` of the
    /// off-diagonal two-time correlation function.
    pub fn two_time_exponent(t1: f64, t2: f64, params: &ModelParams) -> Complex64 {
        let (g, l) = (params.gamma, params.cutoff);
        let lag = t1 - t2;
        let phase = (l * lag).atan() + (l * t2).atan() - (l * t1).atan();
        Complex64::new(-2.0 * g * (l * l * lag * lag).ln_1p(), -4.0 * g * phase)
    }
}

/// Precomputed `D`, `Gamma`, `G` and `H` on a uniform grid `k h`,
/// `k = 0..=n`, `n h = t_max`.
#[derive(Debug, Clone)]
pub struct KernelCache {
    params: ModelParams,
    grid_step: f64,
    t_max: f64,
    d_values: Vec<f64>,
    gamma_values: Vec<f64>,
    g_values: Vec<Complex64>,
    h_values: Vec<Complex64>,
}

/// Tabulates the kernels on `[0, t_max]` (rounded up to a whole number of
/// steps).
///
/// `G` is accumulated with Simpson's rule per grid interval, evaluating
/// `alpha_eff` at the nodes and midpoints. `H` uses the trapezoid rule on
/// `G` with the endpoint correction `h^2/12 (G'(a) - G'(b))`, where `G'` is
/// `alpha_eff` itself; both rules are exact for cubics.
pub fn build_cache(params: ModelParams, t_max: f64, grid_step: f64) -> Result<KernelCache> {
    build_cache_from(params, t_max, grid_step, |t| alpha_eff(t, &params))
}

/// As [`build_cache`], with the effective correlation function supplied by
/// `source` instead of [`alpha_eff`].
pub fn build_cache_from<F>(params: ModelParams, t_max: f64, grid_step: f64, source: F) -> Result<KernelCache>
where
    F: Fn(f64) -> Result<Complex64>,
{
    params.validate()?;
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(Error::Grid(format!("cache step must be > 0, got {grid_step}")));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::Grid(format!("cache t_max must be > 0, got {t_max}")));
    }
    let n = (t_max / grid_step - 1e-9).ceil().max(1.0) as usize;
    let h = grid_step;

    let mut alpha_node = Vec::with_capacity(n + 1);
    for k in 0..=n {
        alpha_node.push(source(k as f64 * h)?);
    }
    let mut g_values = Vec::with_capacity(n + 1);
    let mut h_values = Vec::with_capacity(n + 1);
    g_values.push(Complex64::new(0.0, 0.0));
    h_values.push(Complex64::new(0.0, 0.0));
    for k in 0..n {
        let mid = source((k as f64 + 0.5) * h)?;
        let (a0, a1) = (alpha_node[k], alpha_node[k + 1]);
        let g0 = g_values[k];
        let g1 = g0 + (a0 + mid * 4.0 + a1) * (h / 6.0);
        let h1 = h_values[k] + (g0 + g1) * (0.5 * h) + (a0 - a1) * (h * h / 12.0);
        g_values.push(g1);
        h_values.push(h1);
    }
    let d_values = g_values.iter().map(|g| 4.0 * g.re).collect();
    let gamma_values = h_values.iter().map(|h| 4.0 * h.re).collect();

    Ok(KernelCache {
        params,
        grid_step: h,
        t_max: n as f64 * h,
        d_values,
        gamma_values,
        g_values,
        h_values,
    })
}

fn catmull_rom<T>(p: [T; 4], s: f64) -> T
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let [p0, p1, p2, p3] = p;
    let c1 = (p2 - p0) * 0.5;
    let c2 = p0 - p1 * 2.5 + p2 * 2.0 - p3 * 0.5;
    let c3 = (p3 - p0) * 0.5 + (p1 - p2) * 1.5;
    p1 + (c1 + (c2 + c3 * s) * s) * s
}

impl KernelCache {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn len(&self) -> usize {
        self.d_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_values.is_empty()
    }

    pub fn d_values(&self) -> &[f64] {
        &self.d_values
    }

    pub fn gamma_values(&self) -> &[f64] {
        &self.gamma_values
    }

    pub fn g_values(&self) -> &[Complex64] {
        &self.g_values
    }

    pub fn h_values(&self) -> &[Complex64] {
        &self.h_values
    }

    fn slack(&self) -> f64 {
        1e-9 * self.grid_step
    }

    fn check_range(&self, t: f64) -> Result<()> {
        if t.is_nan() || t.abs() > self.t_max + self.slack() {
            Err(Error::OutOfRange { t, t_max: self.t_max })
        } else {
            Ok(())
        }
    }

    /// Interpolates a sequence at `t >= 0`; `below_zero` supplies the value
    /// at node `-1` from the value at node `1`.
    fn interpolate<T>(&self, values: &[T], t: f64, below_zero: impl Fn(T) -> T) -> T
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let n = values.len() - 1;
        let x = t / self.grid_step;
        let nearest = x.round();
        if (x - nearest).abs() <= 1e-9 * x.max(1.0) {
            return values[(nearest as usize).min(n)];
        }
        let k = (x.floor() as usize).min(n - 1);
        let s = x - k as f64;
        let at = |j: isize| -> T {
            if j < 0 {
                below_zero(values[1])
            } else if j as usize > n {
                values[n] * 2.0 - values[n - 1]
            } else {
                values[j as usize]
            }
        };
        let k = k as isize;
        catmull_rom([at(k - 1), at(k), at(k + 1), at(k + 2)], s)
    }

    /// `D(t)` for `0 <= t <= t_max`.
    pub fn dephasing_rate(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        if t < 0.0 {
            return Err(Error::OutOfRange { t, t_max: self.t_max });
        }
        Ok(self.interpolate(&self.d_values, t, |v| -v))
    }

    /// `Gamma(t) = int_0^t D` for `0 <= t <= t_max`.
    pub fn decoherence_exponent(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        if t < 0.0 {
            return Err(Error::OutOfRange { t, t_max: self.t_max });
        }
        Ok(self.interpolate(&self.gamma_values, t, |v| v))
    }

    /// `G(t) = int_0^t alpha_eff` for `|t| <= t_max`.
    pub fn antiderivative(&self, t: f64) -> Result<Complex64> {
        self.check_range(t)?;
        let odd = |v: Complex64| -v.conj();
        if t < 0.0 {
            Ok(odd(self.interpolate(&self.g_values, -t, odd)))
        } else {
            Ok(self.interpolate(&self.g_values, t, odd))
        }
    }

    /// `H(t) = int_0^t G` for `|t| <= t_max`.
    pub fn second_antiderivative(&self, t: f64) -> Result<Complex64> {
        self.check_range(t)?;
        let even = |v: Complex64| v.conj();
        if t < 0.0 {
            Ok(even(self.interpolate(&self.h_values, -t, even)))
        } else {
            Ok(self.interpolate(&self.h_values, t, even))
        }
    }

    /// `int_0^t1 D~(tau, t2) dtau = 4 [H(t1) - H(t1 - t2) + conj(H(t2))]`.
    pub fn cross_kernel_integral(&self, t1: f64, t2: f64) -> Result<Complex64> {
        check_nonnegative(t1, t2)?;
        let h1 = self.second_antiderivative(t1)?;
        let h12 = self.second_antiderivative(t1 - t2)?;
        let h2 = self.second_antiderivative(t2)?;
        Ok((h1 - h12 + h2.conj()) * 4.0)
    }
}

fn check_nonnegative(t1: f64, t2: f64) -> Result<()> {
    if !(t1 >= 0.0 && t2 >= 0.0) {
        Err(Error::Ordering { t1, t2 })
    } else {
        Ok(())
    }
}

/// Cross-time kernel `D~(t1, t2) = 4 [G(t1) - G(t1 - t2)]`.
///
/// Defined for any `t1, t2` in `[0, t_max]`; the two-time equations only use
/// `t1 >= t2`, while `t1 < t2` is needed for integrals over `tau` in
/// `[0, t2]`.
pub fn cross_kernel(t1: f64, t2: f64, cache: &KernelCache) -> Result<Complex64> {
    check_nonnegative(t1, t2)?;
    let g1 = cache.antiderivative(t1)?;
    let g12 = cache.antiderivative(t1 - t2)?;
    cache.antiderivative(t2)?;
    Ok((g1 - g12) * 4.0)
}
