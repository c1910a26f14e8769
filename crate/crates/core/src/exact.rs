//! Closed-form reduced dynamics and two-time correlation functions.
//!
//! With `F(t) = i omega_S t + Gamma(t)` the exact state is
//! `rho00(t) = rho00(0)`, `rho11(t) = rho11(0)`, `rho01(t) = rho01(0) e^{-F(t)}`.
//! Two-time correlations of off-diagonal operators additionally pick up the
//! cross-time exponent `int_0^t1 D~(tau, t2) dtau`, which is what the reduced
//! state alone cannot supply.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::KernelCache;
use crate::model::{DensityMatrix, ModelParams, SpinOperator};

#[derive(Debug, Clone, Copy)]
pub struct ExactContext<'a> {
    cache: &'a KernelCache,
    rho0: DensityMatrix,
}

fn check_order(t1: f64, t2: f64) -> Result<()> {
    if !(t2 >= 0.0 && t1 >= t2) {
        Err(Error::Ordering { t1, t2 })
    } else {
        Ok(())
    }
}

fn require_off_diagonal(op: &SpinOperator, role: &str) -> Result<()> {
    if op.is_off_diagonal() {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "{role} must be purely off-diagonal (c = d = 0), got {op}"
        )))
    }
}

impl<'a> ExactContext<'a> {
    pub fn new(cache: &'a KernelCache, rho0: DensityMatrix) -> Result<Self> {
        if let Some(msg) = rho0.invariant_violation(crate::model::STATE_TOLERANCE) {
            return Err(Error::InvalidParameter(msg));
        }
        Ok(Self { cache, rho0 })
    }

    pub fn params(&self) -> &ModelParams {
        self.cache.params()
    }

    pub fn cache(&self) -> &'a KernelCache {
        self.cache
    }

    pub fn rho0(&self) -> &DensityMatrix {
        &self.rho0
    }

    fn omega(&self) -> f64 {
        self.cache.params().omega_s
    }

    fn time(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::OutOfRange {
                t,
                t_max: self.cache.t_max(),
            });
        }
        self.cache.decoherence_exponent(t)
    }

    /// Exact reduced density matrix at time `t`.
    pub fn reduced_density(&self, t: f64) -> Result<DensityMatrix> {
        let gamma = self.time(t)?;
        let decay = Complex64::new(-gamma, -self.omega() * t).exp();
        let r = &self.rho0;
        Ok(DensityMatrix::from_elements(r.rho00, r.rho01 * decay, r.rho10 * decay.conj(), r.rho11))
    }

    /// `<A(t1)>` for a general operator.
    pub fn expectation_single(&self, op: &SpinOperator, t1: f64) -> Result<Complex64> {
        let gamma = self.time(t1)?;
        let r = &self.rho0;
        let rotation = Complex64::from_polar(1.0, self.omega() * t1);
        let coherent = (op.a * r.rho10 * rotation + op.b * r.rho01 * rotation.conj()) * (-gamma).exp();
        Ok(coherent + op.identity_component() + op.z_component() * (r.rho00 - r.rho11))
    }

    /// `<A(t1) sigma_z(t2)>` for off-diagonal `A`; independent of `t2`.
    pub fn cf_case1(&self, a: &SpinOperator, t1: f64, t2: f64) -> Result<Complex64> {
        require_off_diagonal(a, "A")?;
        check_order(t1, t2)?;
        let gamma = self.time(t1)?;
        let r = &self.rho0;
        let rotation = Complex64::from_polar(1.0, self.omega() * t1);
        Ok((-a.a * r.rho10 * rotation + a.b * r.rho01 * rotation.conj()) * (-gamma).exp())
    }

    /// `<sigma_z(t1) B(t2)>` for off-diagonal `B`; independent of `t1`.
    pub fn cf_case2(&self, b: &SpinOperator, t1: f64, t2: f64) -> Result<Complex64> {
        require_off_diagonal(b, "B")?;
        check_order(t1, t2)?;
        self.time(t1)?;
        let gamma = self.time(t2)?;
        let r = &self.rho0;
        let rotation = Complex64::from_polar(1.0, self.omega() * t2);
        Ok((b.a * r.rho10 * rotation - b.b * r.rho01 * rotation.conj()) * (-gamma).exp())
    }

    /// `<A(t1) B(t2)>` for off-diagonal `A` and `B`.
    pub fn cf_case3(&self, a: &SpinOperator, b: &SpinOperator, t1: f64, t2: f64) -> Result<Complex64> {
        require_off_diagonal(a, "A")?;
        require_off_diagonal(b, "B")?;
        check_order(t1, t2)?;
        let exponent = Complex64::new(-self.time(t1)? - self.time(t2)?, 0.0)
            + self.cache.cross_kernel_integral(t1, t2)?;
        let r = &self.rho0;
        let rotation = Complex64::from_polar(1.0, self.omega() * (t1 - t2));
        let amplitude = a.a * b.b * r.rho00 * rotation + a.b * b.a * r.rho11 * rotation.conj();
        Ok(exponent.exp() * amplitude)
    }

    /// `<A(t1) B(t2)>` for arbitrary operators, `t1 >= t2 >= 0`.
    ///
    /// Each operator is split into its off-diagonal part and multiples of
    /// `sigma_z` and the identity; the nine cross terms route to the case
    /// formulas above.
    pub fn cf_exact(&self, a: &SpinOperator, b: &SpinOperator, t1: f64, t2: f64) -> Result<Complex64> {
        check_order(t1, t2)?;
        let zero = Complex64::new(0.0, 0.0);
        let (a_off, a_z, a_id) = (a.off_diagonal(), a.z_component(), a.identity_component());
        let (b_off, b_z, b_id) = (b.off_diagonal(), b.z_component(), b.identity_component());
        let a_has_off = a_off != SpinOperator::zero();
        let b_has_off = b_off != SpinOperator::zero();
        let sz = self.rho0.rho00 - self.rho0.rho11;

        let mut total = zero;
        if a_has_off && b_has_off {
            total += self.cf_case3(&a_off, &b_off, t1, t2)?;
        }
        if a_has_off && b_z != zero {
            total += self.cf_case1(&a_off, t1, t2)? * b_z;
        }
        if a_z != zero && b_has_off {
            total += self.cf_case2(&b_off, t1, t2)? * a_z;
        }
        if a_has_off && b_id != zero {
            total += self.expectation_single(&a_off, t1)? * b_id;
        }
        if a_id != zero && b_has_off {
            total += self.expectation_single(&b_off, t2)? * a_id;
        }
        // range checks also apply to the purely diagonal terms
        self.time(t1)?;
        total += a_z * b_z + (a_z * b_id + a_id * b_z) * sz + a_id * b_id;
        Ok(total)
    }
}
