//! Second-order evolution equations for one-time expectation values, two-time
//! correlation functions and the reduced density matrix, integrated with
//! classical fixed-step RK4.
//!
//! Single time (`t1 >= 0`):
//!
//! ```text
//! d<sx>/dt1 = -D(t1) <sx> - w <sy>
//! d<sy>/dt1 = -D(t1) <sy> + w <sx>
//! d<sz>/dt1 = 0
//! ```
//!
//! Two time (`t1 >= t2`), with `xy = <sx(t1) sy(t2)>` etc.:
//!
//! ```text
//! d xx/dt1 = -D xx - w yx + D~ yy
//! d xy/dt1 = -D xy - w yy - D~ yx
//! d yx/dt1 = -D yx + w xx - D~ xy
//! d yy/dt1 = -D yy + w xy + D~ xx
//! ```
//!
//! while `<s_i(t1) sz(t2)>` and `<s_i(t1) I>` follow the single-time
//! equations and `<sz(t1) B(t2)>` is constant in `t1`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactContext;
use crate::kernels::{cross_kernel, markovian_rate, KernelCache};
use crate::model::{expectation, pauli_product, DensityMatrix, Pauli, SpinOperator, TimeGrid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// How the coefficients of the evolution equations are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    /// `D(t1)` and the cross kernel `D~(t1, t2)`.
    #[serde(rename = "nm-full")]
    NmFull,
    /// `D(t1)` with `D~` dropped: the regression theorem applied blindly.
    #[serde(rename = "nm-qrt")]
    NmQrt,
    /// Constant `D_inf` and no cross kernel.
    #[serde(rename = "markovian")]
    Markovian,
    /// Closed-form results, no integration.
    #[serde(rename = "exact")]
    Exact,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Markovian, Mode::NmQrt, Mode::NmFull, Mode::Exact];

    pub fn label(self) -> &'static str {
        match self {
            Mode::NmFull => "nm-full",
            Mode::NmQrt => "nm-qrt",
            Mode::Markovian => "markovian",
            Mode::Exact => "exact",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown mode `{s}`")))
    }
}

/// Which state seeds the Markovian two-time equations at `t1 = t2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarkovianSeed {
    /// The state obtained from the Markovian single-time evolution.
    #[default]
    MarkovianEvolved,
    /// The exact state at `t2`.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleTimeSample {
    pub t: f64,
    pub sx: Complex64,
    pub sy: Complex64,
    pub sz: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleTimeTrajectory {
    pub mode: Mode,
    pub samples: Vec<SingleTimeSample>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfSample {
    pub t1: f64,
    pub value: Complex64,
}

/// `<A(t1) B(t2)>` for fixed `t2` over a grid of `t1 >= t2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CfTrajectory {
    pub label_a: String,
    pub label_b: String,
    pub t2: f64,
    pub mode: Mode,
    pub samples: Vec<CfSample>,
}

impl CfTrajectory {
    /// `label_a.label_b`, e.g. `sx.sy`.
    pub fn pair_label(&self) -> String {
        format!("{}.{}", self.label_a, self.label_b)
    }
}

/// Fixed-step RK4 over a grid; returns the state at every grid point.
fn rk4<const N: usize, F>(grid: &TimeGrid, y0: [Complex64; N], mut rhs: F) -> Result<Vec<[Complex64; N]>>
where
    F: FnMut(f64, &[Complex64; N]) -> Result<[Complex64; N]>,
{
    let axpy = |y: &[Complex64; N], k: &[Complex64; N], h: f64| -> [Complex64; N] {
        std::array::from_fn(|i| y[i] + k[i] * h)
    };
    let mut out = Vec::with_capacity(grid.len());
    let mut y = y0;
    out.push(y);
    for n in 0..grid.n_steps() {
        let t = grid.time(n);
        let h = grid.time(n + 1) - t;
        let k1 = rhs(t, &y)?;
        let k2 = rhs(t + 0.5 * h, &axpy(&y, &k1, 0.5 * h))?;
        let k3 = rhs(t + 0.5 * h, &axpy(&y, &k2, 0.5 * h))?;
        let k4 = rhs(t + h, &axpy(&y, &k3, h))?;
        y = std::array::from_fn(|i| y[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0));
        out.push(y);
    }
    Ok(out)
}

/// Integrates the evolution equations against one shared kernel cache.
#[derive(Debug, Clone, Copy)]
pub struct Evolver<'a> {
    cache: &'a KernelCache,
    rho0: DensityMatrix,
    markovian_seed: MarkovianSeed,
}

impl<'a> Evolver<'a> {
    pub fn new(cache: &'a KernelCache, rho0: DensityMatrix) -> Result<Self> {
        ExactContext::new(cache, rho0)?;
        Ok(Self {
            cache,
            rho0,
            markovian_seed: MarkovianSeed::default(),
        })
    }

    pub fn with_markovian_seed(mut self, seed: MarkovianSeed) -> Self {
        self.markovian_seed = seed;
        self
    }

    pub fn markovian_seed(&self) -> MarkovianSeed {
        self.markovian_seed
    }

    pub fn cache(&self) -> &'a KernelCache {
        self.cache
    }

    pub fn exact(&self) -> ExactContext<'a> {
        ExactContext::new(self.cache, self.rho0).expect("state validated on construction")
    }

    fn omega(&self) -> f64 {
        self.cache.params().omega_s
    }

    fn rate(&self, mode: Mode, t: f64) -> Result<f64> {
        match mode {
            Mode::Markovian => Ok(markovian_rate(self.cache.params())),
            _ => self.cache.dephasing_rate(t),
        }
    }

    fn cross(&self, mode: Mode, t1: f64, t2: f64) -> Result<Complex64> {
        match mode {
            Mode::NmFull => cross_kernel(t1, t2, self.cache),
            _ => Ok(ZERO),
        }
    }

    fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        let t_max = self.cache.t_max();
        if grid.t_start() < 0.0 {
            return Err(Error::OutOfRange {
                t: grid.t_start(),
                t_max,
            });
        }
        if grid.t_end() > t_max + 1e-9 * self.cache.grid_step() {
            return Err(Error::OutOfRange { t: grid.t_end(), t_max });
        }
        Ok(())
    }

    /// Single-time expectation under the Markovian equations, in closed form.
    fn markovian_expectation(&self, op: &SpinOperator, t: f64) -> Complex64 {
        let rate = markovian_rate(self.cache.params());
        let r = &self.rho0;
        let rotation = Complex64::from_polar(1.0, self.omega() * t);
        (op.a * r.rho10 * rotation + op.b * r.rho01 * rotation.conj()) * (-rate * t).exp()
            + op.identity_component()
            + op.z_component() * (r.rho00 - r.rho11)
    }

    /// `<sx>, <sy>, <sz>` on `grid`, which must start at `t = 0`.
    pub fn evolve_single(&self, grid: &TimeGrid, mode: Mode) -> Result<SingleTimeTrajectory> {
        self.check_grid(grid)?;
        if grid.t_start() != 0.0 {
            return Err(Error::Grid("single-time evolution starts at t = 0".into()));
        }
        let ops = [SpinOperator::sigma_x(), SpinOperator::sigma_y(), SpinOperator::sigma_z()];
        let states: Vec<[Complex64; 3]> = if mode == Mode::Exact {
            let ctx = self.exact();
            grid.times()
                .map(|t| {
                    Ok([
                        ctx.expectation_single(&ops[0], t)?,
                        ctx.expectation_single(&ops[1], t)?,
                        ctx.expectation_single(&ops[2], t)?,
                    ])
                })
                .collect::<Result<_>>()?
        } else {
            let y0 = ops.map(|op| expectation(&op, &self.rho0));
            let w = self.omega();
            rk4(grid, y0, |t, y| {
                let d = self.rate(mode, t)?;
                Ok([-y[0] * d - y[1] * w, -y[1] * d + y[0] * w, ZERO])
            })?
        };
        Ok(SingleTimeTrajectory {
            mode,
            samples: grid
                .times()
                .zip(states)
                .map(|(t, [sx, sy, sz])| SingleTimeSample { t, sx, sy, sz })
                .collect(),
        })
    }

    /// `<A(t2) B(t2)> = <(AB)(t2)>` as seen by `mode`.
    pub fn equal_time_value(&self, a: &SpinOperator, b: &SpinOperator, t2: f64, mode: Mode) -> Result<Complex64> {
        let product = pauli_product(a, b);
        let exact = self.exact();
        let value = exact.expectation_single(&product, t2)?;
        match (mode, self.markovian_seed) {
            (Mode::Markovian, MarkovianSeed::MarkovianEvolved) => Ok(self.markovian_expectation(&product, t2)),
            _ => Ok(value),
        }
    }

    /// `<A(t1) B(t2)>` over `grid`, which must start at `t2`.
    ///
    /// General operators are expanded in the Pauli basis; each needed
    /// `<s_i(t1) s_j(t2)>` comes from the closed system it belongs to.
    pub fn evolve_two_time(
        &self,
        a: &SpinOperator,
        b: &SpinOperator,
        t2: f64,
        grid: &TimeGrid,
        mode: Mode,
    ) -> Result<CfTrajectory> {
        if t2 < 0.0 {
            return Err(Error::Ordering { t1: grid.t_start(), t2 });
        }
        if (grid.t_start() - t2).abs() > 1e-12 * t2.max(1.0) {
            return Err(Error::Grid(format!(
                "two-time grid must start at t2 = {t2}, starts at {}",
                grid.t_start()
            )));
        }
        self.check_grid(grid)?;

        let values: Vec<Complex64> = if mode == Mode::Exact {
            let ctx = self.exact();
            grid.times().map(|t1| ctx.cf_exact(a, b, t1.max(t2), t2)).collect::<Result<_>>()?
        } else {
            self.two_time_by_components(a, b, t2, grid, mode)?
        };

        Ok(CfTrajectory {
            label_a: a.to_string(),
            label_b: b.to_string(),
            t2,
            mode,
            samples: grid.times().zip(values).map(|(t1, value)| CfSample { t1, value }).collect(),
        })
    }

    fn two_time_by_components(
        &self,
        a: &SpinOperator,
        b: &SpinOperator,
        t2: f64,
        grid: &TimeGrid,
        mode: Mode,
    ) -> Result<Vec<Complex64>> {
        let ka = a.pauli_components();
        let kb = b.pauli_components();
        let needs_dynamic_rows = ka[Pauli::X.index()] != ZERO || ka[Pauli::Y.index()] != ZERO;
        let mut total = vec![ZERO; grid.len()];
        let mut case3: Option<[Vec<Complex64>; 4]> = None;

        for pb in Pauli::ALL {
            let beta = kb[pb.index()];
            if beta == ZERO {
                continue;
            }
            // rows I and Z are constant in t1
            for pa in [Pauli::I, Pauli::Z] {
                let alpha = ka[pa.index()];
                if alpha != ZERO {
                    let v = self.equal_time_value(&pa.operator(), &pb.operator(), t2, mode)? * alpha * beta;
                    total.iter_mut().for_each(|x| *x += v);
                }
            }
            if !needs_dynamic_rows {
                continue;
            }
            let (row_x, row_y): (&[Complex64], &[Complex64]) = match pb {
                Pauli::X | Pauli::Y => {
                    if case3.is_none() {
                        case3 = Some(self.case3_system(t2, grid, mode)?);
                    }
                    let [xx, xy, yx, yy] = case3.as_ref().expect("just computed");
                    if pb == Pauli::X {
                        (xx, yx)
                    } else {
                        (xy, yy)
                    }
                }
                Pauli::I | Pauli::Z => {
                    let pair = self.regression_pair(pb, t2, grid, mode)?;
                    accumulate(&mut total, &pair[0], ka[Pauli::X.index()] * beta);
                    accumulate(&mut total, &pair[1], ka[Pauli::Y.index()] * beta);
                    continue;
                }
            };
            accumulate(&mut total, row_x, ka[Pauli::X.index()] * beta);
            accumulate(&mut total, row_y, ka[Pauli::Y.index()] * beta);
        }
        Ok(total)
    }

    /// `<sx(t1) B(t2)>, <sy(t1) B(t2)>` for `B` in `{I, sz}`; these obey the
    /// single-time equations in every mode.
    fn regression_pair(&self, b: Pauli, t2: f64, grid: &TimeGrid, mode: Mode) -> Result<[Vec<Complex64>; 2]> {
        let bop = b.operator();
        let y0 = [
            self.equal_time_value(&SpinOperator::sigma_x(), &bop, t2, mode)?,
            self.equal_time_value(&SpinOperator::sigma_y(), &bop, t2, mode)?,
        ];
        let w = self.omega();
        let states = rk4(grid, y0, |t, y| {
            let d = self.rate(mode, t)?;
            Ok([-y[0] * d - y[1] * w, -y[1] * d + y[0] * w])
        })?;
        Ok([states.iter().map(|s| s[0]).collect(), states.iter().map(|s| s[1]).collect()])
    }

    /// The coupled `{xx, xy, yx, yy}` system.
    fn case3_system(&self, t2: f64, grid: &TimeGrid, mode: Mode) -> Result<[Vec<Complex64>; 4]> {
        let (sx, sy) = (SpinOperator::sigma_x(), SpinOperator::sigma_y());
        let y0 = [
            self.equal_time_value(&sx, &sx, t2, mode)?,
            self.equal_time_value(&sx, &sy, t2, mode)?,
            self.equal_time_value(&sy, &sx, t2, mode)?,
            self.equal_time_value(&sy, &sy, t2, mode)?,
        ];
        let w = self.omega();
        let states = rk4(grid, y0, |t1, y| {
            let d = self.rate(mode, t1)?;
            let dt = self.cross(mode, t1, t2)?;
            let [xx, xy, yx, yy] = *y;
            Ok([
                -xx * d - yx * w + dt * yy,
                -xy * d - yy * w - dt * yx,
                -yx * d + xx * w - dt * xy,
                -yy * d + xy * w + dt * xx,
            ])
        })?;
        Ok(std::array::from_fn(|i| states.iter().map(|s| s[i]).collect()))
    }

    /// Density matrix on `grid` (starting at `t = 0`) from the TCL2 master
    /// equation `drho/dt = -(i w/2)[sz, rho] - (D/2)(rho - sz rho sz)`.
    pub fn evolve_master(&self, grid: &TimeGrid, mode: Mode) -> Result<Vec<DensityMatrix>> {
        self.check_grid(grid)?;
        if grid.t_start() != 0.0 {
            return Err(Error::Grid("master-equation evolution starts at t = 0".into()));
        }
        if mode == Mode::Exact {
            let ctx = self.exact();
            return grid.times().map(|t| ctx.reduced_density(t)).collect();
        }
        let sz = SpinOperator::sigma_z();
        let half_iw = Complex64::new(0.0, 0.5 * self.omega());
        let r = &self.rho0;
        let y0 = [r.rho00, r.rho01, r.rho10, r.rho11];
        let states = rk4(grid, y0, |t, y| {
            let d = self.rate(mode, t)?;
            let rho = SpinOperator::new(y[0], y[1], y[2], y[3]);
            let commutator = sz * rho - rho * sz;
            let dephasing = rho - sz * rho * sz;
            let drho = commutator.scale(-half_iw) - dephasing.scale((0.5 * d).into());
            Ok([drho.c, drho.a, drho.b, drho.d])
        })?;
        Ok(states
            .into_iter()
            .map(|[r00, r01, r10, r11]| DensityMatrix::from_elements(r00, r01, r10, r11))
            .collect())
    }
}

fn accumulate(total: &mut [Complex64], row: &[Complex64], k: Complex64) {
    if k == ZERO {
        return;
    }
    for (t, r) in total.iter_mut().zip(row) {
        *t += *r * k;
    }
}
