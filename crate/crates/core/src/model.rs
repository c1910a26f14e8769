//! Shared domain types: model parameters, qubit operators, density matrices
//! and uniform time grids.
//!
//! Basis convention: `sigma_z |0> = |0>`, `sigma_z |1> = -|1>`. A general
//! operator is stored as the matrix `[[c, a], [b, d]]`, so `a` multiplies
//! `sigma_+ = |0><1|` and `b` multiplies `sigma_- = |1><0|`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tolerance applied to the density-matrix invariants.
pub const STATE_TOLERANCE: f64 = 1e-12;

/// Physical parameters of the qubit and its bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Qubit splitting `omega_S`.
    pub omega_s: f64,
    /// Dimensionless coupling strength of the ohmic spectral density.
    pub gamma: f64,
    /// Bath cutoff frequency `Lambda`.
    pub cutoff: f64,
    /// Bath temperature `k_B T / hbar`; zero is allowed.
    pub temperature: f64,
}

impl ModelParams {
    pub fn new(omega_s: f64, gamma: f64, cutoff: f64, temperature: f64) -> Result<Self> {
        let params = Self {
            omega_s,
            gamma,
            cutoff,
            temperature,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters shared by all three published figures:
    /// `omega_S = 1, T = 0.1, Lambda = 5, gamma = 0.1`.
    pub fn figure_preset() -> Self {
        Self {
            omega_s: 1.0,
            gamma: 0.1,
            cutoff: 5.0,
            temperature: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega_s.is_finite() {
            return Err(Error::InvalidParameter(format!("omega_s must be finite, got {}", self.omega_s)));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.cutoff.is_finite() && self.cutoff > 0.0) {
            return Err(Error::InvalidParameter(format!("cutoff must be > 0, got {}", self.cutoff)));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.temperature == 0.0
    }
}

/// The Pauli basis `{I, sigma_x, sigma_y, sigma_z}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn operator(self) -> SpinOperator {
        match self {
            Pauli::I => SpinOperator::identity(),
            Pauli::X => SpinOperator::sigma_x(),
            Pauli::Y => SpinOperator::sigma_y(),
            Pauli::Z => SpinOperator::sigma_z(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pauli::I => "id",
            Pauli::X => "sx",
            Pauli::Y => "sy",
            Pauli::Z => "sz",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

/// A 2x2 complex operator `[[c, a], [b, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinOperator {
    pub c: Complex64,
    pub a: Complex64,
    pub b: Complex64,
    pub d: Complex64,
}

impl SpinOperator {
    pub const fn new(c: Complex64, a: Complex64, b: Complex64, d: Complex64) -> Self {
        Self { c, a, b, d }
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn sigma_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn sigma_y() -> Self {
        Self::new(ZERO, Complex64::new(0.0, -1.0), I, ZERO)
    }

    pub const fn sigma_z() -> Self {
        Self::new(ONE, ZERO, ZERO, Complex64::new(-1.0, 0.0))
    }

    /// `sigma_+ = |0><1|`.
    pub const fn sigma_plus() -> Self {
        Self::new(ZERO, ONE, ZERO, ZERO)
    }

    /// `sigma_- = |1><0|`.
    pub const fn sigma_minus() -> Self {
        Self::new(ZERO, ZERO, ONE, ZERO)
    }

    /// Row-major matrix `[[c, a], [b, d]]`.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [[self.c, self.a], [self.b, self.d]]
    }

    pub fn from_matrix(m: [[Complex64; 2]; 2]) -> Self {
        Self::new(m[0][0], m[0][1], m[1][0], m[1][1])
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.c.conj(), self.b.conj(), self.a.conj(), self.d.conj())
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::new(self.c * k, self.a * k, self.b * k, self.d * k)
    }

    /// Coefficients in the Pauli basis, ordered as [`Pauli::ALL`].
    pub fn pauli_components(&self) -> [Complex64; 4] {
        [
            (self.c + self.d) * 0.5,
            (self.a + self.b) * 0.5,
            I * (self.a - self.b) * 0.5,
            (self.c - self.d) * 0.5,
        ]
    }

    pub fn from_pauli_components(k: [Complex64; 4]) -> Self {
        Pauli::ALL
            .iter()
            .zip(k)
            .fold(Self::zero(), |acc, (p, coeff)| acc + p.operator().scale(coeff))
    }

    /// The purely off-diagonal part `a sigma_+ + b sigma_-`.
    pub fn off_diagonal(&self) -> Self {
        Self::new(ZERO, self.a, self.b, ZERO)
    }

    pub fn is_off_diagonal(&self) -> bool {
        self.c == ZERO && self.d == ZERO
    }

    /// Coefficient of `sigma_z` in the diagonal part.
    pub fn z_component(&self) -> Complex64 {
        (self.c - self.d) * 0.5
    }

    /// Coefficient of the identity in the diagonal part.
    pub fn identity_component(&self) -> Complex64 {
        (self.c + self.d) * 0.5
    }
}

impl Add for SpinOperator {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.c + rhs.c, self.a + rhs.a, self.b + rhs.b, self.d + rhs.d)
    }
}

impl Sub for SpinOperator {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.c - rhs.c, self.a - rhs.a, self.b - rhs.b, self.d - rhs.d)
    }
}

impl Neg for SpinOperator {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-ONE)
    }
}

impl Mul for SpinOperator {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        pauli_product(&self, &rhs)
    }
}

/// Matrix product `A B`.
pub fn pauli_product(lhs: &SpinOperator, rhs: &SpinOperator) -> SpinOperator {
    SpinOperator::new(
        lhs.c * rhs.c + lhs.a * rhs.b,
        lhs.c * rhs.a + lhs.a * rhs.d,
        lhs.b * rhs.c + lhs.d * rhs.b,
        lhs.b * rhs.a + lhs.d * rhs.d,
    )
}

/// `Tr(A rho)`, taking `Tr rho = 1` so that the identity part of `A`
/// contributes its coefficient exactly.
pub fn expectation(op: &SpinOperator, rho: &DensityMatrix) -> Complex64 {
    op.identity_component()
        + op.z_component() * (rho.rho00 - rho.rho11)
        + op.a * rho.rho10
        + op.b * rho.rho01
}

impl fmt::Display for SpinOperator {
    /// Renders as a linear combination of the named basis operators, in a
    /// form accepted by [`SpinOperator::from_str`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let named = [
            (SpinOperator::sigma_x(), "sx"),
            (SpinOperator::sigma_y(), "sy"),
            (SpinOperator::sigma_plus(), "sp"),
            (SpinOperator::sigma_minus(), "sm"),
            (SpinOperator::sigma_z(), "sz"),
            (SpinOperator::identity(), "id"),
        ];
        if let Some((_, name)) = named.iter().find(|(op, _)| op == self) {
            return f.write_str(name);
        }
        let terms: Vec<(Complex64, &str)> = [
            (self.identity_component(), "id"),
            (self.a, "sp"),
            (self.b, "sm"),
            (self.z_component(), "sz"),
        ]
        .into_iter()
        .filter(|(k, _)| *k != ZERO)
        .collect();
        if terms.is_empty() {
            return write!(f, "0*id");
        }
        for (n, (k, name)) in terms.iter().enumerate() {
            if n > 0 {
                write!(f, "+")?;
            }
            if *k == ONE {
                write!(f, "{name}")?;
            } else {
                write!(f, "({}{:+}i)*{name}", k.re, k.im)?;
            }
        }
        Ok(())
    }
}

impl FromStr for SpinOperator {
    type Err = Error;

    /// Parses a complex linear combination of `sx, sy, sz, sp, sm, id`, e.g.
    /// `sx`, `sx + 0.5*sz`, `(1-2i)*sp - i*sm`, `2i sy`.
    fn from_str(s: &str) -> Result<Self> {
        OperatorParser::new(s).parse()
    }
}

struct OperatorParser<'a> {
    input: &'a str,
    chars: Vec<char>,
    pos: usize,
}

impl<'a> OperatorParser<'a> {
    fn new(input: &'a str) -> Self {
        Self {
            input,
            chars: input.chars().filter(|c| !c.is_whitespace()).collect(),
            pos: 0,
        }
    }

    fn fail<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            input: self.input.to_string(),
            reason: reason.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse(mut self) -> Result<SpinOperator> {
        if self.chars.is_empty() {
            return self.fail("empty expression");
        }
        let mut total = SpinOperator::zero();
        let mut first = true;
        while self.pos < self.chars.len() {
            let sign = if self.eat('+') {
                1.0
            } else if self.eat('-') {
                -1.0
            } else if first {
                1.0
            } else {
                return self.fail(format!("expected `+` or `-` at position {}", self.pos));
            };
            first = false;
            let term = self.term()?;
            total = total + term.scale(Complex64::new(sign, 0.0));
        }
        Ok(total)
    }

    fn term(&mut self) -> Result<SpinOperator> {
        let starts_name = match self.peek() {
            Some('i') => self.chars.get(self.pos + 1) == Some(&'d'),
            Some(c) => c.is_ascii_alphabetic(),
            None => false,
        };
        let coeff = if starts_name {
            ONE
        } else {
            let k = self.coefficient()?;
            self.eat('*');
            k
        };
        let name = self.name()?;
        Ok(name.scale(coeff))
    }

    fn coefficient(&mut self) -> Result<Complex64> {
        if self.eat('(') {
            let mut value = ZERO;
            let mut first = true;
            while !self.eat(')') {
                let sign = if self.eat('+') {
                    1.0
                } else if self.eat('-') {
                    -1.0
                } else if first {
                    1.0
                } else {
                    return self.fail("malformed complex coefficient");
                };
                first = false;
                value += self.scalar()? * sign;
                if self.pos >= self.chars.len() {
                    return self.fail("unclosed parenthesis");
                }
            }
            if first {
                return self.fail("empty parentheses");
            }
            Ok(value)
        } else {
            self.scalar()
        }
    }

    /// A real number, optionally followed by `i`, or a bare `i`.
    fn scalar(&mut self) -> Result<Complex64> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            let exponent_sign = (c == '+' || c == '-')
                && self.pos > start
                && matches!(self.chars[self.pos - 1], 'e' | 'E');
            if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exponent_sign {
                // `e` only belongs to the number when followed by a digit or sign
                if (c == 'e' || c == 'E')
                    && !self
                        .chars
                        .get(self.pos + 1)
                        .is_some_and(|n| n.is_ascii_digit() || *n == '+' || *n == '-')
                {
                    break;
                }
                self.pos += 1;
            } else {
                break;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        let magnitude = if text.is_empty() {
            None
        } else {
            match text.parse::<f64>() {
                Ok(v) => Some(v),
                Err(_) => return self.fail(format!("bad number `{text}`")),
            }
        };
        // a lone `i` is the imaginary unit unless it starts the name `id`
        let imaginary = self.peek() == Some('i') && self.chars.get(self.pos + 1) != Some(&'d') && self.eat('i');
        match (magnitude, imaginary) {
            (Some(v), false) => Ok(Complex64::new(v, 0.0)),
            (Some(v), true) => Ok(Complex64::new(0.0, v)),
            (None, true) => Ok(I),
            (None, false) => self.fail(format!("expected a coefficient at position {start}")),
        }
    }

    fn name(&mut self) -> Result<SpinOperator> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        match name.as_str() {
            "sx" => Ok(SpinOperator::sigma_x()),
            "sy" => Ok(SpinOperator::sigma_y()),
            "sz" => Ok(SpinOperator::sigma_z()),
            "sp" => Ok(SpinOperator::sigma_plus()),
            "sm" => Ok(SpinOperator::sigma_minus()),
            "id" => Ok(SpinOperator::identity()),
            "" => self.fail(format!("expected an operator name at position {start}")),
            other => self.fail(format!("unknown operator `{other}`")),
        }
    }
}

/// Reduced 2x2 density matrix in the `sigma_z` eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    pub rho00: Complex64,
    pub rho01: Complex64,
    pub rho10: Complex64,
    pub rho11: Complex64,
}

impl DensityMatrix {
    /// Builds and validates a state from its four matrix elements.
    pub fn new(rho00: Complex64, rho01: Complex64, rho10: Complex64, rho11: Complex64) -> Result<Self> {
        let rho = Self::from_elements(rho00, rho01, rho10, rho11);
        match rho.invariant_violation(STATE_TOLERANCE) {
            None => Ok(rho),
            Some(msg) => Err(Error::InvalidParameter(msg)),
        }
    }

    /// Unchecked construction, for states produced by integrators.
    pub(crate) fn from_elements(rho00: Complex64, rho01: Complex64, rho10: Complex64, rho11: Complex64) -> Self {
        Self {
            rho00,
            rho01,
            rho10,
            rho11,
        }
    }

    /// Hermitian state from populations and the coherence `rho01`.
    pub fn from_populations(rho00: f64, rho11: f64, rho01: Complex64) -> Result<Self> {
        Self::new(rho00.into(), rho01, rho01.conj(), rho11.into())
    }

    /// Pure state `amp0 |0> + amp1 |1>`, normalised.
    pub fn pure(amp0: Complex64, amp1: Complex64) -> Result<Self> {
        let norm = (amp0.norm_sqr() + amp1.norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter("pure-state amplitudes must not both vanish".into()));
        }
        let (u, v) = (amp0 / norm, amp1 / norm);
        Self::new(
            (u * u.conj()).re.into(),
            u * v.conj(),
            v * u.conj(),
            (v * v.conj()).re.into(),
        )
    }

    /// `(sqrt(3)/2)|e> + (1/2)|g>` with `|e>` mapped to `|0>`: populations
    /// 3/4 and 1/4, coherence `sqrt(3)/4`.
    pub fn figure_state() -> Self {
        Self::from_populations(0.75, 0.25, Complex64::new(3f64.sqrt() / 4.0, 0.0))
            .expect("figure state is a valid pure state")
    }

    pub fn trace(&self) -> Complex64 {
        self.rho00 + self.rho11
    }

    /// Describes the first violated invariant, if any.
    pub fn invariant_violation(&self, tol: f64) -> Option<String> {
        let all = [self.rho00, self.rho01, self.rho10, self.rho11];
        if all.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Some("density matrix has non-finite elements".into());
        }
        let tr = self.trace();
        if (tr - ONE).norm() > tol {
            return Some(format!("trace is {tr}, expected 1"));
        }
        if self.rho00.im.abs() > tol || self.rho11.im.abs() > tol {
            return Some("diagonal elements must be real".into());
        }
        if self.rho00.re < -tol || self.rho11.re < -tol {
            return Some("populations must be nonnegative".into());
        }
        if (self.rho10 - self.rho01.conj()).norm() > tol {
            return Some("density matrix is not Hermitian".into());
        }
        let det = self.rho00.re * self.rho11.re - self.rho01.norm_sqr();
        if det < -tol {
            return Some(format!("density matrix is not positive (determinant {det})"));
        }
        None
    }

    pub fn as_operator(&self) -> SpinOperator {
        SpinOperator::new(self.rho00, self.rho01, self.rho10, self.rho11)
    }
}

/// Uniform grid `t_start, t_start + step, ..., t_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    step: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, step: f64) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && step.is_finite()) {
            return Err(Error::Grid("grid bounds and step must be finite".into()));
        }
        if step <= 0.0 {
            return Err(Error::Grid(format!("step must be > 0, got {step}")));
        }
        if t_end < t_start {
            return Err(Error::Grid(format!("t_end = {t_end} precedes t_start = {t_start}")));
        }
        let span = t_end - t_start;
        let ratio = span / step;
        let n_steps = ratio.round();
        if (ratio - n_steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::Grid(format!(
                "span {span} is not an integer multiple of step {step}"
            )));
        }
        Ok(Self {
            t_start,
            t_end,
            step,
            n_steps: n_steps as usize,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid points, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The `k`-th grid point; the last point is exactly `t_end`.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            self.t_start + k as f64 * self.step
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |k| self.time(k))
    }
}
