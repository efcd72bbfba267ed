//! Second-order forward-mode differentiation.
//!
//! A [`Jet2`] carries a value together with its gradient and Hessian with
//! respect to the chart coordinates. Every metric and congruence in the
//! catalog is written once against `Jet2` and evaluated either on seeded
//! coordinates (to obtain first and second derivatives) or on dimension-0
//! jets (plain values, no derivative bookkeeping).
//!
//! Jets of different dimensions may be mixed: a missing derivative slot is
//! zero, so constants can be created with [`Jet2::constant`] regardless of
//! the chart dimension.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Largest supported chart dimension.
pub const MAX_DIM: usize = 12;

const HESS_LEN: usize = MAX_DIM * (MAX_DIM + 1) / 2;

/// Packed upper-triangular storage: entry (i, j) with i <= j lives at
/// `j (j + 1) / 2 + i`. The first `n (n + 1) / 2` slots cover all pairs
/// with indices below `n`.
const fn packed_pairs() -> [(u8, u8); HESS_LEN] {
    let mut out = [(0u8, 0u8); HESS_LEN];
    let mut j = 0;
    while j < MAX_DIM {
        let mut i = 0;
        while i <= j {
            out[j * (j + 1) / 2 + i] = (i as u8, j as u8);
            i += 1;
        }
        j += 1;
    }
    out
}

const PAIRS: [(u8, u8); HESS_LEN] = packed_pairs();

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

#[inline]
fn hess_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// A scalar carried with its first and second coordinate derivatives.
#[derive(Clone, Copy)]
pub struct Jet2 {
    value: f64,
    dim: u8,
    grad: [f64; MAX_DIM],
    hess: [f64; HESS_LEN],
}

impl Jet2 {
    /// A constant with no derivative slots.
    pub const fn constant(value: f64) -> Self {
        Jet2 {
            value,
            dim: 0,
            grad: [0.0; MAX_DIM],
            hess: [0.0; HESS_LEN],
        }
    }

    /// A constant living in a chart of dimension `dim`.
    pub fn seed_const(value: f64, dim: usize) -> Result<Self> {
        if dim > MAX_DIM {
            return Err(Error::DimensionTooLarge(dim));
        }
        let mut j = Jet2::constant(value);
        j.dim = dim as u8;
        Ok(j)
    }

    /// The coordinate function `x^index` evaluated at `x`.
    pub fn seed_var(x: f64, index: usize, dim: usize) -> Result<Self> {
        if dim > MAX_DIM {
            return Err(Error::DimensionTooLarge(dim));
        }
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut j = Jet2::seed_const(x, dim)?;
        j.grad[index] = 1.0;
        Ok(j)
    }

    /// Seeds every coordinate of `point`.
    pub fn seed_point(point: &[f64]) -> Result<Vec<Jet2>> {
        let dim = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &x)| Jet2::seed_var(x, i, dim))
            .collect()
    }

    /// Dimension-0 jets for value-only evaluation.
    pub fn constants(point: &[f64]) -> Vec<Jet2> {
        point.iter().map(|&x| Jet2::constant(x)).collect()
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.value
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// First derivative along chart axis `i` (zero outside the seeded range).
    #[inline]
    pub fn grad(&self, i: usize) -> f64 {
        if i < MAX_DIM {
            self.grad[i]
        } else {
            0.0
        }
    }

    /// Second derivative along axes `i`, `j`.
    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        if i < MAX_DIM && j < MAX_DIM {
            self.hess[packed(i, j)]
        } else {
            0.0
        }
    }

    pub fn grad_vec(&self) -> Vec<f64> {
        self.grad[..self.dim()].to_vec()
    }

    pub fn hess_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.hess(i, j)).collect())
            .collect()
    }

    /// True when value and all derivatives are finite.
    pub fn is_finite(&self) -> bool {
        let n = self.dim();
        self.value.is_finite()
            && self.grad[..n].iter().all(|g| g.is_finite())
            && self.hess[..hess_len(n)].iter().all(|h| h.is_finite())
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value`.
    #[inline]
    fn chain(self, f: f64, d1: f64, d2: f64) -> Jet2 {
        let n = self.dim();
        let mut out = self;
        out.value = f;
        for p in 0..hess_len(n) {
            let (i, j) = PAIRS[p];
            out.hess[p] = d1 * self.hess[p] + d2 * self.grad[i as usize] * self.grad[j as usize];
        }
        for i in 0..n {
            out.grad[i] = d1 * self.grad[i];
        }
        out
    }

    pub fn sqrt(self) -> Jet2 {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn exp(self) -> Jet2 {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Jet2 {
        let x = self.value;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn sin(self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tan(self) -> Jet2 {
        let t = self.value.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }

    pub fn recip(self) -> Jet2 {
        let x = self.value;
        let r = 1.0 / x;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn powi(self, n: i32) -> Jet2 {
        let x = self.value;
        let d1 = if n == 0 {
            0.0
        } else {
            n as f64 * x.powi(n - 1)
        };
        let d2 = if n == 0 || n == 1 {
            0.0
        } else {
            (n * (n - 1)) as f64 * x.powi(n - 2)
        };
        self.chain(x.powi(n), d1, d2)
    }

    pub fn powf(self, p: f64) -> Jet2 {
        let x = self.value;
        self.chain(
            x.powf(p),
            p * x.powf(p - 1.0),
            p * (p - 1.0) * x.powf(p - 2.0),
        )
    }

    /// Absolute value; the kink at zero is guarded by [`Jet2::apply`].
    pub fn abs(self) -> Jet2 {
        if self.value < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqr(self) -> Jet2 {
        self * self
    }

    /// Checked evaluation of an elementary operation.
    pub fn apply(op: JetOp, args: &[Jet2]) -> Result<Jet2> {
        let arity = op.arity();
        if args.len() != arity {
            return Err(Error::DimensionMismatch {
                what: "jet operation arity",
                expected: arity,
                found: args.len(),
            });
        }
        let a = args[0];
        let guard = f64::EPSILON.sqrt() * 1e-4;
        let out = match op {
            JetOp::Add => a + args[1],
            JetOp::Sub => a - args[1],
            JetOp::Mul => a * args[1],
            JetOp::Div => {
                let d = args[1].value;
                if d.abs() <= guard || !d.is_finite() {
                    return Err(Error::Domain {
                        op: "div",
                        value: d,
                    });
                }
                a / args[1]
            }
            JetOp::Neg => -a,
            JetOp::Pow => {
                let p = args[1];
                if a.value <= 0.0 {
                    return Err(Error::Domain {
                        op: "pow",
                        value: a.value,
                    });
                }
                (p * a.ln()).exp()
            }
            JetOp::Sqrt => {
                if a.value <= guard {
                    return Err(Error::Domain {
                        op: "sqrt",
                        value: a.value,
                    });
                }
                a.sqrt()
            }
            JetOp::Exp => a.exp(),
            JetOp::Log => {
                if a.value <= guard {
                    return Err(Error::Domain {
                        op: "log",
                        value: a.value,
                    });
                }
                a.ln()
            }
            JetOp::Sin => a.sin(),
            JetOp::Cos => a.cos(),
            JetOp::Tan => {
                if a.value.cos().abs() <= guard {
                    return Err(Error::Domain {
                        op: "tan",
                        value: a.value,
                    });
                }
                a.tan()
            }
            JetOp::Abs => {
                if a.value.abs() <= guard {
                    return Err(Error::Domain {
                        op: "abs",
                        value: a.value,
                    });
                }
                a.abs()
            }
        };
        if !out.is_finite() {
            return Err(Error::Domain {
                op: op.name(),
                value: a.value,
            });
        }
        Ok(out)
    }
}

/// Elementary operations accepted by [`Jet2::apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Pow,
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Abs,
}

impl JetOp {
    pub fn arity(self) -> usize {
        match self {
            JetOp::Add | JetOp::Sub | JetOp::Mul | JetOp::Div | JetOp::Pow => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            JetOp::Add => "add",
            JetOp::Sub => "sub",
            JetOp::Mul => "mul",
            JetOp::Div => "div",
            JetOp::Neg => "neg",
            JetOp::Pow => "pow",
            JetOp::Sqrt => "sqrt",
            JetOp::Exp => "exp",
            JetOp::Log => "log",
            JetOp::Sin => "sin",
            JetOp::Cos => "cos",
            JetOp::Tan => "tan",
            JetOp::Abs => "abs",
        }
    }
}

impl fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet2")
            .field("value", &self.value)
            .field("grad", &self.grad_vec())
            .field("hess", &self.hess_matrix())
            .finish()
    }
}

impl Default for Jet2 {
    fn default() -> Self {
        Jet2::constant(0.0)
    }
}

impl From<f64> for Jet2 {
    fn from(v: f64) -> Self {
        Jet2::constant(v)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    #[inline]
    fn add(self, rhs: Jet2) -> Jet2 {
        let n = self.dim().max(rhs.dim());
        let mut out = self;
        out.dim = n as u8;
        out.value += rhs.value;
        for i in 0..n {
            out.grad[i] += rhs.grad[i];
        }
        for p in 0..hess_len(n) {
            out.hess[p] += rhs.hess[p];
        }
        out
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    #[inline]
    fn sub(self, rhs: Jet2) -> Jet2 {
        self + (-rhs)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    #[inline]
    fn neg(self) -> Jet2 {
        let n = self.dim();
        let mut out = self;
        out.value = -self.value;
        for i in 0..n {
            out.grad[i] = -self.grad[i];
        }
        for p in 0..hess_len(n) {
            out.hess[p] = -self.hess[p];
        }
        out
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, rhs: Jet2) -> Jet2 {
        let n = self.dim().max(rhs.dim());
        let (a, b) = (self.value, rhs.value);
        let mut out = Jet2::constant(a * b);
        out.dim = n as u8;
        for i in 0..n {
            out.grad[i] = a * rhs.grad[i] + b * self.grad[i];
        }
        for p in 0..hess_len(n) {
            let (i, j) = PAIRS[p];
            let (i, j) = (i as usize, j as usize);
            out.hess[p] = a * rhs.hess[p]
                + b * self.hess[p]
                + self.grad[i] * rhs.grad[j]
                + self.grad[j] * rhs.grad[i];
        }
        out
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    #[inline]
    fn div(self, rhs: Jet2) -> Jet2 {
        self * rhs.recip()
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn add(mut self, rhs: f64) -> Jet2 {
        self.value += rhs;
        self
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn sub(mut self, rhs: f64) -> Jet2 {
        self.value -= rhs;
        self
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, rhs: f64) -> Jet2 {
        let n = self.dim();
        let mut out = self;
        out.value *= rhs;
        for i in 0..n {
            out.grad[i] *= rhs;
        }
        for p in 0..hess_len(n) {
            out.hess[p] *= rhs;
        }
        out
    }
}

impl Div<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn div(self, rhs: f64) -> Jet2 {
        self * (1.0 / rhs)
    }
}

impl Add<Jet2> for f64 {
    type Output = Jet2;
    #[inline]
    fn add(self, rhs: Jet2) -> Jet2 {
        rhs + self
    }
}

impl Sub<Jet2> for f64 {
    type Output = Jet2;
    #[inline]
    fn sub(self, rhs: Jet2) -> Jet2 {
        (-rhs) + self
    }
}

impl Mul<Jet2> for f64 {
    type Output = Jet2;
    #[inline]
    fn mul(self, rhs: Jet2) -> Jet2 {
        rhs * self
    }
}

impl Div<Jet2> for f64 {
    type Output = Jet2;
    #[inline]
    fn div(self, rhs: Jet2) -> Jet2 {
        rhs.recip() * self
    }
}

impl AddAssign for Jet2 {
    fn add_assign(&mut self, rhs: Jet2) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet2 {
    fn sub_assign(&mut self, rhs: Jet2) {
        *self = *self - rhs;
    }
}

impl MulAssign for Jet2 {
    fn mul_assign(&mut self, rhs: Jet2) {
        *self = *self * rhs;
    }
}

impl std::iter::Sum for Jet2 {
    fn sum<I: Iterator<Item = Jet2>>(iter: I) -> Jet2 {
        iter.fold(Jet2::constant(0.0), |acc, x| acc + x)
    }
}

/// Arithmetic shared by plain floats and jets, so that frame construction
/// can be written once and run on either.
pub trait Scalar:
    Copy
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn re(&self) -> f64;
    fn sqrt_s(self) -> Self;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn re(&self) -> f64 {
        *self
    }
    fn sqrt_s(self) -> Self {
        self.sqrt()
    }
}

impl Scalar for Jet2 {
    fn from_f64(v: f64) -> Self {
        Jet2::constant(v)
    }
    fn re(&self) -> f64 {
        self.value
    }
    fn sqrt_s(self) -> Self {
        Jet2::sqrt(self)
    }
}

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_TOL: f64 = 1e-13;

/// Solves `F(r, x) = 0` for `r` near `r0` and returns `r(x)` as a jet whose
/// derivatives follow from implicit differentiation.
///
/// The value is found by damped Newton iteration on plain numbers. Two
/// further Newton steps are then taken in jet arithmetic with the frozen
/// slope `c = dF/dr` at the root: the first makes the gradient exact, the
/// second the Hessian.
pub fn implicit_root<F>(residual: F, x: &[Jet2], r0: f64) -> Result<Jet2>
where
    F: Fn(Jet2, &[Jet2]) -> Jet2,
{
    let xv: Vec<Jet2> = x.iter().map(|xi| Jet2::constant(xi.value())).collect();
    let eval = |r: f64| -> (f64, f64) {
        let rj = Jet2::seed_var(r, 0, 1).expect("dimension 1 is always valid");
        let f = residual(rj, &xv);
        (f.value(), f.grad(0))
    };

    let mut r = r0;
    let (mut f, mut df) = eval(r);
    let mut iterations = 0;
    while iterations < NEWTON_MAX_ITER {
        if f.abs() <= NEWTON_TOL {
            break;
        }
        if df == 0.0 || !df.is_finite() {
            return Err(Error::SingularDerivative(df));
        }
        let step = f / df;
        let mut lambda = 1.0;
        loop {
            let trial = r - lambda * step;
            let (ft, dft) = eval(trial);
            if ft.is_finite() && (ft.abs() < f.abs() || lambda < 1e-6) {
                r = trial;
                f = ft;
                df = dft;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-9 {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: f.abs(),
                });
            }
        }
        iterations += 1;
        if step.abs() <= 4.0 * f64::EPSILON * r.abs().max(1.0) && f.abs() <= 1e3 * NEWTON_TOL {
            break;
        }
    }
    if !(f.abs() <= 1e3 * NEWTON_TOL) {
        return Err(Error::NoConvergence {
            iterations,
            residual: f.abs(),
        });
    }
    if df.abs() <= 1e-12 || !df.is_finite() {
        return Err(Error::SingularDerivative(df));
    }

    let dim = x.iter().map(Jet2::dim).max().unwrap_or(0);
    let mut rj = Jet2::seed_const(r, dim)?;
    for _ in 0..2 {
        let fj = residual(rj, x);
        rj = rj - fj / df;
    }
    Ok(rj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn seed_var_is_coordinate() {
        let x = Jet2::seed_var(3.0, 1, 4).unwrap();
        assert_eq!(x.value(), 3.0);
        assert_eq!(x.grad_vec(), vec![0.0, 1.0, 0.0, 0.0]);
        assert!(x.hess_matrix().iter().flatten().all(|&h| h == 0.0));
    }

    #[test]
    fn seed_var_rejects_bad_index() {
        assert_eq!(
            Jet2::seed_var(1.0, 4, 4).unwrap_err(),
            Error::IndexOutOfRange { index: 4, dim: 4 }
        );
        assert!(matches!(
            Jet2::seed_var(1.0, 0, MAX_DIM + 1),
            Err(Error::DimensionTooLarge(_))
        ));
    }

    #[test]
    fn constants_have_no_derivatives() {
        let c = Jet2::seed_const(5.0, 4).unwrap();
        assert_eq!(c.grad_vec(), vec![0.0; 4]);
        assert!(c.hess_matrix().iter().flatten().all(|&h| h == 0.0));
    }

    #[test]
    fn square_has_hessian_two() {
        let x = Jet2::seed_var(2.0, 0, 2).unwrap();
        let y = x * x;
        assert_eq!(y.value(), 4.0);
        assert_eq!(y.grad_vec(), vec![4.0, 0.0]);
        assert_eq!(y.hess(0, 0), 2.0);
        assert_eq!(y.hess(0, 1), 0.0);
    }

    #[test]
    fn sine_at_zero() {
        let x = Jet2::seed_var(0.0, 0, 1).unwrap();
        let s = Jet2::apply(JetOp::Sin, &[x]).unwrap();
        assert_eq!(s.value(), 0.0);
        assert_eq!(s.grad(0), 1.0);
        assert_eq!(s.hess(0, 0), 0.0);
    }

    #[test]
    fn reciprocal_derivatives() {
        let x = Jet2::seed_var(2.0, 0, 1).unwrap();
        let r = Jet2::apply(JetOp::Div, &[Jet2::constant(1.0), x]).unwrap();
        assert_eq!(r.value(), 0.5);
        assert_eq!(r.grad(0), -0.25);
        assert_eq!(r.hess(0, 0), 0.25);
    }

    #[test]
    fn domain_violations_are_reported() {
        let x = Jet2::seed_var(-1.0, 0, 1).unwrap();
        assert_eq!(
            Jet2::apply(JetOp::Sqrt, &[x]).unwrap_err(),
            Error::Domain {
                op: "sqrt",
                value: -1.0
            }
        );
        assert!(matches!(
            Jet2::apply(JetOp::Log, &[x]),
            Err(Error::Domain { op: "log", .. })
        ));
        assert!(matches!(
            Jet2::apply(JetOp::Div, &[x, Jet2::constant(0.0)]),
            Err(Error::Domain { op: "div", .. })
        ));
        assert!(matches!(
            Jet2::apply(JetOp::Abs, &[Jet2::constant(0.0)]),
            Err(Error::Domain { op: "abs", .. })
        ));
        assert!(Jet2::apply(JetOp::Add, &[x]).is_err());
    }

    #[test]
    fn pow_matches_powf() {
        let x = Jet2::seed_var(1.7, 0, 1).unwrap();
        let p = Jet2::apply(JetOp::Pow, &[x, Jet2::constant(2.5)]).unwrap();
        let q = x.powf(2.5);
        assert!(close(p.value(), q.value(), 1e-14));
        assert!(close(p.grad(0), q.grad(0), 1e-14));
        assert!(close(p.hess(0, 0), q.hess(0, 0), 1e-13));
    }

    #[test]
    fn mixed_dimensions_promote() {
        let x = Jet2::seed_var(1.5, 2, 3).unwrap();
        let y = Jet2::constant(2.0) * x + 1.0;
        assert_eq!(y.dim(), 3);
        assert_eq!(y.grad_vec(), vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn implicit_root_of_square() {
        let x = Jet2::seed_var(3.0, 0, 1).unwrap();
        let r = implicit_root(|r, x| r * r - x[0] * x[0], &[x], 2.0).unwrap();
        assert!(close(r.value(), 3.0, 1e-14));
        assert!(close(r.grad(0), 1.0, 1e-12));
        assert!(r.hess(0, 0).abs() < 1e-10);
    }

    #[test]
    fn implicit_root_independent_of_point() {
        let x = Jet2::seed_point(&[0.3, -1.2]).unwrap();
        let r = implicit_root(|r, _x| r * r * r - 2.0, &x, 1.0).unwrap();
        assert!(close(r.value(), 2f64.cbrt(), 1e-14));
        assert_eq!(r.grad_vec(), vec![0.0, 0.0]);
        assert!(r.hess_matrix().iter().flatten().all(|&h| h == 0.0));
    }

    #[test]
    fn implicit_root_reports_singular_slope() {
        let x = Jet2::seed_var(0.0, 0, 1).unwrap();
        let err = implicit_root(|r, x| r * r + x[0], &[x], 0.0).unwrap_err();
        assert!(matches!(err, Error::SingularDerivative(_)));
    }

    #[test]
    fn implicit_root_reports_non_convergence() {
        let x = Jet2::seed_var(1.0, 0, 1).unwrap();
        let err = implicit_root(|r, x| r * r + x[0], &[x], 0.5).unwrap_err();
        assert!(matches!(
            err,
            Error::NoConvergence { .. } | Error::SingularDerivative(_)
        ));
    }

    #[test]
    fn exp_sin_matches_finite_differences() {
        let x = Jet2::seed_var(0.7, 0, 1).unwrap();
        let y = Jet2::apply(JetOp::Exp, &[Jet2::apply(JetOp::Sin, &[x]).unwrap()]).unwrap();
        let f = |t: f64| t.sin().exp();
        let d1 = crate::fd::derivative(f, 0.7);
        let d2 = crate::fd::second_derivative(f, 0.7);
        assert!((y.grad(0) - d1).abs() < 1e-7 * d1.abs());
        assert!((y.hess(0, 0) - d2).abs() < 1e-7 * d2.abs().max(1.0));
    }

    fn mp_constraint(r: Jet2, x: &[Jet2]) -> Jet2 {
        let a = [0.5, 0.3];
        let mut s = x[4] * x[4] / (r * r);
        for i in 0..2 {
            s = s + (x[2 * i] * x[2 * i] + x[2 * i + 1] * x[2 * i + 1]) / (r * r + a[i] * a[i]);
        }
        s - 1.0
    }

    fn mp_bisect(p: &[f64]) -> f64 {
        let f = |r: f64| {
            let x = Jet2::constants(p);
            mp_constraint(Jet2::constant(r), &x).value()
        };
        let (mut lo, mut hi) = (1e-3, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn implicit_root_matches_bisection_and_fd() {
        let p = [0.8, -0.3, 1.1, 0.6, 0.9];
        let x = Jet2::seed_point(&p).unwrap();
        let r = implicit_root(mp_constraint, &x, 1.0).unwrap();
        assert!((r.value() - mp_bisect(&p)).abs() < 1e-12);
        let fd = crate::fd::gradient(
            |q: &[f64]| -> std::result::Result<f64, ()> { Ok(mp_bisect(q)) },
            &p,
        )
        .unwrap();
        for i in 0..5 {
            assert!((r.grad(i) - fd[i]).abs() < 1e-7, "axis {i}");
        }
        let back = mp_constraint(r, &x);
        assert!(back.value().abs() < 1e-9);
        assert!(back.grad_vec().iter().all(|g| g.abs() < 1e-9));
        assert!(back.hess_matrix().iter().flatten().all(|h| h.abs() < 1e-9));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn quadratic_polynomials_are_exact(
                c in prop::collection::vec(-3.0f64..3.0, 6),
                p in prop::collection::vec(-2.0f64..2.0, 2),
            ) {
                let x = Jet2::seed_point(&p).unwrap();
                let q = x[0] * x[0] * c[0] + x[0] * x[1] * c[1] + x[1] * x[1] * c[2]
                    + x[0] * c[3] + x[1] * c[4] + c[5];
                prop_assert_eq!(q.hess(0, 0), 2.0 * c[0]);
                prop_assert_eq!(q.hess(0, 1), c[1]);
                prop_assert_eq!(q.hess(1, 1), 2.0 * c[2]);
                let g0 = 2.0 * c[0] * p[0] + c[1] * p[1] + c[3];
                prop_assert!((q.grad(0) - g0).abs() <= 1e-14 * g0.abs().max(1.0));
            }

            #[test]
            fn hessian_is_symmetric(p in prop::collection::vec(0.1f64..2.0, 3)) {
                let x = Jet2::seed_point(&p).unwrap();
                let f = (x[0] * x[1]).sin() * x[2].exp() / (x[0] + x[2]).sqrt();
                let h = f.hess_matrix();
                for i in 0..3 {
                    for j in 0..3 {
                        prop_assert_eq!(h[i][j], h[j][i]);
                    }
                }
            }

            #[test]
            fn implicit_root_substitution_vanishes(p in prop::collection::vec(-1.0f64..1.0, 5)) {
                let x = Jet2::seed_point(&p).unwrap();
                let r = implicit_root(mp_constraint, &x, 2.0).unwrap();
                let back = mp_constraint(r, &x);
                prop_assert!(back.value().abs() < 1e-9);
                prop_assert!(back.grad_vec().iter().all(|g| g.abs() < 1e-9));
                prop_assert!(back.hess_matrix().iter().flatten().all(|h| h.abs() < 1e-9));
            }
        }

        fn mp_constraint(r: Jet2, x: &[Jet2]) -> Jet2 {
            super::mp_constraint(r, x)
        }
    }
}
