//! Semi-null frames `(k, ℓ, e_1..e_n)` adapted to a null generator.
//!
//! Construction is written once over [`Scalar`] so that the same code yields
//! plain frames and jet-valued frames whose derivatives are exact.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::{Jet2, Scalar};
use crate::metric::{JetMatrix, MetricJet};
use crate::tensor::{bilinear, det_columns, lower};

/// Relative size below which a component of `κ` is not used as pivot.
pub const PIVOT_TOL: f64 = 1e-6;
/// Squared screen norm below which a projected axis is skipped.
pub const SCREEN_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Frame<T> {
    pub k: Vec<T>,
    pub l: Vec<T>,
    pub e: Vec<Vec<T>>,
    pub kappa: Vec<T>,
    pub lambda: Vec<T>,
    /// Metric duals of the screen vectors.
    pub e_flat: Vec<Vec<T>>,
    /// Chart axis used to build `ℓ`.
    pub pivot: usize,
    /// Chart axes that produced the screen vectors, in order.
    pub screen_axes: Vec<usize>,
}

pub type SemiNullFrame = Frame<f64>;

fn zero<T: Scalar>() -> T {
    T::from_f64(0.0)
}

fn g_apply<T: Scalar>(g: &[Vec<T>], u: &[T], v: &[T]) -> T {
    let n = u.len();
    let mut s = zero::<T>();
    for a in 0..n {
        let mut t = zero::<T>();
        for b in 0..n {
            t = t + g[a][b] * v[b];
        }
        s = s + u[a] * t;
    }
    s
}

fn g_lower<T: Scalar>(g: &[Vec<T>], v: &[T]) -> Vec<T> {
    let n = v.len();
    (0..n)
        .map(|a| {
            let mut s = zero::<T>();
            for b in 0..n {
                s = s + g[a][b] * v[b];
            }
            s
        })
        .collect()
}

fn axpy<T: Scalar>(y: &[T], a: T, x: &[T]) -> Vec<T> {
    y.iter().zip(x).map(|(yi, xi)| *yi + a * *xi).collect()
}

/// Builds the frame for a null vector `k` of the metric `g`.
///
/// `ℓ` comes from the first chart axis `j` with `κ_j ≠ 0`, scaled so that
/// `g(k, ℓ) = 1` and then made null. The screen is obtained by projecting the
/// chart axes in ascending order onto `{k, ℓ}^⊥` and orthonormalising,
/// skipping axes whose projection is negligible.
pub fn build_frame_generic<T: Scalar>(g: &[Vec<T>], k: &[T]) -> Result<Frame<T>> {
    let dim = k.len();
    if dim < 2 || g.len() != dim {
        return Err(Error::DimensionMismatch {
            what: "frame construction",
            expected: dim,
            found: g.len(),
        });
    }
    let kappa = g_lower(g, k);
    let kmax = kappa.iter().fold(0.0f64, |m, c| m.max(c.re().abs()));
    if kmax == 0.0 {
        return Err(Error::DegeneratePivot(
            "generator has vanishing metric dual".into(),
        ));
    }
    let pivot = (0..dim)
        .find(|&j| kappa[j].re().abs() > PIVOT_TOL * kmax)
        .ok_or_else(|| Error::DegeneratePivot("no chart axis pairs with the generator".into()))?;

    let mut l0 = vec![zero::<T>(); dim];
    l0[pivot] = T::from_f64(1.0) / kappa[pivot];
    let q = g_apply(g, &l0, &l0);
    let l = axpy(&l0, q * -0.5, k);
    let lambda = g_lower(g, &l);

    let gscale = g.iter().flatten().fold(1.0f64, |m, c| m.max(c.re().abs()));
    let mut e: Vec<Vec<T>> = Vec::with_capacity(dim - 2);
    let mut e_flat: Vec<Vec<T>> = Vec::with_capacity(dim - 2);
    let mut screen_axes = Vec::with_capacity(dim - 2);
    for axis in 0..dim {
        if e.len() == dim - 2 {
            break;
        }
        let mut v = vec![zero::<T>(); dim];
        v[axis] = T::from_f64(1.0);
        v = axpy(&v, -lambda[axis], k);
        v = axpy(&v, -kappa[axis], &l);
        for (ei, fi) in e.iter().zip(&e_flat) {
            let c = fi.iter().zip(&v).fold(zero::<T>(), |s, (a, b)| s + *a * *b);
            v = axpy(&v, -c, ei);
        }
        let nn = g_apply(g, &v, &v);
        if nn.re() <= SCREEN_TOL * gscale {
            continue;
        }
        let inv = T::from_f64(1.0) / nn.sqrt_s();
        let ev: Vec<T> = v.iter().map(|c| *c * inv).collect();
        e_flat.push(g_lower(g, &ev));
        e.push(ev);
        screen_axes.push(axis);
    }
    if e.len() != dim - 2 {
        return Err(Error::DegeneratePivot(format!(
            "only {} of {} screen directions found",
            e.len(),
            dim - 2
        )));
    }
    Ok(Frame {
        k: k.to_vec(),
        l,
        e,
        kappa,
        lambda,
        e_flat,
        pivot,
        screen_axes,
    })
}

fn to_rows(g: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..g.nrows())
        .map(|a| (0..g.ncols()).map(|b| g[(a, b)]).collect())
        .collect()
}

/// Frame at a point for a numeric metric.
pub fn build_frame(mj: &MetricJet, k: &[f64]) -> Result<SemiNullFrame> {
    build_frame_from_matrix(&mj.g, k)
}

pub fn build_frame_from_matrix(g: &DMatrix<f64>, k: &[f64]) -> Result<SemiNullFrame> {
    if k.iter().all(|c| *c == 0.0) {
        return Err(Error::DegeneratePivot("generator vanishes".into()));
    }
    build_frame_generic(&to_rows(g), k)
}

/// Jet-valued frame: components carry their chart derivatives.
pub fn build_frame_jet(g: &JetMatrix, k: &[Jet2]) -> Result<Frame<Jet2>> {
    build_frame_generic(g, k)
}

impl Frame<Jet2> {
    pub fn values(&self) -> SemiNullFrame {
        let v = |x: &Vec<Jet2>| x.iter().map(Jet2::value).collect::<Vec<_>>();
        Frame {
            k: v(&self.k),
            l: v(&self.l),
            e: self.e.iter().map(v).collect(),
            kappa: v(&self.kappa),
            lambda: v(&self.lambda),
            e_flat: self.e_flat.iter().map(v).collect(),
            pivot: self.pivot,
            screen_axes: self.screen_axes.clone(),
        }
    }
}

impl<T> Frame<T> {
    /// Spacetime dimension.
    pub fn dim(&self) -> usize {
        self.k.len()
    }

    /// Screen dimension `n`.
    pub fn screen_dim(&self) -> usize {
        self.e.len()
    }
}

impl SemiNullFrame {
    /// Largest violation of the semi-null relations.
    pub fn residual(&self, g: &DMatrix<f64>) -> f64 {
        let n = self.screen_dim();
        let mut worst = bilinear(g, &self.k, &self.k)
            .abs()
            .max(bilinear(g, &self.l, &self.l).abs())
            .max((bilinear(g, &self.k, &self.l) - 1.0).abs());
        for i in 0..n {
            worst = worst
                .max(bilinear(g, &self.k, &self.e[i]).abs())
                .max(bilinear(g, &self.l, &self.e[i]).abs());
            for j in 0..n {
                let d = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((bilinear(g, &self.e[i], &self.e[j]) - d).abs());
            }
        }
        worst
    }

    /// Largest violation of the stored duals `κ = g k`, `λ = g ℓ`, `e♭ = g e`.
    pub fn dual_residual(&self, g: &DMatrix<f64>) -> f64 {
        let diff = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        };
        let mut worst =
            diff(&lower(g, &self.k), &self.kappa).max(diff(&lower(g, &self.l), &self.lambda));
        for (e, f) in self.e.iter().zip(&self.e_flat) {
            worst = worst.max(diff(&lower(g, e), f));
        }
        worst
    }

    /// `2 κ_(a λ_b) + Σ (e_i)_a (e_i)_b`.
    pub fn reconstruct_metric(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |a, b| {
            self.kappa[a] * self.lambda[b]
                + self.lambda[a] * self.kappa[b]
                + self.e_flat.iter().map(|f| f[a] * f[b]).sum::<f64>()
        })
    }

    pub fn reconstruction_residual(&self, g: &DMatrix<f64>) -> f64 {
        (self.reconstruct_metric() - g).amax()
    }

    /// `k → e^φ k`, `ℓ → e^{−φ} ℓ`.
    pub fn boost(&self, phi: f64) -> SemiNullFrame {
        let s = phi.exp();
        let t = (-phi).exp();
        let mut f = self.clone();
        f.k.iter_mut().for_each(|c| *c *= s);
        f.kappa.iter_mut().for_each(|c| *c *= s);
        f.l.iter_mut().for_each(|c| *c *= t);
        f.lambda.iter_mut().for_each(|c| *c *= t);
        f
    }

    /// `e_i → e_i + z_i k`, `ℓ → ℓ − z^i e_i − ½ |z|² k`.
    pub fn null_rotation(&self, z: &[f64]) -> Result<SemiNullFrame> {
        let n = self.screen_dim();
        if z.len() != n {
            return Err(Error::DimensionMismatch {
                what: "null rotation parameter",
                expected: n,
                found: z.len(),
            });
        }
        let zz: f64 = z.iter().map(|x| x * x).sum();
        let d = self.dim();
        let mut f = self.clone();
        for a in 0..d {
            let mut l = self.l[a] - 0.5 * zz * self.k[a];
            let mut lam = self.lambda[a] - 0.5 * zz * self.kappa[a];
            for i in 0..n {
                l -= z[i] * self.e[i][a];
                lam -= z[i] * self.e_flat[i][a];
                f.e[i][a] = self.e[i][a] + z[i] * self.k[a];
                f.e_flat[i][a] = self.e_flat[i][a] + z[i] * self.kappa[a];
            }
            f.l[a] = l;
            f.lambda[a] = lam;
        }
        Ok(f)
    }

    /// Frame for `ĝ = e^{2Υ} g`: `k̂ = k`, `ê = e^{−Υ} e`, `ℓ̂ = e^{−2Υ} ℓ`.
    pub fn conformal_adapt(&self, upsilon: f64) -> SemiNullFrame {
        let e1 = (-upsilon).exp();
        let e2 = (-2.0 * upsilon).exp();
        let up = upsilon.exp();
        let w = (2.0 * upsilon).exp();
        let mut f = self.clone();
        f.kappa.iter_mut().for_each(|c| *c *= w);
        f.l.iter_mut().for_each(|c| *c *= e2);
        for e in f.e.iter_mut() {
            e.iter_mut().for_each(|c| *c *= e1);
        }
        for e in f.e_flat.iter_mut() {
            e.iter_mut().for_each(|c| *c *= up);
        }
        f
    }

    /// Frame vectors in the order `(k, ℓ, e_1..e_n)`.
    pub fn vectors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = vec![&self.k, &self.l];
        v.extend(self.e.iter().map(|e| e.as_slice()));
        v
    }
}

/// Orientation of the screen induced by the spacetime volume form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenVolume {
    pub n: usize,
    /// `ε(k, e_1, …, e_n, ℓ)`; `±1` for a valid frame.
    pub orientation: f64,
}

impl ScreenVolume {
    /// `ε_K` on screen indices: orientation times the permutation sign.
    pub fn component(&self, idx: &[usize]) -> f64 {
        if idx.len() != self.n || idx.iter().any(|&i| i >= self.n) {
            return 0.0;
        }
        self.orientation * permutation_sign(idx)
    }

    /// `ε_K(v_1, …, v_n)` for screen-component vectors.
    pub fn evaluate(&self, v: &[Vec<f64>]) -> f64 {
        let cols: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
        self.orientation * det_columns(&cols)
    }

    /// `ε_K` as a sign, rounding the measured orientation.
    pub fn sign(&self) -> f64 {
        self.orientation.signum()
    }
}

/// Sign of a permutation given as a list of distinct indices, zero on repeats.
pub fn permutation_sign(idx: &[usize]) -> f64 {
    let mut p = idx.to_vec();
    let mut sign = 1.0;
    for i in 0..p.len() {
        while p[i] != i {
            let j = p[i];
            if j >= p.len() || p[j] == j {
                return 0.0;
            }
            p.swap(i, j);
            sign = -sign;
        }
    }
    sign
}

/// `ε(k, e_1, …, e_n, ℓ)` with `ε = √|det g| dx^0 ∧ … ∧ dx^{N−1}`.
pub fn screen_volume(frame: &SemiNullFrame, g: &DMatrix<f64>) -> ScreenVolume {
    let mut cols: Vec<&[f64]> = vec![&frame.k];
    cols.extend(frame.e.iter().map(|e| e.as_slice()));
    cols.push(&frame.l);
    let vol = g.determinant().abs().sqrt() * det_columns(&cols);
    ScreenVolume {
        n: frame.screen_dim(),
        orientation: vol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn minkowski(d: usize) -> DMatrix<f64> {
        let mut g = DMatrix::identity(d, d);
        g[(0, 0)] = 0.0;
        g[(1, 1)] = 0.0;
        g[(0, 1)] = 1.0;
        g[(1, 0)] = 1.0;
        g
    }

    fn unit(d: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    }

    fn curved() -> DMatrix<f64> {
        let mut g = minkowski(4);
        g[(0, 0)] = 0.7;
        g[(0, 2)] = 0.3;
        g[(2, 0)] = 0.3;
        g[(2, 2)] = 1.4;
        g[(2, 3)] = 0.2;
        g[(3, 2)] = 0.2;
        g
    }

    #[test]
    fn minkowski_frame_is_coordinate_frame() {
        let f = build_frame_from_matrix(&minkowski(4), &unit(4, 1)).unwrap();
        assert_eq!(f.l, unit(4, 0));
        assert_eq!(f.e, vec![unit(4, 2), unit(4, 3)]);
        let vol = screen_volume(&f, &minkowski(4));
        assert_eq!(vol.orientation.abs(), 1.0);
    }

    #[test]
    fn frame_relations_hold_on_curved_metric() {
        let g = curved();
        let f = build_frame_from_matrix(&g, &unit(4, 1)).unwrap();
        assert!(f.residual(&g) < 1e-12);
        assert!(f.reconstruction_residual(&g) < 1e-12);
        assert!(f.dual_residual(&g) < 1e-12);
    }

    #[test]
    fn zero_generator_is_rejected() {
        assert!(matches!(
            build_frame_from_matrix(&minkowski(4), &[0.0; 4]),
            Err(Error::DegeneratePivot(_))
        ));
    }

    #[test]
    fn identity_transformations() {
        let g = curved();
        let f = build_frame_from_matrix(&g, &unit(4, 1)).unwrap();
        let b = f.boost(0.0);
        assert_eq!(b.k, f.k);
        assert_eq!(b.l, f.l);
        let r = f.null_rotation(&[0.0, 0.0]).unwrap();
        assert_eq!(r.l, f.l);
        assert_eq!(r.e, f.e);
        let c = f.conformal_adapt(0.0);
        assert_eq!(c.e, f.e);
        assert!(f.null_rotation(&[0.0]).is_err());
    }

    #[test]
    fn permutation_signs() {
        assert_eq!(permutation_sign(&[0, 1, 2]), 1.0);
        assert_eq!(permutation_sign(&[1, 0, 2]), -1.0);
        assert_eq!(permutation_sign(&[1, 2, 0]), 1.0);
        assert_eq!(permutation_sign(&[1, 1, 0]), 0.0);
    }

    proptest! {
        #[test]
        fn null_rotation_preserves_relations(z in prop::collection::vec(-1.0f64..1.0, 2)) {
            let g = curved();
            let f = build_frame_from_matrix(&g, &unit(4, 1)).unwrap();
            let r = f.null_rotation(&z).unwrap();
            prop_assert!(r.residual(&g) < 1e-12);
            prop_assert!(r.dual_residual(&g) < 1e-12);
            prop_assert_eq!(&r.kappa, &f.kappa);
            let v0 = screen_volume(&f, &g).orientation;
            let v1 = screen_volume(&r, &g).orientation;
            prop_assert!((v0 - v1).abs() < 1e-12);
        }

        #[test]
        fn boost_preserves_relations(phi in -2.0f64..2.0) {
            let g = curved();
            let f = build_frame_from_matrix(&g, &unit(4, 1)).unwrap();
            let b = f.boost(phi);
            prop_assert!(b.residual(&g) < 1e-11);
            let v0 = screen_volume(&f, &g).orientation;
            let v1 = screen_volume(&b, &g).orientation;
            prop_assert!((v0 - v1).abs() < 1e-12);
        }

        #[test]
        fn conformal_adaptation_is_orthonormal(u in -1.0f64..1.0) {
            let g = curved();
            let f = build_frame_from_matrix(&g, &unit(4, 1)).unwrap();
            let gh = &g * (2.0 * u).exp();
            let c = f.conformal_adapt(u);
            prop_assert!(c.residual(&gh) < 1e-12);
            prop_assert!(c.dual_residual(&gh) < 1e-12);
        }
    }
}
