//! Metric models as chart functions and their jet evaluation.

use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::{Jet2, MAX_DIM};
use crate::tensor::{Tensor3, Tensor4};

/// Square matrix of jets, row-major.
pub type JetMatrix = Vec<Vec<Jet2>>;

pub type MetricFn = Arc<dyn Fn(&[Jet2]) -> Result<JetMatrix> + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[Jet2]) -> Result<Vec<Jet2>> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[Jet2]) -> Result<Jet2> + Send + Sync>;
pub type GuardFn = Arc<dyn Fn(&[f64]) -> std::result::Result<(), String> + Send + Sync>;

/// Condition number above which a metric evaluation is refused.
pub const MAX_CONDITION: f64 = 1e12;

pub fn jet_zeros(n: usize) -> JetMatrix {
    vec![vec![Jet2::constant(0.0); n]; n]
}

/// Inverse of a jet matrix by Gauss-Jordan elimination with partial
/// pivoting on values.
pub fn jet_inverse(m: &JetMatrix) -> Result<JetMatrix> {
    let n = m.len();
    let mut a = m.clone();
    let mut inv = jet_zeros(n);
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = Jet2::constant(1.0);
    }
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |s, x| s.max(x.value().abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))
            .expect("non-empty range");
        if a[pivot][col].value().abs() <= 1e-14 * scale {
            return Err(Error::DegeneratePivot(format!(
                "jet matrix inverse: column {col} has no usable pivot"
            )));
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].recip();
        for j in 0..n {
            a[col][j] = a[col][j] * p;
            inv[col][j] = inv[col][j] * p;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[i][col];
            if f.value() == 0.0 && f.grad_vec().iter().all(|g| *g == 0.0) {
                continue;
            }
            for j in 0..n {
                a[i][j] = a[i][j] - f * a[col][j];
                inv[i][j] = inv[i][j] - f * inv[col][j];
            }
        }
    }
    Ok(inv)
}

/// `M v` for a jet matrix and jet vector.
pub fn jet_mat_vec(m: &JetMatrix, v: &[Jet2]) -> Vec<Jet2> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| *a * *b).sum())
        .collect()
}

pub fn jet_values(v: &[Jet2]) -> Vec<f64> {
    v.iter().map(Jet2::value).collect()
}

/// A Lorentzian metric given by its components in one chart.
#[derive(Clone)]
pub struct MetricModel {
    pub name: String,
    pub dim: usize,
    pub params: IndexMap<String, f64>,
    eval: MetricFn,
    guard: GuardFn,
}

impl fmt::Debug for MetricModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("params", &self.params)
            .finish()
    }
}

impl MetricModel {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        params: IndexMap<String, f64>,
        eval: MetricFn,
        guard: GuardFn,
    ) -> Result<Self> {
        if dim > MAX_DIM {
            return Err(Error::DimensionTooLarge(dim));
        }
        Ok(MetricModel {
            name: name.into(),
            dim,
            params,
            eval,
            guard,
        })
    }

    /// A model without domain restrictions.
    pub fn unguarded(
        name: impl Into<String>,
        dim: usize,
        params: IndexMap<String, f64>,
        eval: MetricFn,
    ) -> Result<Self> {
        MetricModel::new(name, dim, params, eval, Arc::new(|_| Ok(())))
    }

    pub fn guard(&self) -> GuardFn {
        self.guard.clone()
    }

    pub fn eval_fn(&self) -> MetricFn {
        self.eval.clone()
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    pub fn check_domain(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "chart point",
                expected: self.dim,
                found: point.len(),
            });
        }
        (self.guard)(point).map_err(|reason| Error::OutsideDomain {
            model: self.name.clone(),
            point: point.to_vec(),
            reason,
        })
    }

    pub fn is_admissible(&self, point: &[f64]) -> bool {
        self.check_domain(point).is_ok()
    }

    /// Metric components on jet inputs, symmetrised.
    pub fn components(&self, x: &[Jet2]) -> Result<JetMatrix> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "chart point",
                expected: self.dim,
                found: x.len(),
            });
        }
        let mut g = (self.eval)(x)?;
        if g.len() != self.dim || g.iter().any(|r| r.len() != self.dim) {
            return Err(Error::DimensionMismatch {
                what: "metric components",
                expected: self.dim,
                found: g.len(),
            });
        }
        for a in 0..self.dim {
            for b in (a + 1)..self.dim {
                let s = (g[a][b] + g[b][a]) * 0.5;
                g[a][b] = s;
                g[b][a] = s;
            }
        }
        Ok(g)
    }

    /// Metric components as plain numbers.
    pub fn values(&self, point: &[f64]) -> Result<DMatrix<f64>> {
        self.check_domain(point)?;
        let g = self.components(&Jet2::constants(point))?;
        Ok(DMatrix::from_fn(self.dim, self.dim, |a, b| g[a][b].value()))
    }

    /// Number of negative eigenvalues of `g` at a point.
    pub fn negative_eigenvalues(&self, point: &[f64]) -> Result<usize> {
        let g = self.values(point)?;
        let eig = g.symmetric_eigen();
        Ok(eig.eigenvalues.iter().filter(|&&l| l < 0.0).count())
    }
}

/// Metric components with first and second derivatives and the inverse.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub point: Vec<f64>,
    pub g: DMatrix<f64>,
    /// `dg[[c, a, b]] = ∂_c g_ab`.
    pub dg: Tensor3,
    /// `ddg[[c, d, a, b]] = ∂_c ∂_d g_ab`.
    pub ddg: Tensor4,
    pub ginv: DMatrix<f64>,
    pub condition: f64,
}

impl MetricJet {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn from_components(point: &[f64], comps: &JetMatrix, model: &str) -> Result<Self> {
        let n = point.len();
        let g = DMatrix::from_fn(n, n, |a, b| comps[a][b].value());
        let mut dg = Tensor3::zeros(n);
        let mut ddg = Tensor4::zeros(n);
        for a in 0..n {
            for b in 0..n {
                let j = &comps[a][b];
                if !j.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "metric component g[{a}][{b}] of `{model}` at {point:?}"
                    )));
                }
                for c in 0..n {
                    dg[[c, a, b]] = j.grad(c);
                    for d in 0..n {
                        ddg[[c, d, a, b]] = j.hess(c, d);
                    }
                }
            }
        }
        let sv = g.clone().singular_values();
        let smax = sv.iter().fold(0.0f64, |m, s| m.max(*s));
        let smin = sv.iter().fold(f64::INFINITY, |m, s| m.min(*s));
        let condition = if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned {
                model: model.to_string(),
                point: point.to_vec(),
                condition,
            });
        }
        let ginv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::IllConditioned {
                model: model.to_string(),
                point: point.to_vec(),
                condition,
            })?;
        Ok(MetricJet {
            point: point.to_vec(),
            g,
            dg,
            ddg,
            ginv,
            condition,
        })
    }
}

/// Evaluates `g`, its first two derivatives and its inverse at a point.
pub fn eval_metric(model: &MetricModel, point: &[f64]) -> Result<MetricJet> {
    model.check_domain(point)?;
    let x = Jet2::seed_point(point)?;
    let comps = model.components(&x)?;
    MetricJet::from_components(point, &comps, &model.name)
}

/// A null vector field singled out on a model.
#[derive(Clone)]
pub struct CongruenceSpec {
    pub owner: String,
    pub label: String,
    k_field: VectorFn,
}

impl fmt::Debug for CongruenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CongruenceSpec")
            .field("owner", &self.owner)
            .field("label", &self.label)
            .finish()
    }
}

impl CongruenceSpec {
    pub fn from_vector(owner: &MetricModel, label: impl Into<String>, k: VectorFn) -> Self {
        CongruenceSpec {
            owner: owner.name.clone(),
            label: label.into(),
            k_field: k,
        }
    }

    /// The vector field `g^{ab} κ_b` obtained by raising a 1-form with the
    /// metric of `owner`.
    pub fn from_one_form(owner: &MetricModel, label: impl Into<String>, form: VectorFn) -> Self {
        let model = owner.clone();
        let k: VectorFn = Arc::new(move |x: &[Jet2]| {
            let g = model.components(x)?;
            let ginv = jet_inverse(&g)?;
            let kappa = form(x)?;
            Ok(jet_mat_vec(&ginv, &kappa))
        });
        CongruenceSpec::from_vector(owner, label, k)
    }

    /// Same line field, generator multiplied by a positive function.
    pub fn rescaled(&self, label: impl Into<String>, f: ScalarFn) -> Self {
        let k = self.k_field.clone();
        CongruenceSpec {
            owner: self.owner.clone(),
            label: label.into(),
            k_field: Arc::new(move |x: &[Jet2]| {
                let s = f(x)?;
                Ok(k(x)?.into_iter().map(|c| c * s).collect())
            }),
        }
    }

    /// Rebinds the same vector field to another model over the same chart.
    pub fn attached_to(&self, model: &MetricModel) -> Self {
        CongruenceSpec {
            owner: model.name.clone(),
            label: self.label.clone(),
            k_field: self.k_field.clone(),
        }
    }

    pub fn field(&self) -> VectorFn {
        self.k_field.clone()
    }

    pub fn k_jets(&self, x: &[Jet2]) -> Result<Vec<Jet2>> {
        let k = (self.k_field)(x)?;
        if k.len() != x.len() {
            return Err(Error::DimensionMismatch {
                what: "congruence generator",
                expected: x.len(),
                found: k.len(),
            });
        }
        Ok(k)
    }

    pub fn k_values(&self, point: &[f64]) -> Result<Vec<f64>> {
        Ok(jet_values(&self.k_jets(&Jet2::constants(point))?))
    }

    /// `g(k, k)` at a point, relative to `max(1, |g| |k|²)`.
    pub fn nullity_residual(&self, model: &MetricModel, point: &[f64]) -> Result<f64> {
        let g = model.values(point)?;
        let k = self.k_values(point)?;
        let gkk = crate::tensor::bilinear(&g, &k, &k);
        let kmax = crate::tensor::max_abs(&k);
        let scale = (crate::tensor::matrix_max_abs(&g) * kmax * kmax).max(1.0);
        Ok(gkk.abs() / scale)
    }

    pub fn check_null(&self, model: &MetricModel, point: &[f64], tol: f64) -> Result<()> {
        let r = self.nullity_residual(model, point)?;
        if r > tol {
            return Err(Error::NotNull {
                label: self.label.clone(),
                point: point.to_vec(),
                residual: r,
            });
        }
        let k = self.k_values(point)?;
        if crate::tensor::max_abs(&k) == 0.0 {
            return Err(Error::NotNull {
                label: self.label.clone(),
                point: point.to_vec(),
                residual: 0.0,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_double_null(n: usize) -> MetricModel {
        MetricModel::unguarded(
            "flat",
            n,
            IndexMap::new(),
            Arc::new(move |x: &[Jet2]| {
                let mut g = jet_zeros(x.len());
                g[0][1] = Jet2::constant(1.0);
                g[1][0] = Jet2::constant(1.0);
                for (i, row) in g.iter_mut().enumerate().skip(2) {
                    row[i] = Jet2::constant(1.0);
                }
                Ok(g)
            }),
        )
        .unwrap()
    }

    #[test]
    fn flat_metric_is_constant() {
        let m = flat_double_null(4);
        let mj = eval_metric(&m, &[0.3, 1.0, -2.0, 5.0]).unwrap();
        assert_eq!(mj.dg.max_abs(), 0.0);
        assert_eq!(mj.ddg.max_abs(), 0.0);
        let id = &mj.ginv * &mj.g;
        assert!((id - DMatrix::identity(4, 4)).amax() < 1e-12);
        assert_eq!(m.negative_eigenvalues(&[0.0; 4]).unwrap(), 1);
    }

    #[test]
    fn jet_inverse_matches_numeric_and_derivative() {
        let x = Jet2::seed_point(&[0.7, -0.4]).unwrap();
        let m = vec![vec![x[0] * x[0] + 2.0, x[1]], vec![x[1], x[0].sin() + 3.0]];
        let inv = jet_inverse(&m).unwrap();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let expect = [
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ];
        for a in 0..2 {
            for b in 0..2 {
                let (p, q) = (inv[a][b], expect[a][b]);
                assert!((p.value() - q.value()).abs() < 1e-14);
                for c in 0..2 {
                    assert!((p.grad(c) - q.grad(c)).abs() < 1e-13);
                    for d in 0..2 {
                        assert!((p.hess(c, d) - q.hess(c, d)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = vec![
            vec![Jet2::constant(1.0), Jet2::constant(2.0)],
            vec![Jet2::constant(2.0), Jet2::constant(4.0)],
        ];
        assert!(matches!(jet_inverse(&m), Err(Error::DegeneratePivot(_))));
    }

    #[test]
    fn ill_conditioned_metric_is_rejected() {
        let m = MetricModel::unguarded(
            "thin",
            2,
            IndexMap::new(),
            Arc::new(|x: &[Jet2]| {
                let mut g = jet_zeros(2);
                g[0][0] = Jet2::constant(-1.0);
                g[1][1] = x[1];
                Ok(g)
            }),
        )
        .unwrap();
        assert!(matches!(
            eval_metric(&m, &[0.0, 1e-13]),
            Err(Error::IllConditioned { .. })
        ));
        assert!(eval_metric(&m, &[0.0, 1.0]).is_ok());
    }

    #[test]
    fn guard_violation_is_reported() {
        let base = flat_double_null(4);
        let m = MetricModel::new(
            "guarded",
            4,
            IndexMap::new(),
            base.eval_fn(),
            Arc::new(|p: &[f64]| {
                if p[2] > 0.0 {
                    Ok(())
                } else {
                    Err("x must be positive".into())
                }
            }),
        )
        .unwrap();
        assert!(matches!(
            eval_metric(&m, &[0.0, 0.0, -1.0, 0.0]),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn raised_one_form_is_null() {
        let m = flat_double_null(4);
        let kappa = CongruenceSpec::from_one_form(
            &m,
            "du",
            Arc::new(|x: &[Jet2]| {
                let mut f = vec![Jet2::constant(0.0); x.len()];
                f[0] = Jet2::constant(1.0);
                Ok(f)
            }),
        );
        assert_eq!(kappa.k_values(&[0.0; 4]).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
        kappa.check_null(&m, &[0.0; 4], 1e-12).unwrap();
    }
}
