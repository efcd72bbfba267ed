//! Levi-Civita connection, curvature, and the covariant derivative of the
//! optical 1-form.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::jet::Jet2;
use crate::metric::{eval_metric, CongruenceSpec, MetricJet, MetricModel};
use crate::tensor::{Tensor3, Tensor4};

/// Tolerance on `g(k,k)` accepted for a congruence generator.
pub const NULL_TOL: f64 = 1e-10;

/// `gamma[[a, b, c]] = Γ^a_bc`, `dgamma[[e, a, b, c]] = ∂_e Γ^a_bc`.
#[derive(Debug, Clone)]
pub struct Christoffel {
    pub gamma: Tensor3,
    pub dgamma: Tensor4,
}

pub fn christoffel(mj: &MetricJet) -> Christoffel {
    let n = mj.dim();
    let dg = &mj.dg;
    let ddg = &mj.ddg;
    let low = Tensor3::from_fn(n, |d, b, c| {
        0.5 * (dg[[b, d, c]] + dg[[c, d, b]] - dg[[d, b, c]])
    });
    let mut gamma = Tensor3::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in b..n {
                let s: f64 = (0..n).map(|d| mj.ginv[(a, d)] * low[[d, b, c]]).sum();
                gamma[[a, b, c]] = s;
                gamma[[a, c, b]] = s;
            }
        }
    }
    let mut dgamma = Tensor4::zeros(n);
    for e in 0..n {
        for b in 0..n {
            for c in b..n {
                let inner: Vec<f64> = (0..n)
                    .map(|d| {
                        let dlow =
                            0.5 * (ddg[[e, b, d, c]] + ddg[[e, c, d, b]] - ddg[[e, d, b, c]]);
                        let corr: f64 = (0..n).map(|q| dg[[e, d, q]] * gamma[[q, b, c]]).sum();
                        dlow - corr
                    })
                    .collect();
                for a in 0..n {
                    let s: f64 = (0..n).map(|d| mj.ginv[(a, d)] * inner[d]).sum();
                    dgamma[[e, a, b, c]] = s;
                    dgamma[[e, a, c, b]] = s;
                }
            }
        }
    }
    Christoffel { gamma, dgamma }
}

#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub gamma: Tensor3,
    pub dgamma: Tensor4,
    /// All indices lowered: `R_abcd`.
    pub riemann: Tensor4,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    /// `None` below dimension four, where the trace decomposition is not
    /// available.
    pub weyl: Option<Tensor4>,
}

impl CurvatureBundle {
    pub fn dim(&self) -> usize {
        self.ricci.nrows()
    }

    pub fn weyl_defined(&self) -> bool {
        self.weyl.is_some()
    }
}

/// `R^a_bcd` from the connection and its derivatives.
pub fn riemann_up(chr: &Christoffel) -> Tensor4 {
    let n = chr.gamma.dim();
    let g = &chr.gamma;
    let dg = &chr.dgamma;
    Tensor4::from_fn(n, |a, b, c, d| {
        let mut s = dg[[c, a, d, b]] - dg[[d, a, c, b]];
        for e in 0..n {
            s += g[[a, c, e]] * g[[e, d, b]] - g[[a, d, e]] * g[[e, c, b]];
        }
        s
    })
}

pub fn riemann_weyl(mj: &MetricJet, chr: &Christoffel) -> CurvatureBundle {
    let n = mj.dim();
    let rup = riemann_up(chr);
    let riemann = Tensor4::from_fn(n, |a, b, c, d| {
        (0..n).map(|p| mj.g[(a, p)] * rup[[p, b, c, d]]).sum()
    });
    let ricci = DMatrix::from_fn(n, n, |b, d| (0..n).map(|a| rup[[a, b, a, d]]).sum());
    let ricci = (&ricci + ricci.transpose()) * 0.5;
    let scalar: f64 = (0..n)
        .flat_map(|b| (0..n).map(move |d| (b, d)))
        .map(|(b, d)| mj.ginv[(b, d)] * ricci[(b, d)])
        .sum();
    let weyl = if n >= 4 {
        let g = &mj.g;
        let dn = n as f64;
        Some(Tensor4::from_fn(n, |a, b, c, d| {
            riemann[[a, b, c, d]]
                - (g[(a, c)] * ricci[(b, d)]
                    - g[(a, d)] * ricci[(b, c)]
                    - g[(b, c)] * ricci[(a, d)]
                    + g[(b, d)] * ricci[(a, c)])
                    / (dn - 2.0)
                + scalar * (g[(a, c)] * g[(b, d)] - g[(a, d)] * g[(b, c)])
                    / ((dn - 1.0) * (dn - 2.0))
        }))
    } else {
        None
    };
    CurvatureBundle {
        gamma: chr.gamma.clone(),
        dgamma: chr.dgamma.clone(),
        riemann,
        ricci,
        scalar,
        weyl,
    }
}

/// Full curvature of a model at a point.
pub fn curvature(model: &MetricModel, point: &[f64]) -> Result<CurvatureBundle> {
    let mj = eval_metric(model, point)?;
    let chr = christoffel(&mj);
    Ok(riemann_weyl(&mj, &chr))
}

/// Largest residual among the algebraic symmetries of `R_abcd`.
pub fn riemann_symmetry_residual(r: &Tensor4) -> f64 {
    let n = r.dim();
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let x = r[[a, b, c, d]];
                    worst = worst
                        .max((x + r[[b, a, c, d]]).abs())
                        .max((x + r[[a, b, d, c]]).abs())
                        .max((x - r[[c, d, a, b]]).abs())
                        .max((x + r[[b, c, a, d]] + r[[c, a, b, d]]).abs());
                }
            }
        }
    }
    worst
}

/// Largest component of `g^{ac} W_abcd`.
pub fn weyl_trace_residual(w: &Tensor4, ginv: &DMatrix<f64>) -> f64 {
    let n = w.dim();
    let mut worst = 0.0f64;
    for b in 0..n {
        for d in 0..n {
            let mut s = 0.0;
            for a in 0..n {
                for c in 0..n {
                    s += ginv[(a, c)] * w[[a, b, c, d]];
                }
            }
            worst = worst.max(s.abs());
        }
    }
    worst
}

/// A congruence generator together with its covariant derivative at a point.
#[derive(Debug, Clone)]
pub struct CongruenceJet {
    pub mj: MetricJet,
    pub christoffel: Christoffel,
    pub k: Vec<f64>,
    pub kappa: Vec<f64>,
    /// `dk[(a, b)] = ∂_a k^b`.
    pub dk: DMatrix<f64>,
    /// `dkappa[(a, b)] = ∂_a κ_b`.
    pub dkappa: DMatrix<f64>,
    /// `nk[(a, b)] = ∇_a κ_b`.
    pub nk: DMatrix<f64>,
}

impl CongruenceJet {
    pub fn dim(&self) -> usize {
        self.k.len()
    }

    /// `(dκ)_ab = ∂_[a κ_b]`.
    pub fn d_kappa(&self) -> DMatrix<f64> {
        (&self.dkappa - self.dkappa.transpose()) * 0.5
    }

    /// `∇_a k^b`.
    pub fn nabla_k(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |a, b| {
            self.dk[(a, b)]
                + (0..n)
                    .map(|c| self.christoffel.gamma[[b, a, c]] * self.k[c])
                    .sum::<f64>()
        })
    }
}

/// `∇_a κ_b = ∂_a κ_b − Γ^c_ab κ_c` with `κ_b = g_bc k^c`.
pub fn nabla_kappa(
    model: &MetricModel,
    spec: &CongruenceSpec,
    point: &[f64],
) -> Result<CongruenceJet> {
    model.check_domain(point)?;
    let x = Jet2::seed_point(point)?;
    let comps = model.components(&x)?;
    let mj = MetricJet::from_components(point, &comps, &model.name)?;
    let kj = spec.k_jets(&x)?;
    let n = point.len();
    let kappa_j: Vec<Jet2> = (0..n)
        .map(|b| (0..n).map(|c| comps[b][c] * kj[c]).sum())
        .collect();
    let k: Vec<f64> = kj.iter().map(Jet2::value).collect();
    let kappa: Vec<f64> = kappa_j.iter().map(Jet2::value).collect();
    spec.check_null(model, point, NULL_TOL)?;
    let dk = DMatrix::from_fn(n, n, |a, b| kj[b].grad(a));
    let dkappa = DMatrix::from_fn(n, n, |a, b| kappa_j[b].grad(a));
    let chr = christoffel(&mj);
    let nk = DMatrix::from_fn(n, n, |a, b| {
        dkappa[(a, b)] - (0..n).map(|c| chr.gamma[[c, a, b]] * kappa[c]).sum::<f64>()
    });
    Ok(CongruenceJet {
        mj,
        christoffel: chr,
        k,
        kappa,
        dk,
        dkappa,
        nk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{jet_zeros, JetMatrix};
    use indexmap::IndexMap;
    use std::sync::Arc;

    fn schwarzschild4() -> MetricModel {
        MetricModel::unguarded(
            "schw",
            4,
            IndexMap::new(),
            Arc::new(|x: &[Jet2]| {
                let r = x[1];
                let f = 1.0 - r.recip();
                let mut g: JetMatrix = jet_zeros(4);
                g[0][0] = -f;
                g[1][1] = f.recip();
                g[2][2] = r * r;
                g[3][3] = r * r * x[2].sin() * x[2].sin();
                Ok(g)
            }),
        )
        .unwrap()
    }

    #[test]
    fn schwarzschild_gamma_r_tt() {
        let m = schwarzschild4();
        let mj = eval_metric(&m, &[0.0, 3.0, 1.0, 0.0]).unwrap();
        let chr = christoffel(&mj);
        let r = 3.0f64;
        let f = 1.0 - 1.0 / r;
        let fp = 1.0 / (r * r);
        assert!((chr.gamma[[1, 0, 0]] - 0.5 * f * fp).abs() < 1e-10);
    }

    #[test]
    fn schwarzschild_is_ricci_flat_with_weyl() {
        let m = schwarzschild4();
        let curv = curvature(&m, &[0.0, 3.0, 1.0, 0.2]).unwrap();
        assert!(curv.ricci.amax() < 1e-12);
        let w = curv.weyl.as_ref().unwrap();
        assert!(w.max_abs() > 1e-2);
        assert!(riemann_symmetry_residual(&curv.riemann) < 1e-12);
    }

    #[test]
    fn sphere_curvature_and_weyl_marker() {
        let round = MetricModel::unguarded(
            "s3",
            3,
            IndexMap::new(),
            Arc::new(|x: &[Jet2]| {
                let mut g = jet_zeros(3);
                let s = x[0].sin();
                g[0][0] = Jet2::constant(1.0);
                g[1][1] = s * s;
                g[2][2] = s * s * x[1].sin() * x[1].sin();
                Ok(g)
            }),
        )
        .unwrap();
        let c = curvature(&round, &[1.0, 1.1, 0.0]).unwrap();
        assert!((c.scalar - 6.0).abs() < 1e-12);
        assert!(!c.weyl_defined());
    }
}
