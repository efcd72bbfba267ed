//! Conformal rescaling, the Walker and integrability obstructions, and
//! generalised optical perturbations including Kerr-Schild metrics.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::curvature::{christoffel, CurvatureBundle};
use crate::error::{Error, Result};
use crate::fd;
use crate::frame::SemiNullFrame;
use crate::jet::Jet2;
use crate::metric::{eval_metric, CongruenceSpec, MetricModel, ScalarFn, VectorFn};
use crate::optical::{analyze, ClassReport, Flag, DEFAULT_TOL};
use crate::tensor::{max_abs, Tensor3, Tensor4};

/// A smooth function `Υ` on the chart.
#[derive(Clone)]
pub struct ConformalFactor {
    upsilon: ScalarFn,
}

impl std::fmt::Debug for ConformalFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ConformalFactor")
    }
}

impl ConformalFactor {
    pub fn new(upsilon: ScalarFn) -> Self {
        ConformalFactor { upsilon }
    }

    pub fn constant(c: f64) -> Self {
        ConformalFactor::new(Arc::new(move |_x: &[Jet2]| Ok(Jet2::constant(c))))
    }

    /// `Υ = c + b·x + ½ xᵀ A x`.
    pub fn quadratic(c: f64, b: Vec<f64>, a: Vec<Vec<f64>>) -> Self {
        ConformalFactor::new(Arc::new(move |x: &[Jet2]| {
            let mut s = Jet2::constant(c);
            for (i, xi) in x.iter().enumerate() {
                s += *xi * b.get(i).copied().unwrap_or(0.0);
                for (j, xj) in x.iter().enumerate() {
                    let aij = a.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0);
                    if aij != 0.0 {
                        s += *xi * *xj * (0.5 * aij);
                    }
                }
            }
            Ok(s)
        }))
    }

    pub fn function(&self) -> ScalarFn {
        self.upsilon.clone()
    }

    pub fn jet(&self, x: &[Jet2]) -> Result<Jet2> {
        (self.upsilon)(x)
    }

    pub fn value(&self, point: &[f64]) -> Result<f64> {
        Ok(self.jet(&Jet2::constants(point))?.value())
    }

    /// `Υ_a = ∂_a Υ`.
    pub fn gradient(&self, point: &[f64]) -> Result<Vec<f64>> {
        let j = self.jet(&Jet2::seed_point(point)?)?;
        Ok((0..point.len()).map(|a| j.grad(a)).collect())
    }

    /// Largest deviation of the jet gradient from finite differences.
    pub fn gradient_consistency(&self, point: &[f64]) -> Result<f64> {
        let jet = self.gradient(point)?;
        let num = fd::gradient(|x: &[f64]| self.value(x), point)?;
        Ok(jet
            .iter()
            .zip(&num)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// `ĝ = e^{2Υ} g`.
pub fn rescale(model: &MetricModel, upsilon: &ConformalFactor) -> Result<MetricModel> {
    let base = model.eval_fn();
    let u = upsilon.function();
    let eval = Arc::new(move |x: &[Jet2]| {
        let w = (u(x)? * 2.0).exp();
        let g = base(x)?;
        Ok(g.into_iter()
            .map(|row| row.into_iter().map(|c| c * w).collect())
            .collect())
    });
    MetricModel::new(
        format!("{}~conformal", model.name),
        model.dim,
        model.params.clone(),
        eval,
        model.guard(),
    )
}

/// `Γ^b_ac + δ^b_a Υ_c + δ^b_c Υ_a − g_ac Υ^b` for `ĝ = e^{2Υ} g`.
pub fn predicted_christoffel(
    model: &MetricModel,
    upsilon: &ConformalFactor,
    point: &[f64],
) -> Result<Tensor3> {
    let mj = eval_metric(model, point)?;
    let chr = christoffel(&mj);
    let du = upsilon.gradient(point)?;
    let n = point.len();
    let up: Vec<f64> = (0..n)
        .map(|b| (0..n).map(|d| mj.ginv[(b, d)] * du[d]).sum())
        .collect();
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    Ok(Tensor3::from_fn(n, |b, a, c| {
        chr.gamma[[b, a, c]] + delta(b, a) * du[c] + delta(b, c) * du[a] - mj.g[(a, c)] * up[b]
    }))
}

/// Largest difference between the Christoffel symbols of the rescaled metric
/// and the transformation formula.
pub fn christoffel_shift_residual(
    model: &MetricModel,
    upsilon: &ConformalFactor,
    point: &[f64],
) -> Result<f64> {
    let hat = rescale(model, upsilon)?;
    let direct = christoffel(&eval_metric(&hat, point)?).gamma;
    let predicted = predicted_christoffel(model, upsilon, point)?;
    Ok(direct
        .data()
        .iter()
        .zip(predicted.data())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionShift {
    pub rho: f64,
    pub rho_hat: f64,
    /// `ρ + n Υ_a k^a`.
    pub predicted: f64,
    /// `|ρ̂ − predicted|` divided by the scale of `∇̂κ̂`.
    pub residual: f64,
    /// Largest change of a twist component between the two frames.
    pub twist_change: f64,
    pub shear_change: f64,
}

/// Compares the expansion of a fixed generator in `g` and in `e^{2Υ} g`,
/// measured in the conformally adapted frame.
pub fn expansion_shift_check(
    model: &MetricModel,
    spec: &CongruenceSpec,
    point: &[f64],
    upsilon: &ConformalFactor,
) -> Result<ExpansionShift> {
    let base = analyze(model, spec, point)?;
    let report = base.classify(DEFAULT_TOL)?;
    report.require(Flag::Geodetic, true, "expansion shift")?;
    report.require(Flag::Affine, true, "expansion shift")?;
    let hat = rescale(model, upsilon)?;
    let hat_spec = spec.attached_to(&hat);
    let jet = crate::curvature::nabla_kappa(&hat, &hat_spec, point)?;
    let frame = base.frame.conformal_adapt(upsilon.value(point)?);
    let inv = crate::optical::project(&jet.nk, &frame);
    let n = frame.screen_dim() as f64;
    let du = upsilon.gradient(point)?;
    let predicted = base.invariants.rho + n * crate::tensor::dot(&du, &base.frame.k);
    Ok(ExpansionShift {
        rho: base.invariants.rho,
        rho_hat: inv.rho,
        predicted,
        residual: (inv.rho - predicted).abs() / inv.scale,
        twist_change: (&inv.tau - &base.invariants.tau).amax(),
        shear_change: (&inv.sigma - &base.invariants.sigma).amax(),
    })
}

/// `k^a W_ab[cd κ_e]` in the frame `(k, ℓ, e_1..e_n)`.
#[derive(Debug, Clone)]
pub struct WalkerObstruction {
    /// All frame components, slot order `b, c, d, e`.
    pub components: Vec<f64>,
    /// `W(k, ℓ, k, e_j)`.
    pub k_l_k_e: Vec<f64>,
    /// `W(k, ℓ, e_i, e_j)`.
    pub k_l_e_e: DMatrix<f64>,
    /// `W(k, e_i, k, e_j)`.
    pub k_e_k_e: DMatrix<f64>,
}

impl WalkerObstruction {
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.components)
    }
}

fn weyl_of(curv: &CurvatureBundle) -> Result<&Tensor4> {
    curv.weyl.as_ref().ok_or_else(|| {
        Error::Precondition(format!(
            "the Weyl tensor needs dimension ≥ 4, got {}",
            curv.dim()
        ))
    })
}

pub fn walker_obstruction(
    curv: &CurvatureBundle,
    frame: &SemiNullFrame,
    report: &ClassReport,
) -> Result<WalkerObstruction> {
    for (flag, v) in [
        (Flag::Geodetic, true),
        (Flag::Twisting, false),
        (Flag::Shearing, false),
    ] {
        report.require(flag, v, "walker obstruction")?;
    }
    let w = weyl_of(curv)?;
    let d = frame.dim();
    let n = frame.screen_dim();
    let basis: Vec<&[f64]> = frame.vectors();
    // X_bcd = k^a W_abcd
    let x = Tensor3::from_fn(d, |b, c, e| {
        (0..d).map(|a| frame.k[a] * w[[a, b, c, e]]).sum()
    });
    let xf = |u: &[f64], v: &[f64], s: &[f64]| -> f64 {
        let mut t = 0.0;
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    t += u[b] * v[c] * s[e] * x[[b, c, e]];
                }
            }
        }
        t
    };
    let kap = |u: &[f64]| crate::tensor::dot(&frame.kappa, u);
    let m = basis.len();
    let mut components = Vec::with_capacity(m.pow(4));
    for b in &basis {
        for c in &basis {
            for dd in &basis {
                for e in &basis {
                    let v = (xf(b, c, dd) * kap(e) + xf(b, dd, e) * kap(c) + xf(b, e, c) * kap(dd))
                        / 3.0;
                    components.push(v);
                }
            }
        }
    }
    let k_l_k_e = frame
        .e
        .iter()
        .map(|e| w.contract(&frame.k, &frame.l, &frame.k, e))
        .collect();
    let k_l_e_e = DMatrix::from_fn(n, n, |i, j| {
        w.contract(&frame.k, &frame.l, &frame.e[i], &frame.e[j])
    });
    let k_e_k_e = DMatrix::from_fn(n, n, |i, j| {
        w.contract(&frame.k, &frame.e[i], &frame.k, &frame.e[j])
    });
    Ok(WalkerObstruction {
        components,
        k_l_k_e,
        k_l_e_e,
        k_e_k_e,
    })
}

/// The 1-form `P = π_i e♭_i` of a Kundt congruence.
fn pi_form(model: &MetricModel, spec: &CongruenceSpec, point: &[f64]) -> Result<Vec<f64>> {
    let a = analyze(model, spec, point)?;
    let d = point.len();
    Ok((0..d)
        .map(|b| {
            a.invariants
                .pi
                .iter()
                .zip(&a.frame.e_flat)
                .map(|(p, e)| p * e[b])
                .sum()
        })
        .collect())
}

/// Screen components of `ℒ_k π` and of `dπ`, by finite differences of the
/// frame-projected obstruction to parallelism.
#[derive(Debug, Clone)]
pub struct WalkerEquivalents {
    pub lie_k_pi: Vec<f64>,
    pub curl_pi: DMatrix<f64>,
}

pub fn walker_equivalents(
    model: &MetricModel,
    spec: &CongruenceSpec,
    point: &[f64],
) -> Result<WalkerEquivalents> {
    let a = analyze(model, spec, point)?;
    let report = a.classify(DEFAULT_TOL)?;
    report.require(Flag::Kundt, true, "walker equivalents")?;
    report.require(Flag::Affine, true, "walker equivalents")?;
    let d = point.len();
    let p = pi_form(model, spec, point)?;
    // dp[a][b] = ∂_a P_b
    let dp: Vec<Vec<f64>> = (0..d)
        .map(|ax| fd::partial_vec(|x: &[f64]| pi_form(model, spec, x), point, ax))
        .collect::<Result<_>>()?;
    let dk = &a.jet.dk;
    let k = &a.frame.k;
    let lie: Vec<f64> = (0..d)
        .map(|b| (0..d).map(|c| k[c] * dp[c][b] + p[c] * dk[(b, c)]).sum())
        .collect();
    let n = a.frame.screen_dim();
    let e = &a.frame.e;
    let lie_k_pi = e.iter().map(|ei| crate::tensor::dot(ei, &lie)).collect();
    let curl_pi = DMatrix::from_fn(n, n, |i, j| {
        let mut s = 0.0;
        for x in 0..d {
            for y in 0..d {
                s += e[i][x] * e[j][y] * (dp[x][y] - dp[y][x]);
            }
        }
        0.5 * s
    });
    Ok(WalkerEquivalents { lie_k_pi, curl_pi })
}

/// Weyl projection of an algebraic curvature tensor on a Euclidean space of
/// dimension `n ≥ 3`.
pub fn euclidean_weyl(t: &Tensor4) -> Tensor4 {
    let n = t.dim();
    let dn = n as f64;
    let ric = DMatrix::from_fn(n, n, |j, l| (0..n).map(|i| t[[i, j, i, l]]).sum::<f64>());
    let s = ric.trace();
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    Tensor4::from_fn(n, |i, j, k, l| {
        t[[i, j, k, l]]
            - (delta(i, k) * ric[(j, l)] - delta(i, l) * ric[(j, k)] - delta(j, k) * ric[(i, l)]
                + delta(j, l) * ric[(i, k)])
                / (dn - 2.0)
            + s * (delta(i, k) * delta(j, l) - delta(i, l) * delta(j, k))
                / ((dn - 1.0) * (dn - 2.0))
    })
}

/// The three screen conditions, as the largest absolute component of each.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrabilityObstruction {
    /// `W(k, e_i, k, e_j)`.
    pub first: f64,
    /// Trace-free part of `W(k, e_i, e_j, e_k)`.
    pub second: f64,
    /// Weyl part of `W(e_i, e_j, e_k, e_l)`; `None` when `n = 2`.
    pub third: Option<f64>,
    /// The screen tensor behind `third`.
    pub screen_weyl: Option<Tensor4>,
}

impl IntegrabilityObstruction {
    pub fn max_abs(&self) -> f64 {
        self.first.max(self.second).max(self.third.unwrap_or(0.0))
    }
}

pub fn integrability_obstruction(
    curv: &CurvatureBundle,
    frame: &SemiNullFrame,
) -> Result<IntegrabilityObstruction> {
    let w = weyl_of(curv)?;
    let n = frame.screen_dim();
    let e = &frame.e;
    let k = &frame.k;
    let mut first = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            first = first.max(w.contract(k, &e[i], k, &e[j]).abs());
        }
    }
    let t = Tensor3::from_fn(n, |i, j, l| w.contract(k, &e[i], &e[j], &e[l]));
    let mut second = 0.0f64;
    if n >= 2 {
        let tr: Vec<f64> = (0..n)
            .map(|l| (0..n).map(|i| t[[i, i, l]]).sum::<f64>() / (n as f64 - 1.0))
            .collect();
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let di = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    let v = t[[i, j, l]] - di(i, j) * tr[l] + di(i, l) * tr[j];
                    second = second.max(v.abs());
                }
            }
        }
    }
    let (third, screen_weyl) = if n >= 3 {
        let s = Tensor4::from_fn(n, |i, j, a, b| w.contract(&e[i], &e[j], &e[a], &e[b]));
        let sw = euclidean_weyl(&s);
        (Some(sw.max_abs()), Some(sw))
    } else {
        (None, None)
    };
    Ok(IntegrabilityObstruction {
        first,
        second,
        third,
        screen_weyl,
    })
}

/// `(φ, α)` defining `g̃ = e^{2φ}(g + κ ⊗ α + α ⊗ κ)`.
#[derive(Clone)]
pub struct OpticalPerturbation {
    pub phi: ScalarFn,
    pub alpha: VectorFn,
}

impl std::fmt::Debug for OpticalPerturbation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("OpticalPerturbation")
    }
}

impl OpticalPerturbation {
    pub fn identity(dim: usize) -> Self {
        OpticalPerturbation {
            phi: Arc::new(|_x: &[Jet2]| Ok(Jet2::constant(0.0))),
            alpha: Arc::new(move |_x: &[Jet2]| Ok(vec![Jet2::constant(0.0); dim])),
        }
    }

    /// Quadratic `φ` and affine `α`: `φ = φ0 + p·x + ½ xᵀ Q x`, `α_a = c_a + B_ab x^b`.
    pub fn polynomial(phi: ConformalFactor, c: Vec<f64>, b: Vec<Vec<f64>>) -> Self {
        let dim = c.len();
        OpticalPerturbation {
            phi: phi.function(),
            alpha: Arc::new(move |x: &[Jet2]| {
                Ok((0..dim)
                    .map(|a| {
                        let mut s = Jet2::constant(c[a]);
                        for (bb, xb) in x.iter().enumerate() {
                            s += *xb * b[a][bb];
                        }
                        s
                    })
                    .collect())
            }),
        }
    }

    /// `1 + α(k)` at a point.
    pub fn nondegeneracy(&self, spec: &CongruenceSpec, point: &[f64]) -> Result<f64> {
        let x = Jet2::constants(point);
        let a = (self.alpha)(&x)?;
        let k = spec.k_values(point)?;
        Ok(1.0
            + a.iter()
                .zip(&k)
                .map(|(ai, ki)| ai.value() * ki)
                .sum::<f64>())
    }
}

/// The metric `g̃ = e^{2φ}(g + κ ⊗ α + α ⊗ κ)` sharing the optical structure of `spec`.
pub fn equivalent_metric(
    model: &MetricModel,
    spec: &CongruenceSpec,
    pert: &OpticalPerturbation,
) -> Result<MetricModel> {
    let base = model.eval_fn();
    let kf = spec.field();
    let p = pert.clone();
    let n = model.dim;
    let eval = Arc::new(move |x: &[Jet2]| {
        let g = base(x)?;
        let k = kf(x)?;
        let kappa: Vec<Jet2> = (0..n)
            .map(|a| (0..n).map(|b| g[a][b] * k[b]).sum())
            .collect();
        let alpha = (p.alpha)(x)?;
        let w = ((p.phi)(x)? * 2.0).exp();
        Ok((0..n)
            .map(|a| {
                (0..n)
                    .map(|b| (g[a][b] + kappa[a] * alpha[b] + alpha[a] * kappa[b]) * w)
                    .collect()
            })
            .collect())
    });
    let guard = model.guard();
    let spec_c = spec.clone();
    let pert_c = pert.clone();
    let check = Arc::new(move |pt: &[f64]| {
        guard(pt)?;
        let s = pert_c
            .nondegeneracy(&spec_c, pt)
            .map_err(|e| e.to_string())?;
        if s.abs() < 1e-6 {
            return Err(format!("degenerate perturbation: 1 + α(k) = {s:e}"));
        }
        Ok(())
    });
    MetricModel::new(
        format!("{}~optical", model.name),
        n,
        model.params.clone(),
        eval,
        check,
    )
}

/// `g = η + f κ ⊗ κ`.
pub fn kerr_schild(eta: &MetricModel, f: ScalarFn, kappa: VectorFn) -> Result<MetricModel> {
    let base = eta.eval_fn();
    let n = eta.dim;
    let eval = Arc::new(move |x: &[Jet2]| {
        let mut g = base(x)?;
        let s = f(x)?;
        let k = kappa(x)?;
        for a in 0..n {
            for b in 0..n {
                g[a][b] = g[a][b] + s * k[a] * k[b];
            }
        }
        Ok(g)
    });
    MetricModel::new(
        format!("{}+kerr_schild", eta.name),
        n,
        eta.params.clone(),
        eval,
        eta.guard(),
    )
}

/// `max |g⁻¹ − (η⁻¹ − f k ⊗ k)|` with `k = η⁻¹ κ`.
pub fn kerr_schild_inverse_residual(
    eta: &MetricModel,
    f: &ScalarFn,
    kappa: &VectorFn,
    point: &[f64],
) -> Result<f64> {
    let g = kerr_schild(eta, f.clone(), kappa.clone())?;
    let ginv = g
        .values(point)?
        .try_inverse()
        .ok_or_else(|| Error::Precondition("Kerr-Schild metric is singular".into()))?;
    let etainv = eta
        .values(point)?
        .try_inverse()
        .ok_or_else(|| Error::Precondition("background metric is singular".into()))?;
    let x = Jet2::constants(point);
    let fv = f(&x)?.value();
    let kap: Vec<f64> = kappa(&x)?.iter().map(Jet2::value).collect();
    let k = &etainv * nalgebra::DVector::from_vec(kap);
    let n = point.len();
    let predicted = DMatrix::from_fn(n, n, |a, b| etainv[(a, b)] - fv * k[a] * k[b]);
    Ok((ginv - predicted).amax())
}

/// `Υ` along an integral curve of `k` with `dΥ/ds = −ρ/n`, by explicit RK4.
#[derive(Debug, Clone)]
pub struct NonExpandingCurve {
    pub s: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub upsilon: Vec<f64>,
}

pub fn non_expanding_factor_along(
    model: &MetricModel,
    spec: &CongruenceSpec,
    start: &[f64],
    length: f64,
    step: f64,
) -> Result<NonExpandingCurve> {
    if !(step > 0.0) || !(length >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step {step} and length {length}"
        )));
    }
    let d = start.len();
    let rhs = |y: &[f64]| -> Result<Vec<f64>> {
        let x = &y[..d];
        let a = analyze(model, spec, x)?;
        let mut out = a.frame.k.clone();
        out.push(-a.invariants.rho / a.frame.screen_dim() as f64);
        Ok(out)
    };
    let steps = (length / step).round() as usize;
    let mut y: Vec<f64> = start.to_vec();
    y.push(0.0);
    let mut curve = NonExpandingCurve {
        s: vec![0.0],
        points: vec![start.to_vec()],
        upsilon: vec![0.0],
    };
    let axpy = |y: &[f64], h: f64, k: &[f64]| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + h * b).collect()
    };
    for i in 0..steps {
        let k1 = rhs(&y)?;
        let k2 = rhs(&axpy(&y, 0.5 * step, &k1))?;
        let k3 = rhs(&axpy(&y, 0.5 * step, &k2))?;
        let k4 = rhs(&axpy(&y, step, &k3))?;
        for j in 0..y.len() {
            y[j] += step / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        curve.s.push((i + 1) as f64 * step);
        curve.points.push(y[..d].to_vec());
        curve.upsilon.push(y[d]);
    }
    Ok(curve)
}
