//! Frame components of `∇κ`, the optical invariants, and classification.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::curvature::{nabla_kappa, CongruenceJet};
use crate::error::{Error, Result};
use crate::fd;
use crate::frame::{build_frame, ScreenVolume, SemiNullFrame};
use crate::metric::{CongruenceSpec, MetricModel};
use crate::tensor::{bilinear, det_columns, dot, frobenius, matrix_max_abs, norm};

/// Default zero tolerance for classification.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Width of the indeterminate band above the zero threshold.
pub const BAND: f64 = 10.0;

/// Components of `∇κ` whose second slot lies along `ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    /// `k^a ℓ^b ∇_a κ_b`.
    pub c_kl: f64,
    /// `ℓ^a ℓ^b ∇_a κ_b`.
    pub c_ll: f64,
    /// `e_i^a ℓ^b ∇_a κ_b`.
    pub c_il: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpticalInvariants {
    pub gamma: Vec<f64>,
    pub rho: f64,
    #[serde(serialize_with = "crate::tensor::serialize_rows")]
    pub tau: DMatrix<f64>,
    #[serde(serialize_with = "crate::tensor::serialize_rows")]
    pub sigma: DMatrix<f64>,
    pub pi: Vec<f64>,
    pub residual: Residual,
    pub affine: bool,
    /// `max(1, max |∇_a κ_b|)` of the input.
    pub scale: f64,
}

impl OpticalInvariants {
    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    /// Screen block `S_ij = e_i^a e_j^b ∇_a κ_b`.
    pub fn screen_block(&self) -> DMatrix<f64> {
        let n = self.n();
        &self.tau + &self.sigma + DMatrix::identity(n, n) * (self.rho / n as f64)
    }

    /// Largest componentwise difference to another set of invariants.
    pub fn max_difference(&self, other: &OpticalInvariants) -> f64 {
        let v = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        };
        v(&self.gamma, &other.gamma)
            .max((self.rho - other.rho).abs())
            .max((&self.tau - &other.tau).amax())
            .max((&self.sigma - &other.sigma).amax())
            .max(v(&self.pi, &other.pi))
            .max((self.residual.c_kl - other.residual.c_kl).abs())
            .max((self.residual.c_ll - other.residual.c_ll).abs())
            .max(v(&self.residual.c_il, &other.residual.c_il))
    }
}

fn contract(nk: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    bilinear(nk, u, v)
}

/// Projects `∇_a κ_b` onto the frame.
pub fn project(nk: &DMatrix<f64>, frame: &SemiNullFrame) -> OpticalInvariants {
    let n = frame.screen_dim();
    let scale = matrix_max_abs(nk).max(1.0);
    let gamma: Vec<f64> = frame.e.iter().map(|e| contract(nk, &frame.k, e)).collect();
    let s = DMatrix::from_fn(n, n, |i, j| contract(nk, &frame.e[i], &frame.e[j]));
    let rho = s.trace();
    let tau = (&s - s.transpose()) * 0.5;
    let sigma = (&s + s.transpose()) * 0.5 - DMatrix::identity(n, n) * (rho / n as f64);
    let pi: Vec<f64> = frame.e.iter().map(|e| contract(nk, &frame.l, e)).collect();
    let residual = Residual {
        c_kl: contract(nk, &frame.k, &frame.l),
        c_ll: contract(nk, &frame.l, &frame.l),
        c_il: frame.e.iter().map(|e| contract(nk, e, &frame.l)).collect(),
    };
    let acc = norm(&gamma).max(residual.c_kl.abs());
    OpticalInvariants {
        affine: acc < DEFAULT_TOL * scale,
        gamma,
        rho,
        tau,
        sigma,
        pi,
        residual,
        scale,
    }
}

/// Rebuilds `∇_a κ_b` from its frame components.
pub fn reconstruct(inv: &OpticalInvariants, frame: &SemiNullFrame) -> DMatrix<f64> {
    let d = frame.dim();
    let n = frame.screen_dim();
    let s = inv.screen_block();
    let r = &inv.residual;
    DMatrix::from_fn(d, d, |a, b| {
        let (ka, kb) = (frame.kappa[a], frame.kappa[b]);
        let la = frame.lambda[a];
        let mut out = ka * r.c_ll * kb + la * r.c_kl * kb;
        for j in 0..n {
            let ejb = frame.e_flat[j][b];
            out += ka * inv.pi[j] * ejb + la * inv.gamma[j] * ejb;
        }
        for i in 0..n {
            let eia = frame.e_flat[i][a];
            out += eia * r.c_il[i] * kb;
            for j in 0..n {
                out += eia * s[(i, j)] * frame.e_flat[j][b];
            }
        }
        out
    })
}

/// `max |reconstruct − ∇κ| / scale`.
pub fn reconstruction_residual(nk: &DMatrix<f64>, frame: &SemiNullFrame) -> f64 {
    let inv = project(nk, frame);
    (reconstruct(&inv, frame) - nk).amax() / inv.scale
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    Geodetic,
    Affine,
    Expanding,
    Twisting,
    Shearing,
    MaximallyTwisting,
    Kundt,
    RobinsonTrautman,
    RecurrentWalker,
    Parallel,
}

impl Flag {
    pub const ALL: [Flag; 10] = [
        Flag::Geodetic,
        Flag::Affine,
        Flag::Expanding,
        Flag::Twisting,
        Flag::Shearing,
        Flag::MaximallyTwisting,
        Flag::Kundt,
        Flag::RobinsonTrautman,
        Flag::RecurrentWalker,
        Flag::Parallel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Flag::Geodetic => "geodetic",
            Flag::Affine => "affine",
            Flag::Expanding => "expanding",
            Flag::Twisting => "twisting",
            Flag::Shearing => "shearing",
            Flag::MaximallyTwisting => "maximally_twisting",
            Flag::Kundt => "kundt",
            Flag::RobinsonTrautman => "robinson_trautman",
            Flag::RecurrentWalker => "recurrent_walker",
            Flag::Parallel => "parallel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Flags {
    pub geodetic: bool,
    pub affine: bool,
    pub expanding: bool,
    pub twisting: bool,
    pub shearing: bool,
    /// `None` for odd screen dimension.
    pub maximally_twisting: Option<bool>,
    pub kundt: bool,
    pub robinson_trautman: bool,
    pub recurrent_walker: bool,
    pub parallel: bool,
}

impl Flags {
    pub fn get(&self, flag: Flag) -> Option<bool> {
        Some(match flag {
            Flag::Geodetic => self.geodetic,
            Flag::Affine => self.affine,
            Flag::Expanding => self.expanding,
            Flag::Twisting => self.twisting,
            Flag::Shearing => self.shearing,
            Flag::MaximallyTwisting => return self.maximally_twisting,
            Flag::Kundt => self.kundt,
            Flag::RobinsonTrautman => self.robinson_trautman,
            Flag::RecurrentWalker => self.recurrent_walker,
            Flag::Parallel => self.parallel,
        })
    }
}

/// Norms behind each flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Magnitudes {
    pub gamma: f64,
    pub acceleration: f64,
    pub rho: f64,
    pub tau: f64,
    pub sigma: f64,
    pub pi: f64,
    pub recurrence: f64,
    pub nabla_kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub flags: Flags,
    pub twist_rank: usize,
    pub tol: f64,
    pub scale: f64,
    pub magnitudes: Magnitudes,
    pub twist_singular_values: Vec<f64>,
}

impl ClassReport {
    pub fn threshold(&self) -> f64 {
        self.tol * self.scale
    }

    pub fn require(&self, flag: Flag, expected: bool, context: &str) -> Result<()> {
        match self.flags.get(flag) {
            Some(v) if v == expected => Ok(()),
            _ => Err(Error::Precondition(format!(
                "{context} requires {}{}",
                if expected { "" } else { "non-" },
                flag.name()
            ))),
        }
    }
}

fn decide(flag: &'static str, magnitude: f64, tol: f64, scale: f64) -> Result<bool> {
    let lower = tol * scale;
    let upper = BAND * lower;
    if !magnitude.is_finite() {
        return Err(Error::NonFinite(format!("magnitude of `{flag}`")));
    }
    if magnitude < lower {
        Ok(false)
    } else if magnitude >= upper {
        Ok(true)
    } else {
        Err(Error::Indeterminate {
            flag,
            magnitude,
            lower,
            upper,
        })
    }
}

/// Singular values of the twist in decreasing order.
pub fn twist_singular_values(tau: &DMatrix<f64>) -> Vec<f64> {
    if tau.nrows() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = tau.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `d = #{singular values of τ above tol} / 2`.
pub fn twist_rank(tau: &DMatrix<f64>, tol: f64) -> usize {
    twist_singular_values(tau)
        .iter()
        .filter(|&&s| s > tol)
        .count()
        / 2
}

/// `max |(∇_a κ_[b) κ_c]|`.
pub fn recurrence_residual(nk: &DMatrix<f64>, kappa: &[f64]) -> f64 {
    let d = kappa.len();
    let mut worst = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            for c in (b + 1)..d {
                let v = 0.5 * (nk[(a, b)] * kappa[c] - nk[(a, c)] * kappa[b]);
                worst = worst.max(v.abs());
            }
        }
    }
    worst
}

/// Classifies a congruence from its invariants and `∇κ`.
pub fn classify(
    inv: &OpticalInvariants,
    nk: &DMatrix<f64>,
    frame: &SemiNullFrame,
    tol: f64,
) -> Result<ClassReport> {
    let n = frame.screen_dim();
    let scale = matrix_max_abs(nk).max(1.0);
    let kdotn: Vec<f64> = (0..frame.dim())
        .map(|b| (0..frame.dim()).map(|a| frame.k[a] * nk[(a, b)]).sum())
        .collect();
    let magnitudes = Magnitudes {
        gamma: norm(&inv.gamma),
        acceleration: kdotn.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        rho: inv.rho.abs(),
        tau: frobenius(&inv.tau),
        sigma: frobenius(&inv.sigma),
        pi: norm(&inv.pi),
        recurrence: recurrence_residual(nk, &frame.kappa),
        nabla_kappa: matrix_max_abs(nk),
    };
    let geodetic = !decide("geodetic", magnitudes.gamma, tol, scale)?;
    let affine = !decide("affine", magnitudes.acceleration, tol, scale)?;
    let expanding = decide("expanding", magnitudes.rho, tol, scale)?;
    let twisting = decide("twisting", magnitudes.tau, tol, scale)?;
    let shearing = decide("shearing", magnitudes.sigma, tol, scale)?;
    let recurrent_walker = !decide("recurrent_walker", magnitudes.recurrence, tol, scale)?;
    let parallel = !decide("parallel", magnitudes.nabla_kappa, tol, scale)?;
    let sv = twist_singular_values(&inv.tau);
    for &s in &sv {
        decide("twist_rank", s, tol, scale)?;
    }
    let twist_rank = sv.iter().filter(|&&s| s >= tol * scale).count() / 2;
    let maximally_twisting = if n % 2 == 0 {
        Some(twist_rank == n / 2 && n > 0)
    } else {
        None
    };
    let flags = Flags {
        geodetic,
        affine,
        expanding,
        twisting,
        shearing,
        maximally_twisting,
        kundt: geodetic && !expanding && !twisting && !shearing,
        robinson_trautman: geodetic && expanding && !twisting && !shearing,
        recurrent_walker,
        parallel,
    };
    Ok(ClassReport {
        flags,
        twist_rank,
        tol,
        scale,
        magnitudes,
        twist_singular_values: sv,
    })
}

/// Everything needed about a congruence at one point.
#[derive(Debug, Clone)]
pub struct PointAnalysis {
    pub jet: CongruenceJet,
    pub frame: SemiNullFrame,
    pub invariants: OpticalInvariants,
}

impl PointAnalysis {
    pub fn nk(&self) -> &DMatrix<f64> {
        &self.jet.nk
    }

    pub fn classify(&self, tol: f64) -> Result<ClassReport> {
        classify(&self.invariants, &self.jet.nk, &self.frame, tol)
    }
}

pub fn analyze(model: &MetricModel, spec: &CongruenceSpec, point: &[f64]) -> Result<PointAnalysis> {
    let jet = nabla_kappa(model, spec, point)?;
    let frame = build_frame(&jet.mj, &jet.k)?;
    let invariants = project(&jet.nk, &frame);
    Ok(PointAnalysis {
        jet,
        frame,
        invariants,
    })
}

/// Predicted invariants after the null rotation with parameter `z`.
pub fn null_rotation_covariance(inv: &OpticalInvariants, z: &[f64]) -> Result<OpticalInvariants> {
    let n = inv.n();
    if z.len() != n {
        return Err(Error::DimensionMismatch {
            what: "null rotation parameter",
            expected: n,
            found: z.len(),
        });
    }
    let g = &inv.gamma;
    let zz = dot(z, z);
    let zg = dot(z, g);
    let nf = n as f64;
    let rho = inv.rho + zg;
    let tau = DMatrix::from_fn(n, n, |i, j| {
        inv.tau[(i, j)] - 0.5 * (g[i] * z[j] - g[j] * z[i])
    });
    let sigma = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { zg / nf } else { 0.0 };
        inv.sigma[(i, j)] + 0.5 * (g[i] * z[j] + g[j] * z[i]) - d
    });
    let sz = &inv.sigma * nalgebra::DVector::from_column_slice(z);
    let tz = &inv.tau * nalgebra::DVector::from_column_slice(z);
    let pi: Vec<f64> = (0..n)
        .map(|i| inv.pi[i] - sz[i] + tz[i] - inv.rho / nf * z[i] - 0.5 * zz * g[i])
        .collect();
    let s = inv.screen_block();
    let sz_full = &s * nalgebra::DVector::from_column_slice(z);
    let r = &inv.residual;
    let c_kl = r.c_kl - zg;
    let c_il: Vec<f64> = (0..n)
        .map(|i| r.c_il[i] - sz_full[i] + z[i] * r.c_kl - z[i] * zg)
        .collect();
    let zsz: f64 = (0..n).map(|i| z[i] * sz_full[i]).sum();
    let c_ll = r.c_ll - dot(&inv.pi, z) - dot(z, &r.c_il) + zsz - 0.5 * zz * r.c_kl + 0.5 * zz * zg;
    Ok(OpticalInvariants {
        gamma: g.clone(),
        rho,
        tau,
        sigma,
        pi,
        residual: Residual { c_kl, c_ll, c_il },
        affine: inv.affine,
        scale: inv.scale,
    })
}

/// Predicted invariants for the boosted frame and generator `e^φ κ`, `φ` constant.
pub fn boost_covariance(inv: &OpticalInvariants, phi: f64) -> OpticalInvariants {
    let s = phi.exp();
    OpticalInvariants {
        gamma: inv.gamma.iter().map(|x| x * s * s).collect(),
        rho: inv.rho * s,
        tau: &inv.tau * s,
        sigma: &inv.sigma * s,
        pi: inv.pi.clone(),
        residual: Residual {
            c_kl: inv.residual.c_kl * s,
            c_ll: inv.residual.c_ll / s,
            c_il: inv.residual.c_il.clone(),
        },
        affine: inv.affine,
        scale: inv.scale * s.max(1.0),
    }
}

/// `dκ(e_i, e_j)` with `(dκ)_ab = ∂_[a κ_b]`, for a geodetic congruence.
pub fn twist_via_exterior(
    model: &MetricModel,
    spec: &CongruenceSpec,
    point: &[f64],
    frame: &SemiNullFrame,
) -> Result<DMatrix<f64>> {
    let cj = nabla_kappa(model, spec, point)?;
    let inv = project(&cj.nk, frame);
    if norm(&inv.gamma) >= DEFAULT_TOL * inv.scale {
        return Err(Error::Precondition(format!(
            "twist via exterior derivative needs a geodetic congruence (|γ| = {:e})",
            norm(&inv.gamma)
        )));
    }
    let dk = cj.d_kappa();
    let n = frame.screen_dim();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        bilinear(&dk, &frame.e[i], &frame.e[j])
    }))
}

/// `max |κ ∧ dκ|` over chart components.
pub fn kappa_wedge_dkappa(cj: &CongruenceJet) -> f64 {
    let d = cj.dim();
    let dk = cj.d_kappa();
    let kp = &cj.kappa;
    let mut worst = 0.0f64;
    for a in 0..d {
        for b in (a + 1)..d {
            for c in (b + 1)..d {
                let v = kp[a] * dk[(b, c)] + kp[b] * dk[(c, a)] + kp[c] * dk[(a, b)];
                worst = worst.max(v.abs());
            }
        }
    }
    worst
}

/// Expansion from the divergence: `ρ = div k − ℓ^b k^a ∇_a κ_b`.
pub fn expansion_from_divergence(cj: &CongruenceJet, frame: &SemiNullFrame) -> f64 {
    let div = cj.nabla_k().trace();
    div - bilinear(&cj.nk, &frame.k, &frame.l)
}

/// `(ℒ_k g)_ab` by finite differences of the metric and generator.
pub fn lie_derivative_metric_fd(
    model: &MetricModel,
    spec: &CongruenceSpec,
    point: &[f64],
) -> Result<DMatrix<f64>> {
    let d = point.len();
    let g = model.values(point)?;
    let k = spec.k_values(point)?;
    let gflat = |y: &[f64]| -> Result<Vec<f64>> { Ok(model.values(y)?.iter().copied().collect()) };
    let kf = |y: &[f64]| spec.k_values(y);
    let mut dg = Vec::with_capacity(d);
    let mut dkv = Vec::with_capacity(d);
    for c in 0..d {
        dg.push(DMatrix::from_column_slice(
            d,
            d,
            &fd::partial_vec(gflat, point, c)?,
        ));
        dkv.push(fd::partial_vec(kf, point, c)?);
    }
    Ok(DMatrix::from_fn(d, d, |a, b| {
        let mut s = 0.0;
        for c in 0..d {
            s += k[c] * dg[c][(a, b)] + g[(c, b)] * dkv[a][c] + g[(a, c)] * dkv[b][c];
        }
        s
    }))
}

/// Trace-free screen part of `½ ℒ_k g` by finite differences; equals `σ`.
pub fn shear_from_lie_derivative(
    model: &MetricModel,
    spec: &CongruenceSpec,
    point: &[f64],
    frame: &SemiNullFrame,
) -> Result<DMatrix<f64>> {
    let lg = lie_derivative_metric_fd(model, spec, point)?;
    let n = frame.screen_dim();
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * bilinear(&lg, &frame.e[i], &frame.e[j]));
    let tr = m.trace() / n as f64;
    Ok(m - DMatrix::identity(n, n) * tr)
}

/// Hodge dual on screen 2-forms for `n = 4`: `(⋆τ)_ij = ½ ε_ijkl τ_kl`.
pub fn screen_hodge(tau: &DMatrix<f64>, eps: &ScreenVolume) -> Result<DMatrix<f64>> {
    if tau.nrows() != 4 || eps.n != 4 {
        return Err(Error::DimensionMismatch {
            what: "self-dual split screen dimension",
            expected: 4,
            found: tau.nrows(),
        });
    }
    let sign = eps.sign();
    Ok(DMatrix::from_fn(4, 4, |i, j| {
        let mut s = 0.0;
        for k in 0..4 {
            for l in 0..4 {
                s += 0.5 * sign * crate::frame::permutation_sign(&[i, j, k, l]) * tau[(k, l)];
            }
        }
        s
    }))
}

/// `τ± = ½ (τ ± ⋆τ)` on a four-dimensional screen.
pub fn sd_asd_split(
    tau: &DMatrix<f64>,
    eps: &ScreenVolume,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let star = screen_hodge(tau, eps)?;
    Ok(((tau + &star) * 0.5, (tau - &star) * 0.5))
}

/// FD value of `ℒ_k(k⌟ε)(e_1, …, e_n, ℓ)` for a non-expanding affine congruence.
pub fn volume_transport_check(
    model: &MetricModel,
    spec: &CongruenceSpec,
    point: &[f64],
) -> Result<f64> {
    let pa = analyze(model, spec, point)?;
    let report = pa.classify(DEFAULT_TOL)?;
    report.require(Flag::Expanding, false, "volume transport check")?;
    report.require(Flag::Affine, true, "volume transport check")?;
    let frame = &pa.frame;
    let mut xs: Vec<Vec<f64>> = frame.e.clone();
    xs.push(frame.l.clone());
    let omega = |y: &[f64], kv: &[f64], cols: &[Vec<f64>]| -> Result<f64> {
        let g = model.values(y)?;
        let mut c: Vec<&[f64]> = vec![kv];
        c.extend(cols.iter().map(|v| v.as_slice()));
        Ok(g.determinant().abs().sqrt() * det_columns(&c))
    };
    let along =
        |v: &[f64], s: f64| -> Vec<f64> { point.iter().zip(v).map(|(p, x)| p + s * x).collect() };
    let k = pa.jet.k.clone();
    let f = |s: f64| -> f64 {
        let y = along(&k, s);
        match spec.k_values(&y).and_then(|kv| omega(&y, &kv, &xs)) {
            Ok(v) => v,
            Err(_) => f64::NAN,
        }
    };
    let mut total = fd::derivative(f, 0.0);
    for i in 0..xs.len() {
        let xi = xs[i].clone();
        let mut dk = vec![0.0; k.len()];
        for (c, dkc) in dk.iter_mut().enumerate() {
            *dkc = fd::derivative(
                |s| {
                    spec.k_values(&along(&xi, s))
                        .map(|kv| kv[c])
                        .unwrap_or(f64::NAN)
                },
                0.0,
            );
        }
        let mut cols = xs.clone();
        cols[i] = dk;
        total += omega(point, &k, &cols)?;
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("volume transport stencil".into()));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::build_frame_from_matrix;
    use proptest::prelude::*;

    fn frame4() -> (DMatrix<f64>, SemiNullFrame) {
        let mut g = DMatrix::identity(4, 4);
        g[(0, 0)] = 0.3;
        g[(1, 1)] = 0.0;
        g[(0, 1)] = 1.0;
        g[(1, 0)] = 1.0;
        g[(0, 2)] = 0.2;
        g[(2, 0)] = 0.2;
        let f = build_frame_from_matrix(&g, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        (g, f)
    }

    fn random_nk(frame: &SemiNullFrame, c: &[f64]) -> DMatrix<f64> {
        let inv = OpticalInvariants {
            gamma: vec![c[0], c[1]],
            rho: c[2],
            tau: DMatrix::from_row_slice(2, 2, &[0.0, c[3], -c[3], 0.0]),
            sigma: DMatrix::from_row_slice(2, 2, &[c[4], c[5], c[5], -c[4]]),
            pi: vec![c[6], c[7]],
            residual: Residual {
                c_kl: c[8],
                c_ll: c[9],
                c_il: vec![c[10], c[11]],
            },
            affine: false,
            scale: 1.0,
        };
        reconstruct(&inv, frame)
    }

    #[test]
    fn zero_gradient_is_parallel() {
        let (_, f) = frame4();
        let nk = DMatrix::zeros(4, 4);
        let inv = project(&nk, &f);
        let rep = classify(&inv, &nk, &f, DEFAULT_TOL).unwrap();
        assert!(rep.flags.parallel && rep.flags.kundt && rep.flags.recurrent_walker);
        assert_eq!(rep.twist_rank, 0);
        assert_eq!(rep.flags.maximally_twisting, Some(false));
    }

    #[test]
    fn indeterminate_band_fails_loudly() {
        let (_, f) = frame4();
        let c = [0.0, 0.0, 3e-8, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let nk = random_nk(&f, &c);
        let inv = project(&nk, &f);
        assert!(matches!(
            classify(&inv, &nk, &f, DEFAULT_TOL),
            Err(Error::Indeterminate {
                flag: "expanding",
                ..
            })
        ));
    }

    #[test]
    fn twist_rank_counts_pairs() {
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert_eq!(twist_rank(&t, 1e-8), 1);
        assert_eq!(twist_rank(&DMatrix::zeros(2, 2), 1e-8), 0);
    }

    #[test]
    fn self_dual_basis_form() {
        let eps = ScreenVolume {
            n: 4,
            orientation: 1.0,
        };
        let mut t = DMatrix::zeros(4, 4);
        t[(0, 1)] = 1.0;
        t[(1, 0)] = -1.0;
        t[(2, 3)] = 1.0;
        t[(3, 2)] = -1.0;
        let (p, m) = sd_asd_split(&t, &eps).unwrap();
        assert!(m.amax() < 1e-15);
        assert!((p - &t).amax() < 1e-15);
        assert!(sd_asd_split(&DMatrix::zeros(2, 2), &eps).is_err());
    }

    proptest! {
        #[test]
        fn reconstruction_roundtrip(c in prop::collection::vec(-2.0f64..2.0, 12)) {
            let (_, f) = frame4();
            let nk = random_nk(&f, &c);
            prop_assert!(reconstruction_residual(&nk, &f) < 1e-12);
            let inv = project(&nk, &f);
            prop_assert!(inv.sigma.trace().abs() < 1e-12);
            prop_assert!((&inv.tau + inv.tau.transpose()).amax() < 1e-15);
            prop_assert!((inv.rho - c[2]).abs() < 1e-12);
        }

        #[test]
        fn null_rotation_prediction_matches_recomputation(
            c in prop::collection::vec(-2.0f64..2.0, 12),
            z in prop::collection::vec(-1.0f64..1.0, 2),
        ) {
            let (_, f) = frame4();
            let nk = random_nk(&f, &c);
            let inv = project(&nk, &f);
            let pred = null_rotation_covariance(&inv, &z).unwrap();
            let rot = project(&nk, &f.null_rotation(&z).unwrap());
            prop_assert!(pred.max_difference(&rot) < 1e-12);
        }

        #[test]
        fn boost_prediction_matches_recomputation(
            c in prop::collection::vec(-2.0f64..2.0, 12),
            phi in -1.0f64..1.0,
        ) {
            let (_, f) = frame4();
            let nk = random_nk(&f, &c);
            let inv = project(&nk, &f);
            let pred = boost_covariance(&inv, phi);
            let rot = project(&(&nk * phi.exp()), &f.boost(phi));
            prop_assert!(pred.max_difference(&rot) < 1e-11);
        }

        #[test]
        fn self_dual_split_is_orthogonal(v in prop::collection::vec(-1.0f64..1.0, 6)) {
            let eps = ScreenVolume { n: 4, orientation: 1.0 };
            let mut t = DMatrix::zeros(4, 4);
            let mut idx = 0;
            for i in 0..4 {
                for j in (i + 1)..4 {
                    t[(i, j)] = v[idx];
                    t[(j, i)] = -v[idx];
                    idx += 1;
                }
            }
            let (p, m) = sd_asd_split(&t, &eps).unwrap();
            let n2 = |x: &DMatrix<f64>| x.iter().map(|a| a * a).sum::<f64>();
            prop_assert!((n2(&t) - n2(&p) - n2(&m)).abs() < 1e-12);
            prop_assert!((screen_hodge(&p, &eps).unwrap() - &p).amax() < 1e-14);
            prop_assert!((screen_hodge(&m, &eps).unwrap() + &m).amax() < 1e-14);
        }
    }
}
