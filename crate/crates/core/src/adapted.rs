//! Connections adapted to a non-shearing congruence, frames adapted to a
//! maximal twist, twist normalisation, and the four-dimensional complex
//! structure on the screen.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fd;
use crate::frame::{build_frame_from_matrix, permutation_sign, ScreenVolume, SemiNullFrame};
use crate::metric::{CongruenceSpec, MetricModel};
use crate::optical::{analyze, twist_rank, twist_singular_values, OpticalInvariants, DEFAULT_TOL};
use crate::tensor::{bilinear, frobenius, norm, Tensor3};

/// `∇ᵗ_a v^b = ∇_a v^b + Q_ac^b v^c` together with its defects.
#[derive(Debug, Clone)]
pub struct ConnectionMod {
    pub t: f64,
    /// `Q_abc` with the last index lowered.
    pub q: Tensor3,
    /// `T_abc = −2 Q_[ab]c`.
    pub torsion: Tensor3,
    /// `max |(∇ᵗ_a κ_[b) κ_c]|`.
    pub kappa_defect: f64,
    /// Largest deviation of `∇ᵗ_a g_bc` from its stated value.
    pub metricity_defect: f64,
    /// Largest deviation of the torsion from its stated value.
    pub torsion_defect: f64,
    /// `max |∇ᵗ_(a g_bc)|`.
    pub symmetrised_metricity: f64,
}

impl ConnectionMod {
    /// `max |T_[abc]|`.
    pub fn torsion_totally_antisymmetric(&self) -> f64 {
        let t = &self.torsion;
        let n = t.dim();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let s = t[[a, b, c]] + t[[b, c, a]] + t[[c, a, b]]
                        - t[[b, a, c]]
                        - t[[a, c, b]]
                        - t[[c, b, a]];
                    worst = worst.max((s / 6.0).abs());
                }
            }
        }
        worst
    }

    /// `max |T_a(bc)|`.
    pub fn torsion_symmetric_part(&self) -> f64 {
        let t = &self.torsion;
        let n = t.dim();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    worst = worst.max((0.5 * (t[[a, b, c]] + t[[a, c, b]])).abs());
                }
            }
        }
        worst
    }

    pub fn defect(&self) -> f64 {
        self.kappa_defect
            .max(self.metricity_defect)
            .max(self.torsion_defect)
    }
}

struct Lifted {
    h: DMatrix<f64>,
    tau: DMatrix<f64>,
    pi: Vec<f64>,
}

/// Spacetime tensors `h_ab`, `τ_ab`, `π_a` from their screen components.
fn lift(inv: &OpticalInvariants, frame: &SemiNullFrame) -> Lifted {
    let d = frame.dim();
    let n = frame.screen_dim();
    let ef = &frame.e_flat;
    let h = DMatrix::from_fn(d, d, |a, b| (0..n).map(|i| ef[i][a] * ef[i][b]).sum());
    let tau = DMatrix::from_fn(d, d, |a, b| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += inv.tau[(i, j)] * ef[i][a] * ef[j][b];
            }
        }
        s
    });
    let pi = (0..d)
        .map(|a| (0..n).map(|i| inv.pi[i] * ef[i][a]).sum())
        .collect();
    Lifted { h, tau, pi }
}

fn require_small(what: &str, magnitude: f64, inv: &OpticalInvariants) -> Result<()> {
    if magnitude < DEFAULT_TOL * inv.scale {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{what} is {magnitude:e}")))
    }
}

fn evaluate_connection(
    nk: &DMatrix<f64>,
    frame: &SemiNullFrame,
    q: Tensor3,
    t: f64,
    lifted: &Lifted,
    rho_n: f64,
) -> ConnectionMod {
    let d = frame.dim();
    let (kap, lam, k) = (&frame.kappa, &frame.lambda, &frame.k);
    let Lifted { h, tau, pi } = lifted;
    // ∇ᵗ_a κ_b = ∇_a κ_b − Q_abc k^c
    let m = DMatrix::from_fn(d, d, |a, b| {
        nk[(a, b)] - (0..d).map(|c| q[[a, b, c]] * k[c]).sum::<f64>()
    });
    let sym = |x: &[f64], y: &[f64], b: usize, c: usize| 0.5 * (x[b] * y[c] + x[c] * y[b]);
    let mut torsion = Tensor3::zeros(d);
    let (mut kd, mut md, mut td, mut sm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                kd = kd.max((0.5 * (m[(a, b)] * kap[c] - m[(a, c)] * kap[b])).abs());
                let nabla_g = -q[[a, b, c]] - q[[a, c, b]];
                let expected = 2.0 * rho_n * lam[a] * h[(b, c)] + 2.0 * lam[a] * sym(kap, pi, b, c)
                    - 2.0 * pi[a] * sym(kap, lam, b, c);
                md = md.max((nabla_g - expected).abs());
                let tt = -(q[[a, b, c]] - q[[b, a, c]]);
                torsion[[a, b, c]] = tt;
                let stated = -2.0 * tau[(a, b)] * lam[c]
                    - (2.0 + 2.0 * t) * 0.5 * (lam[a] * tau[(b, c)] - lam[b] * tau[(a, c)]);
                td = td.max((tt - stated).abs());
                let s3 = -(q[[a, b, c]]
                    + q[[a, c, b]]
                    + q[[b, c, a]]
                    + q[[b, a, c]]
                    + q[[c, a, b]]
                    + q[[c, b, a]])
                    / 3.0;
                sm = sm.max(s3.abs());
            }
        }
    }
    ConnectionMod {
        t,
        q,
        torsion,
        kappa_defect: kd,
        metricity_defect: md,
        torsion_defect: td,
        symmetrised_metricity: sm,
    }
}

/// The family `∇ᵗ` built from a geodetic non-shearing congruence.
pub fn connection_family(
    nk: &DMatrix<f64>,
    inv: &OpticalInvariants,
    frame: &SemiNullFrame,
    t: f64,
) -> Result<ConnectionMod> {
    require_small("geodesy obstruction", norm(&inv.gamma), inv)?;
    require_small("shear", frobenius(&inv.sigma), inv)?;
    let d = frame.dim();
    let n = frame.screen_dim() as f64;
    let lifted = lift(inv, frame);
    let (kap, lam) = (&frame.kappa, &frame.lambda);
    let Lifted { h, tau, pi } = &lifted;
    let rho_n = inv.rho / n;
    let q = Tensor3::from_fn(d, |a, b, c| {
        rho_n * (h[(a, b)] * lam[c] - h[(c, a)] * lam[b] - h[(c, b)] * lam[a])
            + (tau[(a, b)] * lam[c] - tau[(a, c)] * lam[b])
            + t * lam[a] * tau[(b, c)]
            - (kap[a] * lam[b] + kap[b] * lam[a]) * pi[c]
            + (kap[a] * pi[b] + kap[b] * pi[a]) * lam[c]
    });
    Ok(evaluate_connection(nk, frame, q, t, &lifted, rho_n))
}

/// The torsion-free connection `∇′` of a Kundt congruence.
pub fn kundt_connection(
    nk: &DMatrix<f64>,
    inv: &OpticalInvariants,
    frame: &SemiNullFrame,
) -> Result<ConnectionMod> {
    require_small("geodesy obstruction", norm(&inv.gamma), inv)?;
    require_small("expansion", inv.rho.abs(), inv)?;
    require_small("twist", frobenius(&inv.tau), inv)?;
    require_small("shear", frobenius(&inv.sigma), inv)?;
    let d = frame.dim();
    let lifted = lift(inv, frame);
    let (kap, lam) = (&frame.kappa, &frame.lambda);
    let pi = &lifted.pi;
    let q = Tensor3::from_fn(d, |a, b, c| {
        -(kap[a] * lam[b] + kap[b] * lam[a]) * pi[c] + (kap[a] * pi[b] + kap[b] * pi[a]) * lam[c]
    });
    Ok(evaluate_connection(nk, frame, q, 0.0, &lifted, 0.0))
}

/// `dκ(u, v)` with `(dκ)_ab = ∇_[a κ_b]`.
pub fn d_kappa_on(nk: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    0.5 * (bilinear(nk, u, v) - bilinear(nk, v, u))
}

#[derive(Debug, Clone)]
pub struct AdaptedFrame {
    pub frame: SemiNullFrame,
    pub z: Vec<f64>,
}

/// `β_j = dκ(ℓ, e_j) = ½ (π_j − C_jℓ)`.
pub fn twist_adaptation_defect(inv: &OpticalInvariants) -> Vec<f64> {
    inv.pi
        .iter()
        .zip(&inv.residual.c_il)
        .map(|(p, c)| 0.5 * (p - c))
        .collect()
}

/// Null rotation making `dκ(ℓ̃, ·)` vanish: solves `τᵀ z = β`.
pub fn adapt_frame_max_twist(
    inv: &OpticalInvariants,
    frame: &SemiNullFrame,
) -> Result<AdaptedFrame> {
    require_small("geodesy obstruction", norm(&inv.gamma), inv)?;
    if !inv.affine {
        return Err(Error::Precondition(
            "max-twist adaptation needs an affine generator".into(),
        ));
    }
    let n = frame.screen_dim();
    let sv = twist_singular_values(&inv.tau);
    let smallest = sv.last().copied().unwrap_or(0.0);
    if n == 0 || n % 2 == 1 || smallest < DEFAULT_TOL * inv.scale {
        return Err(Error::SingularTwist { smallest });
    }
    let beta = nalgebra::DVector::from_vec(twist_adaptation_defect(inv));
    let z = inv
        .tau
        .transpose()
        .lu()
        .solve(&beta)
        .ok_or(Error::SingularTwist { smallest })?;
    let z: Vec<f64> = z.iter().copied().collect();
    Ok(AdaptedFrame {
        frame: frame.null_rotation(&z)?,
        z,
    })
}

/// `(max_i |dκ(ℓ, e_i)|, max over frame vectors of |dκ(k, ·)|)`.
pub fn max_twist_residuals(nk: &DMatrix<f64>, frame: &SemiNullFrame) -> (f64, f64) {
    let rl = frame
        .e
        .iter()
        .map(|e| d_kappa_on(nk, &frame.l, e).abs())
        .fold(0.0, f64::max);
    let rk = frame
        .vectors()
        .iter()
        .map(|v| d_kappa_on(nk, &frame.k, v).abs())
        .fold(0.0, f64::max);
    (rl, rk)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistNormalization {
    /// `k̃ = s k`.
    pub s: f64,
    pub rank: usize,
    /// `τ̃_ij τ̃^ij` predicted for `k̃`.
    pub normalized_square: f64,
}

/// `s = √(2d) / ‖τ‖` at a point.
pub fn normalize_twist(inv: &OpticalInvariants) -> Result<TwistNormalization> {
    require_small("geodesy obstruction", norm(&inv.gamma), inv)?;
    require_small("shear", frobenius(&inv.sigma), inv)?;
    let nt = frobenius(&inv.tau);
    if nt < DEFAULT_TOL * inv.scale {
        return Err(Error::Precondition(
            "twist normalisation needs a twisting congruence".into(),
        ));
    }
    let rank = twist_rank(&inv.tau, DEFAULT_TOL * inv.scale);
    let s = (2.0 * rank as f64).sqrt() / nt;
    Ok(TwistNormalization {
        s,
        rank,
        normalized_square: (s * nt).powi(2),
    })
}

/// `‖τ‖` of the generator at a point.
pub fn twist_norm(model: &MetricModel, spec: &CongruenceSpec, point: &[f64]) -> Result<f64> {
    Ok(frobenius(&analyze(model, spec, point)?.invariants.tau))
}

/// `max_b |∇_k̃ k̃^b|` for `k̃ = √(2d) k / ‖τ‖`, with `k(‖τ‖)` by finite
/// differences along `k`.
pub fn normalized_acceleration(
    model: &MetricModel,
    spec: &CongruenceSpec,
    point: &[f64],
) -> Result<f64> {
    let a = analyze(model, spec, point)?;
    let norm_data = normalize_twist(&a.invariants)?;
    let s = norm_data.s;
    let k = a.frame.k.clone();
    let dnorm = fd::derivative(
        |eps| {
            let x: Vec<f64> = point.iter().zip(&k).map(|(p, c)| p + eps * c).collect();
            twist_norm(model, spec, &x).unwrap_or(f64::NAN)
        },
        0.0,
    );
    if !dnorm.is_finite() {
        return Err(Error::NonFinite("twist norm along the generator".into()));
    }
    let nt = frobenius(&a.invariants.tau);
    // k(s) = −s k(‖τ‖)/‖τ‖
    let ks = -s * dnorm / nt;
    let nabla_k = a.jet.nabla_k();
    let d = k.len();
    Ok((0..d)
        .map(|b| {
            let acc: f64 = (0..d).map(|c| k[c] * nabla_k[(c, b)]).sum();
            (s * s * acc + s * ks * k[b]).abs()
        })
        .fold(0.0, f64::max))
}

/// An endomorphism of the screen in an orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistEndomorphism {
    pub f: DMatrix<f64>,
}

impl TwistEndomorphism {
    /// `max |F + Fᵀ|`.
    pub fn skew_residual(&self) -> f64 {
        (&self.f + self.f.transpose()).amax()
    }

    pub fn commutator(&self, other: &TwistEndomorphism) -> DMatrix<f64> {
        &self.f * &other.f - &other.f * &self.f
    }
}

/// `F^i_j = τ_ij` with indices moved by `δ`.
pub fn twist_endomorphism(tau: &DMatrix<f64>) -> TwistEndomorphism {
    TwistEndomorphism { f: tau.clone() }
}

/// `J^i_j = ε_ji` on a two-dimensional screen.
pub fn canonical_j(eps: &ScreenVolume) -> Result<TwistEndomorphism> {
    if eps.n != 2 {
        return Err(Error::DimensionMismatch {
            what: "screen for the complex structure",
            expected: 2,
            found: eps.n,
        });
    }
    Ok(TwistEndomorphism {
        f: DMatrix::from_fn(2, 2, |i, j| eps.sign() * permutation_sign(&[j, i])),
    })
}

/// `|g([k, m], k)|` and `|g([k, m], m)|` for `m = e_1 − i e_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Involutivity {
    pub bracket_k: f64,
    pub bracket_m: f64,
}

impl Involutivity {
    pub fn residual(&self) -> f64 {
        self.bracket_k.max(self.bracket_m)
    }
}

fn frame_fields(
    model: &MetricModel,
    spec: &CongruenceSpec,
    x: &[f64],
    pivot: Option<(usize, &[usize])>,
) -> Result<Vec<f64>> {
    let g = model.values(x)?;
    let k = spec.k_values(x)?;
    let f = build_frame_from_matrix(&g, &k)?;
    if let Some((p, axes)) = pivot {
        if f.pivot != p || f.screen_axes != axes {
            return Err(Error::NonSmoothFrame(format!(
                "pivot or screen axes change near {x:?}: ({}, {:?}) vs ({p}, {axes:?})",
                f.pivot, f.screen_axes
            )));
        }
    }
    let mut out = f.k.clone();
    out.extend(&f.e[0]);
    out.extend(&f.e[1]);
    Ok(out)
}

/// Lie brackets of the frame fields by finite differences, in dimension four.
pub fn involutivity_residual(
    model: &MetricModel,
    spec: &CongruenceSpec,
    point: &[f64],
) -> Result<Involutivity> {
    if point.len() != 4 {
        return Err(Error::DimensionMismatch {
            what: "involutivity test",
            expected: 4,
            found: point.len(),
        });
    }
    let g = model.values(point)?;
    let k0 = spec.k_values(point)?;
    let f0 = build_frame_from_matrix(&g, &k0)?;
    let pivot = (f0.pivot, f0.screen_axes.as_slice());
    let d = 4;
    // jac[a][..] = ∂_a (k, e1, e2)
    let jac: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            fd::partial_vec(
                |x: &[f64]| frame_fields(model, spec, x, Some(pivot)),
                point,
                a,
            )
        })
        .collect::<Result<_>>()?;
    let part = |field: usize, a: usize, b: usize| jac[a][field * d + b];
    let bracket = |field: usize| -> Vec<f64> {
        let v = &f0.e[field - 1];
        (0..d)
            .map(|b| {
                (0..d)
                    .map(|a| f0.k[a] * part(field, a, b) - v[a] * part(0, a, b))
                    .sum()
            })
            .collect()
    };
    let b1 = bracket(1);
    let b2 = bracket(2);
    let (e1, e2, k) = (&f0.e[0], &f0.e[1], &f0.k);
    let gk = (bilinear(&g, &b1, k), -bilinear(&g, &b2, k));
    let gm = (
        bilinear(&g, &b1, e1) - bilinear(&g, &b2, e2),
        -(bilinear(&g, &b1, e2) + bilinear(&g, &b2, e1)),
    );
    Ok(Involutivity {
        bracket_k: (gk.0 * gk.0 + gk.1 * gk.1).sqrt(),
        bracket_m: (gm.0 * gm.0 + gm.1 * gm.1).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::frame::{build_frame_jet, screen_volume};
    use crate::jet::Jet2;
    use crate::optical::{project, PointAnalysis};
    use proptest::prelude::*;

    fn points(name: &str, label: &str) -> Vec<(catalog::CatalogEntry, PointAnalysis)> {
        let e = catalog::get(name).unwrap();
        let spec = e.congruence(label).unwrap().clone();
        e.sample_points
            .iter()
            .map(|p| (e.clone(), analyze(&e.model, &spec, p).unwrap()))
            .collect()
    }

    fn non_shearing() -> Vec<(String, PointAnalysis)> {
        let mut out = Vec::new();
        for e in catalog::catalog() {
            for spec in &e.congruences {
                for p in &e.sample_points {
                    let a = analyze(&e.model, spec, p).unwrap();
                    let f = a.classify(DEFAULT_TOL).unwrap().flags;
                    if f.geodetic && !f.shearing {
                        out.push((format!("{}:{}", e.name, spec.label), a));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn family_defects_vanish_on_non_shearing_entries() {
        let cases = non_shearing();
        assert!(cases.len() > 20);
        for (name, a) in &cases {
            for t in [-2.0, -1.0, 0.0, 0.5, 1.0] {
                let c = connection_family(&a.jet.nk, &a.invariants, &a.frame, t).unwrap();
                let s = a.invariants.scale;
                assert!(
                    c.defect() < 1e-9 * s,
                    "{name} t={t}: {:?}",
                    (c.kappa_defect, c.metricity_defect, c.torsion_defect)
                );
            }
        }
    }

    #[test]
    fn distinguished_torsion_members_on_kerr() {
        for (_, a) in points("kerr4", "kappa") {
            let c2 = connection_family(&a.jet.nk, &a.invariants, &a.frame, -2.0).unwrap();
            assert!(c2.torsion_totally_antisymmetric() < 1e-9);
            let c1 = connection_family(&a.jet.nk, &a.invariants, &a.frame, 1.0).unwrap();
            assert!(c1.torsion_symmetric_part() < 1e-9);
            let cm1 = connection_family(&a.jet.nk, &a.invariants, &a.frame, -1.0).unwrap();
            assert!(cm1.torsion_symmetric_part() > 1e-3);
            let c0 = connection_family(&a.jet.nk, &a.invariants, &a.frame, 0.0).unwrap();
            assert!(c0.torsion_totally_antisymmetric() > 1e-3);
            assert!(c0.torsion_symmetric_part() > 1e-3);
        }
    }

    #[test]
    fn family_rejects_shearing_congruence() {
        for (_, a) in points("black_ring5", "kappa") {
            let r = connection_family(&a.jet.nk, &a.invariants, &a.frame, 0.0);
            assert!(matches!(r, Err(Error::Precondition(_))));
        }
    }

    #[test]
    fn kappa_defect_is_nonzero_for_levi_civita_when_twisting() {
        for (_, a) in points("kerr4", "kappa") {
            let d = a.frame.dim();
            let nk = &a.jet.nk;
            let kap = &a.frame.kappa;
            let mut worst = 0.0f64;
            for x in 0..d {
                for b in 0..d {
                    for c in 0..d {
                        worst = worst.max((nk[(x, b)] * kap[c] - nk[(x, c)] * kap[b]).abs());
                    }
                }
            }
            assert!(worst > 1e-3);
        }
    }

    #[test]
    fn kundt_connection_is_torsion_free_and_symmetrically_metric() {
        for name in [
            "pp_wave",
            "kundt_general",
            "kundt_walker_test",
            "kundt_curved_screen",
            "walker_recurrent",
        ] {
            for (_, a) in points(name, "kappa") {
                let c = kundt_connection(&a.jet.nk, &a.invariants, &a.frame).unwrap();
                assert_eq!(c.torsion.max_abs(), 0.0, "{name}");
                assert!(c.kappa_defect < 1e-9, "{name}: {:e}", c.kappa_defect);
                assert!(c.metricity_defect < 1e-12, "{name}");
                assert!(c.symmetrised_metricity < 1e-12, "{name}");
            }
        }
    }

    #[test]
    fn torsion_vanishes_exactly_when_non_twisting() {
        for (name, a) in non_shearing() {
            let twisting = a.classify(DEFAULT_TOL).unwrap().flags.twisting;
            for t in [-2.0, -1.0, 0.0, 1.0] {
                let c = connection_family(&a.jet.nk, &a.invariants, &a.frame, t).unwrap();
                let m = c.torsion.max_abs();
                if twisting {
                    assert!(m > 1e-3 * a.invariants.scale, "{name} t={t}: {m:e}");
                } else {
                    assert!(m < 1e-9 * a.invariants.scale, "{name} t={t}: {m:e}");
                }
            }
        }
    }

    #[test]
    fn kundt_connection_rejects_expanding() {
        for (_, a) in points("schwarzschild_tangherlini", "kappa") {
            assert!(matches!(
                kundt_connection(&a.jet.nk, &a.invariants, &a.frame),
                Err(Error::Precondition(_))
            ));
        }
    }

    fn check_adaptation(name: &str) {
        for (e, a) in points(name, "kappa") {
            let _ = e;
            let ad = adapt_frame_max_twist(&a.invariants, &a.frame).unwrap();
            let (rl, rk) = max_twist_residuals(&a.jet.nk, &ad.frame);
            let s = a.invariants.scale;
            assert!(rl < 1e-9 * s, "{name}: {rl:e}");
            assert!(rk < 1e-9 * s, "{name}: {rk:e}");
            let again = adapt_frame_max_twist(&project(&a.jet.nk, &ad.frame), &ad.frame).unwrap();
            assert!(
                again.z.iter().all(|z| z.abs() < 1e-9),
                "{name}: {:?}",
                again.z
            );
        }
    }

    #[test]
    fn max_twist_adaptation_kerr() {
        check_adaptation("kerr4");
    }

    #[test]
    fn max_twist_adaptation_taub_nut() {
        check_adaptation("taub_nut");
    }

    #[test]
    fn max_twist_adaptation_myers_perry() {
        check_adaptation("myers_perry");
    }

    #[test]
    fn adapted_frame_unique_up_to_boost() {
        for (_, a) in points("kerr4", "kappa") {
            let ad = adapt_frame_max_twist(&a.invariants, &a.frame).unwrap();
            let boosted = a.frame.boost(0.7);
            let inv_b = project(&a.jet.nk, &boosted);
            let ad_b = adapt_frame_max_twist(&inv_b, &boosted).unwrap();
            let s = 0.7f64.exp();
            for (x, y) in ad.frame.l.iter().zip(&ad_b.frame.l) {
                assert!((x / s - y).abs() < 1e-9);
            }
            let other = a.frame.null_rotation(&[0.3, -0.2]).unwrap();
            let ad_o = adapt_frame_max_twist(&project(&a.jet.nk, &other), &other).unwrap();
            for (x, y) in ad.frame.l.iter().zip(&ad_o.frame.l) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn adaptation_rejects_degenerate_twist() {
        for (_, a) in points("schwarzschild_tangherlini", "kappa") {
            assert!(matches!(
                adapt_frame_max_twist(&a.invariants, &a.frame),
                Err(Error::SingularTwist { .. })
            ));
        }
    }

    #[test]
    fn normalized_twist_square() {
        for name in ["taub_nut", "kerr4", "myers_perry"] {
            for (_, a) in points(name, "kappa") {
                let nt = normalize_twist(&a.invariants);
                if name == "myers_perry" {
                    assert!(matches!(nt, Err(Error::Precondition(_))));
                    continue;
                }
                let nt = nt.unwrap();
                assert_eq!(nt.rank, 1);
                let tau = &a.invariants.tau * nt.s;
                let sq: f64 = tau.iter().map(|x| x * x).sum();
                assert!((sq - 2.0).abs() < 1e-9, "{name}: {sq}");
                assert!((nt.normalized_square - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rescaled_generator_carries_normalized_twist() {
        let e = catalog::get("kerr4").unwrap();
        let spec = e.congruence("kappa").unwrap();
        for p in &e.sample_points {
            let a = analyze(&e.model, spec, p).unwrap();
            let s = normalize_twist(&a.invariants).unwrap().s;
            let scaled = spec.rescaled(
                "scaled",
                std::sync::Arc::new(move |x: &[Jet2]| Jet2::seed_const(s, x.len())),
            );
            let b = analyze(&e.model, &scaled, p).unwrap();
            let sq: f64 = b.invariants.tau.iter().map(|x| x * x).sum();
            assert!((sq - 2.0).abs() < 1e-9, "{sq}");
        }
    }

    #[test]
    fn normalized_generator_is_affine_without_expansion() {
        let e = catalog::get("contact_wave").unwrap();
        let spec = e.congruence("kappa").unwrap();
        for p in &e.sample_points {
            let acc = normalized_acceleration(&e.model, spec, p).unwrap();
            assert!(acc < 1e-6, "{acc:e}");
        }
    }

    #[test]
    fn canonical_j_squares_to_minus_one() {
        for name in ["kerr4", "taub_nut", "pp_wave"] {
            let e = catalog::get(name).unwrap();
            let spec = e.congruence("kappa").unwrap();
            for p in &e.sample_points {
                let a = analyze(&e.model, spec, p).unwrap();
                let g = e.model.values(p).unwrap();
                let j = canonical_j(&screen_volume(&a.frame, &g)).unwrap();
                let sq = &j.f * &j.f + DMatrix::identity(2, 2);
                assert!(sq.amax() < 1e-12);
                assert!(j.skew_residual() < 1e-12);
                let f = twist_endomorphism(&a.invariants.tau);
                assert!(f.skew_residual() < 1e-9);
                assert!(f.commutator(&j).amax() < 1e-9);
            }
        }
    }

    #[test]
    fn canonical_j_needs_two_dimensional_screen() {
        let e = catalog::get("myers_perry").unwrap();
        let spec = e.congruence("kappa").unwrap();
        let p = &e.sample_points[0];
        let a = analyze(&e.model, spec, p).unwrap();
        let g = e.model.values(p).unwrap();
        assert!(canonical_j(&screen_volume(&a.frame, &g)).is_err());
    }

    #[test]
    fn involutivity_follows_shear() {
        for name in [
            "kerr4",
            "taub_nut",
            "schwarzschild_tangherlini",
            "pp_wave",
            "kundt_general",
            "sheared_kundt",
        ] {
            let e = catalog::get(name).unwrap();
            let spec = e.congruence("kappa").unwrap();
            for p in &e.sample_points {
                let a = analyze(&e.model, spec, p).unwrap();
                let shearing = a.classify(DEFAULT_TOL).unwrap().flags.shearing;
                let r = involutivity_residual(&e.model, spec, p).unwrap();
                if shearing {
                    assert!(r.residual() > 1e-3, "{name}: {r:?}");
                } else {
                    assert!(r.residual() < 1e-6, "{name}: {r:?}");
                }
            }
        }
    }

    #[test]
    fn involutivity_needs_four_dimensions() {
        let e = catalog::get("myers_perry").unwrap();
        let spec = e.congruence("kappa").unwrap();
        assert!(matches!(
            involutivity_residual(&e.model, spec, &e.sample_points[0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn jet_frame_matches_finite_differences() {
        for name in ["kerr4", "black_ring5", "kundt_curved_screen"] {
            let e = catalog::get(name).unwrap();
            let spec = e.congruence("kappa").unwrap();
            for p in e.sample_points.iter().take(3) {
                let x = Jet2::seed_point(p).unwrap();
                let g = e.model.components(&x).unwrap();
                let k = spec.k_jets(&x).unwrap();
                let fj = build_frame_jet(&g, &k).unwrap();
                let flat = |f: &SemiNullFrame| {
                    let mut v = f.l.clone();
                    v.extend(f.e.iter().flatten());
                    v
                };
                let jet_flat: Vec<&Jet2> = fj.l.iter().chain(fj.e.iter().flatten()).collect();
                for axis in 0..p.len() {
                    let num = fd::partial_vec(
                        |y: &[f64]| -> Result<Vec<f64>> {
                            let f =
                                build_frame_from_matrix(&e.model.values(y)?, &spec.k_values(y)?)?;
                            Ok(flat(&f))
                        },
                        p,
                        axis,
                    )
                    .unwrap();
                    for (j, n) in jet_flat.iter().zip(&num) {
                        assert!(
                            (j.grad(axis) - n).abs() < 1e-6 * n.abs().max(1.0),
                            "{name} axis {axis}: {} vs {n}",
                            j.grad(axis)
                        );
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn family_defects_vanish_for_any_t(t in -5.0f64..5.0, idx in 0usize..6) {
            let e = catalog::get("kerr4").unwrap();
            let spec = e.congruence("kappa").unwrap();
            let a = analyze(&e.model, spec, &e.sample_points[idx % e.sample_points.len()]).unwrap();
            let c = connection_family(&a.jet.nk, &a.invariants, &a.frame, t).unwrap();
            prop_assert!(c.defect() < 1e-9 * a.invariants.scale);
        }

        #[test]
        fn adaptation_is_independent_of_starting_frame(z1 in -1.0f64..1.0, z2 in -1.0f64..1.0, idx in 0usize..6) {
            let e = catalog::get("taub_nut").unwrap();
            let spec = e.congruence("kappa").unwrap();
            let a = analyze(&e.model, spec, &e.sample_points[idx % e.sample_points.len()]).unwrap();
            let base = adapt_frame_max_twist(&a.invariants, &a.frame).unwrap();
            let other = a.frame.null_rotation(&[z1, z2]).unwrap();
            let ad = adapt_frame_max_twist(&project(&a.jet.nk, &other), &other).unwrap();
            for (x, y) in base.frame.l.iter().zip(&ad.frame.l) {
                prop_assert!((x - y).abs() < 1e-8);
            }
        }
    }
}
