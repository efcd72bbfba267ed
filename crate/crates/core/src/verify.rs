//! Verification suites: each check compares a computed residual against a
//! bound and reports the outcome as a row.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adapted::{
    adapt_frame_max_twist, canonical_j, connection_family, involutivity_residual, kundt_connection,
    max_twist_residuals, normalize_twist,
};
use crate::catalog::{self, CatalogEntry};
use crate::conformal::{
    equivalent_metric, expansion_shift_check, integrability_obstruction, rescale,
    walker_obstruction, ConformalFactor, OpticalPerturbation,
};
use crate::curvature::{christoffel, curvature};
use crate::error::{Error, Result};
use crate::fd;
use crate::frame::{build_frame_from_matrix, screen_volume};
use crate::metric::{eval_metric, CongruenceSpec, MetricModel};
use crate::optical::{
    analyze, boost_covariance, null_rotation_covariance, project, reconstruction_residual,
    ClassReport, Flag, Flags, PointAnalysis, DEFAULT_TOL,
};
use crate::tensor::bilinear;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Frames,
    Covariance,
    Connections,
    Conformal,
    Catalog,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Frames,
        Suite::Covariance,
        Suite::Connections,
        Suite::Conformal,
        Suite::Catalog,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Frames => "frames",
            Suite::Covariance => "covariance",
            Suite::Connections => "connections",
            Suite::Conformal => "conformal",
            Suite::Catalog => "catalog",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite `{s}`")))
    }
}

/// Whether a residual must stay below or exceed its bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub residual: f64,
    pub bound: Bound,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn below(suite: Suite, name: impl Into<String>, residual: f64, tol: f64) -> Self {
        Check {
            suite,
            name: name.into(),
            residual,
            bound: Bound::Below,
            tol,
            pass: residual < tol,
            note: None,
        }
    }

    fn above(suite: Suite, name: impl Into<String>, residual: f64, tol: f64) -> Self {
        Check {
            suite,
            name: name.into(),
            residual,
            bound: Bound::Above,
            tol,
            pass: residual > tol,
            note: None,
        }
    }

    fn boolean(suite: Suite, name: impl Into<String>, ok: bool, note: Option<String>) -> Self {
        Check {
            suite,
            name: name.into(),
            residual: if ok { 0.0 } else { 1.0 },
            bound: Bound::Below,
            tol: 0.5,
            pass: ok,
            note,
        }
    }

    fn failed(suite: Suite, name: impl Into<String>, err: &Error) -> Self {
        Check {
            suite,
            name: name.into(),
            residual: f64::NAN,
            bound: Bound::Below,
            tol: 0.0,
            pass: false,
            note: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random points per entry for the sampled checks.
    pub points: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 7,
            points: 10,
        }
    }
}

/// Runs one suite.
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Vec<Check> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(opts.seed ^ (suite as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let entries = catalog::catalog();
    match suite {
        Suite::Frames => frames(&entries, opts, &mut rng),
        Suite::Covariance => covariance(&entries, &mut rng),
        Suite::Connections => connections(&entries),
        Suite::Conformal => conformal(&entries, &mut rng),
        Suite::Catalog => catalog_rows(&entries, opts, &mut rng),
    }
}

pub fn run_all(opts: &VerifyOptions) -> Vec<Check> {
    Suite::ALL
        .into_iter()
        .flat_map(|s| run_suite(s, opts))
        .collect()
}

/// Draws an admissible point of an entry.
pub fn random_point(entry: &CatalogEntry, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let d = entry.model.dim;
    entry.admissible_point(|| (0..d).map(|_| rng.random::<f64>()).collect())
}

fn record(out: &mut Vec<Check>, suite: Suite, name: String, r: Result<Check>) {
    match r {
        Ok(c) => out.push(c),
        Err(e) => out.push(Check::failed(suite, name, &e)),
    }
}

fn max_over<T>(
    items: impl IntoIterator<Item = T>,
    mut f: impl FnMut(T) -> Result<f64>,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for it in items {
        let v = f(it)?;
        if v.is_nan() {
            return Err(Error::NonFinite("verification residual".into()));
        }
        worst = worst.max(v);
    }
    Ok(worst)
}

fn frames(entries: &[CatalogEntry], opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Vec<Check> {
    let s = Suite::Frames;
    let mut out = Vec::new();
    for e in entries {
        let pts: Result<Vec<Vec<f64>>> = (0..opts.points).map(|_| random_point(e, rng)).collect();
        for spec in &e.congruences {
            let name = format!("{}:{}", e.name, spec.label);
            let pts = match &pts {
                Ok(p) => p,
                Err(err) => {
                    out.push(Check::failed(s, format!("{name} semi-null relations"), err));
                    continue;
                }
            };
            let r = max_over(pts, |p| {
                let g = e.model.values(p)?;
                let f = build_frame_from_matrix(&g, &spec.k_values(p)?)?;
                Ok(f.residual(&g)
                    .max(f.dual_residual(&g))
                    .max(f.reconstruction_residual(&g)))
            });
            record(
                &mut out,
                s,
                format!("{name} semi-null relations"),
                r.map(|v| Check::below(s, format!("{name} semi-null relations"), v, 1e-10)),
            );
            let r = max_over(pts, |p| {
                let a = analyze(&e.model, spec, p)?;
                Ok(reconstruction_residual(&a.jet.nk, &a.frame) / a.invariants.scale)
            });
            record(
                &mut out,
                s,
                format!("{name} reconstruction"),
                r.map(|v| Check::below(s, format!("{name} reconstruction"), v, 1e-10)),
            );
        }
    }
    out
}

fn random_z(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn covariance(entries: &[CatalogEntry], rng: &mut ChaCha8Rng) -> Vec<Check> {
    let s = Suite::Covariance;
    let mut out = Vec::new();
    for e in entries {
        for spec in &e.congruences {
            let name = format!("{}:{}", e.name, spec.label);
            let zs: Vec<Vec<f64>> = (0..20).map(|_| random_z(rng, e.model.dim - 2)).collect();
            let phis: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = max_over(&e.sample_points, |p| {
                let a = analyze(&e.model, spec, p)?;
                max_over(&zs, |z| {
                    let pred = null_rotation_covariance(&a.invariants, z)?;
                    let got = project(&a.jet.nk, &a.frame.null_rotation(z)?);
                    Ok(pred.max_difference(&got) / a.invariants.scale)
                })
            });
            let label = format!("{name} null rotation");
            record(
                &mut out,
                s,
                label.clone(),
                r.map(|v| Check::below(s, label, v, 1e-8)),
            );
            let r = max_over(&e.sample_points, |p| {
                let a = analyze(&e.model, spec, p)?;
                max_over(&phis, |&phi| {
                    let pred = boost_covariance(&a.invariants, phi);
                    let got = project(&(&a.jet.nk * phi.exp()), &a.frame.boost(phi));
                    Ok(pred.max_difference(&got) / a.invariants.scale)
                })
            });
            let label = format!("{name} boost");
            record(
                &mut out,
                s,
                label.clone(),
                r.map(|v| Check::below(s, label, v, 1e-9)),
            );
        }
    }
    out
}

fn analyses(e: &CatalogEntry, spec: &CongruenceSpec) -> Result<Vec<(PointAnalysis, ClassReport)>> {
    e.sample_points
        .iter()
        .map(|p| {
            let a = analyze(&e.model, spec, p)?;
            let r = a.classify(DEFAULT_TOL)?;
            Ok((a, r))
        })
        .collect()
}

fn torsion_parts(
    e: &CatalogEntry,
    t: f64,
    part: fn(&crate::adapted::ConnectionMod) -> f64,
) -> Result<f64> {
    let spec = e.congruence("kappa")?;
    max_over(analyses(e, spec)?, |(a, _)| {
        Ok(part(&connection_family(
            &a.jet.nk,
            &a.invariants,
            &a.frame,
            t,
        )?))
    })
}

fn connections(entries: &[CatalogEntry]) -> Vec<Check> {
    let s = Suite::Connections;
    let mut out = Vec::new();
    for e in entries {
        for spec in &e.congruences {
            let name = format!("{}:{}", e.name, spec.label);
            let rows = match analyses(e, spec) {
                Ok(r) => r,
                Err(err) => {
                    out.push(Check::failed(s, format!("{name} analysis"), &err));
                    continue;
                }
            };
            let eligible: Vec<_> = rows
                .iter()
                .filter(|(_, r)| r.flags.geodetic && !r.flags.shearing)
                .collect();
            if eligible.is_empty() {
                continue;
            }
            for t in [-2.0, -1.0, 0.0, 1.0] {
                let label = format!("{name} defects t={t}");
                let r = max_over(&eligible, |(a, _)| {
                    let c = connection_family(&a.jet.nk, &a.invariants, &a.frame, t)?;
                    Ok(c.defect() / a.invariants.scale)
                });
                record(
                    &mut out,
                    s,
                    label.clone(),
                    r.map(|v| Check::below(s, label, v, 1e-9)),
                );
            }
            let label = format!("{name} torsion iff twisting");
            let r = max_over(&eligible, |(a, rep)| {
                let mut ok = true;
                for t in [-2.0, -1.0, 0.0, 1.0] {
                    let m = connection_family(&a.jet.nk, &a.invariants, &a.frame, t)?
                        .torsion
                        .max_abs()
                        / a.invariants.scale;
                    ok &= if rep.flags.twisting {
                        m > 1e-4
                    } else {
                        m < 1e-9
                    };
                }
                Ok(if ok { 0.0 } else { 1.0 })
            });
            record(
                &mut out,
                s,
                label.clone(),
                r.map(|v| Check::boolean(s, label, v == 0.0, None)),
            );
            if rows.iter().all(|(_, r)| r.flags.kundt) {
                let label = format!("{name} kundt connection");
                let r = max_over(&rows, |(a, _)| {
                    let c = kundt_connection(&a.jet.nk, &a.invariants, &a.frame)?;
                    Ok(c.torsion
                        .max_abs()
                        .max(c.defect())
                        .max(c.symmetrised_metricity))
                });
                record(
                    &mut out,
                    s,
                    label.clone(),
                    r.map(|v| Check::below(s, label, v, 1e-9)),
                );
            }
        }
    }
    if let Some(kerr) = entries.iter().find(|e| e.name == "kerr4") {
        let rows = [
            (
                "kerr4 T[abc] at t=-2",
                -2.0,
                crate::adapted::ConnectionMod::torsion_totally_antisymmetric as fn(&_) -> f64,
            ),
            (
                "kerr4 T_a(bc) at t=-1",
                -1.0,
                crate::adapted::ConnectionMod::torsion_symmetric_part,
            ),
            (
                "kerr4 T_a(bc) at t=1",
                1.0,
                crate::adapted::ConnectionMod::torsion_symmetric_part,
            ),
        ];
        for (label, t, part) in rows {
            record(
                &mut out,
                s,
                label.into(),
                torsion_parts(kerr, t, part).map(|v| Check::below(s, label, v, 1e-9)),
            );
        }
    }
    for name in ["kerr4", "taub_nut", "myers_perry"] {
        let Some(e) = entries.iter().find(|e| e.name == name) else {
            continue;
        };
        let label = format!("{name} max-twist adaptation");
        let r = e.congruence("kappa").and_then(|spec| {
            max_over(analyses(e, spec)?, |(a, _)| {
                let ad = adapt_frame_max_twist(&a.invariants, &a.frame)?;
                let (rl, rk) = max_twist_residuals(&a.jet.nk, &ad.frame);
                Ok(rl.max(rk))
            })
        });
        record(
            &mut out,
            s,
            label.clone(),
            r.map(|v| Check::below(s, label, v, 1e-9)),
        );
    }
    for name in ["kerr4", "taub_nut"] {
        let Some(e) = entries.iter().find(|e| e.name == name) else {
            continue;
        };
        let label = format!("{name} normalised twist");
        let r = e.congruence("kappa").and_then(|spec| {
            max_over(analyses(e, spec)?, |(a, _)| {
                let nt = normalize_twist(&a.invariants)?;
                let sq: f64 = a.invariants.tau.iter().map(|x| (x * nt.s).powi(2)).sum();
                Ok((sq - 2.0 * nt.rank as f64).abs())
            })
        });
        record(
            &mut out,
            s,
            label.clone(),
            r.map(|v| Check::below(s, label, v, 1e-8)),
        );
    }
    for (name, expect_shear) in [("kerr4", false), ("sheared_kundt", true)] {
        let Some(e) = entries.iter().find(|e| e.name == name) else {
            continue;
        };
        let label = format!("{name} involutivity");
        let r = e.congruence("kappa").and_then(|spec| {
            let vals: Result<Vec<f64>> = e
                .sample_points
                .iter()
                .map(|p| Ok(involutivity_residual(&e.model, spec, p)?.residual()))
                .collect();
            let vals = vals?;
            Ok(if expect_shear {
                Check::above(
                    s,
                    label.clone(),
                    vals.iter().copied().fold(f64::INFINITY, f64::min),
                    1e-3,
                )
            } else {
                Check::below(
                    s,
                    label.clone(),
                    vals.iter().copied().fold(0.0, f64::max),
                    1e-6,
                )
            })
        });
        record(&mut out, s, label, r);
    }
    let four: Vec<&CatalogEntry> = entries.iter().filter(|e| e.model.dim == 4).collect();
    let label = "complex structure J^2 = -1".to_string();
    let r = max_over(&four, |e| {
        let spec = &e.congruences[0];
        max_over(&e.sample_points, |p| {
            let a = analyze(&e.model, spec, p)?;
            let g = e.model.values(p)?;
            let j = canonical_j(&screen_volume(&a.frame, &g))?;
            Ok((&j.f * &j.f + DMatrix::identity(2, 2)).amax())
        })
    });
    record(
        &mut out,
        s,
        label.clone(),
        r.map(|v| Check::below(s, label, v, 1e-15)),
    );
    let label = "involutivity agrees with shear".to_string();
    let r = max_over(&four, |e| {
        max_over(&e.congruences, |spec| {
            max_over(&e.sample_points, |p| {
                let rep = analyze(&e.model, spec, p)?.classify(DEFAULT_TOL)?;
                let inv = involutivity_residual(&e.model, spec, p)?.residual();
                let agree = if rep.flags.shearing {
                    inv > 1e-3
                } else {
                    inv < 1e-6
                };
                Ok(if agree { 0.0 } else { 1.0 })
            })
        })
    });
    record(
        &mut out,
        s,
        label.clone(),
        r.map(|v| Check::boolean(s, label, v == 0.0, None)),
    );
    out
}

/// A random quadratic factor with small coefficients.
pub fn random_factor(rng: &mut impl Rng, dim: usize) -> ConformalFactor {
    let b = (0..dim).map(|_| rng.random_range(-0.1..0.1)).collect();
    let mut a = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in i..dim {
            let v = rng.random_range(-0.01..0.01);
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    ConformalFactor::quadratic(rng.random_range(-0.2..0.2), b, a)
}

/// A random `(φ, α)` with small coefficients.
pub fn random_perturbation(rng: &mut impl Rng, dim: usize) -> OpticalPerturbation {
    let phi = random_factor(rng, dim);
    let c = (0..dim).map(|_| rng.random_range(-0.2..0.2)).collect();
    let b = (0..dim)
        .map(|_| (0..dim).map(|_| rng.random_range(-0.02..0.02)).collect())
        .collect();
    OpticalPerturbation::polynomial(phi, c, b)
}

/// Redraws until `|1 + α(k)| ≥ 1/2` for every congruence of `entry` at `points`.
pub fn nondegenerate_perturbation(
    rng: &mut impl Rng,
    entry: &CatalogEntry,
    points: &[Vec<f64>],
) -> OpticalPerturbation {
    loop {
        let pert = random_perturbation(rng, entry.model.dim);
        let ok = entry.congruences.iter().all(|spec| {
            points
                .iter()
                .all(|p| pert.nondegeneracy(spec, p).is_ok_and(|s| s.abs() >= 0.5))
        });
        if ok {
            return pert;
        }
    }
}

fn core_flags(f: &Flags) -> (bool, bool, bool) {
    (f.geodetic, f.twisting, f.shearing)
}

fn flags_at(model: &MetricModel, spec: &CongruenceSpec, p: &[f64]) -> Result<(bool, bool, bool)> {
    Ok(core_flags(
        &analyze(model, spec, p)?.classify(DEFAULT_TOL)?.flags,
    ))
}

fn conformal(entries: &[CatalogEntry], rng: &mut ChaCha8Rng) -> Vec<Check> {
    let s = Suite::Conformal;
    let mut out = Vec::new();
    for e in entries {
        let d = e.model.dim;
        let factors: Vec<ConformalFactor> = (0..20).map(|_| random_factor(rng, d)).collect();
        let pts = &e.sample_points[..2.min(e.sample_points.len())];
        let perts: Vec<OpticalPerturbation> = (0..20)
            .map(|_| nondegenerate_perturbation(rng, e, pts))
            .collect();
        for spec in &e.congruences {
            let name = format!("{}:{}", e.name, spec.label);
            let pts = &e.sample_points[..2.min(e.sample_points.len())];
            let label = format!("{name} conformal flag invariance");
            let r = max_over(&factors, |u| {
                let hat = rescale(&e.model, u)?;
                let hs = spec.attached_to(&hat);
                max_over(pts, |p| {
                    Ok(if flags_at(&hat, &hs, p)? == flags_at(&e.model, spec, p)? {
                        0.0
                    } else {
                        1.0
                    })
                })
            });
            record(
                &mut out,
                s,
                label.clone(),
                r.map(|v| Check::boolean(s, label, v == 0.0, None)),
            );
            let label = format!("{name} generalised flag invariance");
            let r = max_over(&perts, |pert| {
                let m = equivalent_metric(&e.model, spec, pert)?;
                let ms = spec.attached_to(&m);
                max_over(pts, |p| {
                    if !m.is_admissible(p) {
                        return Ok(0.0);
                    }
                    Ok(if flags_at(&m, &ms, p)? == flags_at(&e.model, spec, p)? {
                        0.0
                    } else {
                        1.0
                    })
                })
            });
            record(
                &mut out,
                s,
                label.clone(),
                r.map(|v| Check::boolean(s, label, v == 0.0, None)),
            );
            let affine = pts.iter().all(|p| {
                analyze(&e.model, spec, p)
                    .and_then(|a| a.classify(DEFAULT_TOL))
                    .map(|r| r.flags.geodetic && r.flags.affine)
                    .unwrap_or(false)
            });
            if affine {
                let label = format!("{name} expansion shift");
                let r = max_over(&factors, |u| {
                    max_over(pts, |p| {
                        Ok(expansion_shift_check(&e.model, spec, p, u)?.residual)
                    })
                });
                record(
                    &mut out,
                    s,
                    label.clone(),
                    r.map(|v| Check::below(s, label, v, 1e-8)),
                );
            }
        }
    }
    for e in entries {
        let Ok(spec) = e.congruence("kappa") else {
            continue;
        };
        let Ok(rows) = analyses(e, spec) else {
            continue;
        };
        if !rows.iter().all(|(_, r)| r.flags.recurrent_walker) {
            continue;
        }
        let label = format!("{} walker obstruction", e.name);
        let r = max_over(rows.iter().zip(&e.sample_points), |((a, rep), p)| {
            let curv = curvature(&e.model, p)?;
            Ok(walker_obstruction(&curv, &a.frame, rep)?.max_abs())
        });
        record(
            &mut out,
            s,
            label.clone(),
            r.map(|v| Check::below(s, label, v, 1e-9)),
        );
    }
    for (name, flat) in [("kundt_flat_screen", true), ("kundt_curved_screen", false)] {
        let Some(e) = entries.iter().find(|e| e.name == name) else {
            continue;
        };
        let label = format!("{name} integrability obstruction");
        let r = e.congruence("kappa").and_then(|spec| {
            let vals: Result<Vec<(f64, f64)>> = e
                .sample_points
                .iter()
                .map(|p| {
                    let a = analyze(&e.model, spec, p)?;
                    let o = integrability_obstruction(&curvature(&e.model, p)?, &a.frame)?;
                    Ok((o.max_abs(), o.third.unwrap_or(0.0)))
                })
                .collect();
            let vals = vals?;
            Ok(if flat {
                Check::below(
                    s,
                    label.clone(),
                    vals.iter().map(|v| v.0).fold(0.0, f64::max),
                    1e-9,
                )
            } else {
                Check::above(
                    s,
                    label.clone(),
                    vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min),
                    1e-3,
                )
            })
        });
        record(&mut out, s, label, r);
    }
    out
}

/// Magnitude behind a flag and whether `expected` makes it a zero claim.
fn flag_magnitude(rep: &ClassReport, flag: Flag, expected: bool) -> Option<(f64, bool)> {
    let m = &rep.magnitudes;
    let v = match flag {
        Flag::Geodetic => (m.gamma, expected),
        Flag::Affine => (m.acceleration, expected),
        Flag::Expanding => (m.rho, !expected),
        Flag::Twisting => (m.tau, !expected),
        Flag::Shearing => (m.sigma, !expected),
        Flag::RecurrentWalker => (m.recurrence, expected),
        Flag::Parallel => (m.nabla_kappa, expected),
        Flag::MaximallyTwisting => {
            let smallest = rep.twist_singular_values.last().copied().unwrap_or(0.0);
            (smallest, !expected)
        }
        Flag::Kundt | Flag::RobinsonTrautman => return None,
    };
    Some(v)
}

/// Checks expected flags with the zero and nonzero margins.
pub fn classification_margin(rep: &ClassReport, flag: Flag, expected: bool) -> bool {
    if rep.flags.get(flag) != Some(expected) {
        return false;
    }
    match flag_magnitude(rep, flag, expected) {
        Some((v, true)) => v < 1e-8 * rep.scale,
        Some((v, false)) => v > 1e-4 * rep.scale,
        None => true,
    }
}

/// Largest relative discrepancy between jet and finite-difference
/// Christoffel symbols and their derivatives.
pub fn christoffel_fd_discrepancy(model: &MetricModel, p: &[f64]) -> Result<f64> {
    let d = model.dim;
    let chr = christoffel(&eval_metric(model, p)?);
    let gamma_fd = |x: &[f64]| -> Result<Vec<f64>> {
        let g = model.values(x)?;
        let ginv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NonFinite("metric inverse".into()))?;
        let dg: Vec<Vec<f64>> = (0..d)
            .map(|c| {
                fd::partial_vec(
                    |y: &[f64]| Ok::<_, Error>(model.values(y)?.iter().copied().collect()),
                    x,
                    c,
                )
            })
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(d * d * d);
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let s: f64 = (0..d)
                        .map(|e| {
                            ginv[(a, e)]
                                * 0.5
                                * (dg[b][e + d * c] + dg[c][e + d * b] - dg[e][b + d * c])
                        })
                        .sum();
                    out.push(s);
                }
            }
        }
        Ok(out)
    };
    let base = gamma_fd(p)?;
    let scale = base.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut worst = 0.0f64;
    for (i, v) in base.iter().enumerate() {
        let (a, b, c) = (i / (d * d), (i / d) % d, i % d);
        worst = worst.max((v - chr.gamma[[a, b, c]]).abs() / scale);
    }
    Ok(worst)
}

/// Largest Ricci component in an orthonormal frame.
pub fn orthonormal_ricci(model: &MetricModel, spec: &CongruenceSpec, p: &[f64]) -> Result<f64> {
    let curv = curvature(model, p)?;
    let g = model.values(p)?;
    let f = build_frame_from_matrix(&g, &spec.k_values(p)?)?;
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis: Vec<Vec<f64>> = vec![
        f.k.iter().zip(&f.l).map(|(k, l)| r2 * (k - l)).collect(),
        f.k.iter().zip(&f.l).map(|(k, l)| r2 * (k + l)).collect(),
    ];
    basis.extend(f.e.iter().cloned());
    let mut worst = 0.0f64;
    for u in &basis {
        for v in &basis {
            worst = worst.max(bilinear(&curv.ricci, u, v).abs());
        }
    }
    Ok(worst)
}

fn catalog_rows(
    entries: &[CatalogEntry],
    opts: &VerifyOptions,
    rng: &mut ChaCha8Rng,
) -> Vec<Check> {
    let s = Suite::Catalog;
    let mut out = Vec::new();
    for e in entries {
        for ex in &e.expected {
            let label = format!("{}:{} classification", e.name, ex.congruence);
            let r = e.congruence(&ex.congruence).and_then(|spec| {
                let mut bad = Vec::new();
                if e.sample_points.len() < 5 {
                    bad.push(format!("{} sample points", e.sample_points.len()));
                }
                for (i, (_, rep)) in analyses(e, spec)?.iter().enumerate() {
                    for &(flag, want) in &ex.flags {
                        if !classification_margin(rep, flag, want) {
                            bad.push(format!("point {i}: {}", flag.name()));
                        }
                    }
                    if let Some(rank) = ex.twist_rank {
                        if rep.twist_rank != rank {
                            bad.push(format!("point {i}: twist rank {}", rep.twist_rank));
                        }
                    }
                }
                let note = (!bad.is_empty()).then(|| bad.join(", "));
                Ok(Check::boolean(s, label.clone(), bad.is_empty(), note))
            });
            record(&mut out, s, label, r);
        }
        let label = format!("{} christoffel oracle", e.name);
        let r = max_over(0..opts.points, |_| {
            let p = random_point(e, rng)?;
            christoffel_fd_discrepancy(&e.model, &p)
        });
        record(
            &mut out,
            s,
            label.clone(),
            r.map(|v| Check::below(s, label, v, 1e-6)),
        );
    }
    for name in [
        "schwarzschild_tangherlini",
        "myers_perry",
        "kerr4",
        "taub_nut",
        "black_ring5",
    ] {
        let Some(e) = entries.iter().find(|e| e.name == name) else {
            continue;
        };
        let label = format!("{name} vacuum");
        let r = max_over(&e.sample_points, |p| {
            orthonormal_ricci(&e.model, &e.congruences[0], p)
        });
        record(
            &mut out,
            s,
            label.clone(),
            r.map(|v| Check::below(s, label, v, 1e-6)),
        );
    }
    out
}

/// `(passed, total)` over a set of checks.
pub fn summary(checks: &[Check]) -> (usize, usize) {
    (checks.iter().filter(|c| c.pass).count(), checks.len())
}
