//! Six-dimensional Myers-Perry in Kerr-Schild form over `(t, x1, y1, x2, y2, z)`.

use std::sync::Arc;

use crate::conformal::kerr_schild;
use crate::error::{Error, Result};
use crate::jet::{implicit_root, Jet2};
use crate::metric::{jet_zeros, MetricModel, ScalarFn, VectorFn};
use crate::optical::Flag;

use super::{assemble, expected, param, CatalogEntry, CongruenceKind, Params};

/// `Σ (x_α² + y_α²)/(r² + a_α²) + z²/r² − 1` on the spatial coordinates.
pub fn myers_perry_constraint(r: Jet2, x: &[Jet2], a: &[f64; 2]) -> Jet2 {
    let mut s = x[4] * x[4] / (r * r) - 1.0;
    for (i, ai) in a.iter().enumerate() {
        let (xa, ya) = (x[2 * i], x[2 * i + 1]);
        s = s + (xa * xa + ya * ya) / (r * r + ai * ai);
    }
    s
}

/// The radial function at a chart point `(t, x1, y1, x2, y2, z)`.
pub fn myers_perry_radius(p: &[Jet2], a: &[f64; 2]) -> Result<Jet2> {
    let spatial = &p[1..6];
    let r0 = spatial
        .iter()
        .map(|c| c.value() * c.value())
        .sum::<f64>()
        .sqrt()
        .max(1e-3);
    implicit_root(|r, x| myers_perry_constraint(r, x, a), spatial, r0)
}

/// The flat background, Kerr-Schild profile and null 1-form.
pub fn myers_perry_parts(params: &Params) -> Result<(MetricModel, ScalarFn, VectorFn)> {
    let m = param(params, "M");
    let a = [param(params, "a1"), param(params, "a2")];
    if m <= 0.0 || a[0] == 0.0 || a[1] == 0.0 || a[0] == a[1] {
        return Err(Error::InvalidParameter(
            "myers_perry: need M > 0 and distinct nonzero a1, a2".into(),
        ));
    }
    let eta = MetricModel::unguarded(
        "minkowski6",
        6,
        Params::new(),
        Arc::new(|_x: &[Jet2]| {
            let mut g = jet_zeros(6);
            g[0][0] = Jet2::constant(-1.0);
            for (i, row) in g.iter_mut().enumerate().skip(1) {
                row[i] = Jet2::constant(1.0);
            }
            Ok(g)
        }),
    )?;
    let kappa: VectorFn = Arc::new(move |p: &[Jet2]| {
        let r = myers_perry_radius(p, &a)?;
        let mut k = vec![Jet2::constant(0.0); 6];
        k[0] = Jet2::constant(1.0);
        for (i, ai) in a.iter().enumerate() {
            let (xa, ya) = (p[1 + 2 * i], p[2 + 2 * i]);
            let d = r * r + ai * ai;
            k[1 + 2 * i] = (r * xa - ya * *ai) / d;
            k[2 + 2 * i] = (r * ya + xa * *ai) / d;
        }
        k[5] = p[5] / r;
        Ok(k)
    });
    let profile: ScalarFn = Arc::new(move |p: &[Jet2]| {
        let r = myers_perry_radius(p, &a)?;
        let mut big_f = Jet2::constant(1.0);
        let mut prod = Jet2::constant(1.0);
        for (i, ai) in a.iter().enumerate() {
            let (xa, ya) = (p[1 + 2 * i], p[2 + 2 * i]);
            let d = r * r + ai * ai;
            big_f = big_f - (xa * xa + ya * ya) * (ai * ai) / (d * d);
            prod = prod * d;
        }
        Ok(r * m / (big_f * prod))
    });
    Ok((eta, profile, kappa))
}

pub(crate) fn build(name: &str, params: &Params) -> Result<CatalogEntry> {
    let (eta, profile, kappa) = myers_perry_parts(params)?;
    let a = [param(params, "a1"), param(params, "a2")];
    let ks = kerr_schild(&eta, profile, kappa.clone())?;
    let guard = Arc::new(move |p: &[f64]| {
        let jp = Jet2::constants(p);
        let r = myers_perry_radius(&jp, &a)
            .map_err(|e| e.to_string())?
            .value();
        if r < 0.3 {
            return Err("radial function must exceed 0.3".into());
        }
        for (i, ai) in a.iter().enumerate() {
            let mu2 = (p[1 + 2 * i].powi(2) + p[2 + 2 * i].powi(2)) / (r * r + ai * ai);
            if mu2.sqrt() <= 0.05 {
                return Err(format!("μ_{} must exceed 0.05", i + 1));
            }
        }
        if (p[5] / r).abs() <= 0.05 {
            return Err("μ_0 must exceed 0.05".into());
        }
        Ok(())
    });
    let flags = [
        (Flag::Geodetic, true),
        (Flag::Affine, true),
        (Flag::Expanding, true),
        (Flag::Twisting, true),
        (Flag::Shearing, true),
        (Flag::MaximallyTwisting, true),
        (Flag::Kundt, false),
        (Flag::RobinsonTrautman, false),
    ];
    assemble(
        name,
        "six-dimensional Myers-Perry, g = η + f κ², r from the quadric constraint",
        params,
        6,
        ks.eval_fn(),
        guard,
        vec![("kappa", CongruenceKind::OneForm(kappa))],
        vec![expected("kappa", &flags, Some(2))],
        vec![
            (-1.0, 1.0),
            (-2.0, 2.0),
            (-2.0, 2.0),
            (-2.0, 2.0),
            (-2.0, 2.0),
            (0.3, 2.0),
        ],
    )
}
