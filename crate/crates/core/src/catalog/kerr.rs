//! Kerr in the chart `(u, r, θ, φ)` adapted to the principal null direction `∂_r`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::metric::jet_zeros;
use crate::optical::Flag;

use super::{
    assemble, basis_vector, expected, param, set_sym, CatalogEntry, CongruenceKind, Params,
};

pub(crate) fn build(name: &str, params: &Params) -> Result<CatalogEntry> {
    let m = param(params, "M");
    let a = param(params, "a");
    if m <= 0.0 || a == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{name}: need M > 0 and a ≠ 0"
        )));
    }
    let parts = move |x: &[Jet2]| {
        let (r, th) = (x[1], x[2]);
        let s2 = th.sin() * th.sin();
        let sigma = r * r + th.cos() * th.cos() * (a * a);
        let f = 1.0 - r * (2.0 * m) / sigma;
        (s2, sigma, f)
    };
    let eval = Arc::new(move |x: &[Jet2]| {
        let (s2, sigma, f) = parts(x);
        // κ = du + a s² dφ, μ = dr + a s² dφ
        let mut kap = vec![Jet2::constant(0.0); 4];
        kap[0] = Jet2::constant(1.0);
        kap[3] = s2 * a;
        let mut mu = vec![Jet2::constant(0.0); 4];
        mu[1] = Jet2::constant(1.0);
        mu[3] = s2 * a;
        let mut g = jet_zeros(4);
        g[2][2] = sigma;
        g[3][3] = sigma * s2;
        for i in 0..4 {
            for j in 0..4 {
                g[i][j] = g[i][j] + kap[i] * mu[j] + mu[i] * kap[j] - f * kap[i] * kap[j];
            }
        }
        for i in 0..4 {
            for j in (i + 1)..4 {
                let s = g[i][j];
                set_sym(&mut g, i, j, s);
            }
        }
        Ok(g)
    });
    // second principal null direction, λ = dr − Δ/(2Σ) (du + a s² dφ)
    let lambda = Arc::new(move |x: &[Jet2]| {
        let (s2, sigma, _) = parts(x);
        let r = x[1];
        let delta = r * r - r * (2.0 * m) + a * a;
        let c = delta / (sigma * 2.0);
        let mut l = vec![Jet2::constant(0.0); 4];
        l[0] = -c;
        l[1] = Jet2::constant(1.0);
        l[3] = -(c * s2 * a);
        Ok(l)
    });
    let guard = Arc::new(|p: &[f64]| {
        if p[2].sin() <= 0.05 {
            Err("sin θ must exceed 0.05".to_string())
        } else if p[2].cos().abs() <= 0.15 {
            Err("the twist vanishes on the equator; need |cos θ| > 0.15".to_string())
        } else {
            Ok(())
        }
    });
    let flags = [
        (Flag::Geodetic, true),
        (Flag::Expanding, true),
        (Flag::Twisting, true),
        (Flag::Shearing, false),
        (Flag::MaximallyTwisting, true),
        (Flag::Kundt, false),
        (Flag::RobinsonTrautman, false),
    ];
    let mut kflags = flags.to_vec();
    kflags.push((Flag::Affine, true));
    assemble(
        name,
        "Kerr, Σ(dθ² + s² dφ²) + 2(du + a s² dφ)(dr + a s² dφ) − f (du + a s² dφ)²",
        params,
        4,
        eval,
        guard,
        vec![
            ("kappa", CongruenceKind::Vector(basis_vector(4, 1))),
            ("lambda", CongruenceKind::OneForm(lambda)),
        ],
        vec![
            expected("kappa", &kflags, Some(1)),
            expected("lambda", &flags, Some(1)),
        ],
        vec![(-1.0, 1.0), (2.2, 6.0), (0.4, 2.7), (0.0, 6.0)],
    )
}
