//! Taub-NUT over the round 2-sphere with unit NUT parameter.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::metric::jet_zeros;
use crate::optical::Flag;

use super::{assemble, expected, param, set_sym, CatalogEntry, CongruenceKind, Params};

/// `F(r) = (r² − 2 M r − 1) / (r² + 1)`.
pub fn taub_nut_profile(r: f64, m: f64) -> f64 {
    profile(Jet2::constant(r), m).value()
}

fn profile(r: Jet2, m: f64) -> Jet2 {
    (r * r - r * (2.0 * m) - 1.0) / (r * r + 1.0)
}

pub(crate) fn build(name: &str, params: &Params) -> Result<CatalogEntry> {
    let m = param(params, "M");
    let q = param(params, "q");
    if q == 0.0 {
        return Err(Error::InvalidParameter(format!("{name}.q must be nonzero")));
    }
    // σ = dt + q (1 − cos θ) dφ
    let sigma = move |x: &[Jet2]| {
        let mut s = vec![Jet2::constant(0.0); 4];
        s[0] = Jet2::constant(1.0);
        s[3] = (1.0 - x[2].cos()) * q;
        s
    };
    let eval = Arc::new(move |x: &[Jet2]| {
        let (r, th) = (x[1], x[2]);
        let f = profile(r, m);
        let s = sigma(x);
        let w = r * r + 1.0;
        let mut g = jet_zeros(4);
        for i in 0..4 {
            for j in i..4 {
                set_sym(&mut g, i, j, -(f * s[i] * s[j]));
            }
        }
        g[1][1] = f.recip();
        g[2][2] = w;
        g[3][3] = g[3][3] + w * th.sin() * th.sin();
        Ok(g)
    });
    let form = move |sign: f64| {
        Arc::new(move |x: &[Jet2]| {
            let mut k: Vec<Jet2> = sigma(x).into_iter().map(|c| c * sign).collect();
            k[1] = profile(x[1], m).recip();
            Ok(k)
        })
    };
    let guard = Arc::new(move |p: &[f64]| {
        if profile(Jet2::constant(p[1]), m).value() <= 0.05 {
            return Err("F(r) must exceed 0.05".into());
        }
        if p[2].sin() <= 0.05 {
            return Err("sin θ must exceed 0.05".into());
        }
        Ok(())
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
    assemble(
        name,
        "Taub-NUT, −F (dt + q(1 − cos θ) dφ)² + dr²/F + (r² + 1) dΩ²",
        params,
        4,
        eval,
        guard,
        vec![
            ("kappa", CongruenceKind::OneForm(form(1.0))),
            ("lambda", CongruenceKind::OneForm(form(-1.0))),
        ],
        vec![
            expected("kappa", &flags, Some(1)),
            expected("lambda", &flags, Some(1)),
        ],
        vec![(-1.0, 1.0), (3.0, 6.0), (0.4, 2.7), (0.0, 6.0)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_solves_its_ode() {
        let (r0, m) = (2.3, 0.7);
        let r = Jet2::seed_var(r0, 0, 1).unwrap();
        let lhs = (r * r + 1.0) / r * profile(r, m);
        let rhs = (r0 * r0 + 1.0) / (r0 * r0);
        assert!((lhs.grad(0) - rhs).abs() < 1e-10);
        // integration constant −2M
        assert!((lhs.value() - (r0 - 1.0 / r0) + 2.0 * m).abs() < 1e-12);
    }

    #[test]
    fn profile_values() {
        assert_eq!(taub_nut_profile(1.0, 0.0), 0.0);
        assert!((taub_nut_profile(1e4, 1.0) - 1.0).abs() < 1e-3);
    }
}
