//! The five-dimensional black ring in the chart `(t, x, y, φ, ψ)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::metric::jet_zeros;
use crate::optical::Flag;

use super::{assemble, expected, param, set_sym, CatalogEntry, CongruenceKind, Params};

pub(crate) fn build(name: &str, params: &Params) -> Result<CatalogEntry> {
    let lam = param(params, "lambda");
    let nu = param(params, "nu");
    let big_r = param(params, "R");
    if !(0.0 < nu && nu < lam && lam < 1.0) || big_r <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{name}: need 0 < nu < lambda < 1 and R > 0"
        )));
    }
    let ff = move |xi: Jet2| 1.0 - xi * lam;
    let gg = move |xi: Jet2| (1.0 - xi * xi) * (1.0 - xi * nu);
    let c = big_r * (lam * nu).sqrt();
    let eval = Arc::new(move |p: &[Jet2]| {
        let (x, y) = (p[1], p[2]);
        let (fx, fy, gx, gy) = (ff(x), ff(y), gg(x), gg(y));
        let w = (x - y).powi(-2) * (big_r * big_r);
        // −F(x)/F(y) (dt + c (1 + y) dψ)²
        let mut s = vec![Jet2::constant(0.0); 5];
        s[0] = Jet2::constant(1.0);
        s[4] = (y + 1.0) * c;
        let a = -(fx / fy);
        let mut g = jet_zeros(5);
        for i in 0..5 {
            for j in i..5 {
                set_sym(&mut g, i, j, a * s[i] * s[j]);
            }
        }
        g[4][4] = g[4][4] - w * fx * gy;
        g[2][2] = -(w * fx * fy / gy);
        g[1][1] = w * fy * fy / gx;
        g[3][3] = w * fy * fy * gx / fx;
        Ok(g)
    });
    let form = move |sign: f64| {
        Arc::new(move |p: &[Jet2]| {
            let (x, y) = (p[1], p[2]);
            let pref = (-(ff(x) * gg(y))).sqrt() * big_r / ((x - y) * std::f64::consts::SQRT_2);
            let mut k = vec![Jet2::constant(0.0); 5];
            k[2] = pref * (-ff(y)).sqrt() / gg(y) * sign;
            k[4] = pref;
            Ok(k)
        })
    };
    let (ylo, yhi) = (1.0 / lam, 1.0 / nu);
    let guard = Arc::new(move |p: &[f64]| {
        let (x, y) = (p[1], p[2]);
        if x.abs() >= 0.95 {
            return Err("need |x| < 0.95".into());
        }
        if y <= ylo + 0.05 || y >= yhi - 0.05 {
            return Err(format!("need {} < y < {}", ylo + 0.05, yhi - 0.05));
        }
        if (x - y).abs() <= 0.05 {
            return Err("need |x − y| > 0.05".into());
        }
        Ok(())
    });
    let flags = [
        (Flag::Geodetic, true),
        (Flag::Expanding, true),
        (Flag::Twisting, false),
        (Flag::Shearing, true),
        (Flag::Kundt, false),
        (Flag::RobinsonTrautman, false),
    ];
    assemble(
        name,
        "five-dimensional black ring in the region −1 < x < 1, 1/λ < y < 1/ν",
        params,
        5,
        eval,
        guard,
        vec![
            ("kappa", CongruenceKind::OneForm(form(1.0))),
            ("lambda", CongruenceKind::OneForm(form(-1.0))),
        ],
        vec![
            expected("kappa", &flags, Some(0)),
            expected("lambda", &flags, Some(0)),
        ],
        vec![
            (-1.0, 1.0),
            (-0.9, 0.9),
            (ylo + 0.1, yhi - 0.1),
            (0.0, 6.0),
            (0.0, 6.0),
        ],
    )
}
