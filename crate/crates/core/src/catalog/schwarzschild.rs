//! Tangherlini-Schwarzschild in `n + 2` dimensions.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::metric::jet_zeros;
use crate::optical::Flag;

use super::{assemble, expected, param, CatalogEntry, CongruenceKind, Params};

pub(crate) fn build(name: &str, params: &Params) -> Result<CatalogEntry> {
    let n = param(params, "n");
    let c = param(params, "c");
    if n.fract() != 0.0 || !(2.0..=10.0).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "{name}.n must be an integer in 2..=10, got {n}"
        )));
    }
    if c <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{name}.c must be positive, got {c}"
        )));
    }
    let n = n as usize;
    let p = (n - 1) as i32;
    let horizon = c.powf(1.0 / (n - 1) as f64);
    let f = move |r: Jet2| 1.0 - r.powi(p).recip() * c;
    let eval = Arc::new(move |x: &[Jet2]| {
        let r = x[1];
        let fr = f(r);
        let mut g = jet_zeros(n + 2);
        g[0][0] = -fr;
        g[1][1] = fr.recip();
        let mut w = r * r;
        for i in 0..n {
            g[i + 2][i + 2] = w;
            w = w * x[i + 2].sin() * x[i + 2].sin();
        }
        Ok(g)
    });
    let guard = Arc::new(move |pt: &[f64]| {
        if pt[1] <= 1.05 * horizon {
            return Err(format!("r must exceed 1.05 × {horizon}"));
        }
        if pt[2..n + 1].iter().any(|t| t.sin() <= 0.05) {
            return Err("polar angles must keep sin θ above 0.05".into());
        }
        Ok(())
    });
    let kappa = Arc::new(move |x: &[Jet2]| {
        let mut k = vec![Jet2::constant(0.0); n + 2];
        k[0] = Jet2::constant(-1.0);
        k[1] = f(x[1]).recip();
        Ok(k)
    });
    let lambda = Arc::new(move |x: &[Jet2]| {
        let mut k = vec![Jet2::constant(0.0); n + 2];
        k[0] = f(x[1]) * 0.5;
        k[1] = Jet2::constant(0.5);
        Ok(k)
    });
    let rt = [
        (Flag::Geodetic, true),
        (Flag::Expanding, true),
        (Flag::Twisting, false),
        (Flag::Shearing, false),
        (Flag::Kundt, false),
        (Flag::RobinsonTrautman, true),
        (Flag::Parallel, false),
    ];
    let mut rt_affine = rt.to_vec();
    rt_affine.push((Flag::Affine, true));
    let mut bounds = vec![(-1.0, 1.0), (1.3 * horizon, 5.0 * horizon)];
    for i in 0..n {
        bounds.push(if i + 1 < n { (0.4, 2.7) } else { (0.0, 6.0) });
    }
    assemble(
        name,
        "Tangherlini-Schwarzschild, F = 1 − c / r^(n−1), round n-sphere",
        params,
        n + 2,
        eval,
        guard,
        vec![
            ("kappa", CongruenceKind::OneForm(kappa)),
            ("lambda", CongruenceKind::OneForm(lambda)),
        ],
        vec![
            expected("kappa", &rt_affine, Some(0)),
            expected("lambda", &rt, Some(0)),
        ],
        bounds,
    )
}
