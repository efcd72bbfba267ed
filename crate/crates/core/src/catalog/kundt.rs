//! Metrics in the Kundt family `2 du (dv + A_i dx^i + B du) + h_ij dx^i dx^j`
//! with `k = ∂_v`, including the Minkowski, pp-wave and Walker special cases.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::metric::{jet_zeros, JetMatrix};
use crate::optical::Flag;

use super::{
    assemble, basis_vector, expected, no_guard, param, set_sym, CatalogEntry, CongruenceKind,
    ExpectedClass, Params,
};

/// `g_uv = 1`, `g_ui = a_i`, `g_uu = guu`, `g_ij = h_ij` in the chart `(u, v, x^1..x^n)`.
fn kundt_form(a: &[Jet2], guu: Jet2, h: &JetMatrix) -> JetMatrix {
    let n = h.len();
    let mut g = jet_zeros(n + 2);
    set_sym(&mut g, 0, 1, Jet2::constant(1.0));
    g[0][0] = guu;
    for i in 0..n {
        set_sym(&mut g, 0, i + 2, a[i]);
        for j in 0..n {
            g[i + 2][j + 2] = h[i][j];
        }
    }
    g
}

fn flat_screen(n: usize) -> JetMatrix {
    let mut h = jet_zeros(n);
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = Jet2::constant(1.0);
    }
    h
}

fn zero() -> Jet2 {
    Jet2::constant(0.0)
}

fn k_v(dim: usize) -> Vec<(&'static str, CongruenceKind)> {
    vec![("kappa", CongruenceKind::Vector(basis_vector(dim, 1)))]
}

pub(crate) fn parallel_flags() -> Vec<(Flag, bool)> {
    vec![
        (Flag::Geodetic, true),
        (Flag::Affine, true),
        (Flag::Expanding, false),
        (Flag::Twisting, false),
        (Flag::Shearing, false),
        (Flag::Kundt, true),
        (Flag::RobinsonTrautman, false),
        (Flag::RecurrentWalker, true),
        (Flag::Parallel, true),
    ]
}

fn parallel_expectation() -> Vec<ExpectedClass> {
    vec![expected("kappa", &parallel_flags(), Some(0))]
}

fn kundt_box(n: usize) -> Vec<(f64, f64)> {
    let mut b = vec![(-1.5, 1.5), (-1.5, 1.5)];
    b.extend(std::iter::repeat((-1.2, 1.2)).take(n));
    b
}

pub(crate) fn minkowski(name: &str, params: &Params) -> Result<CatalogEntry> {
    let n = param(params, "n");
    if n.fract() != 0.0 || !(1.0..=10.0).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "{name}.n must be an integer in 1..=10, got {n}"
        )));
    }
    let n = n as usize;
    assemble(
        name,
        "flat space in double-null coordinates, k = ∂_v",
        params,
        n + 2,
        Arc::new(move |_x: &[Jet2]| Ok(kundt_form(&vec![zero(); n], zero(), &flat_screen(n)))),
        no_guard(),
        k_v(n + 2),
        parallel_expectation(),
        kundt_box(n),
    )
}

pub(crate) fn pp_wave(name: &str, params: &Params) -> Result<CatalogEntry> {
    let amp = param(params, "amp");
    assemble(
        name,
        "plane-fronted wave with parallel rays, 2 du dv + B(u,x) du² + dx²",
        params,
        4,
        Arc::new(move |x: &[Jet2]| {
            let (u, x1, x2) = (x[0], x[2], x[3]);
            let b = (x1 * x1 - x2 * x2 * 0.5 + u.sin() * x1 * x2) * amp;
            Ok(kundt_form(&[zero(), zero()], b, &flat_screen(2)))
        }),
        no_guard(),
        k_v(4),
        parallel_expectation(),
        kundt_box(2),
    )
}

pub(crate) fn plane_wave(name: &str, params: &Params) -> Result<CatalogEntry> {
    let amp = param(params, "amp");
    assemble(
        name,
        "plane wave, B = x^T Q(u) x",
        params,
        4,
        Arc::new(move |x: &[Jet2]| {
            let (u, x1, x2) = (x[0], x[2], x[3]);
            let q11 = u.sin() * 0.5 + 1.0;
            let q12 = u.cos() * 0.3;
            let q22 = u * 0.2 - 0.7;
            let b = (q11 * x1 * x1 + q12 * x1 * x2 * 2.0 + q22 * x2 * x2) * amp;
            Ok(kundt_form(&[zero(), zero()], b, &flat_screen(2)))
        }),
        no_guard(),
        k_v(4),
        parallel_expectation(),
        kundt_box(2),
    )
}

pub(crate) fn cahen_wallach(name: &str, params: &Params) -> Result<CatalogEntry> {
    let (q11, q12, q22) = (
        param(params, "q11"),
        param(params, "q12"),
        param(params, "q22"),
    );
    if (q11 * q22 - q12 * q12).abs() < 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "{name}: Q must be nondegenerate"
        )));
    }
    assemble(
        name,
        "Cahen-Wallach symmetric space, constant nondegenerate Q",
        params,
        4,
        Arc::new(move |x: &[Jet2]| {
            let (x1, x2) = (x[2], x[3]);
            let b = x1 * x1 * q11 + x1 * x2 * (2.0 * q12) + x2 * x2 * q22;
            Ok(kundt_form(&[zero(), zero()], b, &flat_screen(2)))
        }),
        no_guard(),
        k_v(4),
        parallel_expectation(),
        kundt_box(2),
    )
}

fn walker_screen(x: &[Jet2]) -> JetMatrix {
    let (u, x1, x2) = (x[0], x[2], x[3]);
    let mut h = jet_zeros(2);
    h[0][0] = x2 * x2 * 0.2 + 1.0;
    set_sym(&mut h, 0, 1, x1 * x2 * 0.1);
    h[1][1] = u * u * 0.1 + 1.0;
    h
}

fn walker_parts(x: &[Jet2], amp: f64) -> ([Jet2; 2], Jet2) {
    let (u, x1, x2) = (x[0], x[2], x[3]);
    let a = [u * x2 * (0.4 * amp), x1 * x1 * (-0.2 * amp)];
    let guu = (x1 * x2 + u.cos() * x1 * x1) * amp;
    (a, guu)
}

pub(crate) fn walker_brinkmann(name: &str, params: &Params) -> Result<CatalogEntry> {
    let amp = param(params, "amp");
    assemble(
        name,
        "Walker-Brinkmann form with v-independent A_i, B and screen h(u,x)",
        params,
        4,
        Arc::new(move |x: &[Jet2]| {
            let (a, guu) = walker_parts(x, amp);
            Ok(kundt_form(&a, guu, &walker_screen(x)))
        }),
        no_guard(),
        k_v(4),
        parallel_expectation(),
        kundt_box(2),
    )
}

pub(crate) fn walker_recurrent(name: &str, params: &Params) -> Result<CatalogEntry> {
    let amp = param(params, "amp");
    let mut flags = parallel_flags();
    flags.retain(|(f, _)| *f != Flag::Parallel);
    flags.push((Flag::Parallel, false));
    assemble(
        name,
        "Walker form with v-dependent B: recurrent, not parallel",
        params,
        4,
        Arc::new(move |x: &[Jet2]| {
            let (a, guu) = walker_parts(x, amp);
            let (v, x1) = (x[1], x[2]);
            let guu = guu + v * (x1 * x1 * 0.5 + 1.0) * (2.0 * amp);
            Ok(kundt_form(&a, guu, &walker_screen(x)))
        }),
        no_guard(),
        k_v(4),
        vec![expected("kappa", &flags, Some(0))],
        kundt_box(2),
    )
}

pub(crate) fn kundt_flags() -> Vec<(Flag, bool)> {
    vec![
        (Flag::Geodetic, true),
        (Flag::Affine, true),
        (Flag::Expanding, false),
        (Flag::Twisting, false),
        (Flag::Shearing, false),
        (Flag::Kundt, true),
        (Flag::RobinsonTrautman, false),
        (Flag::RecurrentWalker, false),
        (Flag::Parallel, false),
    ]
}

pub(crate) fn kundt_general(name: &str, params: &Params) -> Result<CatalogEntry> {
    let amp = param(params, "amp");
    if amp == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{name}.amp must be nonzero"
        )));
    }
    assemble(
        name,
        "general Kundt form with A_i(u,v,x), B(u,v,x), h(u,x)",
        params,
        4,
        Arc::new(move |x: &[Jet2]| {
            let (u, v, x1, x2) = (x[0], x[1], x[2], x[3]);
            let a = [
                (v * (x2 + 2.0) + u * x1 * 0.3) * amp,
                (v * v * 0.5 - v * x1 + 0.4) * amp,
            ];
            let guu = (v * v * x1 + v * u * 0.3 + x2 * x2) * amp;
            Ok(kundt_form(&a, guu, &walker_screen(x)))
        }),
        no_guard(),
        k_v(4),
        vec![expected("kappa", &kundt_flags(), Some(0))],
        kundt_box(2),
    )
}

pub(crate) fn kundt_walker_test(name: &str, params: &Params) -> Result<CatalogEntry> {
    let amp = param(params, "amp");
    assemble(
        name,
        "Kundt metric with A_1 = v x^1, B = 0, flat screen",
        params,
        4,
        Arc::new(move |x: &[Jet2]| {
            let (v, x1) = (x[1], x[2]);
            Ok(kundt_form(&[v * x1 * amp, zero()], zero(), &flat_screen(2)))
        }),
        Arc::new(|p: &[f64]| {
            if p[2].abs() > 0.1 {
                Ok(())
            } else {
                Err("|x^1| must exceed 0.1".into())
            }
        }),
        k_v(4),
        vec![expected("kappa", &kundt_flags(), Some(0))],
        kundt_box(2),
    )
}

pub(crate) fn kundt_linear_b(name: &str, params: &Params) -> Result<CatalogEntry> {
    let amp = param(params, "amp");
    let mut flags = kundt_flags();
    flags.retain(|(f, _)| *f != Flag::RecurrentWalker);
    flags.push((Flag::RecurrentWalker, true));
    assemble(
        name,
        "Kundt metric with B = v x^1, A = 0, flat screen",
        params,
        4,
        Arc::new(move |x: &[Jet2]| {
            let (v, x1) = (x[1], x[2]);
            Ok(kundt_form(
                &[zero(), zero()],
                v * x1 * (2.0 * amp),
                &flat_screen(2),
            ))
        }),
        Arc::new(|p: &[f64]| {
            if p[2].abs() > 0.1 {
                Ok(())
            } else {
                Err("|x^1| must exceed 0.1".into())
            }
        }),
        k_v(4),
        vec![expected("kappa", &flags, Some(0))],
        kundt_box(2),
    )
}

pub(crate) fn kundt_flat_screen(name: &str, params: &Params) -> Result<CatalogEntry> {
    let amp = param(params, "amp");
    assemble(
        name,
        "six-dimensional Kundt metric over a flat screen",
        params,
        6,
        Arc::new(move |x: &[Jet2]| {
            let (u, v) = (x[0], x[1]);
            let a = [
                x[3] * u * (0.3 * amp),
                x[4] * x[2] * (0.2 * amp),
                u.sin() * amp,
                x[2] * (-0.4 * amp),
            ];
            let guu = (v * v * x[2] + v * x[5] * u + x[3] * x[4]) * amp;
            Ok(kundt_form(&a, guu, &flat_screen(4)))
        }),
        no_guard(),
        k_v(6),
        vec![expected(
            "kappa",
            &[
                (Flag::Geodetic, true),
                (Flag::Expanding, false),
                (Flag::Twisting, false),
                (Flag::Shearing, false),
                (Flag::Kundt, true),
            ],
            Some(0),
        )],
        kundt_box(4),
    )
}

pub(crate) fn kundt_curved_screen(name: &str, params: &Params) -> Result<CatalogEntry> {
    let amp = param(params, "amp");
    assemble(
        name,
        "six-dimensional Kundt metric over the screen S² × S²",
        params,
        6,
        Arc::new(move |x: &[Jet2]| {
            let (v, t1, t2) = (x[1], x[2], x[4]);
            let mut h = jet_zeros(4);
            h[0][0] = Jet2::constant(1.0);
            h[1][1] = t1.sin() * t1.sin();
            h[2][2] = Jet2::constant(1.0);
            h[3][3] = t2.sin() * t2.sin();
            let guu = (t1.cos() * 0.3 + v * t2.cos() * 0.2) * amp;
            Ok(kundt_form(&[zero(); 4], guu, &h))
        }),
        Arc::new(|p: &[f64]| {
            if p[2].sin() > 0.05 && p[4].sin() > 0.05 {
                Ok(())
            } else {
                Err("polar angles must keep sin θ above 0.05".into())
            }
        }),
        k_v(6),
        vec![expected(
            "kappa",
            &[
                (Flag::Geodetic, true),
                (Flag::Expanding, false),
                (Flag::Twisting, false),
                (Flag::Shearing, false),
                (Flag::Kundt, true),
            ],
            Some(0),
        )],
        vec![
            (-1.0, 1.0),
            (-1.0, 1.0),
            (0.4, 2.7),
            (0.0, 6.0),
            (0.4, 2.7),
            (0.0, 6.0),
        ],
    )
}

pub(crate) fn sheared_kundt(name: &str, params: &Params) -> Result<CatalogEntry> {
    let eps = param(params, "eps");
    if eps == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{name}.eps must be nonzero"
        )));
    }
    assemble(
        name,
        "Kundt-type form with v-dependent screen h_11 = (1 + ε v)², sheared",
        params,
        4,
        Arc::new(move |x: &[Jet2]| {
            let (v, x1) = (x[1], x[2]);
            let mut h = flat_screen(2);
            let s = v * eps + 1.0;
            h[0][0] = s * s;
            Ok(kundt_form(&[zero(), zero()], x1 * x1, &h))
        }),
        Arc::new(move |p: &[f64]| {
            if 1.0 + eps * p[1] > 0.05 {
                Ok(())
            } else {
                Err("1 + ε v must exceed 0.05".into())
            }
        }),
        k_v(4),
        vec![expected(
            "kappa",
            &[
                (Flag::Geodetic, true),
                (Flag::Affine, true),
                (Flag::Expanding, true),
                (Flag::Twisting, false),
                (Flag::Shearing, true),
                (Flag::Kundt, false),
            ],
            Some(0),
        )],
        kundt_box(2),
    )
}

pub(crate) fn contact_wave(name: &str, params: &Params) -> Result<CatalogEntry> {
    let amp = param(params, "amp");
    if amp == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{name}.amp must be nonzero"
        )));
    }
    assemble(
        name,
        "2 κ dv + dx² + dy² with κ = du + ½ amp (x dy − y dx), k = ∂_v",
        params,
        4,
        Arc::new(move |x: &[Jet2]| {
            let (x1, x2) = (x[2], x[3]);
            let mut g = jet_zeros(4);
            set_sym(&mut g, 0, 1, Jet2::constant(1.0));
            set_sym(&mut g, 1, 2, x2 * (-0.5 * amp));
            set_sym(&mut g, 1, 3, x1 * (0.5 * amp));
            g[2][2] = Jet2::constant(1.0);
            g[3][3] = Jet2::constant(1.0);
            Ok(g)
        }),
        no_guard(),
        k_v(4),
        vec![expected(
            "kappa",
            &[
                (Flag::Geodetic, true),
                (Flag::Affine, true),
                (Flag::Expanding, false),
                (Flag::Twisting, true),
                (Flag::Shearing, false),
                (Flag::MaximallyTwisting, true),
            ],
            Some(1),
        )],
        kundt_box(2),
    )
}
