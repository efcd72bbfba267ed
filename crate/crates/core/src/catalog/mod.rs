//! Catalog of explicit metrics with their null congruences and expected
//! optical classes.

mod black_ring;
mod kerr;
mod kundt;
mod myers_perry;
mod schwarzschild;
mod taub_nut;

use std::sync::Arc;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::metric::{CongruenceSpec, GuardFn, JetMatrix, MetricFn, MetricModel, VectorFn};
use crate::optical::Flag;

pub use myers_perry::{myers_perry_constraint, myers_perry_parts, myers_perry_radius};
pub use taub_nut::taub_nut_profile;

pub type Params = IndexMap<String, f64>;

/// Flags a congruence is expected to carry at every sample point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedClass {
    pub congruence: String,
    pub flags: Vec<(Flag, bool)>,
    pub twist_rank: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub description: &'static str,
    pub model: MetricModel,
    pub congruences: Vec<CongruenceSpec>,
    pub expected: Vec<ExpectedClass>,
    pub sample_points: Vec<Vec<f64>>,
    /// Axis-aligned box from which admissible points are drawn.
    pub bounds: Vec<(f64, f64)>,
}

impl CatalogEntry {
    pub fn congruence(&self, label: &str) -> Result<&CongruenceSpec> {
        self.congruences
            .iter()
            .find(|c| c.label == label)
            .ok_or_else(|| Error::UnknownCongruence {
                entry: self.name.clone(),
                label: label.to_string(),
            })
    }

    pub fn expected_for(&self, label: &str) -> Option<&ExpectedClass> {
        self.expected.iter().find(|e| e.congruence == label)
    }

    /// Maps a point of the unit cube into the sampling box.
    pub fn point_from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.bounds
            .iter()
            .zip(u)
            .map(|((lo, hi), t)| lo + (hi - lo) * t)
            .collect()
    }

    /// First admissible point produced by successive unit-cube draws.
    pub fn admissible_point(&self, mut draw: impl FnMut() -> Vec<f64>) -> Result<Vec<f64>> {
        for _ in 0..10_000 {
            let p = self.point_from_unit(&draw());
            if self.model.is_admissible(&p) {
                return Ok(p);
            }
        }
        Err(Error::InvalidParameter(format!(
            "no admissible point found in the sampling box of `{}`",
            self.name
        )))
    }
}

struct Builder {
    name: &'static str,
    defaults: &'static [(&'static str, f64)],
    build: fn(&str, &Params) -> Result<CatalogEntry>,
}

const BUILDERS: &[Builder] = &[
    Builder {
        name: "minkowski",
        defaults: &[("n", 2.0)],
        build: kundt::minkowski,
    },
    Builder {
        name: "pp_wave",
        defaults: &[("amp", 1.0)],
        build: kundt::pp_wave,
    },
    Builder {
        name: "plane_wave",
        defaults: &[("amp", 1.0)],
        build: kundt::plane_wave,
    },
    Builder {
        name: "cahen_wallach",
        defaults: &[("q11", 1.0), ("q12", 0.2), ("q22", -0.5)],
        build: kundt::cahen_wallach,
    },
    Builder {
        name: "walker_brinkmann",
        defaults: &[("amp", 1.0)],
        build: kundt::walker_brinkmann,
    },
    Builder {
        name: "walker_recurrent",
        defaults: &[("amp", 1.0)],
        build: kundt::walker_recurrent,
    },
    Builder {
        name: "kundt_general",
        defaults: &[("amp", 1.0)],
        build: kundt::kundt_general,
    },
    Builder {
        name: "kundt_walker_test",
        defaults: &[("amp", 1.0)],
        build: kundt::kundt_walker_test,
    },
    Builder {
        name: "kundt_linear_b",
        defaults: &[("amp", 1.0)],
        build: kundt::kundt_linear_b,
    },
    Builder {
        name: "kundt_flat_screen",
        defaults: &[("amp", 1.0)],
        build: kundt::kundt_flat_screen,
    },
    Builder {
        name: "kundt_curved_screen",
        defaults: &[("amp", 1.0)],
        build: kundt::kundt_curved_screen,
    },
    Builder {
        name: "sheared_kundt",
        defaults: &[("eps", 0.5)],
        build: kundt::sheared_kundt,
    },
    Builder {
        name: "contact_wave",
        defaults: &[("amp", 1.0)],
        build: kundt::contact_wave,
    },
    Builder {
        name: "schwarzschild_tangherlini",
        defaults: &[("n", 2.0), ("c", 1.0)],
        build: schwarzschild::build,
    },
    Builder {
        name: "kerr4",
        defaults: &[("M", 1.0), ("a", 0.5)],
        build: kerr::build,
    },
    Builder {
        name: "myers_perry",
        defaults: &[("M", 1.0), ("a1", 0.5), ("a2", 0.3)],
        build: myers_perry::build,
    },
    Builder {
        name: "black_ring5",
        defaults: &[("lambda", 0.7), ("nu", 0.3), ("R", 1.0)],
        build: black_ring::build,
    },
    Builder {
        name: "taub_nut",
        defaults: &[("M", 1.0), ("q", 2.0)],
        build: taub_nut::build,
    },
];

/// Names of all catalog entries.
pub fn entry_names() -> Vec<&'static str> {
    BUILDERS.iter().map(|b| b.name).collect()
}

fn builder(name: &str) -> Result<&'static Builder> {
    BUILDERS
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::UnknownEntry(name.to_string()))
}

pub fn default_params(name: &str) -> Result<Params> {
    Ok(builder(name)?
        .defaults
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect())
}

/// Builds an entry with some parameters overridden.
pub fn build_entry(name: &str, overrides: &Params) -> Result<CatalogEntry> {
    let b = builder(name)?;
    let mut params = default_params(name)?;
    for (k, v) in overrides {
        match params.get_mut(k) {
            Some(slot) => *slot = *v,
            None => {
                return Err(Error::UnknownParameter {
                    entry: name.to_string(),
                    param: k.clone(),
                })
            }
        }
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name}.{k} = {v}")));
        }
    }
    (b.build)(b.name, &params)
}

pub fn get(name: &str) -> Result<CatalogEntry> {
    build_entry(name, &Params::new())
}

/// Every entry with default parameters.
pub fn catalog() -> Vec<CatalogEntry> {
    BUILDERS
        .iter()
        .map(|b| build_entry(b.name, &Params::new()).expect("default parameters are valid"))
        .collect()
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u32, base: u32) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Deterministic admissible points spread over the sampling box.
fn halton_points(model: &MetricModel, bounds: &[(f64, f64)], count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut i = 7u32;
    while out.len() < count && i < 10_000 {
        let p: Vec<f64> = bounds
            .iter()
            .enumerate()
            .map(|(a, (lo, hi))| lo + (hi - lo) * (0.05 + 0.9 * radical_inverse(i, PRIMES[a])))
            .collect();
        if model.is_admissible(&p) {
            out.push(p);
        }
        i += 1;
    }
    out
}

pub(crate) fn param(params: &Params, key: &str) -> f64 {
    params[key]
}

pub(crate) fn expected(
    label: &str,
    flags: &[(Flag, bool)],
    twist_rank: Option<usize>,
) -> ExpectedClass {
    ExpectedClass {
        congruence: label.to_string(),
        flags: flags.to_vec(),
        twist_rank,
    }
}

pub(crate) fn set_sym(g: &mut JetMatrix, a: usize, b: usize, v: Jet2) {
    g[a][b] = v;
    g[b][a] = v;
}

/// The constant field `∂_axis` (or the 1-form `dx^axis`).
pub fn basis_vector(dim: usize, axis: usize) -> VectorFn {
    Arc::new(move |_x: &[Jet2]| {
        let mut v = vec![Jet2::constant(0.0); dim];
        v[axis] = Jet2::constant(1.0);
        Ok(v)
    })
}

pub(crate) fn no_guard() -> GuardFn {
    Arc::new(|_| Ok(()))
}

/// Assembles an entry, generating sample points from the box.
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble(
    name: &str,
    description: &'static str,
    params: &Params,
    dim: usize,
    eval: MetricFn,
    guard: GuardFn,
    congruences: Vec<(&str, CongruenceKind)>,
    expected: Vec<ExpectedClass>,
    bounds: Vec<(f64, f64)>,
) -> Result<CatalogEntry> {
    let model = MetricModel::new(name, dim, params.clone(), eval, guard)?;
    let congruences = congruences
        .into_iter()
        .map(|(label, kind)| match kind {
            CongruenceKind::Vector(f) => CongruenceSpec::from_vector(&model, label, f),
            CongruenceKind::OneForm(f) => CongruenceSpec::from_one_form(&model, label, f),
        })
        .collect();
    let sample_points = halton_points(&model, &bounds, 6);
    if sample_points.len() < 6 {
        return Err(Error::InvalidParameter(format!(
            "parameters of `{name}` leave too few admissible sample points"
        )));
    }
    Ok(CatalogEntry {
        name: name.to_string(),
        description,
        model,
        congruences,
        expected,
        sample_points,
        bounds,
    })
}

pub(crate) enum CongruenceKind {
    Vector(VectorFn),
    OneForm(VectorFn),
}
