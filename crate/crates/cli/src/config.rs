//! Run configuration: command-line flags merged over an optional TOML file.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use optgeom::catalog::{self, CatalogEntry, Params};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// One `axis=min:max:count` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub axis: usize,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("grid `{s}` is not of the form axis=min:max:count"));
        let (axis, range) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let axis: usize = axis.trim().parse().map_err(|_| bad())?;
        let min: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let max: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if count == 0 || !min.is_finite() || !max.is_finite() {
            return Err(bad());
        }
        Ok(GridAxis {
            axis,
            min,
            max,
            count,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// `key=value` parameter override.
pub fn parse_set(s: &str) -> Result<(String, f64), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set `{s}` is not of the form key=value")))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("--set `{s}`: value is not a number")))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub congruence: Option<String>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: Vec<String>,
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub entry: IndexMap<String, IndexMap<String, f64>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }
}

/// Flags shared by `classify` and `invariants`.
#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Catalog entry name, or a path to a TOML config file.
    #[arg(long)]
    pub entry: Option<String>,
    /// TOML config with `[entry.<name>]` parameter tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Parameter override `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Grid sweep `axis=min:max:count`; other axes stay at the first sample point.
    #[arg(long = "grid", value_name = "AXIS=MIN:MAX:COUNT")]
    pub grid: Vec<String>,
    /// File with one point per line, coordinates separated by commas or spaces.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Number of random admissible points drawn with `--seed`.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Congruence label; defaults to the entry's first congruence.
    #[arg(long)]
    pub congruence: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

/// A fully resolved run.
pub struct RunConfig {
    pub entry: CatalogEntry,
    pub params: Params,
    pub congruence: String,
    pub tol: f64,
    pub seed: u64,
    pub points: Vec<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn parse_points_file(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read points {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let p: Result<Vec<f64>, _> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::parse::<f64>)
            .collect();
        out.push(p.map_err(|e| CliError::Config(format!("{}:{}: {e}", path.display(), no + 1)))?);
    }
    Ok(out)
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut config_path = self.config.clone();
        let mut name = self.entry.clone();
        if let Some(e) = &self.entry {
            if e.ends_with(".toml") || Path::new(e).is_file() {
                config_path = Some(PathBuf::from(e));
                name = None;
            }
        }
        let file = match &config_path {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let name = match name {
            Some(n) => n,
            None if file.entry.len() == 1 => file.entry.keys().next().cloned().unwrap_or_default(),
            None => {
                return Err(CliError::Config(
                    "no entry selected; pass --entry or a config with one [entry.<name>] table"
                        .into(),
                ))
            }
        };
        let mut params: Params = file.entry.get(&name).cloned().unwrap_or_default();
        for s in &self.set {
            let (k, v) = parse_set(s)?;
            params.insert(k, v);
        }
        let entry =
            catalog::build_entry(&name, &params).map_err(|e| CliError::Config(e.to_string()))?;
        let mut full =
            catalog::default_params(&name).map_err(|e| CliError::Config(e.to_string()))?;
        for (k, v) in &params {
            full.insert(k.clone(), *v);
        }
        let congruence = self
            .congruence
            .clone()
            .or(file.congruence)
            .unwrap_or_else(|| entry.congruences[0].label.clone());
        entry
            .congruence(&congruence)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let tol = self
            .tol
            .or(file.tol)
            .unwrap_or(optgeom::optical::DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Config(format!(
                "tolerance {tol} must be positive"
            )));
        }
        let seed = self.seed.or(file.seed).unwrap_or(0);
        let grid_specs: Vec<&String> = if self.grid.is_empty() {
            file.grid.iter().collect()
        } else {
            self.grid.iter().collect()
        };
        let grid: Vec<GridAxis> = grid_specs
            .iter()
            .map(|s| GridAxis::parse(s))
            .collect::<Result<_, _>>()?;
        let dim = entry.model.dim;
        let mut points = if let Some(p) = &self.points {
            parse_points_file(p)?
        } else if let Some(p) = file.points.clone() {
            p
        } else if !grid.is_empty() {
            grid_points(&grid, &entry.sample_points[0], dim)?
        } else if let Some(n) = self.sample {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| optgeom::verify::random_point(&entry, &mut rng))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Config(e.to_string()))?
        } else {
            entry.sample_points.clone()
        };
        for p in &points {
            if p.len() != dim {
                return Err(CliError::Config(format!(
                    "point {p:?} has {} coordinates, `{name}` needs {dim}",
                    p.len()
                )));
            }
        }
        if points.is_empty() {
            return Err(CliError::Config("no points to evaluate".into()));
        }
        points.shrink_to_fit();
        Ok(RunConfig {
            entry,
            params: full,
            congruence,
            tol,
            seed,
            points,
            out: self.out.clone(),
            format: self.format,
        })
    }
}

/// Cartesian product of the sweeps, with the remaining axes held at `base`.
pub fn grid_points(grid: &[GridAxis], base: &[f64], dim: usize) -> Result<Vec<Vec<f64>>, CliError> {
    for g in grid {
        if g.axis >= dim {
            return Err(CliError::Config(format!(
                "grid axis {} out of range for dimension {dim}",
                g.axis
            )));
        }
    }
    let mut points = vec![base.to_vec()];
    for g in grid {
        let vals = g.values();
        points = points
            .into_iter()
            .flat_map(|p| {
                vals.iter().map(move |v| {
                    let mut q = p.clone();
                    q[g.axis] = *v;
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_parses() {
        let g = GridAxis::parse("1=2:4:3").unwrap();
        assert_eq!(
            g,
            GridAxis {
                axis: 1,
                min: 2.0,
                max: 4.0,
                count: 3
            }
        );
        assert_eq!(g.values(), vec![2.0, 3.0, 4.0]);
        assert!(GridAxis::parse("1=2:4").is_err());
        assert!(GridAxis::parse("x=2:4:3").is_err());
        assert!(GridAxis::parse("1=2:4:0").is_err());
    }

    #[test]
    fn grid_product_order() {
        let grid = [
            GridAxis::parse("0=0:1:2").unwrap(),
            GridAxis::parse("2=5:6:2").unwrap(),
        ];
        let pts = grid_points(&grid, &[9.0, 9.0, 9.0], 3).unwrap();
        assert_eq!(
            pts,
            vec![
                vec![0.0, 9.0, 5.0],
                vec![0.0, 9.0, 6.0],
                vec![1.0, 9.0, 5.0],
                vec![1.0, 9.0, 6.0]
            ]
        );
        assert!(grid_points(&grid, &[0.0; 2], 2).is_err());
    }

    #[test]
    fn set_parses() {
        assert_eq!(parse_set("a=0.5").unwrap(), ("a".to_string(), 0.5));
        assert!(parse_set("a").is_err());
        assert!(parse_set("a=x").is_err());
    }

    #[test]
    fn file_config_parses() {
        let c: FileConfig =
            toml::from_str("tol = 1e-7\ncongruence = \"lambda\"\n[entry.kerr4]\na = 0.3\n")
                .unwrap();
        assert_eq!(c.tol, Some(1e-7));
        assert_eq!(c.entry["kerr4"]["a"], 0.3);
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }
}
