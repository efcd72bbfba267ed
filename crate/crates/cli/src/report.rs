//! Report rows and their JSON and CSV serialisation.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use optgeom::catalog::Params;
use optgeom::optical::{ClassReport, Flags, Magnitudes, OpticalInvariants};
use optgeom::verify::Check;
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    OutsideDomain,
    Indeterminate,
    Error,
}

impl Status {
    fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::OutsideDomain => "outside_domain",
            Status::Indeterminate => "indeterminate",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Header {
    pub command: &'static str,
    pub entry: String,
    pub params: Params,
    pub congruence: String,
    pub tol: f64,
    pub seed: u64,
    pub version: &'static str,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boost: Option<f64>,
}

impl Header {
    pub fn new(command: &'static str, cfg: &RunConfig) -> Self {
        Header {
            command,
            entry: cfg.entry.name.clone(),
            params: cfg.params.clone(),
            congruence: cfg.congruence.clone(),
            tol: cfg.tol,
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION"),
            points: cfg.points.len(),
            boost: None,
        }
    }

    fn comment(&self) -> String {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        let mut s = format!(
            "# optgeom {} {}: entry={} params=[{}] congruence={} tol={:e} seed={} points={}",
            self.version,
            self.command,
            self.entry,
            params.join(" "),
            self.congruence,
            self.tol,
            self.seed,
            self.points
        );
        if let Some(b) = self.boost {
            s.push_str(&format!(" boost={b}"));
        }
        s
    }
}

#[derive(Debug, Serialize)]
pub struct ClassifyRow {
    pub index: usize,
    pub point: Vec<f64>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flags: Option<Flags>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub twist_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub magnitudes: Option<Magnitudes>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl ClassifyRow {
    pub fn ok(index: usize, point: &[f64], r: ClassReport) -> Self {
        ClassifyRow {
            index,
            point: point.to_vec(),
            status: Status::Ok,
            message: None,
            flags: Some(r.flags),
            twist_rank: Some(r.twist_rank),
            magnitudes: Some(r.magnitudes),
            scale: Some(r.scale),
        }
    }

    pub fn failed(index: usize, point: &[f64], status: Status, message: String) -> Self {
        ClassifyRow {
            index,
            point: point.to_vec(),
            status,
            message: Some(message),
            flags: None,
            twist_rank: None,
            magnitudes: None,
            scale: None,
        }
    }
}

/// Whether the class is the same at every evaluated point.
#[derive(Debug, Serialize)]
pub struct Verdict {
    pub constant: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flags: Option<Flags>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub twist_rank: Option<usize>,
    /// Points whose class differs from the first classified point.
    pub changes_at: Vec<usize>,
    pub excluded: Vec<usize>,
    pub indeterminate: Vec<usize>,
}

impl Verdict {
    pub fn from_rows(rows: &[ClassifyRow]) -> Self {
        let ok: Vec<&ClassifyRow> = rows.iter().filter(|r| r.status == Status::Ok).collect();
        let first = ok.first().map(|r| (r.flags, r.twist_rank));
        let changes_at: Vec<usize> = ok
            .iter()
            .filter(|r| Some((r.flags, r.twist_rank)) != first)
            .map(|r| r.index)
            .collect();
        let pick = |s: Status| {
            rows.iter()
                .filter(|r| r.status == s)
                .map(|r| r.index)
                .collect::<Vec<_>>()
        };
        let indeterminate: Vec<usize> = rows
            .iter()
            .filter(|r| matches!(r.status, Status::Indeterminate | Status::Error))
            .map(|r| r.index)
            .collect();
        let constant = changes_at.is_empty() && indeterminate.is_empty() && first.is_some();
        Verdict {
            constant,
            flags: if constant {
                first.and_then(|f| f.0)
            } else {
                None
            },
            twist_rank: if constant {
                first.and_then(|f| f.1)
            } else {
                None
            },
            changes_at,
            excluded: pick(Status::OutsideDomain),
            indeterminate,
        }
    }

    fn describe(&self) -> String {
        if self.constant {
            let f = self.flags.as_ref().map(flag_list).unwrap_or_default();
            format!(
                "constant class {{{}}} twist_rank={}",
                f.join(", "),
                self.twist_rank.unwrap_or(0)
            )
        } else if !self.indeterminate.is_empty() {
            format!("indeterminate at points {:?}", self.indeterminate)
        } else {
            format!("class changes at points {:?}", self.changes_at)
        }
    }
}

/// Names of the flags that hold, with `non-` forms for the basic ones.
pub fn flag_list(f: &Flags) -> Vec<String> {
    let mut out = Vec::new();
    let basic = [
        ("geodetic", f.geodetic),
        ("expanding", f.expanding),
        ("twisting", f.twisting),
        ("shearing", f.shearing),
    ];
    for (name, v) in basic {
        out.push(if v {
            name.to_string()
        } else {
            format!("non-{name}")
        });
    }
    let extra = [
        ("affine", f.affine),
        ("maximally_twisting", f.maximally_twisting == Some(true)),
        ("kundt", f.kundt),
        ("robinson_trautman", f.robinson_trautman),
        ("recurrent_walker", f.recurrent_walker),
        ("parallel", f.parallel),
    ];
    out.extend(extra.iter().filter(|(_, v)| *v).map(|(n, _)| n.to_string()));
    out
}

#[derive(Debug, Serialize)]
pub struct InvariantRow {
    pub index: usize,
    pub point: Vec<f64>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariants: Option<Invariants>,
}

#[derive(Debug, Serialize)]
pub struct Invariants {
    pub gamma: Vec<f64>,
    pub rho: f64,
    pub tau: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub scale: f64,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

impl InvariantRow {
    pub fn ok(index: usize, point: &[f64], inv: &OpticalInvariants) -> Self {
        InvariantRow {
            index,
            point: point.to_vec(),
            status: Status::Ok,
            message: None,
            invariants: Some(Invariants {
                gamma: inv.gamma.clone(),
                rho: inv.rho,
                tau: rows_of(&inv.tau),
                sigma: rows_of(&inv.sigma),
                pi: inv.pi.clone(),
                scale: inv.scale,
            }),
        }
    }

    pub fn failed(index: usize, point: &[f64], status: Status, message: String) -> Self {
        InvariantRow {
            index,
            point: point.to_vec(),
            status,
            message: Some(message),
            invariants: None,
        }
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

#[derive(Serialize)]
struct Document<'a, R: Serialize, V: Serialize> {
    header: &'a Header,
    rows: &'a [R],
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<&'a V>,
}

fn write_json<R: Serialize, V: Serialize>(
    w: &mut dyn Write,
    header: &Header,
    rows: &[R],
    verdict: Option<&V>,
) -> Result<(), CliError> {
    serde_json::to_writer_pretty(
        &mut *w,
        &Document {
            header,
            rows,
            verdict,
        },
    )
    .map_err(std::io::Error::other)?;
    writeln!(w)?;
    Ok(())
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

fn bool_cell(b: Option<bool>) -> String {
    b.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_classify(
    cfg: &RunConfig,
    header: &Header,
    rows: &[ClassifyRow],
    verdict: &Verdict,
) -> Result<(), CliError> {
    let mut w = sink(cfg.out.as_deref())?;
    match cfg.format {
        Format::Json => write_json(&mut *w, header, rows, Some(verdict))?,
        Format::Csv => {
            let dim = cfg.entry.model.dim;
            let flags = [
                "geodetic",
                "affine",
                "expanding",
                "twisting",
                "shearing",
                "maximally_twisting",
                "kundt",
                "robinson_trautman",
                "recurrent_walker",
                "parallel",
            ];
            let mags = [
                "gamma",
                "acceleration",
                "rho",
                "tau",
                "sigma",
                "pi",
                "recurrence",
                "nabla_kappa",
            ];
            let mut cols: Vec<String> = vec!["index".into()];
            cols.extend((0..dim).map(|i| format!("x{i}")));
            cols.push("status".into());
            cols.extend(flags.iter().map(|s| s.to_string()));
            cols.push("twist_rank".into());
            cols.extend(mags.iter().map(|s| format!("mag_{s}")));
            cols.extend(["scale".to_string(), "message".to_string()]);
            writeln!(w, "{}", header.comment())?;
            writeln!(w, "# columns: point coordinates x*, flags as true/false, flag magnitudes mag_*, classification scale")?;
            writeln!(w, "# verdict: {}", verdict.describe())?;
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record(&cols).map_err(csv_error)?;
            for r in rows {
                let mut rec: Vec<String> = vec![r.index.to_string()];
                rec.extend(r.point.iter().map(|x| x.to_string()));
                rec.push(r.status.name().into());
                match &r.flags {
                    Some(f) => rec.extend(
                        optgeom::optical::Flag::ALL
                            .iter()
                            .map(|fl| bool_cell(f.get(*fl))),
                    ),
                    None => rec.extend(flags.iter().map(|_| String::new())),
                }
                rec.push(r.twist_rank.map(|d| d.to_string()).unwrap_or_default());
                match &r.magnitudes {
                    Some(m) => rec.extend(
                        [
                            m.gamma,
                            m.acceleration,
                            m.rho,
                            m.tau,
                            m.sigma,
                            m.pi,
                            m.recurrence,
                            m.nabla_kappa,
                        ]
                        .iter()
                        .map(|x| format!("{x:e}")),
                    ),
                    None => rec.extend(mags.iter().map(|_| String::new())),
                }
                rec.push(r.scale.map(|s| format!("{s:e}")).unwrap_or_default());
                rec.push(r.message.clone().unwrap_or_default());
                c.write_record(&rec).map_err(csv_error)?;
            }
            c.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_invariants(
    cfg: &RunConfig,
    header: &Header,
    rows: &[InvariantRow],
) -> Result<(), CliError> {
    let mut w = sink(cfg.out.as_deref())?;
    match cfg.format {
        Format::Json => write_json::<_, ()>(&mut *w, header, rows, None)?,
        Format::Csv => {
            let dim = cfg.entry.model.dim;
            let n = dim - 2;
            let mut cols: Vec<String> = vec!["index".into()];
            cols.extend((0..dim).map(|i| format!("x{i}")));
            cols.push("status".into());
            cols.extend((0..n).map(|i| format!("gamma_{i}")));
            cols.push("rho".into());
            for i in 0..n {
                for j in (i + 1)..n {
                    cols.push(format!("tau_{i}{j}"));
                }
            }
            for i in 0..n {
                for j in i..n {
                    cols.push(format!("sigma_{i}{j}"));
                }
            }
            cols.extend((0..n).map(|i| format!("pi_{i}")));
            cols.extend(["scale".to_string(), "message".to_string()]);
            writeln!(w, "{}", header.comment())?;
            writeln!(w, "# columns: frame components; tau_ij for i<j, sigma_ij for i<=j, screen indices from 0")?;
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record(&cols).map_err(csv_error)?;
            let blanks = cols.len() - dim - 3;
            for r in rows {
                let mut rec: Vec<String> = vec![r.index.to_string()];
                rec.extend(r.point.iter().map(|x| x.to_string()));
                rec.push(r.status.name().into());
                match &r.invariants {
                    Some(v) => {
                        rec.extend(v.gamma.iter().map(|x| format!("{x:e}")));
                        rec.push(format!("{:e}", v.rho));
                        for i in 0..n {
                            for j in (i + 1)..n {
                                rec.push(format!("{:e}", v.tau[i][j]));
                            }
                        }
                        for i in 0..n {
                            for j in i..n {
                                rec.push(format!("{:e}", v.sigma[i][j]));
                            }
                        }
                        rec.extend(v.pi.iter().map(|x| format!("{x:e}")));
                        rec.push(format!("{:e}", v.scale));
                    }
                    None => rec.extend((0..blanks).map(|_| String::new())),
                }
                rec.push(r.message.clone().unwrap_or_default());
                c.write_record(&rec).map_err(csv_error)?;
            }
            c.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct VerifyHeader<'a> {
    command: &'static str,
    suite: &'a str,
    seed: u64,
    version: &'static str,
    passed: usize,
    total: usize,
}

#[derive(Serialize)]
struct VerifyDocument<'a> {
    header: VerifyHeader<'a>,
    rows: &'a [Check],
}

pub fn write_verify(
    suite: &str,
    seed: u64,
    out: Option<&Path>,
    format: Format,
    checks: &[Check],
    passed: usize,
    total: usize,
) -> Result<(), CliError> {
    let mut w = sink(out)?;
    let version = env!("CARGO_PKG_VERSION");
    match format {
        Format::Json => {
            let doc = VerifyDocument {
                header: VerifyHeader {
                    command: "verify",
                    suite,
                    seed,
                    version,
                    passed,
                    total,
                },
                rows: checks,
            };
            serde_json::to_writer_pretty(&mut w, &doc).map_err(std::io::Error::other)?;
            writeln!(w)?;
        }
        Format::Csv => {
            writeln!(w, "# optgeom {version} verify: suite={suite} seed={seed} passed={passed} total={total}")?;
            writeln!(w, "# columns: residual is compared with tol; bound says whether it must be below or above")?;
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record(["suite", "name", "residual", "bound", "tol", "pass", "note"])
                .map_err(csv_error)?;
            for k in checks {
                c.write_record([
                    k.suite.name().to_string(),
                    k.name.clone(),
                    format!("{:e}", k.residual),
                    format!("{:?}", k.bound).to_lowercase(),
                    format!("{:e}", k.tol),
                    k.pass.to_string(),
                    k.note.clone().unwrap_or_default(),
                ])
                .map_err(csv_error)?;
            }
            c.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(expanding: bool) -> Flags {
        Flags {
            geodetic: true,
            affine: true,
            expanding,
            twisting: false,
            shearing: false,
            maximally_twisting: Some(false),
            kundt: !expanding,
            robinson_trautman: expanding,
            recurrent_walker: false,
            parallel: false,
        }
    }

    fn row(i: usize, f: Option<Flags>, status: Status) -> ClassifyRow {
        ClassifyRow {
            index: i,
            point: vec![0.0],
            status,
            message: None,
            flags: f,
            twist_rank: f.map(|_| 0),
            magnitudes: None,
            scale: None,
        }
    }

    #[test]
    fn verdict_constant() {
        let rows = [
            row(0, Some(flags(true)), Status::Ok),
            row(1, Some(flags(true)), Status::Ok),
        ];
        let v = Verdict::from_rows(&rows);
        assert!(v.constant);
        assert!(v.describe().contains("robinson_trautman"));
    }

    #[test]
    fn verdict_records_changes_and_exclusions() {
        let rows = [
            row(0, Some(flags(true)), Status::Ok),
            row(1, None, Status::OutsideDomain),
            row(2, Some(flags(false)), Status::Ok),
        ];
        let v = Verdict::from_rows(&rows);
        assert!(!v.constant);
        assert_eq!(v.changes_at, vec![2]);
        assert_eq!(v.excluded, vec![1]);
        assert!(v.describe().contains("[2]"));
    }

    #[test]
    fn flag_list_uses_negated_names() {
        let l = flag_list(&flags(false));
        assert!(l.contains(&"non-expanding".to_string()));
        assert!(l.contains(&"kundt".to_string()));
    }
}
