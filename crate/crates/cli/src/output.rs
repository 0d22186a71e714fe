use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::ValueEnum;
use robomag::config::ResolvedConfig;
use serde::{Deserialize, Serialize};

use crate::Command;

/// Process exit status: 1 for runtime or algorithmic failures, 2 for usage,
/// configuration and input-format errors.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => format!("{e:#}"),
        }
    }
}

pub fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

pub fn runtime<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

pub type CmdResult<T> = Result<T, Failure>;

/// Units at the command-line boundary. Internals are always SI.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// Millitesla, degrees, millimetres, megahertz.
    #[default]
    Lab,
    /// Tesla, radians, metres, hertz.
    Si,
}

/// Scale from SI to the boundary unit, and the unit's column suffix.
#[derive(Clone, Copy, Debug)]
pub struct Unit {
    pub scale: f64,
    pub name: &'static str,
}

impl Unit {
    pub fn in_unit(self, v: f64) -> f64 {
        v * self.scale
    }

    pub fn to_si(self, v: f64) -> f64 {
        v / self.scale
    }

    pub fn column(self, stem: &str) -> String {
        format!("{stem}_{}", self.name)
    }
}

impl Units {
    pub fn angle(self) -> Unit {
        match self {
            Units::Lab => Unit {
                scale: 180.0 / PI,
                name: "deg",
            },
            Units::Si => Unit {
                scale: 1.0,
                name: "rad",
            },
        }
    }

    pub fn field(self) -> Unit {
        match self {
            Units::Lab => Unit {
                scale: 1e3,
                name: "mT",
            },
            Units::Si => Unit {
                scale: 1.0,
                name: "T",
            },
        }
    }

    pub fn length(self) -> Unit {
        match self {
            Units::Lab => Unit {
                scale: 1e3,
                name: "mm",
            },
            Units::Si => Unit {
                scale: 1.0,
                name: "m",
            },
        }
    }

    pub fn frequency(self) -> Unit {
        match self {
            Units::Lab => Unit {
                scale: 1e-6,
                name: "MHz",
            },
            Units::Si => Unit {
                scale: 1.0,
                name: "Hz",
            },
        }
    }
}

/// Everything needed to re-run a command, embedded in each artefact.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub seed: u64,
    pub units: Units,
    pub config: ResolvedConfig,
}

impl Provenance {
    pub fn new(command: Command, units: Units, config: ResolvedConfig) -> Self {
        Self {
            tool: "robomag".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            seed: config.seed,
            units,
            config,
        }
    }

    /// `#`-prefixed header lines for CSV artefacts.
    pub fn csv_header(&self) -> String {
        let json = serde_json::to_string(self).expect("provenance serialises");
        format!("# robomag {}\n# provenance: {json}\n", self.command.name())
    }

    /// Reads provenance from a CSV header or a JSON artefact.
    pub fn from_artefact(path: &Path) -> CmdResult<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(usage)?;
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))
                .map_err(usage)?;
            let prov = value
                .get("provenance")
                .ok_or_else(|| usage(anyhow!("{} has no provenance", path.display())))?;
            return serde_json::from_value(prov.clone())
                .context("invalid provenance")
                .map_err(usage);
        }
        let line = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix("# provenance: "))
            .ok_or_else(|| usage(anyhow!("{} has no provenance header", path.display())))?;
        serde_json::from_str(line)
            .context("invalid provenance")
            .map_err(usage)
    }
}

/// Writes to `out` atomically (temp file in the same directory, then
/// rename), or to stdout when no path is given.
pub fn emit(out: Option<&Path>, content: &str) -> CmdResult<()> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(runtime)
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => PathBuf::from("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(&dir)
                .with_context(|| format!("creating temporary file in {}", dir.display()))
                .map_err(runtime)?;
            tmp.write_all(content.as_bytes()).map_err(runtime)?;
            tmp.persist(path)
                .with_context(|| format!("writing {}", path.display()))
                .map_err(runtime)?;
            Ok(())
        }
    }
}

/// CSV body with the provenance header lines prepended.
pub fn csv_document(prov: &Provenance, columns: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv");
    format!("{}{body}", prov.csv_header())
}

/// JSON document with the provenance attached under `"provenance"`.
pub fn json_document(prov: &Provenance, mut body: serde_json::Value) -> String {
    if let serde_json::Value::Object(map) = &mut body {
        map.insert(
            "provenance".into(),
            serde_json::to_value(prov).expect("provenance serialises"),
        );
    }
    let mut s = serde_json::to_string_pretty(&body).expect("json serialises");
    s.push('\n');
    s
}

/// Shortest round-trip representation, in exponent form for very small or
/// very large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Reads a CSV file whose header must equal `expected`; `#` lines are skipped.
pub fn read_csv(path: &Path, expected: &[String]) -> CmdResult<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(usage)?;
    let headers: Vec<String> = r
        .headers()
        .map_err(usage)?
        .iter()
        .map(str::to_string)
        .collect();
    if headers != expected {
        return Err(usage(anyhow!(
            "{}: expected columns {}, found {}",
            path.display(),
            expected.join(","),
            headers.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec
            .with_context(|| format!("{}: row {}", path.display(), i + 1))
            .map_err(usage)?;
        let row = rec
            .iter()
            .zip(expected)
            .map(|(field, col)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        usage(anyhow!(
                            "{}: row {}, column {col}: '{field}' is not a number",
                            path.display(),
                            i + 1
                        ))
                    })
            })
            .collect::<CmdResult<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}
