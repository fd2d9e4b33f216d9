//! Declarative check suites: TOML configuration, parallel execution with a
//! deterministic report order, and JSON / CSV / plot-data output.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use toml::Spanned;

use crate::verify::*;

/// Checks known to the suite, keyed by the `kind` field of a `[[check]]` table.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckSpec {
    Fubini(FubiniParams),
    LemmaAver(LemmaAverParams),
    AveragedWeight(AveragedWeightParams),
    Rdf(RdfParams),
    WeightClass(WeightClassParams),
    MaximalStrong(MaximalStrongParams),
    MaximalWeak(MaximalWeakParams),
    Extrapolation(ExtrapolationParams),
    CoifmanFefferman(CoifmanFeffermanParams),
    Fractional(FractionalParams),
    OffDiag(OffDiagParams),
}

pub const CHECK_KINDS: [&str; 11] = [
    "fubini",
    "lemma_aver",
    "averaged_weight",
    "rdf",
    "weight_class",
    "maximal_strong",
    "maximal_weak",
    "extrapolation",
    "coifman_fefferman",
    "fractional",
    "offdiag",
];

impl CheckSpec {
    fn parse(kind: &str, table: toml::Table) -> Result<Self, String> {
        fn de<T: DeserializeOwned>(table: toml::Table) -> Result<T, String> {
            toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| e.message().to_string())
        }
        Ok(match kind {
            "fubini" => Self::Fubini(de(table)?),
            "lemma_aver" => Self::LemmaAver(de(table)?),
            "averaged_weight" => Self::AveragedWeight(de(table)?),
            "rdf" => Self::Rdf(de(table)?),
            "weight_class" => Self::WeightClass(de(table)?),
            "maximal_strong" => Self::MaximalStrong(de(table)?),
            "maximal_weak" => Self::MaximalWeak(de(table)?),
            "extrapolation" => Self::Extrapolation(de(table)?),
            "coifman_fefferman" => Self::CoifmanFefferman(de(table)?),
            "fractional" => Self::Fractional(de(table)?),
            "offdiag" => Self::OffDiag(de(table)?),
            other => {
                return Err(format!(
                    "unknown check kind `{other}`; expected one of {}",
                    CHECK_KINDS.join(", ")
                ))
            }
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Fubini(_) => "fubini",
            Self::LemmaAver(_) => "lemma_aver",
            Self::AveragedWeight(_) => "averaged_weight",
            Self::Rdf(_) => "rdf",
            Self::WeightClass(_) => "weight_class",
            Self::MaximalStrong(_) => "maximal_strong",
            Self::MaximalWeak(_) => "maximal_weak",
            Self::Extrapolation(_) => "extrapolation",
            Self::CoifmanFefferman(_) => "coifman_fefferman",
            Self::Fractional(_) => "fractional",
            Self::OffDiag(_) => "offdiag",
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        match self {
            Self::Fubini(p) => p.validate(),
            Self::LemmaAver(p) => p.validate(),
            Self::AveragedWeight(p) => p.validate(),
            Self::Rdf(p) => p.validate(),
            Self::WeightClass(p) => p.validate(),
            Self::MaximalStrong(p) => p.validate(),
            Self::MaximalWeak(p) => p.validate(),
            Self::Extrapolation(p) => p.validate(),
            Self::CoifmanFefferman(p) => p.validate(),
            Self::Fractional(p) => p.validate(),
            Self::OffDiag(p) => p.validate(),
        }
    }

    pub fn run(&self, ctx: &Context) -> crate::Result<CheckReport> {
        match self {
            Self::Fubini(p) => run_fubini(p, ctx),
            Self::LemmaAver(p) => run_lemma_aver(p, ctx),
            Self::AveragedWeight(p) => check_averaged_weight_class(p, ctx),
            Self::Rdf(p) => run_rdf(p, ctx),
            Self::WeightClass(p) => check_weight_class(p, ctx),
            Self::MaximalStrong(p) => check_maximal_tent_strong(p, ctx),
            Self::MaximalWeak(p) => check_maximal_tent_weak(p, ctx),
            Self::Extrapolation(p) => check_extrapolation(p, ctx),
            Self::CoifmanFefferman(p) => check_coifman_fefferman_tent(p, ctx),
            Self::Fractional(p) => check_fractional(p, ctx),
            Self::OffDiag(p) => check_offdiag_proposition(p, ctx),
        }
    }
}

/// One `[[check]]` table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub name: String,
    pub expected: Expected,
    pub spec: CheckSpec,
    /// 1-based line of the table in the config file.
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn json(self) -> bool {
        matches!(self, Self::Json | Self::Both)
    }
    pub fn csv(self) -> bool {
        matches!(self, Self::Csv | Self::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub ladder: Vec<Resolution>,
    /// Worker threads; `None` uses all cores.
    pub jobs: Option<usize>,
    pub output: PathBuf,
    pub format: OutputFormat,
    /// Adds a wall-clock timestamp and per-check runtimes (breaks determinism).
    pub timestamps: bool,
    pub plot_data: bool,
    pub checks: Vec<CheckEntry>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            ladder: default_ladder(),
            jobs: None,
            output: PathBuf::from("report"),
            format: OutputFormat::Both,
            timestamps: false,
            plot_data: true,
            checks: Vec::new(),
        }
    }
}

/// Invalid configuration, with the offending line when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSuite {
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    ladder: Option<Vec<Resolution>>,
    #[serde(default)]
    jobs: Option<usize>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    format: OutputFormat,
    #[serde(default)]
    timestamps: bool,
    #[serde(default = "yes")]
    plot_data: bool,
    #[serde(default)]
    check: Vec<Spanned<toml::Table>>,
}

fn yes() -> bool {
    true
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl SuiteConfig {
    /// Parses and validates a TOML suite.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawSuite = toml::from_str(text).map_err(|e| ConfigError {
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        let mut config = SuiteConfig {
            seed: raw.seed,
            jobs: raw.jobs,
            format: raw.format,
            timestamps: raw.timestamps,
            plot_data: raw.plot_data,
            ..SuiteConfig::default()
        };
        if let Some(l) = raw.ladder {
            config.ladder = l;
        }
        if let Some(o) = raw.output {
            config.output = o;
        }
        validate_ladder(&config.ladder).map_err(|message| ConfigError {
            line: None,
            message,
        })?;
        if config.jobs == Some(0) {
            return Err(ConfigError {
                line: None,
                message: "jobs must be positive".into(),
            });
        }
        let mut names = BTreeSet::new();
        for spanned in raw.check {
            let line = line_of(text, spanned.span().start);
            let err = |message: String| ConfigError {
                line: Some(line),
                message,
            };
            let mut table = spanned.into_inner();
            let kind = match table.remove("kind") {
                Some(toml::Value::String(k)) => k,
                Some(_) => return Err(err("`kind` must be a string".into())),
                None => return Err(err("missing `kind`".into())),
            };
            let name = match table.remove("name") {
                Some(toml::Value::String(n)) => n,
                Some(_) => return Err(err("`name` must be a string".into())),
                None => kind.clone(),
            };
            if !names.insert(name.clone()) {
                return Err(err(format!("duplicate check name `{name}`")));
            }
            let expected = match table.remove("expected") {
                Some(v) => v
                    .try_into()
                    .map_err(|e: toml::de::Error| err(format!("expected: {}", e.message())))?,
                None => Expected::Pass,
            };
            let spec = CheckSpec::parse(&kind, table).map_err(|m| err(format!("{name}: {m}")))?;
            spec.validate().map_err(|e| err(format!("{name}: {e}")))?;
            config.checks.push(CheckEntry {
                name,
                expected,
                spec,
                line,
            });
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }
}

/// Parses a ladder such as `128x16,256x32`.
pub fn parse_ladder(s: &str) -> Result<Vec<Resolution>, String> {
    let ladder = s
        .split(',')
        .map(|rung| {
            let (n, k) = rung
                .trim()
                .split_once(['x', 'X', ':'])
                .ok_or_else(|| format!("`{rung}` is not of the form NxK"))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|e| format!("`{rung}`: {e}"))
            };
            Ok(Resolution {
                cells: parse(n)?,
                levels: parse(k)?,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    validate_ladder(&ladder)?;
    Ok(ladder)
}

fn validate_ladder(ladder: &[Resolution]) -> Result<(), String> {
    if ladder.is_empty() {
        return Err("the resolution ladder must not be empty".into());
    }
    if ladder.iter().any(|r| r.cells == 0 || r.levels == 0) {
        return Err("ladder cells and levels must be positive".into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub version: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteReport {
    pub meta: Meta,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    /// Every check met its configured expectation.
    pub fn ok(&self) -> bool {
        self.checks.iter().all(CheckReport::ok)
    }

    /// Pretty JSON with every float written with 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats::default());
        self.serialize(&mut ser).expect("report serializes");
        out.push(b'\n');
        String::from_utf8(out).expect("JSON is UTF-8")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// One line per check: identity, outcome and the measured quantities.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "check", "status", "expected", "verdict", "measured"])
            .expect("in-memory write");
        for c in &self.checks {
            let measured = c
                .measured
                .iter()
                .map(|(k, v)| format!("{k}={}", format_num(v.0)))
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([
                c.name.as_str(),
                c.check.as_str(),
                &c.status.to_string(),
                &expected_label(c.expected),
                &c.verdict,
                &measured,
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("CSV is UTF-8")
    }
}

fn expected_label(e: Expected) -> String {
    match e {
        Expected::Pass => "pass",
        Expected::Fail => "fail",
        Expected::Divergent => "divergent",
    }
    .to_string()
}

/// Float text used in CSV and plot files.
pub fn format_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "+inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

/// Pretty formatter writing floats as `{:.16e}`.
#[derive(Default)]
struct FixedFloats(PrettyFormatter<'static>);

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

fn run_entry(entry: &CheckEntry, ctx: &Context, timestamps: bool) -> CheckReport {
    let start = Instant::now();
    let mut report = match entry.spec.run(ctx) {
        Ok(r) => r,
        Err(e) => CheckReport::error(
            entry.spec.kind(),
            Params {
                seed: ctx.seed,
                ..Params::default()
            },
            e.to_string(),
        ),
    };
    report.name = entry.name.clone();
    if timestamps {
        report.runtime_ms = Some(Num(start.elapsed().as_secs_f64() * 1e3));
    }
    report.with_expected(entry.expected)
}

/// Runs every check; reports keep the config order.
pub fn run_suite(config: &SuiteConfig) -> SuiteReport {
    let ctx = Context::new(config.seed, config.ladder.clone());
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = config.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().expect("thread pool");
    let checks = pool.install(|| {
        config
            .checks
            .par_iter()
            .map(|e| run_entry(e, &ctx, config.timestamps))
            .collect()
    });
    let timestamp = config.timestamps.then(|| {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        format!("unix:{secs}")
    });
    SuiteReport {
        meta: Meta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            timestamp,
        },
        checks,
    }
}

/// Writes `report.json` and/or `summary.csv`, plus plot data under `plots/`.
pub fn write_outputs(report: &SuiteReport, config: &SuiteConfig) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(&config.output)?;
    let mut written = Vec::new();
    if config.format.json() {
        let path = config.output.join("report.json");
        fs::write(&path, report.to_json())?;
        written.push(path);
    }
    if config.format.csv() {
        let path = config.output.join("summary.csv");
        fs::write(&path, report.to_csv())?;
        written.push(path);
    }
    if config.plot_data {
        written.extend(emit_plot_data(report, &config.output.join("plots"))?);
    }
    Ok(written)
}

fn slug(s: &str) -> String {
    let mut out: String = s
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    while out.contains("__") {
        out = out.replace("__", "_");
    }
    out.trim_matches('_').to_string()
}

/// One whitespace-separated two-column file per trace; log-scale traces keep
/// only positive values. The directory is created only when there is data.
pub fn emit_plot_data(report: &SuiteReport, dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut used = BTreeSet::new();
    for check in &report.checks {
        for trace in &check.traces {
            let base = format!("{}--{}", slug(&check.name), slug(&trace.name));
            let mut file = format!("{base}.dat");
            let mut i = 1;
            while !used.insert(file.clone()) {
                file = format!("{base}-{i}.dat");
                i += 1;
            }
            let mut text = format!("# {} {}\n", slug(&trace.x_label), slug(&trace.y_label));
            for (x, y) in &trace.points {
                if trace.log_y && !(y.0 > 0.0) {
                    continue;
                }
                text.push_str(&format!("{} {}\n", format_num(x.0), format_num(y.0)));
            }
            fs::create_dir_all(dir)?;
            let path = dir.join(file);
            fs::write(&path, text)?;
            written.push(path);
        }
    }
    Ok(written)
}
