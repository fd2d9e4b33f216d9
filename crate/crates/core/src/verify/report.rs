use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Report number: finite values serialize as JSON numbers, non-finite ones
/// as the strings `"+inf"`, `"-inf"` and `"nan"`. Equality is bitwise.
#[derive(Debug, Clone, Copy)]
pub struct Num(pub f64);

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits() || (self.0.is_nan() && other.0.is_nan())
    }
}

impl From<f64> for Num {
    fn from(v: f64) -> Self {
        Num(v)
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("+inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct NumVisitor;
        impl Visitor<'_> for NumVisitor {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"+inf\", \"-inf\", \"nan\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                match v {
                    "+inf" => Ok(Num(f64::INFINITY)),
                    "-inf" => Ok(Num(f64::NEG_INFINITY)),
                    "nan" => Ok(Num(f64::NAN)),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(NumVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// A weight constant grew without bound along the refinement ladder.
    Divergent,
    /// The check could not be evaluated.
    Error,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Divergent => "divergent",
            Status::Error => "error",
        })
    }
}

/// Outcome a check is configured to produce; negative controls expect
/// `fail` or `divergent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expected {
    #[default]
    Pass,
    Fail,
    Divergent,
}

impl Expected {
    pub fn met_by(&self, status: Status) -> bool {
        matches!(
            (self, status),
            (Expected::Pass, Status::Pass)
                | (Expected::Fail, Status::Fail)
                | (Expected::Divergent, Status::Divergent)
        )
    }
}

/// Parameter record; unused fields are omitted from the JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
    /// `(N, K)` pairs the check was evaluated on.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub resolutions: Vec<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub half_width: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t_window: Option<(Num, Num)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub q: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub s: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p0: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weight: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub operator: Option<String>,
    pub seed: u64,
}

/// Tabulated relation, e.g. a measured constant against a weight constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    /// Only positive `y` values are meaningful (plotted on a log scale).
    #[serde(default)]
    pub log_y: bool,
    pub points: Vec<(Num, Num)>,
}

/// Sub-result of a check, one per target / weight / instance group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub status: Status,
    pub values: BTreeMap<String, Num>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl Row {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            status: Status::Pass,
            values: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn value(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.to_string(), Num(v));
        self
    }

    pub fn set(&mut self, key: &str, v: f64) {
        self.values.insert(key.to_string(), Num(v));
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Downgrades the status; `Fail` and `Error` are never overridden by `Divergent`.
    pub fn demote(&mut self, status: Status) {
        self.status = worst(self.status, status);
    }
}

fn rank(s: Status) -> u8 {
    match s {
        Status::Pass => 0,
        Status::Divergent => 1,
        Status::Fail => 2,
        Status::Error => 3,
    }
}

/// The more severe of two statuses.
pub fn worst(a: Status, b: Status) -> Status {
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    /// Config-supplied label, unique within a suite.
    pub name: String,
    /// Check operation, e.g. `fubini`.
    pub check: String,
    pub params: Params,
    pub measured: BTreeMap<String, Num>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub slack: Option<Num>,
    pub status: Status,
    pub expected: Expected,
    /// `pass`, `fail`, or `expected-<status>: pass|fail` for negative controls.
    pub verdict: String,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub rows: Vec<Row>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub traces: Vec<Trace>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime_ms: Option<Num>,
}

impl CheckReport {
    pub fn new(check: &str, params: Params) -> Self {
        Self {
            name: check.to_string(),
            check: check.to_string(),
            params,
            measured: BTreeMap::new(),
            bound: None,
            slack: None,
            status: Status::Pass,
            expected: Expected::Pass,
            verdict: String::new(),
            rows: Vec::new(),
            traces: Vec::new(),
            notes: Vec::new(),
            runtime_ms: None,
        }
        .finalized()
    }

    pub fn measure(&mut self, key: &str, v: f64) {
        self.measured.insert(key.to_string(), Num(v));
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn demote(&mut self, status: Status) {
        self.status = worst(self.status, status);
    }

    /// Folds row statuses into the report status and fills the verdict.
    pub fn finalized(mut self) -> Self {
        for row in &self.rows {
            self.status = worst(self.status, row.status);
        }
        self.verdict = verdict(self.expected, self.status);
        self
    }

    pub fn with_expected(mut self, expected: Expected) -> Self {
        self.expected = expected;
        self.verdict = verdict(expected, self.status);
        self
    }

    /// Whether the outcome matches the configured expectation.
    pub fn ok(&self) -> bool {
        self.expected.met_by(self.status)
    }

    /// Report for a check that could not be evaluated.
    pub fn error(check: &str, params: Params, message: impl Into<String>) -> Self {
        let mut r = CheckReport::new(check, params);
        r.status = Status::Error;
        r.note(message);
        r.finalized()
    }
}

fn verdict(expected: Expected, status: Status) -> String {
    let outcome = if expected.met_by(status) {
        "pass"
    } else {
        "fail"
    };
    match expected {
        Expected::Pass => outcome.to_string(),
        Expected::Fail => format!("expected-fail: {outcome}"),
        Expected::Divergent => format!("expected-divergent: {outcome}"),
    }
}
