//! Report rows and their CSV, JSON and plot-data renderings.

use std::fmt::Write as _;

use serde_json::{Map, Value as Json};

use crate::LabError;

/// One cell of a report row.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    /// A plain number, never rescaled.
    Num(f64),
    /// An information quantity in nats; `--bits` rescales it.
    Nats(f64),
    Text(String),
    Bool(bool),
    Missing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub fields: Vec<(String, Value)>,
    pub verdicts: Vec<(String, bool)>,
}

impl ReportRow {
    pub fn new(experiment: &str) -> Self {
        ReportRow { experiment: experiment.to_string(), fields: Vec::new(), verdicts: Vec::new() }
    }

    pub fn with(mut self, name: &str, value: Value) -> Self {
        self.fields.push((name.to_string(), value));
        self
    }

    pub fn int(self, name: &str, v: impl TryInto<i64>) -> Self {
        let v = v.try_into().unwrap_or(i64::MAX);
        self.with(name, Value::Int(v))
    }

    pub fn num(self, name: &str, v: f64) -> Self {
        self.with(name, Value::Num(v))
    }

    pub fn nats(self, name: &str, v: f64) -> Self {
        self.with(name, Value::Nats(v))
    }

    pub fn text(self, name: &str, v: impl Into<String>) -> Self {
        self.with(name, Value::Text(v.into()))
    }

    pub fn flag(self, name: &str, v: bool) -> Self {
        self.with(name, Value::Bool(v))
    }

    pub fn verdict(mut self, name: &str, pass: bool) -> Self {
        self.verdicts.push((name.to_string(), pass));
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// Names of failed verdicts.
    pub fn failures(&self) -> Vec<&str> {
        self.verdicts.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.as_str()).collect()
    }
}

/// Which fields of a sweep become plot series.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub x: &'static str,
    pub ys: Vec<&'static str>,
    /// Rows are split into one series per value of this field.
    pub group: Option<&'static str>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
    Plotdata,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "plotdata" => Ok(Format::Plotdata),
            other => Err(format!("unknown format `{other}` (expected csv, json or plotdata)")),
        }
    }
}

/// Round to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn number(v: f64, bits: bool, nats: bool) -> f64 {
    round12(if bits && nats { v / std::f64::consts::LN_2 } else { v })
}

fn to_json(v: &Value, bits: bool) -> Json {
    match v {
        Value::Int(i) => Json::from(*i),
        Value::Num(x) => Json::from(number(*x, bits, false)),
        Value::Nats(x) => Json::from(number(*x, bits, true)),
        Value::Text(s) => Json::from(s.clone()),
        Value::Bool(b) => Json::from(*b),
        Value::Missing => Json::Null,
    }
}

fn csv_cell(v: &Value, bits: bool) -> String {
    match v {
        Value::Missing => String::new(),
        Value::Text(s) => csv_escape(s),
        other => to_json(other, bits).to_string(),
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Reject empty reports and non-finite numbers.
pub fn check_rows(rows: &[ReportRow]) -> Result<(), LabError> {
    if rows.is_empty() {
        return Err(LabError::Usage("nothing to emit: the experiment produced no rows".into()));
    }
    for (i, r) in rows.iter().enumerate() {
        for (name, v) in &r.fields {
            if let Value::Num(x) | Value::Nats(x) = v {
                if !x.is_finite() {
                    return Err(LabError::Core(synergy_core::Error::Numerical(format!(
                        "row {i}: field `{name}` is not finite ({x})"
                    ))));
                }
            }
        }
    }
    Ok(())
}

/// Field and verdict columns in first-seen order.
fn columns(rows: &[ReportRow]) -> (Vec<String>, Vec<String>) {
    let mut fields: Vec<String> = Vec::new();
    let mut verdicts: Vec<String> = Vec::new();
    for r in rows {
        for (n, _) in &r.fields {
            if !fields.contains(n) {
                fields.push(n.clone());
            }
        }
        for (n, _) in &r.verdicts {
            if !verdicts.contains(n) {
                verdicts.push(n.clone());
            }
        }
    }
    (fields, verdicts)
}

pub fn to_csv(rows: &[ReportRow], bits: bool) -> Result<String, LabError> {
    check_rows(rows)?;
    let (fields, verdicts) = columns(rows);
    let mut out = String::new();
    let header: Vec<String> = std::iter::once("experiment".to_string())
        .chain(fields.iter().cloned())
        .chain(verdicts.iter().map(|v| format!("verdict_{v}")))
        .map(|h| csv_escape(&h))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in rows {
        let mut cells = vec![csv_escape(&r.experiment)];
        cells.extend(fields.iter().map(|f| r.get(f).map_or(String::new(), |v| csv_cell(v, bits))));
        cells.extend(verdicts.iter().map(|v| {
            r.verdicts.iter().find(|(n, _)| n == v).map_or(String::new(), |(_, ok)| if *ok { "pass" } else { "fail" }.into())
        }));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn to_json_string(rows: &[ReportRow], bits: bool) -> Result<String, LabError> {
    check_rows(rows)?;
    let (fields, _) = columns(rows);
    let array: Vec<Json> = rows
        .iter()
        .map(|r| {
            let mut obj = Map::new();
            obj.insert("experiment".into(), Json::from(r.experiment.clone()));
            for f in &fields {
                obj.insert(f.clone(), r.get(f).map_or(Json::Null, |v| to_json(v, bits)));
            }
            let verdicts: Map<String, Json> = r.verdicts.iter().map(|(n, ok)| (n.clone(), Json::from(*ok))).collect();
            obj.insert("verdicts".into(), Json::Object(verdicts));
            Json::Object(obj)
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&array).map_err(|e| LabError::Usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn as_number(v: &Value, bits: bool) -> Option<Json> {
    match v {
        Value::Int(i) => Some(Json::from(*i)),
        Value::Num(x) => Some(Json::from(number(*x, bits, false))),
        Value::Nats(x) => Some(Json::from(number(*x, bits, true))),
        Value::Bool(b) => Some(Json::from(u8::from(*b))),
        _ => None,
    }
}

fn label(v: &Value) -> String {
    match v {
        Value::Text(s) => s.clone(),
        other => csv_cell(other, false),
    }
}

/// Blocks of `x y` lines, each headed by `# series: <name>` and separated by
/// a blank line.
pub fn to_plotdata(rows: &[ReportRow], spec: Option<&PlotSpec>, bits: bool) -> Result<String, LabError> {
    check_rows(rows)?;
    let spec = spec.ok_or_else(|| {
        LabError::Usage(format!("experiment `{}` is not a sweep; plotdata is unavailable", rows[0].experiment))
    })?;
    let mut groups: Vec<(Option<String>, Vec<&ReportRow>)> = Vec::new();
    for r in rows {
        let key = spec.group.and_then(|g| r.get(g)).map(label);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut blocks = Vec::new();
    for (key, members) in &groups {
        for y in &spec.ys {
            let name = match key {
                Some(k) => format!("{k} {y}"),
                None => (*y).to_string(),
            };
            let mut block = format!("# series: {name}\n");
            for r in members {
                let (Some(x), Some(v)) = (r.get(spec.x).and_then(|v| as_number(v, bits)), r.get(y).and_then(|v| as_number(v, bits)))
                else {
                    continue;
                };
                let _ = writeln!(block, "{x} {v}");
            }
            blocks.push(block);
        }
    }
    Ok(blocks.join("\n"))
}

pub fn render(rows: &[ReportRow], format: Format, plot: Option<&PlotSpec>, bits: bool) -> Result<String, LabError> {
    match format {
        Format::Csv => to_csv(rows, bits),
        Format::Json => to_json_string(rows, bits),
        Format::Plotdata => to_plotdata(rows, plot, bits),
    }
}
