use std::collections::BTreeMap;
use std::fmt::Write as _;

use linmod::ols::TestResult;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone)]
pub struct Coef {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub statistic: f64,
    pub p_value: f64,
}

impl Coef {
    pub fn new(name: &str, estimate: f64, se: f64, test: Option<&TestResult>) -> Self {
        let (statistic, p_value) = test.map_or((f64::NAN, f64::NAN), |t| (t.statistic, t.p_value));
        Self { name: name.to_string(), estimate, se, statistic, p_value }
    }

    pub fn bare(name: &str, estimate: f64) -> Self {
        Self::new(name, estimate, f64::NAN, None)
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub model_kind: String,
    pub coefficients: Vec<Coef>,
    pub covariance_kind: Option<String>,
    pub fit_stats: BTreeMap<String, f64>,
    pub diagnostics: Map<String, Value>,
    pub warnings: Vec<String>,
    /// Column label for the text table, e.g. `t value`.
    pub stat_label: &'static str,
}

/// Rounds to 10 significant digits; non-finite values become null.
pub fn num(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{v:.9e}").parse().unwrap_or(v);
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

pub fn nums<I: IntoIterator<Item = f64>>(values: I) -> Value {
    Value::Array(values.into_iter().map(num).collect())
}

impl Report {
    pub fn new(model_kind: &str) -> Self {
        Self {
            model_kind: model_kind.to_string(),
            coefficients: Vec::new(),
            covariance_kind: None,
            fit_stats: BTreeMap::new(),
            diagnostics: Map::new(),
            warnings: Vec::new(),
            stat_label: "statistic",
        }
    }

    pub fn stat(&mut self, key: &str, value: f64) {
        self.fit_stats.insert(key.to_string(), value);
    }

    pub fn diag(&mut self, key: &str, value: Value) {
        self.diagnostics.insert(key.to_string(), value);
    }

    pub fn to_json(&self) -> Value {
        let mut out = Map::new();
        out.insert("model_kind".into(), Value::String(self.model_kind.clone()));
        let coefs = self
            .coefficients
            .iter()
            .map(|c| {
                let mut m = Map::new();
                m.insert("name".into(), Value::String(c.name.clone()));
                m.insert("estimate".into(), num(c.estimate));
                m.insert("se".into(), num(c.se));
                m.insert("statistic".into(), num(c.statistic));
                m.insert("p_value".into(), num(c.p_value));
                Value::Object(m)
            })
            .collect();
        out.insert("coefficients".into(), Value::Array(coefs));
        out.insert(
            "covariance_kind".into(),
            self.covariance_kind.clone().map_or(Value::Null, Value::String),
        );
        let stats = self.fit_stats.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
        out.insert("fit_stats".into(), Value::Object(stats));
        if !self.diagnostics.is_empty() {
            out.insert("diagnostics".into(), Value::Object(self.diagnostics.clone()));
        }
        out.insert(
            "warnings".into(),
            Value::Array(self.warnings.iter().cloned().map(Value::String).collect()),
        );
        Value::Object(out)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => pretty(&self.to_json()),
            Format::Text => self.to_text(),
        }
    }

    fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model: {}", self.model_kind);
        if let Some(k) = &self.covariance_kind {
            let _ = writeln!(s, "covariance: {k}");
        }
        if !self.coefficients.is_empty() {
            let w = self.coefficients.iter().map(|c| c.name.len()).max().unwrap_or(0).max(4);
            let p_label = match self.stat_label {
                "t value" => "Pr(>|t|)",
                "z value" => "Pr(>|z|)",
                _ => "p value",
            };
            let _ = writeln!(s, "\n{:w$} {:>12} {:>12} {:>12} {:>12}", "", "Estimate", "Std. Error", self.stat_label, p_label);
            for c in &self.coefficients {
                let _ = writeln!(
                    s,
                    "{:w$} {:>12} {:>12} {:>12} {:>12}",
                    c.name,
                    text_num(c.estimate),
                    text_num(c.se),
                    text_num(c.statistic),
                    text_num(c.p_value)
                );
            }
        }
        if !self.fit_stats.is_empty() {
            s.push('\n');
            let w = self.fit_stats.keys().map(String::len).max().unwrap_or(0);
            for (k, v) in &self.fit_stats {
                let _ = writeln!(s, "{k:w$}  {}", text_stat(*v));
            }
        }
        for (k, v) in &self.diagnostics {
            s.push('\n');
            text_value(&mut s, k, v, 0);
        }
        if !self.warnings.is_empty() {
            s.push_str("\nwarnings:\n");
            for w in &self.warnings {
                let _ = writeln!(s, "  {w}");
            }
        }
        s
    }
}

/// Two-space indented JSON with a trailing newline.
pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_else(|_| "null".into());
    s.push('\n');
    s
}

pub fn error_json(kind: &str, message: &str, exit_code: u8) -> String {
    let mut e = Map::new();
    e.insert("kind".into(), Value::String(kind.into()));
    e.insert("message".into(), Value::String(message.into()));
    e.insert("exit_code".into(), Value::from(exit_code));
    let mut out = Map::new();
    out.insert("error".into(), Value::Object(e));
    pretty(&Value::Object(out))
}

fn text_num(v: f64) -> String {
    if v.is_nan() {
        return "NA".into();
    }
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e7).contains(&a) {
        format!("{v:.4e}")
    } else {
        format!("{v:.6}")
    }
}

/// Counts print without decimals.
fn text_stat(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        text_num(v)
    }
}

fn text_scalar(v: &Value) -> String {
    match v {
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), text_stat),
        Value::Null => "NA".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Objects whose members are equal-length arrays print as a table; other
/// objects recurse, arrays print inline.
fn text_value(s: &mut String, key: &str, v: &Value, indent: usize) {
    let pad = " ".repeat(indent);
    match v {
        Value::Object(m) if is_table(m) => {
            let _ = writeln!(s, "{pad}{key}:");
            let cols: Vec<(&String, &Vec<Value>)> =
                m.iter().filter_map(|(k, v)| v.as_array().map(|a| (k, a))).collect();
            let rows = cols[0].1.len();
            let cells: Vec<Vec<String>> =
                cols.iter().map(|(_, a)| a.iter().map(text_scalar).collect()).collect();
            let widths: Vec<usize> = cols
                .iter()
                .zip(&cells)
                .map(|((k, _), c)| c.iter().map(String::len).chain([k.len()]).max().unwrap_or(0))
                .collect();
            let header: Vec<String> = cols.iter().zip(&widths).map(|((k, _), w)| format!("{k:>w$}")).collect();
            let _ = writeln!(s, "{pad}  {}", header.join(" "));
            for r in 0..rows {
                let line: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{:>w$}", c[r])).collect();
                let _ = writeln!(s, "{pad}  {}", line.join(" "));
            }
        }
        Value::Object(m) => {
            let _ = writeln!(s, "{pad}{key}:");
            for (k, v) in m {
                text_value(s, k, v, indent + 2);
            }
        }
        Value::Array(a) => {
            let items: Vec<String> = a.iter().map(text_scalar).collect();
            let _ = writeln!(s, "{pad}{key}: [{}]", items.join(", "));
        }
        scalar => {
            let _ = writeln!(s, "{pad}{key}: {}", text_scalar(scalar));
        }
    }
}

fn is_table(m: &Map<String, Value>) -> bool {
    let lens: Vec<Option<usize>> = m
        .values()
        .map(|v| v.as_array().filter(|a| a.iter().all(|x| !x.is_array() && !x.is_object())).map(Vec::len))
        .collect();
    !lens.is_empty() && lens.iter().all(|l| l.is_some() && *l == lens[0]) && lens[0] != Some(0)
}
