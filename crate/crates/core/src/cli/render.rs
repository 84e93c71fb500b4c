//! Rendering of a computed table as text, CSV or JSON.

use serde_json::{json, Map, Value};

use super::spec::Format;

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    /// Machine key used in CSV headers and JSON objects.
    pub key: &'static str,
    /// Heading in text tables.
    pub title: &'static str,
}

pub const fn col(key: &'static str, title: &'static str) -> Column {
    Column { key, title }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub label: String,
    pub values: Vec<Option<f64>>,
    pub stderrs: Vec<Option<f64>>,
    pub status: Option<String>,
}

impl Row {
    pub fn new(label: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        let n = values.len();
        Self {
            label: label.into(),
            values,
            stderrs: vec![None; n],
            status: None,
        }
    }

    pub fn with_stderr(mut self, column: usize, stderr: f64) -> Self {
        self.stderrs[column] = Some(stderr);
        self
    }

    pub fn with_status(mut self, status: impl Into<String>) -> Self {
        self.status = Some(status.into());
        self
    }
}

/// One finished result table. Built completely before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub seed: u64,
    pub inputs: Map<String, Value>,
    pub label_title: &'static str,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.to_text(),
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn has_status(&self) -> bool {
        self.rows.iter().any(|r| r.status.is_some())
    }

    fn stderr_columns(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&j| self.rows.iter().any(|r| r.stderrs[j].is_some()))
            .collect()
    }

    fn to_text(&self) -> String {
        let mut out = format!("shp-risk {}  seed={}\n", self.command, self.seed);
        for (k, v) in &self.inputs {
            let v = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("  {k}: {v}\n"));
        }
        let mut header: Vec<String> = vec![self.label_title.to_string()];
        header.extend(self.columns.iter().map(|c| c.title.to_string()));
        let status = self.has_status();
        if status {
            header.push("check".into());
        }
        let mut cells: Vec<Vec<String>> = vec![header];
        for r in &self.rows {
            let mut line = vec![r.label.clone()];
            line.extend(r.values.iter().map(|v| match v {
                Some(x) => text_number(*x),
                None => "-".into(),
            }));
            if status {
                line.push(r.status.clone().unwrap_or_default());
            }
            cells.push(line);
        }
        let ncol = cells[0].len();
        let widths: Vec<usize> = (0..ncol)
            .map(|j| cells.iter().map(|l| l[j].chars().count()).max().unwrap_or(0))
            .collect();
        for line in &cells {
            let mut s = String::new();
            for (j, cell) in line.iter().enumerate() {
                if j == 0 {
                    s.push_str(&format!("{cell:<w$}", w = widths[0]));
                } else {
                    s.push_str(&format!("  {cell:>w$}", w = widths[j]));
                }
            }
            out.push_str(s.trim_end());
            out.push('\n');
        }
        out
    }

    fn to_csv(&self) -> String {
        let se = self.stderr_columns();
        let status = self.has_status();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["label".to_string(), "seed".to_string()];
        header.extend(self.columns.iter().map(|c| c.key.to_string()));
        header.extend(se.iter().map(|&j| format!("{}_stderr", self.columns[j].key)));
        if status {
            header.push("status".into());
        }
        w.write_record(&header).expect("in-memory csv");
        for r in &self.rows {
            let mut rec = vec![r.label.clone(), self.seed.to_string()];
            rec.extend(r.values.iter().map(|v| csv_number(*v)));
            rec.extend(se.iter().map(|&j| csv_number(r.stderrs[j])));
            if status {
                rec.push(r.status.clone().unwrap_or_default());
            }
            w.write_record(&rec).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
    }

    fn to_json(&self) -> String {
        let se = self.stderr_columns();
        let status = self.has_status();
        let mut results = Vec::new();
        let mut stderrs = Vec::new();
        for r in &self.rows {
            let mut res = Map::new();
            res.insert("label".into(), r.label.clone().into());
            for (c, v) in self.columns.iter().zip(&r.values) {
                res.insert(c.key.into(), json_number(*v));
            }
            if status {
                res.insert("status".into(), json!(r.status));
            }
            results.push(Value::Object(res));
            if !se.is_empty() {
                let mut s = Map::new();
                s.insert("label".into(), r.label.clone().into());
                for &j in &se {
                    s.insert(self.columns[j].key.into(), json_number(r.stderrs[j]));
                }
                stderrs.push(Value::Object(s));
            }
        }
        let doc = json!({
            "command": self.command,
            "seed": self.seed,
            "inputs": self.inputs,
            "results": results,
            "stderrs": stderrs,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
        s.push('\n');
        s
    }
}

fn text_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.2}")
    } else {
        x.to_string()
    }
}

fn csv_number(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Non-finite values have no JSON number form and become strings.
fn json_number(v: Option<f64>) -> Value {
    match v {
        Some(x) if x.is_finite() => json!(x),
        Some(x) => Value::String(x.to_string()),
        None => Value::Null,
    }
}
