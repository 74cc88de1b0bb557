//! CSV tables and JSON summaries written once at the end of a command.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

pub const TOOL: &str = concat!("qgraph ", env!("CARGO_PKG_VERSION"));

/// Parameter echo, kept in insertion order for the CSV comment line.
#[derive(Debug, Clone, Default)]
pub struct Params(Vec<(String, String)>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in &self.0 {
            m.insert(k.clone(), Value::String(v.clone()));
        }
        Value::Object(m)
    }

    fn line(&self, command: &str) -> String {
        let mut s = format!("# {TOOL} {command}");
        for (k, v) in &self.0 {
            let _ = write!(s, " {k}={v}");
        }
        s
    }
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self::with_header(header.iter().map(|h| h.to_string()).collect())
    }

    pub fn with_header(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    fn render(&self, meta: &str) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s.push_str(meta);
        s.push('\n');
        s
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn fval(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn out_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os("QGRAPH_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

pub struct Report {
    pub stem: String,
    pub command: String,
    pub params: Params,
    pub table: Table,
    pub summary: Value,
}

impl Report {
    pub fn write(&self, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{}.csv", self.stem));
        let js = dir.join(format!("{}.json", self.stem));
        std::fs::write(&csv, self.table.render(&self.params.line(&self.command)))?;
        let doc = json!({
            "tool": TOOL,
            "command": self.command,
            "parameters": self.params.json(),
            "rows": self.table.len(),
            "summary": self.summary,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("summary serialises");
        text.push('\n');
        std::fs::write(&js, text)?;
        Ok((csv, js))
    }
}
