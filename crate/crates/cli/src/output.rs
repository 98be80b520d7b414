//! Output plumbing: JSON/CSV writing with optional run metadata.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub generated_at: String,
    pub tool: &'static str,
    pub version: &'static str,
}

impl Meta {
    pub fn now(no_meta: bool) -> Option<Meta> {
        if no_meta {
            None
        } else {
            Some(Meta {
                generated_at: chrono::Utc::now().to_rfc3339(),
                tool: "harvest",
                version: env!("CARGO_PKG_VERSION"),
            })
        }
    }
}

pub fn write_text(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::config(format!("cannot write stdout: {e}")))
        }
    }
}

pub fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::numeric(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_text(out, &text)
}

/// Assemble a CSV document: optional meta comment lines, a header, and rows
/// rendered with the shortest round-trip float format.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(meta: &Option<Meta>, header: &[&str]) -> Csv {
        let mut buf = String::new();
        if let Some(m) = meta {
            buf.push_str(&format!(
                "# generated_at={} tool={} version={}\n",
                m.generated_at, m.tool, m.version
            ));
        }
        buf.push_str(&header.join(","));
        buf.push('\n');
        Csv { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self, out: Option<&Path>) -> Result<(), CliError> {
        write_text(out, &self.buf)
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}
