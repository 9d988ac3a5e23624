//! CSV emission and the `<out>.meta.json` sidecar.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use syspred::numeric::format_sig;

use crate::error::CliError;

pub const SIG_DIGITS: usize = 9;

pub fn num(x: f64) -> String {
    format_sig(x, SIG_DIGITS)
}

/// A header row plus data rows, already formatted.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Compute(e.to_string()))
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes the table to `out` (plus a sidecar with `meta`) or to stdout.
pub fn emit(table: &Table, out: Option<&Path>, meta: Value) -> Result<(), CliError> {
    let bytes = table.to_csv()?;
    match out {
        Some(path) => {
            std::fs::write(path, &bytes).map_err(|e| CliError::io(path, e))?;
            let mut doc = json!({ "output": path.file_name().map(|f| f.to_string_lossy()), "rows": table.rows.len() });
            if let (Value::Object(d), Value::Object(m)) = (&mut doc, meta) {
                d.extend(m);
            }
            let side = sidecar_path(path);
            let mut text = serde_json::to_string_pretty(&doc).expect("json value");
            text.push('\n');
            std::fs::write(&side, text).map_err(|e| CliError::io(&side, e))
        }
        None => std::io::stdout()
            .lock()
            .write_all(&bytes)
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}
