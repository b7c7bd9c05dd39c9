//! CSV and JSON writers. Every file starts from fixed column lists and
//! contains no timestamps, so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub struct CsvTable {
    text: String,
    columns: usize,
}

impl CsvTable {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        let mut text = format!("# corrgme {kind} schema={SCHEMA_VERSION}\n");
        text.push_str(&columns.join(","));
        text.push('\n');
        Self {
            text,
            columns: columns.len(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.columns);
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            write!(self.text, "{}", format_value(*v)).expect("writing to a String cannot fail");
        }
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, &self.text)
    }
}

/// Round-trip exact, fixed exponent notation.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        // Drops the sign of negative zero.
        "0.0000000000000000e0".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(format!("json serialization: {e}")))?;
    text.push('\n');
    write_file(path, &text)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, text)?;
    log::info!("wrote {}", path.display());
    Ok(())
}
