//! Artifact rendering and delivery.
//!
//! Every floating-point value leaves the process with 17 significant digits
//! so outputs round-trip and identical runs are byte-identical. CSV uses '.'
//! as the decimal mark, ',' as the separator, a header row, and LF line
//! endings. Failures print one JSON object on standard error and map to a
//! stable exit code.

use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Rejected input: bad flags, unparseable or invalid mechanisms, domain errors.
pub const EXIT_VALIDATION: u8 = 2;
/// Verb not in the command tree (sysexits EX_USAGE).
pub const EXIT_UNKNOWN_VERB: u8 = 64;
/// Input or output file could not be read or written (sysexits EX_NOINPUT).
pub const EXIT_IO: u8 = 66;

/// A failure with its exit code and machine-readable diagnostics.
#[derive(Debug)]
pub enum CliError {
    Validation { kind: String, message: String, details: Vec<String> },
    Io { path: PathBuf, message: String },
}

impl CliError {
    /// A flag-level problem the library never sees.
    pub fn validation(message: impl Into<String>) -> Self {
        CliError::Validation {
            kind: "invalid-parameter".to_string(),
            message: message.into(),
            details: Vec::new(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } => EXIT_VALIDATION,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    /// One-line JSON diagnostics for standard error. `details` appears only
    /// when there is a list to show.
    pub fn diagnostics(&self) -> String {
        match self {
            CliError::Validation { kind, message, details } if details.is_empty() => {
                serde_json::json!({ "error": kind, "message": message }).to_string()
            }
            CliError::Validation { kind, message, details } => serde_json::json!({
                "error": kind,
                "message": message,
                "details": details,
            })
            .to_string(),
            CliError::Io { path, message } => serde_json::json!({
                "error": "io",
                "path": path.display().to_string(),
                "message": message,
            })
            .to_string(),
        }
    }
}

impl From<dpa_core::Error> for CliError {
    fn from(e: dpa_core::Error) -> Self {
        CliError::Validation {
            kind: e.kind().to_string(),
            message: e.to_string(),
            details: Vec::new(),
        }
    }
}

/// JSON serializer that widens every finite f64 to 17 significant digits.
/// Non-finite values follow the serde_json convention and become null.
struct SigFigs;

impl serde_json::ser::Formatter for SigFigs {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Render a report as one line of JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigs);
    value.serialize(&mut ser).expect("reports contain no non-serializable values");
    buf.push(b'\n');
    String::from_utf8(buf).expect("the serializer emits UTF-8")
}

/// 17 significant digits for CSV cells; non-finite values print as
/// inf/-inf/nan so numeric readers keep the column type.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// A CSV column: integer cells print bare, float cells via [`fmt_float`].
pub enum Column<'a> {
    Ints(&'a [u32]),
    Floats(&'a [f64]),
}

impl Column<'_> {
    fn len(&self) -> usize {
        match self {
            Column::Ints(v) => v.len(),
            Column::Floats(v) => v.len(),
        }
    }

    fn cell(&self, row: usize) -> String {
        match self {
            Column::Ints(v) => v[row].to_string(),
            Column::Floats(v) => fmt_float(v[row]),
        }
    }
}

/// Assemble equal-length columns into a CSV table.
pub fn csv_table(names: &[&str], columns: &[Column]) -> String {
    assert_eq!(names.len(), columns.len(), "one name per column");
    let rows = columns.first().map_or(0, Column::len);
    assert!(columns.iter().all(|c| c.len() == rows), "columns must have equal length");
    let mut out = names.join(",");
    out.push('\n');
    for row in 0..rows {
        for (i, col) in columns.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&col.cell(row));
        }
        out.push('\n');
    }
    out
}

/// Write the artifact to the sink: standard output by default, otherwise the
/// given path, with relative paths resolved under $DPA_OUT_DIR when set.
/// Missing parent directories are created.
pub fn deliver(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    let Some(path) = out else {
        print!("{text}");
        return Ok(());
    };
    let resolved = resolve_out(path);
    if let Some(parent) = resolved.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io { path: resolved.clone(), message: e.to_string() })?;
        }
    }
    std::fs::write(&resolved, text)
        .map_err(|e| CliError::Io { path: resolved.clone(), message: e.to_string() })
}

fn resolve_out(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os("DPA_OUT_DIR") {
        Some(dir) if !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Read an input file; "-" reads standard input to end.
pub fn read_input(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        io::Read::read_to_string(&mut io::stdin(), &mut text)
            .map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        return Ok(text);
    }
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        assert_eq!(fmt_float(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_float(f64::NAN), "nan");
    }

    #[test]
    fn json_floats_are_widened() {
        #[derive(Serialize)]
        struct S {
            x: f64,
            n: u32,
        }
        assert_eq!(to_json(&S { x: 0.5, n: 3 }), "{\"x\":5.0000000000000000e-1,\"n\":3}\n");
    }

    #[test]
    fn csv_layout() {
        let table = csv_table(
            &["k", "value"],
            &[Column::Ints(&[1, 2]), Column::Floats(&[0.5, f64::INFINITY])],
        );
        assert_eq!(table, "k,value\n1,5.0000000000000000e-1\n2,inf\n");
    }
}
