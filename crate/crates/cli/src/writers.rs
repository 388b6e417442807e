//! Artifact writers. Every CSV starts with a `# schema_version=1` comment
//! line followed by a header row; floats use the shortest round-trip
//! representation so artifacts are byte-stable.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

pub const CSV_SCHEMA_COMMENT: &str = "# schema_version=1";

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create output dir {}: {e}", dir.display())))
}

pub fn write_csv(
    path: &PathBuf,
    extra_comments: &[String],
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> Result<(), CliError> {
    let mut buf = String::new();
    buf.push_str(CSV_SCHEMA_COMMENT);
    buf.push('\n');
    for c in extra_comments {
        buf.push_str("# ");
        buf.push_str(c);
        buf.push('\n');
    }
    buf.push_str(header);
    buf.push('\n');
    for row in rows {
        buf.push_str(&row);
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

pub fn write_json<T: serde::Serialize>(path: &PathBuf, value: &T) -> Result<(), CliError> {
    let mut body = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Io(format!("cannot serialize {}: {e}", path.display())))?;
    body.push(b'\n');
    write_atomic(path, &body)
}

fn write_atomic(path: &PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    f.write_all(bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
