use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use pertubox::data::{infer_schema, load_csv, Dataset, Schema};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: missing or contradictory parameters, bad config.
    Usage(String),
    /// Input data or parameters rejected by the library.
    Data(pertubox::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<pertubox::Error> for CliError {
    fn from(e: pertubox::Error) -> Self {
        CliError::Data(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn require<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| usage(format!("missing required parameter --{flag}")))
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(pertubox::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Overlay the explicitly given flags on the `--config` file. Flags that
/// were not given serialize as `null` (or `false` for switches) and leave
/// the file's value in place.
pub fn resolve<P: Serialize + DeserializeOwned>(flags: P, config: Option<&Path>) -> CliResult<P> {
    let Some(path) = config else { return Ok(flags) };
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut merged: Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?;
    let Value::Object(base) = &mut merged else {
        return Err(usage(format!("config {} must be a JSON object", path.display())));
    };
    let Value::Object(given) = serde_json::to_value(&flags).expect("parameters serialize") else {
        unreachable!("parameter blocks are structs")
    };
    for (key, value) in given {
        if !(value.is_null() || value == Value::Bool(false)) {
            base.insert(key, value);
        }
    }
    serde_json::from_value(merged).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
}

pub fn read_schema(path: &Path) -> CliResult<Schema> {
    Ok(Schema::from_json_file(path)?)
}

pub fn guess_schema(csv: &Path) -> CliResult<Schema> {
    let file = File::open(csv).map_err(|e| io_error(csv, e))?;
    Ok(infer_schema(BufReader::new(file))?)
}

/// Load a CSV with the given schema file, or a guessed schema.
pub fn load(csv: &Path, schema: Option<&Path>) -> CliResult<Dataset> {
    let schema = match schema {
        Some(p) => read_schema(p)?,
        None => guess_schema(csv)?,
    };
    Ok(load_csv(csv, &schema)?)
}

/// Write through a temporary file in the target directory and rename it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_error(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report serializes");
    out.push(b'\n');
    out
}

/// Write JSON to `path`, or to standard output when no path is given.
pub fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> CliResult<()> {
    let bytes = to_json(value);
    match path {
        Some(p) => write_atomic(p, &bytes),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

pub fn sidecar_path(output: &Path, explicit: Option<PathBuf>) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let mut s = output.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    })
}
