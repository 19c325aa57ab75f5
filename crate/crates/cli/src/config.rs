//! `--config` handling: a JSON object whose keys mirror the long flag names.
//! Explicit flags override the file; unknown keys are rejected.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::{Cli, CliError, Common, Format};

pub fn load(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::Usage("--config: expected a JSON object".into())),
        Err(e) => Err(CliError::Usage(format!("--config: {e}"))),
    }
}

/// Pulls `seed`, `format` and `output` out of the file config.
pub fn common(cli: &Cli, file: &mut Map<String, Value>) -> Result<Common, CliError> {
    fn take<T: DeserializeOwned>(file: &mut Map<String, Value>, key: &str) -> Result<Option<T>, CliError> {
        file.remove(key)
            .map(|v| serde_json::from_value(v).map_err(|e| CliError::Usage(format!("config key `{key}`: {e}"))))
            .transpose()
    }
    let seed = take::<u64>(file, "seed")?;
    let format = take::<Format>(file, "format")?;
    let output = take::<std::path::PathBuf>(file, "output")?;
    Ok(Common {
        seed: cli.seed.or(seed).unwrap_or(0),
        format: cli.format.or(format).unwrap_or(Format::Csv),
        output: cli.output.clone().or(output),
    })
}

/// Overlays the explicitly given flags on the file config and re-reads the
/// result, so that unknown or ill-typed keys surface as usage errors.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, mut file: Map<String, Value>) -> Result<T, CliError> {
    if let Value::Object(given) = serde_json::to_value(flags).expect("flag structs serialize") {
        for (k, v) in given {
            file.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(file)).map_err(|e| CliError::Usage(format!("config: {e}")))
}

/// A required value that may come from either a flag or the config file.
pub fn need<T: Clone>(v: &Option<T>, flag: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
}

pub fn is_false(b: &bool) -> bool {
    !*b
}
