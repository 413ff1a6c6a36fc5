//! Layered configuration: library defaults, then the JSON config file, then
//! command-line flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub fn load_file(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::Config(format!("{}: config must be a JSON object", path.display()))),
        Err(e) => Err(CliError::Config(format!("{}: {e}", path.display()))),
    }
}

/// Overlays `file` and then `flags` onto `defaults`. Keys unknown to the
/// target type are rejected rather than ignored.
pub fn resolve<T, F>(defaults: T, file: Option<&Map<String, Value>>, flags: &F) -> CliResult<T>
where
    T: Serialize + DeserializeOwned,
    F: Serialize,
{
    let Value::Object(mut merged) = to_value(&defaults)? else {
        return Err(CliError::Config("configuration must serialize to an object".into()));
    };
    let Value::Object(flags) = to_value(flags)? else {
        return Err(CliError::Config("flags must serialize to an object".into()));
    };
    for layer in file.into_iter().chain(std::iter::once(&flags)) {
        for (k, v) in layer {
            if !merged.contains_key(k) {
                let known: Vec<&str> = merged.keys().map(String::as_str).collect();
                return Err(CliError::Config(format!("unknown config key `{k}` (expected one of: {})", known.join(", "))));
            }
            merged.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
}

pub fn to_value<T: Serialize>(t: &T) -> CliResult<Value> {
    serde_json::to_value(t).map_err(|e| CliError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Cfg {
        a: u32,
        b: f64,
        c: Option<usize>,
    }

    #[derive(Serialize)]
    struct Flags {
        #[serde(skip_serializing_if = "Option::is_none")]
        a: Option<u32>,
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file: Map<String, Value> = serde_json::from_str(r#"{"a": 2, "b": 0.5}"#).unwrap();
        let got = resolve(Cfg { a: 1, b: 1.0, c: None }, Some(&file), &Flags { a: Some(7) }).unwrap();
        assert_eq!(got, Cfg { a: 7, b: 0.5, c: None });
        let got = resolve(Cfg { a: 1, b: 1.0, c: None }, Some(&file), &Flags { a: None }).unwrap();
        assert_eq!(got.a, 2);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let file: Map<String, Value> = serde_json::from_str(r#"{"zz": 1}"#).unwrap();
        assert!(resolve(Cfg { a: 1, b: 1.0, c: None }, Some(&file), &Flags { a: None }).is_err());
    }
}
