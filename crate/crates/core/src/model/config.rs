//! JSON network configuration files.
//!
//! ```json
//! { "a": 1, "b": 1, "c": 5, "d": 2,
//!   "input_resolution": 224, "num_classes": 1000, "ablate_igc_to_gc": false }
//! ```
//!
//! `input_resolution` defaults to 224, `num_classes` to 1000 and
//! `ablate_igc_to_gc` to false. Unknown fields are rejected.

use super::NetworkConfig;
use crate::error::{Error, Result};

pub fn serialize_config(cfg: &NetworkConfig) -> String {
    // plain struct of integers and a bool; serialisation cannot fail
    serde_json::to_string_pretty(cfg).expect("config serialises")
}

/// Parses and validates a config document. Errors carry the line and column.
pub fn parse_config(text: &str) -> Result<NetworkConfig> {
    // serde would also accept a positional array for a struct
    if let Some((offset, ch)) = text.char_indices().find(|(_, c)| !c.is_whitespace()) {
        if ch != '{' {
            let line = text[..offset].matches('\n').count() + 1;
            let column = offset - text[..offset].rfind('\n').map_or(0, |i| i + 1) + 1;
            return Err(Error::Config(format!(
                "line {line}, column {column}: expected a JSON object, found {ch:?}"
            )));
        }
    }
    let cfg: NetworkConfig = serde_json::from_str(text).map_err(|e| {
        Error::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}
