//! Report envelope and output.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::{CliError, Opts};

/// `{operation, tolerances, formulas, ...fields}`. `formulas` maps each
/// numeric field to the formula that produced it.
pub fn envelope(operation: &str, opts: &Opts, formulas: &[(&str, &str)], fields: Value) -> Value {
    let mut out = Map::new();
    out.insert("operation".into(), json!(operation));
    out.insert(
        "tolerances".into(),
        json!({ "tol": opts.tol, "gap": opts.gap, "nmax": opts.nmax, "nodes": opts.nodes, "seed": opts.seed }),
    );
    let tags: Map<String, Value> = formulas.iter().map(|(k, v)| ((*k).to_string(), json!(v))).collect();
    out.insert("formulas".into(), Value::Object(tags));
    if let Value::Object(fields) = fields {
        out.extend(fields);
    }
    Value::Object(out)
}

pub fn emit(value: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes") + "\n";
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
