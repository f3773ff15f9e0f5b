//! Artifact writers. All numeric output is decimal text with 12 significant
//! digits (comma-separated CSV, UTF-8, Unix newlines; JSON numbers rounded to
//! the same precision before serialization) so repeated runs with the same
//! seed compare byte-for-byte.

use serde_json::{Map, Number, Value};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use supertransfer::PropagationResult;

#[derive(Debug, thiserror::Error)]
#[error("cannot write {path}: {source}")]
pub struct OutputError {
    pub path: String,
    #[source]
    pub source: std::io::Error,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError {
        path: path.display().to_string(),
        source,
    }
}

/// 12 significant digits in scientific notation.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        // Avoid the "-0" branch so equal values always print identically.
        return "0.00000000000e0".into();
    }
    format!("{x:.11e}")
}

/// Round to 12 significant decimal digits (for JSON payloads).
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exp = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(11 - exp);
    (x * scale).round() / scale
}

pub fn json_number(x: f64) -> Value {
    Number::from_f64(round_sig(x)).map(Value::Number).unwrap_or(Value::Null)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), OutputError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), OutputError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON serialization");
    text.push('\n');
    write_text(path, &text)
}

/// `populations.csv`: one row per output time with every site population and
/// the donor/acceptor aggregates.
pub fn populations_csv(result: &PropagationResult) -> String {
    let mut out = String::from("time");
    for label in &result.labels {
        out.push(',');
        out.push_str(label);
    }
    out.push_str(",donor_total,acceptor_total\n");
    let donors = result.donor_sites.clone();
    let acceptors = result.acceptor_sites.clone();
    for (k, &t) in result.times.iter().enumerate() {
        out.push_str(&fmt_sig(t));
        let rho = &result.states[k];
        let mut donor_total = 0.0;
        let mut acceptor_total = 0.0;
        for i in 0..rho.nrows() {
            let p = rho[(i, i)].re;
            if donors.contains(&i) {
                donor_total += p;
            }
            if acceptors.contains(&i) {
                acceptor_total += p;
            }
            out.push(',');
            out.push_str(&fmt_sig(p));
        }
        out.push(',');
        out.push_str(&fmt_sig(donor_total));
        out.push(',');
        out.push_str(&fmt_sig(acceptor_total));
        out.push('\n');
    }
    out
}

pub fn write_populations(dir: &Path, result: &PropagationResult) -> Result<PathBuf, OutputError> {
    let path = dir.join("populations.csv");
    write_text(&path, &populations_csv(result))?;
    Ok(path)
}

pub fn obj(entries: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    for (k, v) in entries {
        map.insert(k.to_string(), v);
    }
    Value::Object(map)
}
