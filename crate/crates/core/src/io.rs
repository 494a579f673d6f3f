//! Input documents and deterministic report serialization.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt::Write as _;
use std::path::Path;

use crate::covariance::CovMat4;
use crate::error::{Error, Result};
use crate::linalg::{Mat4, Vec4};
use crate::tolerance::Tolerances;

/// The only accepted unit convention: hbar = 1, vacuum covariance I/2.
pub const CONVENTION: &str = "hbar1-vacuum-half";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDocument {
    pub convention: String,
    #[serde(default)]
    pub label: Option<String>,
    /// Row-major, quadrature order `(x_A, p_A, x_B, p_B)`.
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub mean: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Json,
    Toml,
}

impl InputFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "json" => Some(Self::Json),
            "toml" => Some(Self::Toml),
            _ => None,
        }
    }
}

impl InputDocument {
    pub fn new(label: Option<String>, v: &CovMat4) -> Self {
        let mean = v.mean();
        Self {
            convention: CONVENTION.into(),
            label,
            matrix: v.rows().iter().map(|r| r.to_vec()).collect(),
            mean: (mean.norm() > 0.0).then(|| mean.iter().copied().collect()),
        }
    }

    /// Parses JSON or TOML; with no format hint, JSON is tried first.
    pub fn parse(text: &str, format: Option<InputFormat>) -> Result<Self> {
        let json = || serde_json::from_str::<Self>(text).map_err(|e| Error::Parse(format!("json: {e}")));
        let toml = || toml::from_str::<Self>(text).map_err(|e| Error::Parse(format!("toml: {e}")));
        match format {
            Some(InputFormat::Json) => json(),
            Some(InputFormat::Toml) => toml(),
            None => json().or_else(|je| toml().map_err(|te| Error::Parse(format!("{je}; {te}")))),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text, InputFormat::from_path(path))
    }

    pub fn covariance(&self, tol: &Tolerances) -> Result<CovMat4> {
        if self.convention != CONVENTION {
            return Err(Error::Parse(format!(
                "convention tag {:?} is not {CONVENTION:?}",
                self.convention
            )));
        }
        if self.matrix.len() != 4 || self.matrix.iter().any(|r| r.len() != 4) {
            let shape: Vec<usize> = self.matrix.iter().map(Vec::len).collect();
            return Err(Error::Parse(format!("matrix must be 4x4, got row lengths {shape:?}")));
        }
        let m = Mat4::from_fn(|i, j| self.matrix[i][j]);
        let v = CovMat4::with_tolerances(m, tol)?;
        match &self.mean {
            None => Ok(v),
            Some(mean) if mean.len() == 4 => {
                let mean = Vec4::from_column_slice(mean);
                if mean.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite);
                }
                Ok(v.with_mean(mean))
            }
            Some(mean) => Err(Error::Parse(format!("mean must have 4 entries, got {}", mean.len()))),
        }
    }
}

/// Formats a float with 17 significant digits, or `null` if not finite.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // The floor above can be off by one next to powers of ten.
        let digits = s.chars().filter(char::is_ascii_digit).collect::<String>();
        let significant = digits.trim_start_matches('0').len();
        if significant == 17 || (significant == 18 && decimals > 0) {
            let d = if significant == 18 { decimals - 1 } else { decimals };
            return format!("{x:.d$}");
        }
        s
    } else {
        format!("{x:.16e}")
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) => write!(out, "{i}").unwrap(),
            (_, Some(u), _) => write!(out, "{u}").unwrap(),
            (_, _, Some(f)) => out.push_str(&format_number(f)),
            _ => out.push_str("null"),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            let flat = items.iter().all(|x| !x.is_array() && !x.is_object());
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if flat {
                    if i > 0 {
                        out.push(' ');
                    }
                } else {
                    out.push('\n');
                    pad(out, indent + 2);
                }
                write_value(out, item, indent + 2);
            }
            if !flat {
                out.push('\n');
                pad(out, indent);
            }
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push('\n');
                pad(out, indent + 2);
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push_str(": ");
                write_value(out, item, indent + 2);
            }
            out.push('\n');
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Pretty JSON with every float at 17 significant digits, so equal inputs
/// give byte-identical output.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::InvalidArgument(format!("serialization: {e}")))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

/// Row-major nested arrays for report output.
pub fn mat_rows(m: &Mat4) -> [[f64; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TMSV_JSON: &str = r#"{
        "convention": "hbar1-vacuum-half",
        "label": "vacuum",
        "matrix": [[0.5,0,0,0],[0,0.5,0,0],[0,0,0.5,0],[0,0,0,0.5]]
    }"#;

    #[test]
    fn parses_json_and_toml() {
        let doc = InputDocument::parse(TMSV_JSON, None).unwrap();
        assert_eq!(doc.covariance(&Tolerances::default()).unwrap(), CovMat4::vacuum());
        let toml = "convention = \"hbar1-vacuum-half\"\nmatrix = [[0.5,0,0,0],[0,0.5,0,0],[0,0,0.5,0],[0,0,0,0.5]]\nmean = [1,0,0,0]\n";
        let doc = InputDocument::parse(toml, Some(InputFormat::Toml)).unwrap();
        let v = doc.covariance(&Tolerances::default()).unwrap();
        assert_eq!(v.mean()[0], 1.0);
        assert_eq!(InputDocument::parse(toml, None).unwrap(), doc);
    }

    #[test]
    fn rejects_bad_documents() {
        let tol = Tolerances::default();
        let three = r#"{"convention":"hbar1-vacuum-half","matrix":[[1,0,0],[0,1,0],[0,0,1]]}"#;
        assert!(matches!(InputDocument::parse(three, None).unwrap().covariance(&tol), Err(Error::Parse(_))));
        let untagged = r#"{"convention":"hbar2","matrix":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}"#;
        assert!(matches!(InputDocument::parse(untagged, None).unwrap().covariance(&tol), Err(Error::Parse(_))));
        assert!(InputDocument::parse("{\"matrix\": [[1]]}", None).is_err());
        assert!(InputDocument::parse("not a document", None).is_err());
    }

    #[test]
    fn round_trips_through_document() {
        let v = CovMat4::tmsv(0.7).with_mean(Vec4::new(0.1, 0.0, -0.2, 0.3));
        let doc = InputDocument::new(Some("t".into()), &v);
        let text = to_json(&doc).unwrap();
        let back = InputDocument::parse(&text, None).unwrap().covariance(&Tolerances::default()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn numbers_have_seventeen_digits() {
        for x in [1.0 / 3.0, 2.336_909_3, 1e-7, 123456.789, -0.5, 1e20, 9.999_999_999_999_999e-1] {
            let s = format_number(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let mantissa = s.split('e').next().unwrap();
            let digits = mantissa.chars().filter(char::is_ascii_digit).collect::<String>();
            assert_eq!(digits.trim_start_matches('0').len(), 17, "{s}");
        }
        assert_eq!(format_number(f64::NAN), "null");
        assert_eq!(format_number(0.0), "0.0");
    }
}
