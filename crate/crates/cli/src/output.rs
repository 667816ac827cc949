//! Rendering of JSON values as json, text or csv reports.

use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Text,
    Csv,
}

pub fn render(v: &Value, format: Format) -> String {
    match format {
        // Scalars and flat arrays stay on one line.
        Format::Json if is_flat(v) => serde_json::to_string(v).expect("serializable") + "\n",
        Format::Json => serde_json::to_string_pretty(v).expect("serializable") + "\n",
        Format::Text => {
            let mut out = String::new();
            text(v, 0, &mut out);
            if !out.ends_with('\n') {
                out.push('\n');
            }
            out
        }
        Format::Csv => {
            let mut rows = Vec::new();
            flatten(v, String::new(), &mut rows);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["path", "value"]).expect("in-memory write");
            for (p, x) in rows {
                w.write_record([p, x]).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
        }
    }
}

/// Six significant digits; integral values keep a trailing `.0`.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.0".into();
    }
    let e = x.abs().log10().floor() as i32;
    if (-4..5).contains(&e) {
        let s = format!("{:.*}", (5 - e) as usize, x);
        let s = s.trim_end_matches('0');
        if s.ends_with('.') {
            format!("{s}0")
        } else {
            s.to_string()
        }
    } else {
        let s = format!("{x:.5e}");
        let (m, exp) = s.split_once('e').expect("scientific");
        let m = m.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{exp}")
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("null".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) if n.is_f64() => Some(sig6(n.as_f64().expect("f64"))),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Array(a) => a.iter().all(|x| scalar(x).is_some()),
        _ => scalar(v).is_some(),
    }
}

fn inline(v: &Value) -> String {
    match v {
        Value::Array(a) => format!("[{}]", a.iter().map(|x| scalar(x).expect("flat")).collect::<Vec<_>>().join(",")),
        _ => scalar(v).expect("flat"),
    }
}

fn text(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                if is_flat(x) {
                    out.push_str(&format!("{pad}{k}: {}\n", inline(x)));
                } else {
                    out.push_str(&format!("{pad}{k}:\n"));
                    text(x, indent + 1, out);
                }
            }
        }
        Value::Array(a) if !is_flat(v) => {
            for x in a {
                if is_flat(x) {
                    out.push_str(&format!("{pad}- {}\n", inline(x)));
                } else {
                    out.push_str(&format!("{pad}-\n"));
                    text(x, indent + 1, out);
                }
            }
        }
        _ => out.push_str(&format!("{pad}{}\n", inline(v))),
    }
}

fn flatten(v: &Value, path: String, rows: &mut Vec<(String, String)>) {
    let join = |k: &str| if path.is_empty() { k.to_string() } else { format!("{path}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, x)| flatten(x, join(k), rows)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| flatten(x, join(&i.to_string()), rows)),
        Value::String(s) => rows.push((path, s.clone())),
        other => rows.push((path, other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(1.0), "1.0");
        assert_eq!(sig6(-2.0), "-2.0");
        assert_eq!(sig6(1.23456789), "1.23457");
        assert_eq!(sig6(123456.7), "1.23457e5");
        assert_eq!(sig6(0.000123456789), "0.000123457");
        assert_eq!(sig6(1.5e-7), "1.5e-7");
        assert_eq!(sig6(0.0), "0.0");
        assert_eq!(sig6(99999.97), "100000.0");
        assert_eq!(sig6(12345.67), "12345.7");
    }

    #[test]
    fn text_and_csv_layouts() {
        let v = json!({"dims": [2, 1, 2], "ok": true, "inner": {"x": 0.5}});
        assert_eq!(render(&v, Format::Text), "dims: [2,1,2]\ninner:\n  x: 0.5\nok: true\n");
        assert_eq!(render(&v, Format::Csv), "path,value\ndims.0,2\ndims.1,1\ndims.2,2\ninner.x,0.5\nok,true\n");
        assert_eq!(render(&json!([2, 1, 2]), Format::Text), "[2,1,2]\n");
    }
}
