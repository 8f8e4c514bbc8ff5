//! Tabular and key-value output in CSV or JSON.

use serde_json::{Map, Number, Value};

use crate::args::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) => Number::from_f64(*v).map_or_else(|| Value::String(v.to_string()), Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

/// Shortest round-trip decimal; scientific notation for very small or
/// very large magnitudes.
pub fn float(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Table { columns: Vec<String>, rows: Vec<Vec<Cell>> },
    Record(Vec<(String, Cell)>),
}

impl Output {
    pub fn render(&self, format: Format) -> String {
        match (self, format) {
            (Output::Table { columns, rows }, Format::Csv) => {
                let mut s = columns.join(",");
                s.push('\n');
                for row in rows {
                    let line: Vec<String> = row.iter().map(Cell::csv).collect();
                    s.push_str(&line.join(","));
                    s.push('\n');
                }
                s
            }
            (Output::Table { columns, rows }, Format::Json) => {
                let records: Vec<Value> = rows
                    .iter()
                    .map(|row| {
                        Value::Object(columns.iter().cloned().zip(row.iter().map(Cell::json)).collect::<Map<_, _>>())
                    })
                    .collect();
                pretty(&Value::Array(records))
            }
            (Output::Record(fields), Format::Csv) => {
                let mut s = String::from("key,value\n");
                for (k, v) in fields {
                    s.push_str(&format!("{k},{}\n", v.csv()));
                }
                s
            }
            (Output::Record(fields), Format::Json) => {
                let map: Map<_, _> = fields.iter().map(|(k, v)| (k.clone(), v.json())).collect();
                pretty(&Value::Object(map))
            }
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_precision() {
        let t = Output::Table {
            columns: vec!["a".into(), "b".into()],
            rows: vec![vec![Cell::Float(0.1 + 0.2), Cell::Text("x,y".into())]],
        };
        assert_eq!(t.render(Format::Csv), "a,b\n0.30000000000000004,\"x,y\"\n");
    }

    #[test]
    fn small_values_use_exponent() {
        assert_eq!(float(1.0000000000000006e-7), "1.0000000000000006e-7");
        assert_eq!(float(0.03183098861837909), "0.03183098861837909");
        assert_eq!(float(0.0), "0");
        let v = 6.440347313694698e-5;
        assert_eq!(float(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn record_json_keeps_order() {
        let r = Output::Record(vec![("z".into(), Cell::Int(1)), ("a".into(), Cell::Float(2.5))]);
        assert_eq!(r.render(Format::Json), "{\n  \"z\": 1,\n  \"a\": 2.5\n}\n");
    }
}
