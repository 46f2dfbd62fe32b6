use std::io::Write;

use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Jsonl,
    Tsv,
}

/// Writes one record per line. TSV output flattens nested objects into
/// dotted column names and joins arrays with commas; the header comes from
/// the first record.
pub struct Emitter<W: Write> {
    out: W,
    format: Format,
    columns: Option<Vec<String>>,
}

impl<W: Write> Emitter<W> {
    pub fn new(out: W, format: Format) -> Self {
        Emitter {
            out,
            format,
            columns: None,
        }
    }

    pub fn emit(&mut self, record: &Value) -> std::io::Result<()> {
        match self.format {
            Format::Jsonl => {
                serde_json::to_writer(&mut self.out, record)?;
                writeln!(self.out)
            }
            Format::Tsv => {
                let mut flat = Vec::new();
                flatten("", record, &mut flat);
                if self.columns.is_none() {
                    let names: Vec<String> = flat.iter().map(|(k, _)| k.clone()).collect();
                    writeln!(self.out, "{}", names.join("\t"))?;
                    self.columns = Some(names);
                }
                let cols = self.columns.as_ref().unwrap();
                let cells: Vec<String> = cols
                    .iter()
                    .map(|c| {
                        flat.iter()
                            .find(|(k, _)| k == c)
                            .map(|(_, v)| v.clone())
                            .unwrap_or_default()
                    })
                    .collect();
                writeln!(self.out, "{}", cells.join("\t"))
            }
        }
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => flatten_map(prefix, map, out),
        _ => out.push((prefix.to_string(), cell(v))),
    }
}

fn flatten_map(prefix: &str, map: &Map<String, Value>, out: &mut Vec<(String, String)>) {
    for (k, v) in map {
        let name = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        flatten(&name, v, out);
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(xs) => xs.iter().map(cell).collect::<Vec<_>>().join(","),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn tsv_flattens() {
        let mut buf = Vec::new();
        let mut e = Emitter::new(&mut buf, Format::Tsv);
        e.emit(&json!({"a": [1, 2], "b": {"c": 3}})).unwrap();
        e.emit(&json!({"a": [4], "b": {"c": 5}})).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a\tb.c\n1,2\t3\n4\t5\n");
    }

    #[test]
    fn jsonl_one_line_per_record() {
        let mut buf = Vec::new();
        let mut e = Emitter::new(&mut buf, Format::Jsonl);
        e.emit(&json!({"x": 1})).unwrap();
        e.emit(&json!({"x": 2})).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "{\"x\":1}\n{\"x\":2}\n");
    }
}
