//! CSV and JSON rendering of command results.

use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

/// Rows plus the context needed to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub command: String,
    pub config: Vec<(&'static str, String)>,
    pub notes: Vec<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            command: String::new(),
            config: Vec::new(),
            notes: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# chaostrack {}\n", self.command);
        for (k, v) in &self.config {
            out += &format!("# {k} = {v}\n");
        }
        for n in &self.notes {
            out += &format!("# note: {n}\n");
        }
        out += &self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out += &cells.join(",");
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let config: Map<String, Value> = self
            .config
            .iter()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        let doc = json!({
            "command": self.command,
            "config": config,
            "notes": self.notes,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["g", "lambda_tb"]);
        t.command = "mle".into();
        t.config = vec![("g", "0.2".into())];
        t.note("one");
        t.push(vec![0.1.into(), f64::NAN.into()]);
        t
    }

    #[test]
    fn csv_layout() {
        assert_eq!(
            sample().to_csv(),
            "# chaostrack mle\n# g = 0.2\n# note: one\ng,lambda_tb\n0.1,NaN\n"
        );
    }

    #[test]
    fn json_mirror() {
        let v: Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["columns"], json!(["g", "lambda_tb"]));
        assert_eq!(v["rows"][0], json!([0.1, null]));
        assert_eq!(v["config"]["g"], json!("0.2"));
    }
}
