//! CSV tables with `#`-prefixed metadata header and summary footer.

use std::io::Write;

use crate::error::Result;

/// Cell text for a float. Debug formatting round-trips exactly and switches
/// to exponent notation for very large and very small magnitudes.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

/// Empty cell for undefined values.
pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.into(), value.to_string()));
    }

    pub fn summarize(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| csv::Error::from(e);
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}").map_err(io)?;
        }
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.columns)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush().map_err(io)?;
        }
        for (k, v) in &self.summary {
            writeln!(out, "# {k}: {v}").map_err(io)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let mut t = Table::new(&["a", "b"]);
        t.meta("kind", "demo");
        t.push(vec![float(1.0), opt_float(None)]);
        t.push(vec![float(1e-20), "x,y".into()]);
        t.summarize("rows", 2);
        assert_eq!(t.to_csv_string(), "# kind: demo\na,b\n1.0,\n1e-20,\"x,y\"\n# rows: 2\n");
    }
}
