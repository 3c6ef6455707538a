//! Column-labelled result tables.
//!
//! Experiments hand their output around as a [`Table`]: a header plus rows of
//! typed cells. One type keeps the CLI's CSV emission, the acceptance checks,
//! and ad-hoc inspection in tests from each growing their own row format.

use std::fmt;

/// A single cell. Integers and floats stay typed so CSV output can format
/// them canonically (floats use Rust's shortest round-trip representation).
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Str(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v}"),
            Cell::Str(v) => write!(f, "{v}"),
        }
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_owned())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Str(v)
    }
}

/// Rows under a fixed header. Row width is enforced at insertion.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>, I: IntoIterator<Item = S>>(columns: I) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row. Panics if the width differs from the header; that is a
    /// programming error in the experiment, not a runtime condition.
    pub fn push<C: Into<Cell>, I: IntoIterator<Item = C>>(&mut self, row: I) {
        let row: Vec<Cell> = row.into_iter().map(Into::into).collect();
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width {} does not match header width {}",
            row.len(),
            self.columns.len()
        );
        self.rows.push(row);
    }

    /// Appends an already-typed row for callers mixing cell types.
    pub fn push_cells(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Index of a named column. Panics on an unknown name so test code can
    /// address columns without unwrap noise.
    pub fn col(&self, name: &str) -> usize {
        self.columns
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("no column named {name:?}"))
    }

    /// The values of a named column as f64 (integers widen, strings panic).
    pub fn f64_column(&self, name: &str) -> Vec<f64> {
        let idx = self.col(name);
        self.rows
            .iter()
            .map(|r| match &r[idx] {
                Cell::Int(v) => *v as f64,
                Cell::Float(v) => *v,
                Cell::Str(s) => panic!("column {name:?} holds a string: {s:?}"),
            })
            .collect()
    }

    /// Serializes as CSV: header line, one line per row, `\n` endings.
    ///
    /// Cells containing commas, quotes, or newlines are double-quoted with
    /// embedded quotes doubled. Numeric cells never need quoting.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut write_line = |fields: &mut dyn Iterator<Item = String>| {
            let mut first = true;
            for field in fields {
                if !first {
                    out.push(',');
                }
                first = false;
                if field.contains([',', '"', '\n', '\r']) {
                    out.push('"');
                    out.push_str(&field.replace('"', "\"\""));
                    out.push('"');
                } else {
                    out.push_str(&field);
                }
            }
            out.push('\n');
        };
        write_line(&mut self.columns.iter().cloned());
        for row in &self.rows {
            write_line(&mut row.iter().map(|c| c.to_string()));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_float_shortest_form() {
        let mut t = Table::new(["d", "p"]);
        t.push([Cell::Float(250.0), Cell::Float(0.5)]);
        t.push([Cell::Float(0.1), Cell::Float(1e-9)]);
        assert_eq!(t.to_csv(), "d,p\n250,0.5\n0.1,0.000000001\n");
    }

    #[test]
    fn csv_quotes_awkward_strings() {
        let mut t = Table::new(["name", "n"]);
        t.push_cells(vec![Cell::Str("a,b".into()), Cell::Int(1)]);
        t.push_cells(vec![Cell::Str("say \"hi\"".into()), Cell::Int(2)]);
        assert_eq!(t.to_csv(), "name,n\n\"a,b\",1\n\"say \"\"hi\"\"\",2\n");
    }

    #[test]
    fn column_lookup() {
        let mut t = Table::new(["x", "y"]);
        t.push([1.0, 2.0]);
        t.push([3.0, 4.0]);
        assert_eq!(t.f64_column("y"), vec![2.0, 4.0]);
        assert_eq!(t.col("x"), 0);
        assert_eq!(t.len(), 2);
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn width_mismatch_panics() {
        let mut t = Table::new(["a", "b"]);
        t.push([1.0]);
    }
}
