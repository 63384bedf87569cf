//! CSV tables, gnuplot data files and their digests.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A CSV table with a leading `#` line giving the unit of each column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub units: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[(&'static str, &'static str)]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.0).collect(),
            units: columns.iter().map(|c| c.1).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        writeln!(buf, "# units: {}", self.units.join(","))?;
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.columns)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Ok(buf)
    }
}

/// Whitespace-delimited numeric data for one figure panel.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub name: String,
    /// Free-text description placed in the header.
    pub title: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl PlotData {
    pub fn new(name: &str, title: &str, columns: &[&'static str]) -> Self {
        PlotData {
            name: name.to_string(),
            title: title.to_string(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn render(&self) -> Vec<u8> {
        let mut s = format!("# {}\n# {}\n", self.title, self.columns.join(" "));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| num(*v)).collect();
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        s.into_bytes()
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Index entry for one written file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub format: String,
    pub rows: usize,
    pub sha256: String,
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::write(dir.join(name), bytes).with_context(|| format!("writing {}", dir.join(name).display()))
}

/// Write every table and plot file into `dir`.
pub fn write_all(dir: &Path, tables: &[Table], plots: &[PlotData]) -> Result<Vec<OutputRecord>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut out = Vec::new();
    for t in tables {
        let bytes = t.render()?;
        write(dir, &t.name, &bytes)?;
        out.push(OutputRecord {
            file: t.name.clone(),
            format: "csv".into(),
            rows: t.rows.len(),
            sha256: sha256_hex(&bytes),
        });
    }
    for p in plots {
        let bytes = p.render();
        write(dir, &p.name, &bytes)?;
        out.push(OutputRecord {
            file: p.name.clone(),
            format: "dat".into(),
            rows: p.rows.len(),
            sha256: sha256_hex(&bytes),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_units_line_and_header() {
        let mut t = Table::new("x.csv", &[("J", "U"), ("kappa", "1")]);
        t.push(vec![num(0.1), num(-2.5e-7)]);
        let s = String::from_utf8(t.render().unwrap()).unwrap();
        assert_eq!(s, "# units: U,1\nJ,kappa\n0.1,-0.00000025\n");
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 6.02e23, -1e-300, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn plot_header() {
        let mut p = PlotData::new("a.dat", "axes", &["x", "y"]);
        p.rows.push(vec![1.0, 2.5]);
        assert_eq!(String::from_utf8(p.render()).unwrap(), "# axes\n# x y\n1 2.5\n");
    }
}
