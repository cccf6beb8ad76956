//! Column tables and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

/// Equal-length named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<Column>,
}

impl Table {
    pub fn new() -> Self {
        Table { columns: Vec::new() }
    }

    pub fn with(mut self, name: &str, values: Vec<f64>) -> Self {
        debug_assert!(self.columns.first().is_none_or(|c| c.values.len() == values.len()));
        self.columns.push(Column {
            name: name.to_string(),
            values,
        });
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    /// Header row, then values with nine significant digits.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .expect("in-memory write");
        for i in 0..self.rows() {
            w.write_record(self.columns.iter().map(|c| format!("{:.8e}", c.values[i])))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("finite table serializes") + "\n"
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn parse_csv(text: &str) -> CliResult<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = r.headers().map_err(|e| CliError::config(e.to_string()))?.clone();
        let mut columns: Vec<Column> = headers
            .iter()
            .map(|h| Column {
                name: h.to_string(),
                values: Vec::new(),
            })
            .collect();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| CliError::config(e.to_string()))?;
            for (c, field) in columns.iter_mut().zip(rec.iter()) {
                let v: f64 = field
                    .parse()
                    .map_err(|_| CliError::config(format!("row {}: `{field}` is not a number", i + 1)))?;
                c.values.push(v);
            }
        }
        Ok(Table { columns })
    }

    /// Reads CSV or, for a `.json` extension, the JSON table form.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let t = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
        } else {
            Self::parse_csv(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
        };
        Ok(t)
    }
}

impl Default for Table {
    fn default() -> Self {
        Self::new()
    }
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_table(dir: &Path, stem: &str, table: &Table, format: Format) -> CliResult<PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    write_atomic(&path, table.render(format).as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let t = Table::new()
            .with("x", vec![0.0, 1.5e-9, -3.0])
            .with("y", vec![1.0 / 3.0, 2.0, 1e20]);
        let text = t.to_csv();
        assert!(text.starts_with("x,y\n"));
        assert!(text.contains("3.33333333e-1"));
        let back = Table::parse_csv(&text).unwrap();
        assert_eq!(back.column("x").unwrap(), &[0.0, 1.5e-9, -3.0]);
        assert!((back.column("y").unwrap()[0] - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let t = Table::new().with("a", vec![1.0, 2.0]);
        let back: Table = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn comments_and_bad_numbers() {
        let t = Table::parse_csv("# note\na,b\n1,2\n").unwrap();
        assert_eq!(t.rows(), 1);
        let err = Table::parse_csv("a,b\n1,x\n").unwrap_err();
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/f.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
