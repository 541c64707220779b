use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// A named CSV table, written as `<name>.csv`.
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Shortest representation that parses back to the same f64.
pub fn fmt(x: f64) -> String {
    format!("{x:?}")
}

/// Writes every table into `dir`, returning the paths.
pub fn write_dir(dir: &Path, tables: &[Table]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    tables
        .iter()
        .map(|t| {
            let path = dir.join(format!("{}.csv", t.name));
            let file = std::fs::File::create(&path)
                .with_context(|| format!("creating {}", path.display()))?;
            t.write_to(std::io::BufWriter::new(file))?;
            Ok(path)
        })
        .collect()
}

/// The first table goes to stdout, any others to stderr.
pub fn write_streams(tables: &[Table]) -> Result<()> {
    let mut iter = tables.iter();
    if let Some(first) = iter.next() {
        first.write_to(std::io::stdout().lock())?;
    }
    for t in iter {
        eprintln!("# {}", t.name);
        t.write_to(std::io::stderr().lock())?;
    }
    Ok(())
}
