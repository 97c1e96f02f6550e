//! CSV files with `#`-prefixed metadata lines.
//!
//! Three layouts are used: a space-time field (one row per time level, one
//! column per node), a profile (`w,value`) and a generic named table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use hyploc_core::geometry::{Grid1D, GridFunction, SpaceTimeField, TimeGrid};

use crate::CliError;

/// Parsed file: metadata, column names and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(kind: &str, columns: Vec<String>) -> Self {
        let mut meta = BTreeMap::new();
        meta.insert("kind".to_string(), kind.to_string());
        Self {
            meta,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn kind(&self) -> &str {
        self.meta.get("kind").map_or("table", String::as_str)
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn meta_f64(&self, key: &str) -> Result<f64, CliError> {
        self.meta
            .get(key)
            .ok_or_else(|| CliError::Config(format!("missing metadata `{key}`")))?
            .parse()
            .map_err(|e| CliError::Config(format!("metadata `{key}`: {e}")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let j = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::Config(format!("no column `{name}`")))?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut meta = BTreeMap::new();
        let mut columns = None;
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once(':') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if columns.is_none() {
                columns = Some(line.split(',').map(|c| c.trim().to_string()).collect::<Vec<_>>());
                continue;
            }
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Config(format!("line {}: {e}", lineno + 1)))?;
            rows.push(row);
        }
        let columns = columns.ok_or_else(|| CliError::Config("CSV has no header".into()))?;
        if let Some(bad) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(CliError::Config(format!("row {bad} has the wrong number of columns")));
        }
        Ok(Self { meta, columns, rows })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_text()).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }
}

/// Rows are time levels, the first column is `t`, the others are the nodes.
pub fn field_table(name: &str, field: &SpaceTimeField) -> Table {
    let grid = field.grid();
    let time = field.time();
    let mut columns = vec!["t".to_string()];
    columns.extend(grid.nodes().iter().map(|w| format!("{w}")));
    let mut t = Table::new("field", columns)
        .with_meta("name", name)
        .with_meta("length", grid.length())
        .with_meta("cells", grid.cells())
        .with_meta("horizon", time.horizon())
        .with_meta("steps", time.steps());
    for m in 0..time.levels() {
        let mut row = vec![time.time(m)];
        row.extend_from_slice(field.row(m));
        t.rows.push(row);
    }
    t
}

pub fn table_field(t: &Table) -> Result<SpaceTimeField, CliError> {
    if t.kind() != "field" {
        return Err(CliError::Config(format!("expected a field CSV, found `{}`", t.kind())));
    }
    let cells = t.meta_f64("cells")? as usize;
    let steps = t.meta_f64("steps")? as usize;
    let grid = Grid1D::new(t.meta_f64("length")?, cells).map_err(CliError::config)?;
    let time = TimeGrid::new(t.meta_f64("horizon")?, steps).map_err(CliError::config)?;
    let rows = t.rows.iter().map(|r| r[1..].to_vec()).collect();
    SpaceTimeField::from_rows(grid, time, rows).map_err(CliError::config)
}

pub fn profile_table(name: &str, profile: &GridFunction) -> Table {
    let grid = profile.grid();
    let mut t = Table::new("profile", vec!["w".into(), "value".into()])
        .with_meta("name", name)
        .with_meta("length", grid.length())
        .with_meta("cells", grid.cells());
    t.rows = grid.nodes().into_iter().zip(profile.values()).map(|(w, v)| vec![w, *v]).collect();
    t
}

pub fn table_profile(t: &Table) -> Result<GridFunction, CliError> {
    if t.kind() != "profile" {
        return Err(CliError::Config(format!("expected a profile CSV, found `{}`", t.kind())));
    }
    let grid = Grid1D::new(t.meta_f64("length")?, t.meta_f64("cells")? as usize).map_err(CliError::config)?;
    GridFunction::new(grid, t.column("value")?).map_err(CliError::config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip() {
        let grid = Grid1D::new(2.0, 8).unwrap();
        let time = TimeGrid::new(1.0, 3).unwrap();
        let f = SpaceTimeField::from_fn(grid, time, |t, w| (t + 1.0) * w.sin() / 3.0);
        let back = table_field(&Table::parse(&field_table("x", &f).to_text()).unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn profile_round_trip() {
        let grid = Grid1D::new(1.0, 5).unwrap();
        let p = GridFunction::from_fn(grid, |w| w * w + 0.1);
        let back = table_profile(&Table::parse(&profile_table("p", &p).to_text()).unwrap()).unwrap();
        assert_eq!(back, p);
    }
}
