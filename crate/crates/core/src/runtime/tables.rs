//! Typed in-memory tables loaded from CSV.
//!
//! Header cells are `name:type` or `name:type:key`; the key columns together
//! must be unique. Coord cells are written `(x,y)` (quoted, since they contain
//! a comma).

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use crate::error::TableError;
use crate::value::{TypeTag, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub ty: TypeTag,
    pub key: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Rows as (column → value) lookups.
    pub fn records(&self) -> impl Iterator<Item = Record<'_>> {
        self.rows.iter().map(move |row| Record { table: self, row })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Record<'a> {
    table: &'a Table,
    row: &'a [Value],
}

impl<'a> Record<'a> {
    /// Panics on an unknown column: evaluators are written against a known schema.
    pub fn get(&self, column: &str) -> &'a Value {
        let i = self
            .table
            .column_index(column)
            .unwrap_or_else(|| panic!("table {} has no column {column}", self.table.name));
        &self.row[i]
    }
}

/// A named set of tables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tables {
    tables: BTreeMap<String, Table>,
}

impl Tables {
    pub fn insert(&mut self, table: Table) {
        self.tables.insert(table.name.clone(), table);
    }

    pub fn get(&self, name: &str) -> Option<&Table> {
        self.tables.get(name)
    }

    /// Like [`Tables::get`] but reports a missing table as an evaluator error.
    pub fn require(&self, name: &str) -> Result<&Table, String> {
        self.get(name)
            .ok_or_else(|| format!("missing table {name}"))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }
}

fn parse_header(file: &str, cells: &csv::StringRecord) -> Result<Vec<Column>, TableError> {
    let err = |message: String| TableError::Parse {
        file: file.to_string(),
        line: 1,
        message,
    };
    let mut columns = Vec::new();
    for cell in cells {
        let mut parts = cell.trim().split(':');
        let name = parts.next().unwrap_or_default().trim().to_string();
        let ty = parts
            .next()
            .ok_or_else(|| err(format!("header `{cell}` lacks a type")))?;
        let ty =
            TypeTag::from_name(ty.trim()).ok_or_else(|| err(format!("unknown type `{ty}`")))?;
        let key = match parts.next() {
            None => false,
            Some("key") => true,
            Some(other) => return Err(err(format!("unknown column flag `{other}`"))),
        };
        if name.is_empty() || columns.iter().any(|c: &Column| c.name == name) {
            return Err(err(format!("bad or duplicate column name `{name}`")));
        }
        columns.push(Column { name, ty, key });
    }
    Ok(columns)
}

/// Parses one table from CSV text. `file` is used in error messages only.
pub fn parse_table(name: &str, file: &str, text: &str) -> Result<Table, TableError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        None => {
            return Err(TableError::Parse {
                file: file.into(),
                line: 1,
                message: "missing header".into(),
            })
        }
        Some(r) => r.map_err(|e| TableError::Parse {
            file: file.into(),
            line: 1,
            message: e.to_string(),
        })?,
    };
    let columns = parse_header(file, &header)?;
    let mut rows = Vec::new();
    let mut keys = HashSet::new();
    for rec in records {
        let rec = rec.map_err(|e| TableError::Parse {
            file: file.into(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != columns.len() {
            return Err(TableError::Parse {
                file: file.into(),
                line,
                message: format!("expected {} cells, found {}", columns.len(), rec.len()),
            });
        }
        let row = columns
            .iter()
            .zip(rec.iter())
            .map(|(c, cell)| c.ty.parse_literal(cell))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|message| TableError::Parse {
                file: file.into(),
                line,
                message,
            })?;
        if columns.iter().any(|c| c.key) {
            let key: Vec<Value> = columns
                .iter()
                .zip(&row)
                .filter(|(c, _)| c.key)
                .map(|(_, v)| v.clone())
                .collect();
            let shown = key
                .iter()
                .map(Value::to_string)
                .collect::<Vec<_>>()
                .join(", ");
            if !keys.insert(format!("{key:?}")) {
                return Err(TableError::DuplicateKey {
                    file: file.into(),
                    line,
                    key: shown,
                });
            }
        }
        rows.push(row);
    }
    Ok(Table {
        name: name.to_string(),
        columns,
        rows,
    })
}

/// Loads every `*.csv` file in `dir`; the file stem names the table.
pub fn load_tables(dir: &Path) -> Result<Tables, TableError> {
    let io = |e: std::io::Error, p: &Path| TableError::Io {
        path: p.display().to_string(),
        message: e.to_string(),
    };
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| io(e, dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let mut tables = Tables::default();
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|e| io(e, &path))?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let file = path
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        tables.insert(parse_table(stem, file, &text)?);
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_typed_columns() {
        let t = parse_table(
            "cells",
            "cells.csv",
            "loc:coord:key,reward:int\n\"(2,0)\",-2\n\"(3,0)\",0\n",
        )
        .unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.rows[0], vec![Value::coord(2, 0), Value::Int(-2)]);
        assert!(t.columns[0].key);
    }

    #[test]
    fn header_only_is_empty() {
        let t = parse_table("e", "e.csv", "a:int,b:text\n").unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn duplicate_keys_are_rejected_with_line() {
        let e = parse_table("c", "c.csv", "k:int:key,v:int\n1,2\n1,3\n").unwrap_err();
        assert_eq!(
            e,
            TableError::DuplicateKey {
                file: "c.csv".into(),
                line: 3,
                key: "1".into()
            }
        );
    }

    #[test]
    fn bad_cells_report_file_and_line() {
        let e = parse_table("c", "c.csv", "k:int,v:float\n1,2.5\nx,3\n").unwrap_err();
        assert!(matches!(e, TableError::Parse { line: 3, .. }), "{e:?}");
    }
}
