use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use holonomy::LinearOperator;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Fixed float format: 17 significant digits, no locale.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Artifacts {
    dir: PathBuf,
    hash: String,
    pub format: Format,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, hash: String, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash,
            format,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn put(&mut self, name: &str, body: String) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, stem: &str, header: &[String], rows: Vec<Vec<String>>) -> Result<(), CliError> {
        let mut body = format!("# config_sha256={}\n{}\n", self.hash, header.join(","));
        for row in rows {
            let _ = writeln!(body, "{}", row.join(","));
        }
        self.put(&format!("{stem}.csv"), body)
    }

    /// JSON object with the config hash added as `config_sha256`.
    pub fn json<T: Serialize>(&mut self, stem: &str, value: &T) -> Result<(), CliError> {
        let mut obj = match serde_json::to_value(value).expect("artifact serializes") {
            Value::Object(map) => map,
            other => {
                let mut map = Map::new();
                map.insert("data".into(), other);
                map
            }
        };
        obj.insert("config_sha256".into(), Value::String(self.hash.clone()));
        let mut body = serde_json::to_string_pretty(&Value::Object(obj)).expect("json value");
        body.push('\n');
        self.put(&format!("{stem}.json"), body)
    }

    /// Dense operator as `row,col,re,im` records or an operator record.
    pub fn operator(&mut self, stem: &str, op: &LinearOperator) -> Result<(), CliError> {
        match self.format {
            Format::Json => self.json(stem, &op.to_record()),
            Format::Csv => {
                let header = ["row", "col", "re", "im"].map(String::from);
                let rows = op
                    .matrix()
                    .indexed_iter()
                    .map(|((r, c), z)| vec![r.to_string(), c.to_string(), num(z.re), num(z.im)])
                    .collect();
                self.csv(stem, &header, rows)
            }
        }
    }

    /// Real matrix, one CSV line per row or a nested JSON array.
    pub fn real_matrix(&mut self, stem: &str, rows: Vec<Vec<f64>>) -> Result<(), CliError> {
        match self.format {
            Format::Json => {
                let mut map = Map::new();
                map.insert("matrix".into(), serde_json::to_value(&rows).expect("finite rows"));
                self.json(stem, &Value::Object(map))
            }
            Format::Csv => {
                let width = rows.first().map_or(0, Vec::len);
                let header: Vec<String> = (1..=width).map(|k| format!("c{k}")).collect();
                let body = rows.iter().map(|r| r.iter().map(|x| num(*x)).collect()).collect();
                self.csv(stem, &header, body)
            }
        }
    }
}
