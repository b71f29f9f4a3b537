//! Minimal CSV helpers shared by every artifact writer: UTF-8, LF line
//! endings, floats with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats `x` with 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Accumulates rows in memory and writes them out in one go.
#[derive(Debug, Default)]
pub struct CsvBuilder {
    buf: String,
}

impl CsvBuilder {
    pub fn with_header(header: &str) -> Self {
        let mut buf = String::with_capacity(4096);
        buf.push_str(header);
        buf.push('\n');
        Self { buf }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for (i, f) in fields.into_iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            self.buf.push_str(f.as_ref());
        }
        self.buf.push('\n');
    }

    pub fn line(&mut self, args: std::fmt::Arguments<'_>) {
        self.buf.write_fmt(args).expect("writing to a String cannot fail");
        self.buf.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        fs::write(path, self.buf.as_bytes())?;
        Ok(())
    }
}

/// Parsed CSV: the header plus string records.
#[derive(Debug)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text).map_err(|msg| Error::Parse {
            path: path.to_path_buf(),
            msg,
        })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or("empty file")?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
            if row.len() != header.len() {
                return Err(format!(
                    "row {} has {} fields, expected {}",
                    i + 2,
                    row.len(),
                    header.len()
                ));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> std::result::Result<usize, String> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("missing column `{name}`"))
    }

    /// Requires the header to equal `expected` exactly.
    pub fn expect_header(&self, expected: &[&str]) -> std::result::Result<(), String> {
        if self.header.iter().map(String::as_str).eq(expected.iter().copied()) {
            Ok(())
        } else {
            Err(format!(
                "header `{}` does not match `{}`",
                self.header.join(","),
                expected.join(",")
            ))
        }
    }
}

pub fn parse_field<T: std::str::FromStr>(s: &str, what: &str) -> std::result::Result<T, String> {
    s.parse()
        .map_err(|_| format!("cannot parse {what} from `{s}`"))
}
