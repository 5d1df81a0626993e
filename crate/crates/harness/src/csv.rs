//! Minimal CSV with `#` comment headers.
//!
//! Every file starts with comment lines describing the experiment and each
//! column, then one header row, then data rows. Floats use Rust's shortest
//! round-trip formatting, so parsing a file reproduces the values exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{HarnessError, Result};

pub trait CsvRow: Sized {
    /// Column names with one-line descriptions.
    const COLUMNS: &'static [(&'static str, &'static str)];

    fn fields(&self) -> Vec<String>;

    fn parse(fields: &[&str]) -> std::result::Result<Self, String>;
}

pub fn float(v: f64) -> String {
    format!("{v:?}")
}

pub fn parse_float(s: &str) -> std::result::Result<f64, String> {
    s.parse().map_err(|_| format!("not a number: {s:?}"))
}

pub fn parse_int<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("not an integer: {s:?}"))
}

pub fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        _ => Err(format!("not a flag: {s:?}")),
    }
}

pub fn render<R: CsvRow>(title: &[String], rows: &[R]) -> String {
    let mut out = String::new();
    for line in title {
        let _ = writeln!(out, "# {line}");
    }
    for (name, doc) in R::COLUMNS {
        let _ = writeln!(out, "# {name}: {doc}");
    }
    let names: Vec<&str> = R::COLUMNS.iter().map(|(n, _)| *n).collect();
    let _ = writeln!(out, "{}", names.join(","));
    for row in rows {
        let _ = writeln!(out, "{}", row.fields().join(","));
    }
    out
}

pub fn parse<R: CsvRow>(text: &str) -> std::result::Result<Vec<R>, String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().ok_or("missing header row")?;
    let expected: Vec<&str> = R::COLUMNS.iter().map(|(n, _)| *n).collect();
    if header.split(',').collect::<Vec<_>>() != expected {
        return Err(format!("unexpected header {header:?}"));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| R::parse(&l.split(',').collect::<Vec<_>>()))
        .collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write<R: CsvRow>(path: &Path, title: &[String], rows: &[R]) -> Result<()> {
    write_text(path, &render(title, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq)]
    struct Pair {
        a: u32,
        b: f64,
    }

    impl CsvRow for Pair {
        const COLUMNS: &'static [(&'static str, &'static str)] = &[("a", "index"), ("b", "value")];

        fn fields(&self) -> Vec<String> {
            vec![self.a.to_string(), float(self.b)]
        }

        fn parse(f: &[&str]) -> std::result::Result<Self, String> {
            Ok(Pair {
                a: parse_int(f[0])?,
                b: parse_float(f[1])?,
            })
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let rows = vec![
            Pair { a: 1, b: 0.1 + 0.2 },
            Pair { a: 2, b: 1e-300 },
            Pair { a: 3, b: -2.5e17 },
        ];
        let text = render(&["demo".into()], &rows);
        assert!(text.starts_with("# demo\n# a: index\n# b: value\na,b\n"));
        assert_eq!(parse::<Pair>(&text).unwrap(), rows);
        assert!(parse::<Pair>("x,y\n").is_err());
    }
}
