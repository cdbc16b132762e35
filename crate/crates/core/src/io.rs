//! Matrix file formats: `plain`, `csv` and `json`.
//!
//! * plain: first line `n`, then `n` lines of `n` whitespace-separated numbers.
//! * csv: `n` lines of `n` comma-separated numbers.
//! * json: `{"n": n, "entries": [...]}` with `n * n` row-major numbers (nested
//!   rows are also accepted on input).

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::matrix::NonNegativeMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFormat {
    Plain,
    Csv,
    Json,
}

impl MatrixFormat {
    /// Format implied by the file extension; `plain` when unknown.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("csv") => MatrixFormat::Csv,
            Some("json") => MatrixFormat::Json,
            _ => MatrixFormat::Plain,
        }
    }
}

impl FromStr for MatrixFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "plain" | "txt" => Ok(MatrixFormat::Plain),
            "csv" => Ok(MatrixFormat::Csv),
            "json" => Ok(MatrixFormat::Json),
            other => Err(format!("unknown matrix format `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum MatrixFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    /// 1-based line and column of the offending token.
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> MatrixFileError {
    MatrixFileError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// A token with its 1-based position.
struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

fn tokens<'a>(line_no: usize, line: &'a str, sep: Option<char>) -> Vec<Token<'a>> {
    let mut out = Vec::new();
    match sep {
        None => {
            let mut start = None;
            for (k, ch) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
                match (ch.is_whitespace(), start) {
                    (false, None) => start = Some(k),
                    (true, Some(s)) => {
                        out.push(Token { text: &line[s..k], line: line_no, column: s + 1 });
                        start = None;
                    }
                    _ => {}
                }
            }
        }
        Some(sep) => {
            let mut offset = 0;
            for field in line.split(sep) {
                let lead = field.len() - field.trim_start().len();
                out.push(Token { text: field.trim(), line: line_no, column: offset + lead + 1 });
                offset += field.len() + sep.len_utf8();
            }
        }
    }
    out
}

fn parse_rows(rows: Vec<Vec<Token<'_>>>, n: usize, fallback_line: usize) -> Result<NonNegativeMatrix, MatrixFileError> {
    if rows.len() != n {
        return Err(parse_err(fallback_line, 1, format!("expected {n} rows, found {}", rows.len())));
    }
    let mut entries = Vec::with_capacity(n * n);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            let line = row.first().map_or(fallback_line, |t| t.line);
            return Err(parse_err(line, 1, format!("row {r} has {} entries, expected {n}", row.len())));
        }
        for (c, tok) in row.iter().enumerate() {
            let value: f64 = tok
                .text
                .parse()
                .map_err(|_| parse_err(tok.line, tok.column, format!("invalid number `{}`", tok.text)))?;
            if !value.is_finite() {
                return Err(parse_err(tok.line, tok.column, format!("non-finite entry at ({r},{c})")));
            }
            if value < 0.0 {
                return Err(parse_err(tok.line, tok.column, format!("negative entry at ({r},{c}): {value}")));
            }
            entries.push(value);
        }
    }
    NonNegativeMatrix::new(n, entries).map_err(|e| parse_err(fallback_line, 1, e.to_string()))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

pub fn parse_plain(text: &str) -> Result<NonNegativeMatrix, MatrixFileError> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines.next().ok_or_else(|| parse_err(1, 1, "empty file"))?;
    let head = tokens(header_line, header, None);
    if head.len() != 1 {
        return Err(parse_err(header_line, 1, "first line must hold the dimension n"));
    }
    let n: usize = head[0]
        .text
        .parse()
        .map_err(|_| parse_err(header_line, head[0].column, format!("invalid dimension `{}`", head[0].text)))?;
    if n == 0 {
        return Err(parse_err(header_line, head[0].column, "dimension must be positive"));
    }
    let rows: Vec<_> = lines.map(|(k, l)| tokens(k, l, None)).collect();
    let last = text.lines().count().max(1);
    parse_rows(rows, n, last)
}

pub fn parse_csv(text: &str) -> Result<NonNegativeMatrix, MatrixFileError> {
    let rows: Vec<_> = content_lines(text).map(|(k, l)| tokens(k, l, Some(','))).collect();
    if rows.is_empty() {
        return Err(parse_err(1, 1, "empty file"));
    }
    let n = rows.len();
    parse_rows(rows, n, text.lines().count().max(1))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonEntries {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

#[derive(Deserialize)]
struct JsonMatrix {
    n: usize,
    entries: JsonEntries,
}

pub fn parse_json(text: &str) -> Result<NonNegativeMatrix, MatrixFileError> {
    let raw: JsonMatrix =
        serde_json::from_str(text).map_err(|e| parse_err(e.line(), e.column(), e.to_string()))?;
    let entries = match raw.entries {
        JsonEntries::Flat(v) => v,
        JsonEntries::Nested(rows) => {
            if rows.len() != raw.n || rows.iter().any(|r| r.len() != raw.n) {
                return Err(parse_err(1, 1, format!("entries must be {0} rows of {0} numbers", raw.n)));
            }
            rows.concat()
        }
    };
    NonNegativeMatrix::new(raw.n, entries).map_err(|e| match e {
        Error::NegativeEntry { row, col, value } => {
            parse_err(1, 1, format!("negative entry at ({row},{col}): {value}"))
        }
        other => parse_err(1, 1, other.to_string()),
    })
}

pub fn parse(text: &str, format: MatrixFormat) -> Result<NonNegativeMatrix, MatrixFileError> {
    match format {
        MatrixFormat::Plain => parse_plain(text),
        MatrixFormat::Csv => parse_csv(text),
        MatrixFormat::Json => parse_json(text),
    }
}

pub fn read_matrix(path: &Path, format: Option<MatrixFormat>) -> Result<NonNegativeMatrix, MatrixFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| MatrixFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text, format.unwrap_or_else(|| MatrixFormat::from_path(path)))
}

/// Serializes with shortest round-trip decimal formatting.
pub fn serialize(a: &NonNegativeMatrix, format: MatrixFormat) -> String {
    let join = |sep: &str| {
        a.rows()
            .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep))
            .collect::<Vec<_>>()
            .join("\n")
    };
    match format {
        MatrixFormat::Plain => format!("{}\n{}\n", a.dim(), join(" ")),
        MatrixFormat::Csv => format!("{}\n", join(",")),
        MatrixFormat::Json => serde_json::to_string(a).expect("matrix serializes") + "\n",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plain_example() {
        let a = parse_plain("2\n1 1\n1 1\n").unwrap();
        assert_eq!(a.entries(), &[1.0; 4]);
    }

    #[test]
    fn negative_entry_reports_position() {
        match parse_plain("2\n1 -1\n1 1\n") {
            Err(MatrixFileError::Parse { line, column, message }) => {
                assert_eq!((line, column), (2, 3));
                assert!(message.contains("negative entry at (0,1)"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse_csv("1, 2\n3,  x\n") {
            Err(MatrixFileError::Parse { line, column, .. }) => assert_eq!((line, column), (2, 5)),
            other => panic!("unexpected {other:?}"),
        }
        let e = parse_json(r#"{"n":2,"entries":[1,2,-3,4]}"#).unwrap_err();
        assert!(e.to_string().contains("negative entry at (1,0)"));
    }

    #[test]
    fn shape_errors() {
        assert!(parse_plain("").is_err());
        assert!(parse_plain("2\n1 1\n").is_err());
        assert!(parse_plain("2\n1 1 1\n1 1\n").is_err());
        assert!(parse_plain("0\n").is_err());
        assert!(parse_csv("1,2\n3\n").is_err());
        assert!(parse_json(r#"{"n":2,"entries":[1,2,3]}"#).is_err());
        assert!(parse_json("{not json").is_err());
    }

    #[test]
    fn nested_json_rows() {
        let a = parse_json(r#"{"n":2,"entries":[[0,1],[3,2]]}"#).unwrap();
        assert_eq!(a.entries(), &[0.0, 1.0, 3.0, 2.0]);
    }

    #[test]
    fn comments_and_blank_lines() {
        let a = parse_plain("# header\n\n2\n0 1\n\n3 2\n").unwrap();
        assert_eq!(a.entries(), &[0.0, 1.0, 3.0, 2.0]);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(MatrixFormat::from_path(Path::new("a.CSV")), MatrixFormat::Csv);
        assert_eq!(MatrixFormat::from_path(Path::new("a.json")), MatrixFormat::Json);
        assert_eq!(MatrixFormat::from_path(Path::new("a.txt")), MatrixFormat::Plain);
    }

    proptest! {
        #[test]
        fn round_trip(n in 1usize..6, raw in proptest::collection::vec(0.0f64..1e6, 36)) {
            let a = NonNegativeMatrix::new(n, raw[..n * n].to_vec()).unwrap();
            for format in [MatrixFormat::Plain, MatrixFormat::Csv, MatrixFormat::Json] {
                let back = parse(&serialize(&a, format), format).unwrap();
                prop_assert_eq!(&back, &a);
            }
        }
    }
}
