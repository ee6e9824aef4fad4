//! File plumbing shared by the commands: trace tables, weight files and
//! deterministic JSON output.

use std::fmt::Write as _;
use std::path::Path;

use fairpia_core::metrics::MetricsRecord;
use fairpia_core::{Error, Result};

pub const TRACE_HEADER: &str = "k,e_dev,e_iter,e_abs,e_rel";

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// CSV trace with LF line endings; absent values are empty cells.
pub fn trace_csv(trace: &[MetricsRecord]) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.k,
            cell(Some(r.e_dev)),
            cell(r.e_iter),
            cell(Some(r.e_abs)),
            cell(r.e_rel)
        );
    }
    out
}

/// Reads one weight per entry; entries are separated by whitespace or
/// commas and `#` starts a comment.
pub fn parse_weight_file(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        for (col, token) in content
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .enumerate()
        {
            let v: f64 = token.parse().map_err(|_| Error::Parse {
                line: line_no + 1,
                column: col + 1,
                message: format!("`{token}` is not a number"),
            })?;
            out.push(v);
        }
    }
    Ok(out)
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Pretty JSON with a trailing newline.
pub fn pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialising to memory cannot fail");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let trace = vec![
            MetricsRecord {
                k: 0,
                e_dev: 0.0,
                e_iter: None,
                e_abs: 2.0,
                e_rel: Some(1.0),
            },
            MetricsRecord {
                k: 1,
                e_dev: 0.5,
                e_iter: Some(1.0),
                e_abs: 0.0,
                e_rel: None,
            },
        ];
        let csv = trace_csv(&trace);
        let lines: Vec<&str> = csv.split('\n').collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(
            lines[1],
            "0,0.0000000000000000e0,,2.0000000000000000e0,1.0000000000000000e0"
        );
        assert!(lines[2].ends_with(",0.0000000000000000e0,"));
        assert_eq!(lines[3], "");
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn weight_file_formats() {
        let w = parse_weight_file("# weights\n1e-6, 2e-6\n3e-6 4e-6 # tail\n\n").unwrap();
        assert_eq!(w, vec![1e-6, 2e-6, 3e-6, 4e-6]);
        match parse_weight_file("1e-6\n1e-6 x\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 2)),
            other => panic!("{other:?}"),
        }
    }
}
