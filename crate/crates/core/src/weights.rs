//! Per-point weight range specifications such as
//! `25-32:1e-5,46-57:8e-6,default:1e-6`.
//!
//! Entries are comma separated. `START-END:VALUE` sets the 1-based inclusive
//! range of points, `N:VALUE` a single point and `default:VALUE` every point
//! not covered by a range. Later ranges override earlier ones. A lone number
//! is shorthand for `default:VALUE`.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeEntry {
    /// 1-based, inclusive.
    pub start: usize,
    pub end: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RangeSpec {
    pub default: Option<f64>,
    pub ranges: Vec<RangeEntry>,
}

fn parse_value(s: &str, entry: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad weight `{s}` in range entry `{entry}`")))?;
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!("weight in `{entry}` is not finite")));
    }
    Ok(v)
}

fn parse_index(s: &str, entry: &str) -> Result<usize> {
    let i: usize = s
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad index `{s}` in range entry `{entry}`")))?;
    if i == 0 {
        return Err(Error::InvalidArgument(format!("indices are 1-based, got 0 in `{entry}`")));
    }
    Ok(i)
}

impl FromStr for RangeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = RangeSpec::default();
        if s.trim().is_empty() {
            return Err(Error::InvalidArgument("empty weight range spec".into()));
        }
        for entry in s.split(',').map(str::trim) {
            let Some((lhs, rhs)) = entry.split_once(':') else {
                spec.default = Some(parse_value(entry, entry)?);
                continue;
            };
            let value = parse_value(rhs, entry)?;
            let lhs = lhs.trim();
            if lhs.eq_ignore_ascii_case("default") {
                spec.default = Some(value);
                continue;
            }
            let (start, end) = match lhs.split_once('-') {
                Some((a, b)) => (parse_index(a, entry)?, parse_index(b, entry)?),
                None => {
                    let i = parse_index(lhs, entry)?;
                    (i, i)
                }
            };
            if end < start {
                return Err(Error::InvalidArgument(format!("range `{entry}` ends before it starts")));
            }
            spec.ranges.push(RangeEntry { start, end, value });
        }
        Ok(spec)
    }
}

impl fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .ranges
            .iter()
            .map(|r| format!("{}-{}:{:e}", r.start, r.end, r.value))
            .collect();
        if let Some(d) = self.default {
            parts.push(format!("default:{d:e}"));
        }
        f.write_str(&parts.join(","))
    }
}

impl RangeSpec {
    /// Expands to `n` weights. Points without a range take the spec's
    /// default, then `fallback`; if neither exists that is an error.
    pub fn resolve(&self, n: usize, fallback: Option<f64>) -> Result<Vec<f64>> {
        let mut out: Vec<Option<f64>> = vec![self.default.or(fallback); n];
        for r in &self.ranges {
            if r.end > n {
                return Err(Error::InvalidArgument(format!(
                    "range {}-{} exceeds the {n} control points",
                    r.start, r.end
                )));
            }
            out[r.start - 1..r.end].iter_mut().for_each(|w| *w = Some(r.value));
        }
        out.into_iter()
            .enumerate()
            .map(|(i, w)| {
                w.ok_or_else(|| {
                    Error::InvalidArgument(format!("no weight for point {} and no default given", i + 1))
                })
            })
            .collect()
    }
}

/// Parses a 1-based index list such as `1-5,9,12-14` into sorted, distinct
/// 0-based indices below `n`.
pub fn parse_index_set(spec: &str, n: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for entry in spec.split(',').map(str::trim).filter(|e| !e.is_empty()) {
        let (start, end) = match entry.split_once('-') {
            Some((a, b)) => (parse_index(a, entry)?, parse_index(b, entry)?),
            None => {
                let i = parse_index(entry, entry)?;
                (i, i)
            }
        };
        if end < start || end > n {
            return Err(Error::InvalidArgument(format!(
                "index range `{entry}` is not within 1-{n}"
            )));
        }
        out.extend(start - 1..end);
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("empty index list".into()));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Parses and expands a range spec in one go.
pub fn parse_weights(spec: &str, n: usize) -> Result<Vec<f64>> {
    spec.parse::<RangeSpec>()?.resolve(n, None)
}
