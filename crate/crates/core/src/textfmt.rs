//! Shared helpers for the line-oriented model formats.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Writes values with 17 significant digits, which parse back to the
/// identical `f64`.
pub(crate) fn push_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

/// Line cursor that reports 1-based line numbers in errors.
pub(crate) struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    pub fn err(&self, msg: impl Into<String>) -> Error {
        Error::Format {
            line: self.last,
            message: msg.into(),
        }
    }

    /// Next non-empty line.
    pub fn next_line(&mut self) -> Result<&'a str> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            if !l.trim().is_empty() {
                return Ok(l.trim());
            }
        }
        Err(Error::Format {
            line: self.last + 1,
            message: "unexpected end of input".into(),
        })
    }

    pub fn try_next_line(&mut self) -> Option<&'a str> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            if !l.trim().is_empty() {
                return Some(l.trim());
            }
        }
        None
    }

    /// Next line, which must start with `tag`; returns the remaining tokens.
    pub fn tagged(&mut self, tag: &str) -> Result<Vec<&'a str>> {
        let line = self.next_line()?;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some(t) if t == tag => Ok(toks.collect()),
            other => Err(self.err(format!("expected '{tag}', found '{}'", other.unwrap_or("")))),
        }
    }

    pub fn floats(&mut self, expected: usize) -> Result<Vec<f64>> {
        let line = self.next_line()?;
        let vals = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| self.err(format!("bad number '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != expected {
            return Err(self.err(format!("expected {expected} values, found {}", vals.len())));
        }
        Ok(vals)
    }

    pub fn parse<T: FromStr>(&self, tok: &str, what: &str) -> Result<T> {
        tok.parse::<T>()
            .map_err(|_| self.err(format!("bad {what} '{tok}'")))
    }
}
