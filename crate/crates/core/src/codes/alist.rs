//! MacKay's alist text format.
//!
//! ```text
//! N M                      columns, rows
//! max_col_w max_row_w
//! col weights (N values)
//! row weights (M values)
//! N lines: 1-based row indices of each column, zero padded to max_col_w
//! M lines: 1-based column indices of each row, zero padded to max_row_w
//! ```
//!
//! Zeros are only accepted as trailing padding; a zero inside the declared
//! weight of a node is an error.

use super::{CodeError, ParityMatrix};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line as (1-based line number, integers).
    fn next_numbers(&mut self, what: &str) -> Result<(usize, Vec<usize>), CodeError> {
        for (idx, line) in self.inner.by_ref() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let nums = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| CodeError::Alist {
                        line: line_no,
                        msg: format!("expected a non-negative integer in {what}, found {tok:?}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            return Ok((line_no, nums));
        }
        Err(CodeError::Alist { line: 0, msg: format!("unexpected end of file while reading {what}") })
    }
}

fn err(line: usize, msg: impl Into<String>) -> CodeError {
    CodeError::Alist { line, msg: msg.into() }
}

/// Parses an alist document.
pub fn parse(text: &str) -> Result<ParityMatrix, CodeError> {
    let mut lines = Lines { inner: text.lines().enumerate() };

    let (ln, dims) = lines.next_numbers("dimensions")?;
    if dims.len() != 2 {
        return Err(err(ln, "expected two dimensions: N M"));
    }
    let (n, m) = (dims[0], dims[1]);
    if n == 0 || m == 0 {
        return Err(err(ln, "dimensions must be positive"));
    }

    let (ln, maxw) = lines.next_numbers("maximum weights")?;
    if maxw.len() != 2 {
        return Err(err(ln, "expected two maximum weights"));
    }
    let (max_col, max_row) = (maxw[0], maxw[1]);

    let (ln, col_w) = lines.next_numbers("column weights")?;
    if col_w.len() != n {
        return Err(err(ln, format!("expected {n} column weights, found {}", col_w.len())));
    }
    if let Some(w) = col_w.iter().find(|&&w| w > max_col) {
        return Err(err(ln, format!("column weight {w} exceeds declared maximum {max_col}")));
    }
    let (ln, row_w) = lines.next_numbers("row weights")?;
    if row_w.len() != m {
        return Err(err(ln, format!("expected {m} row weights, found {}", row_w.len())));
    }
    if let Some(w) = row_w.iter().find(|&&w| w > max_row) {
        return Err(err(ln, format!("row weight {w} exceeds declared maximum {max_row}")));
    }
    if col_w.iter().sum::<usize>() != row_w.iter().sum::<usize>() {
        return Err(err(ln, "row and column weights imply different edge counts"));
    }

    let read_lists = |lines: &mut Lines, count: usize, weights: &[usize], bound: usize, kind: &str| {
        let mut lists = Vec::with_capacity(count);
        for (i, &w) in weights.iter().enumerate() {
            let (ln, nums) = lines.next_numbers(kind)?;
            if nums.len() < w {
                return Err(err(ln, format!("{kind} {} lists {} entries, weight is {w}", i + 1, nums.len())));
            }
            let (body, pad) = nums.split_at(w);
            if pad.iter().any(|&v| v != 0) {
                return Err(err(ln, format!("{kind} {} has more entries than its weight {w}", i + 1)));
            }
            let mut list = Vec::with_capacity(w);
            for &v in body {
                if v == 0 || v > bound {
                    return Err(err(ln, format!("index {v} out of range 1..={bound} (indices are 1-based)")));
                }
                list.push((v - 1) as u32);
            }
            let mut sorted = list.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|p| p[0] == p[1]) {
                return Err(err(ln, format!("{kind} {} repeats an index", i + 1)));
            }
            lists.push((ln, sorted));
        }
        Ok(lists)
    };

    let cols = read_lists(&mut lines, n, &col_w, m, "column")?;
    let rows = read_lists(&mut lines, m, &row_w, n, "row")?;

    let row_adj: Vec<Vec<u32>> = rows.iter().map(|(_, r)| r.clone()).collect();
    let h = ParityMatrix::from_rows(n, row_adj);
    for (c, (ln, list)) in cols.iter().enumerate() {
        if h.col(c) != list.as_slice() {
            return Err(err(*ln, format!("column {} disagrees with the row lists", c + 1)));
        }
    }
    Ok(h)
}

/// Serialises `h` in zero-padded alist layout.
pub fn write(h: &ParityMatrix) -> String {
    use std::fmt::Write;
    let col_w: Vec<usize> = (0..h.cols()).map(|c| h.col(c).len()).collect();
    let row_w: Vec<usize> = (0..h.rows()).map(|r| h.row(r).len()).collect();
    let max_col = col_w.iter().copied().max().unwrap_or(0);
    let max_row = row_w.iter().copied().max().unwrap_or(0);

    let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    writeln!(out, "{} {}", h.cols(), h.rows()).unwrap();
    writeln!(out, "{max_col} {max_row}").unwrap();
    writeln!(out, "{}", join(&mut col_w.iter().copied())).unwrap();
    writeln!(out, "{}", join(&mut row_w.iter().copied())).unwrap();
    for c in 0..h.cols() {
        let list = h.col(c);
        let mut it = list.iter().map(|&r| r as usize + 1).chain(std::iter::repeat_n(0, max_col - list.len()));
        writeln!(out, "{}", join(&mut it)).unwrap();
    }
    for r in 0..h.rows() {
        let list = h.row(r);
        let mut it = list.iter().map(|&c| c as usize + 1).chain(std::iter::repeat_n(0, max_row - list.len()));
        writeln!(out, "{}", join(&mut it)).unwrap();
    }
    out
}
