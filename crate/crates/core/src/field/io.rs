//! CPG1 grid files and the header-less CSV variant.
//!
//! ```text
//! CPG1 <n> <L>
//! v(0,0) v(1,0) ... v(n-1,0)      <- row y = -L
//! ...
//! v(0,n-1) ...                    <- row y = +L
//! ```

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{FieldError, Lattice, ScalarGrid};

pub fn write_cpg1<W: Write>(grid: &ScalarGrid, mut out: W) -> Result<(), FieldError> {
    let l = grid.lattice();
    writeln!(out, "CPG1 {} {}", l.n(), l.half_width())?;
    write_rows(grid, &mut out, ' ')
}

pub fn write_csv<W: Write>(grid: &ScalarGrid, mut out: W) -> Result<(), FieldError> {
    write_rows(grid, &mut out, ',')
}

fn write_rows<W: Write>(grid: &ScalarGrid, out: &mut W, sep: char) -> Result<(), FieldError> {
    let mut line = String::new();
    for row in grid.values().chunks(grid.lattice().n()) {
        line.clear();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push(sep);
            }
            // Shortest decimal that round-trips; never uses exponent notation.
            write!(line, "{v}").expect("writing to a String");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_cpg1<R: BufRead>(input: R) -> Result<ScalarGrid, FieldError> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.ok_or(FieldError::Format {
        line: 1,
        message: "missing header".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || FieldError::Format {
        line: 1,
        message: format!("expected `CPG1 n L`, found `{header}`"),
    };
    if fields.len() != 3 || fields[0] != "CPG1" {
        return Err(bad_header());
    }
    let n: usize = fields[1].parse().map_err(|_| bad_header())?;
    let half_width: f64 = fields[2].parse().map_err(|_| bad_header())?;
    let lattice = Lattice::new(half_width, n)?;
    read_rows(lines, lattice, None, 1)
}

/// Reads a header-less CSV grid; the window half-width is not stored in the
/// file and must be supplied.
pub fn read_csv<R: BufRead>(input: R, half_width: f64) -> Result<ScalarGrid, FieldError> {
    let rows: Vec<String> = input
        .lines()
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|l| !l.trim().is_empty())
        .collect();
    let lattice = Lattice::new(half_width, rows.len())?;
    read_rows(rows.into_iter().map(Ok), lattice, Some(','), 0)
}

fn read_rows<I>(
    lines: I,
    lattice: Lattice,
    sep: Option<char>,
    first_line: usize,
) -> Result<ScalarGrid, FieldError>
where
    I: Iterator<Item = std::io::Result<String>>,
{
    let n = lattice.n();
    let mut values = Vec::with_capacity(lattice.len());
    let mut rows = 0;
    for (k, line) in lines.enumerate() {
        let line = line?;
        let line_no = first_line + k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = match sep {
            Some(c) => line.split(c).map(str::trim).collect(),
            None => line.split_whitespace().collect(),
        };
        if tokens.len() != n {
            return Err(FieldError::Format {
                line: line_no,
                message: format!("expected {n} values, found {}", tokens.len()),
            });
        }
        for t in tokens {
            let v: f64 = t.parse().map_err(|_| FieldError::Format {
                line: line_no,
                message: format!("not a number: `{t}`"),
            })?;
            values.push(v);
        }
        rows += 1;
    }
    if rows != n {
        return Err(FieldError::Format {
            line: first_line + rows,
            message: format!("expected {n} rows, found {rows}"),
        });
    }
    ScalarGrid::from_values(lattice, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::field::sample;

    #[test]
    fn cpg1_roundtrip_is_bit_exact() {
        let g = sample(&parse("sin(3*x)*exp(y)+1/3").unwrap(), 1.5, 7).unwrap();
        let mut buf = Vec::new();
        write_cpg1(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("CPG1 7 1.5\n"));
        assert_eq!(text.lines().count(), 8);
        let back = read_cpg1(buf.as_slice()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn csv_roundtrip_needs_window() {
        let g = sample(&parse("x*y").unwrap(), 2.0, 5).unwrap();
        let mut buf = Vec::new();
        write_csv(&g, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), 2.0).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn plain_decimals_are_accepted() {
        let text = "CPG1 3 1\n0 1 2\n3 4 5\n6 7 8.5\n";
        let g = read_cpg1(text.as_bytes()).unwrap();
        assert_eq!(g.get(2, 2), 8.5);
        assert_eq!(g.get(1, 0), 1.0);
    }

    #[test]
    fn malformed_files_report_lines() {
        let err = read_cpg1("CPG2 3 1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FieldError::Format { line: 1, .. }));
        let err = read_cpg1("CPG1 3 1\n0 1 2\n3 4\n6 7 8\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FieldError::Format { line: 3, .. }));
        let err = read_cpg1("CPG1 3 1\n0 1 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FieldError::Format { .. }));
        let err = read_cpg1("CPG1 3 1\n0 1 2\n3 x 5\n6 7 8\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FieldError::Format { line: 3, .. }));
        assert!(read_cpg1("CPG1 3 1\n0 1 2\n3 NaN 5\n6 7 8\n".as_bytes()).is_err());
    }
}
