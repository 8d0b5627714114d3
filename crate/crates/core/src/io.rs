//! Plain-text point-cloud formats.
//!
//! A measure *pair* in one file:
//!
//! ```text
//! # optional comments anywhere
//! n m d
//! w x_1 ... x_d     (n rows: first measure)
//! w y_1 ... y_d     (m rows: second measure)
//! ```
//!
//! A single measure per file:
//!
//! ```text
//! n d
//! w x_1 ... x_d     (n rows)
//! ```
//!
//! Whitespace-separated; `#` starts a comment for the rest of the line;
//! blank lines are skipped.

use std::path::Path;

use ndarray::{Array1, Array2};

use crate::measures::DiscreteMeasure;
use crate::{Error, Result};

/// (line number, payload) with comments and blanks stripped.
fn content_rows(text: &str) -> std::vec::IntoIter<(usize, &str)> {
    text.lines()
        .enumerate()
        .filter_map(|(ln, raw)| {
            let payload = raw.split('#').next().unwrap_or("").trim();
            if payload.is_empty() {
                None
            } else {
                Some((ln + 1, payload))
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
}

fn parse_header(rows: &mut std::vec::IntoIter<(usize, &str)>) -> Result<(usize, Vec<usize>)> {
    let (hline, header) = rows
        .next()
        .ok_or_else(|| Error::Parse { line: 0, msg: "empty file".into() })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|_| Error::Parse {
                line: hline,
                msg: format!("expected integer in header, got `{t}`"),
            })
        })
        .collect::<Result<_>>()?;
    Ok((hline, dims))
}

fn parse_atoms(
    rows: &mut std::vec::IntoIter<(usize, &str)>,
    count: usize,
    d: usize,
    hline: usize,
) -> Result<DiscreteMeasure> {
    let mut weights = Array1::zeros(count);
    let mut support = Array2::zeros((count, d));
    for i in 0..count {
        let (ln, row) = rows.next().ok_or_else(|| Error::Parse {
            line: hline,
            msg: format!("expected {count} point rows, file ended early"),
        })?;
        let fields: Vec<f64> = row
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    line: ln,
                    msg: format!("expected number, got `{t}`"),
                })
            })
            .collect::<Result<_>>()?;
        if fields.len() != d + 1 {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected weight + {d} coordinates, got {} fields", fields.len()),
            });
        }
        weights[i] = fields[0];
        for k in 0..d {
            support[[i, k]] = fields[k + 1];
        }
    }
    DiscreteMeasure::new(weights, support)
}

fn reject_trailing(rows: &mut std::vec::IntoIter<(usize, &str)>) -> Result<()> {
    if let Some((ln, _)) = rows.next() {
        return Err(Error::Parse { line: ln, msg: "trailing data after the measure data".into() });
    }
    Ok(())
}

/// Parses a measure pair from text. See the module docs for the format.
pub fn parse_pair(text: &str) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    let mut rows = content_rows(text);
    let (hline, dims) = parse_header(&mut rows)?;
    let [n, m, d] = dims[..] else {
        return Err(Error::Parse {
            line: hline,
            msg: format!("header must be `n m d`, got {} fields", dims.len()),
        });
    };
    if n == 0 || m == 0 || d == 0 {
        return Err(Error::Parse { line: hline, msg: "n, m, d must be positive".into() });
    }
    let mu = parse_atoms(&mut rows, n, d, hline)?;
    let nu = parse_atoms(&mut rows, m, d, hline)?;
    reject_trailing(&mut rows)?;
    Ok((mu, nu))
}

/// Parses a single measure from text (`n d` header, then `n` atom rows).
pub fn parse_measure(text: &str) -> Result<DiscreteMeasure> {
    let mut rows = content_rows(text);
    let (hline, dims) = parse_header(&mut rows)?;
    let [n, d] = dims[..] else {
        return Err(Error::Parse {
            line: hline,
            msg: format!("header must be `n d`, got {} fields", dims.len()),
        });
    };
    if n == 0 || d == 0 {
        return Err(Error::Parse { line: hline, msg: "n and d must be positive".into() });
    }
    let measure = parse_atoms(&mut rows, n, d, hline)?;
    reject_trailing(&mut rows)?;
    Ok(measure)
}

/// Reads a measure pair from a file.
pub fn read_pair(path: &Path) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    parse_pair(&std::fs::read_to_string(path)?)
}

/// Reads a single measure from a file.
pub fn read_measure(path: &Path) -> Result<DiscreteMeasure> {
    parse_measure(&std::fs::read_to_string(path)?)
}

fn push_atoms(out: &mut String, measure: &DiscreteMeasure) {
    use std::fmt::Write as _;
    for (w, row) in measure.weights().iter().zip(measure.support().rows()) {
        let _ = write!(out, "{w:.17e}");
        for v in row {
            let _ = write!(out, " {v:.17e}");
        }
        out.push('\n');
    }
}

/// Writes a measure pair in the text format (round-trips with [`parse_pair`]).
pub fn write_pair(path: &Path, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    use std::fmt::Write as _;
    if mu.dim() != nu.dim() {
        return Err(Error::Shape(format!(
            "pair dimensions differ: {} vs {}",
            mu.dim(),
            nu.dim()
        )));
    }
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", mu.len(), nu.len(), mu.dim());
    push_atoms(&mut out, mu);
    push_atoms(&mut out, nu);
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes a single measure (round-trips with [`parse_measure`]).
pub fn write_measure(path: &Path, measure: &DiscreteMeasure) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", measure.len(), measure.dim());
    push_atoms(&mut out, measure);
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pair_with_comments() {
        let text = "\
# a 2 x 1 pair in one dimension
2 1 1
0.5 0.0   # first atom
0.5 1.0
1.0 0.25
";
        let (mu, nu) = parse_pair(text).unwrap();
        assert_eq!(mu.len(), 2);
        assert_eq!(nu.len(), 1);
        assert_eq!(mu.dim(), 1);
        assert_eq!(nu.support()[[0, 0]], 0.25);
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert!(parse_pair("").is_err());
        assert!(parse_pair("2 1").is_err());
        assert!(parse_pair("1 1 1\n0.5 0.0").is_err()); // missing second measure
        assert!(parse_pair("1 1 1\n0.5 0.0\nbad 1.0").is_err());
        assert!(parse_pair("1 1 1\n0.5 0.0 7.0\n1 0.0").is_err()); // too many fields
        assert!(parse_pair("1 1 1\n1 0\n1 0\n1 0").is_err()); // trailing data
    }

    #[test]
    fn write_then_read_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pair.txt");
        let mu = DiscreteMeasure::uniform_1d(&[0.0, 1.5, -2.25]).unwrap();
        let nu = DiscreteMeasure::new(
            ndarray::array![0.25, 0.75],
            ndarray::array![[0.5], [0.75]],
        )
        .unwrap();
        write_pair(&path, &mu, &nu).unwrap();
        let (mu2, nu2) = read_pair(&path).unwrap();
        assert_eq!(mu2.len(), 3);
        for (a, b) in nu.weights().iter().zip(nu2.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in mu.support().iter().zip(mu2.support()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn parses_single_measure() {
        let text = "\
# three atoms in two dimensions
3 2
0.2 0.0 1.0
0.3 -1.0 0.5  # middle atom
0.5 2.0 2.0
";
        let measure = parse_measure(text).unwrap();
        assert_eq!(measure.len(), 3);
        assert_eq!(measure.dim(), 2);
        assert_eq!(measure.support()[[2, 1]], 2.0);
    }

    #[test]
    fn rejects_malformed_single_measures() {
        assert!(parse_measure("").is_err());
        assert!(parse_measure("1 1 1\n1 0\n1 0").is_err()); // pair header
        assert!(parse_measure("2 1\n1 0").is_err()); // missing row
        assert!(parse_measure("1 1\n1 0\n1 0").is_err()); // trailing data
        assert!(parse_measure("0 1").is_err());
    }

    #[test]
    fn single_measure_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("measure.txt");
        let measure = DiscreteMeasure::new(
            ndarray::array![0.25, 0.75],
            ndarray::array![[0.5, -3.0], [0.75, 1.0 / 3.0]],
        )
        .unwrap();
        write_measure(&path, &measure).unwrap();
        let back = read_measure(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.dim(), 2);
        for (a, b) in measure.support().iter().zip(back.support()) {
            assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in measure.weights().iter().zip(back.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
