//! Matrix Market exchange format, coordinate and array variants.
//!
//! The banner line is `%%MatrixMarket matrix <format> <field> <symmetry>`.
//! Fields `real`, `integer` and `complex` are accepted; `pattern` is
//! rejected because a pattern-only graph has no well-defined spectrum for
//! our purposes. Symmetric, skew-symmetric and hermitian storage is
//! expanded to full general storage on load, indices become 0-based, and
//! duplicate entries are summed. Real input is promoted to complex.

use crate::error::{Error, Result};
use crate::scalar::{Cx, Scalar};
use crate::sparse::SparseMatrix;
use num_complex::Complex;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MmFormat {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MmField {
    Real,
    Integer,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MmSymmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

struct LineError {
    line: usize,
    msg: String,
}

fn err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_banner(line: &str) -> std::result::Result<(MmFormat, MmField, MmSymmetry), String> {
    let mut tok = line.split_whitespace();
    match tok.next() {
        Some(t) if t.eq_ignore_ascii_case("%%MatrixMarket") => {}
        _ => return Err("first line must start with %%MatrixMarket".into()),
    }
    match tok.next() {
        Some(t) if t.eq_ignore_ascii_case("matrix") => {}
        other => {
            return Err(format!(
                "expected object \"matrix\", found {:?}",
                other.unwrap_or("")
            ))
        }
    }
    let format = match tok.next().map(str::to_ascii_lowercase).as_deref() {
        Some("coordinate") => MmFormat::Coordinate,
        Some("array") => MmFormat::Array,
        other => {
            return Err(format!(
                "expected format coordinate|array, found {:?}",
                other.unwrap_or("")
            ))
        }
    };
    let field = match tok.next().map(str::to_ascii_lowercase).as_deref() {
        Some("real") => MmField::Real,
        Some("integer") => MmField::Integer,
        Some("complex") => MmField::Complex,
        Some("pattern") => return Err("pattern matrices are not supported".into()),
        other => {
            return Err(format!(
                "expected field real|integer|complex, found {:?}",
                other.unwrap_or("")
            ))
        }
    };
    let symmetry = match tok.next().map(str::to_ascii_lowercase).as_deref() {
        Some("general") => MmSymmetry::General,
        Some("symmetric") => MmSymmetry::Symmetric,
        Some("skew-symmetric") => MmSymmetry::SkewSymmetric,
        Some("hermitian") => MmSymmetry::Hermitian,
        other => {
            return Err(format!(
                "expected symmetry general|symmetric|skew-symmetric|hermitian, found {:?}",
                other.unwrap_or("")
            ))
        }
    };
    Ok((format, field, symmetry))
}

fn parse_value<S: Scalar>(
    tokens: &mut std::str::SplitWhitespace,
    field: MmField,
) -> std::result::Result<Cx<S>, String> {
    let re: f64 = tokens
        .next()
        .ok_or("missing value")?
        .parse()
        .map_err(|_| "cannot parse value".to_string())?;
    let im: f64 = if field == MmField::Complex {
        tokens
            .next()
            .ok_or("missing imaginary part")?
            .parse()
            .map_err(|_| "cannot parse imaginary part".to_string())?
    } else {
        0.0
    };
    if !re.is_finite() || !im.is_finite() {
        return Err("non-finite value".into());
    }
    Ok(Complex::new(S::real(re), S::real(im)))
}

fn expand_symmetry<S: Scalar>(triplets: &mut Vec<(usize, usize, Cx<S>)>, symmetry: MmSymmetry) {
    if symmetry == MmSymmetry::General {
        return;
    }
    let stored = triplets.len();
    for k in 0..stored {
        let (i, j, v) = triplets[k];
        if i == j {
            continue;
        }
        let mirrored = match symmetry {
            MmSymmetry::Symmetric => v,
            MmSymmetry::SkewSymmetric => -v,
            MmSymmetry::Hermitian => v.conj(),
            MmSymmetry::General => unreachable!(),
        };
        triplets.push((j, i, mirrored));
    }
}

fn read_inner<S: Scalar, R: BufRead>(reader: R, path: &str) -> Result<SparseMatrix<S>> {
    let mut lines = reader.lines().enumerate();

    let (_, banner) = lines
        .next()
        .ok_or_else(|| err(path, 1, "empty file"))?
        .1
        .map(|l| (0usize, l))
        .map_err(|e| Error::Io {
            path: path.to_string(),
            source: e,
        })?;
    let (format, field, symmetry) = parse_banner(&banner).map_err(|msg| err(path, 1, msg))?;

    let mut nrows = 0usize;
    let mut ncols = 0usize;
    let mut declared_nnz = 0usize;
    let mut size_seen = false;
    let mut triplets: Vec<(usize, usize, Cx<S>)> = Vec::new();
    // array cursor: column-major position
    let mut array_col = 0usize;
    let mut array_row = 0usize;
    let mut array_count = 0usize;
    let mut array_total = 0usize;

    let result: std::result::Result<(), LineError> = (|| {
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.map_err(|e| LineError {
                line: lineno,
                msg: e.to_string(),
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            let mut tokens = trimmed.split_whitespace();
            if !size_seen {
                let parse_dim =
                    |t: Option<&str>, what: &str| -> std::result::Result<usize, LineError> {
                        t.ok_or(LineError {
                            line: lineno,
                            msg: format!("missing {what}"),
                        })?
                        .parse::<usize>()
                        .map_err(|_| LineError {
                            line: lineno,
                            msg: format!("cannot parse {what}"),
                        })
                    };
                nrows = parse_dim(tokens.next(), "number of rows")?;
                ncols = parse_dim(tokens.next(), "number of columns")?;
                if format == MmFormat::Coordinate {
                    declared_nnz = parse_dim(tokens.next(), "number of entries")?;
                    triplets.reserve(declared_nnz);
                } else {
                    array_total = match symmetry {
                        MmSymmetry::General => nrows * ncols,
                        MmSymmetry::SkewSymmetric => {
                            // strictly lower triangle
                            (0..ncols).map(|j| nrows.saturating_sub(j + 1)).sum()
                        }
                        _ => (0..ncols).map(|j| nrows - j.min(nrows)).sum(),
                    };
                    array_row = if symmetry == MmSymmetry::SkewSymmetric {
                        1
                    } else {
                        0
                    };
                }
                if symmetry != MmSymmetry::General && nrows != ncols {
                    return Err(LineError {
                        line: lineno,
                        msg: "symmetric storage requires a square matrix".into(),
                    });
                }
                size_seen = true;
                continue;
            }

            match format {
                MmFormat::Coordinate => {
                    if triplets.len() == declared_nnz {
                        return Err(LineError {
                            line: lineno,
                            msg: "more entries than declared".into(),
                        });
                    }
                    let parse_idx =
                        |t: Option<&str>, what: &str| -> std::result::Result<usize, LineError> {
                            t.ok_or(LineError {
                                line: lineno,
                                msg: format!("missing {what}"),
                            })?
                            .parse::<usize>()
                            .map_err(|_| LineError {
                                line: lineno,
                                msg: format!("cannot parse {what}"),
                            })
                        };
                    let i = parse_idx(tokens.next(), "row index")?;
                    let j = parse_idx(tokens.next(), "column index")?;
                    if i < 1 || i > nrows || j < 1 || j > ncols {
                        return Err(LineError {
                            line: lineno,
                            msg: format!("index ({i}, {j}) out of bounds for {nrows}x{ncols}"),
                        });
                    }
                    let v = parse_value::<S>(&mut tokens, field)
                        .map_err(|msg| LineError { line: lineno, msg })?;
                    triplets.push((i - 1, j - 1, v));
                }
                MmFormat::Array => {
                    if array_count == array_total {
                        return Err(LineError {
                            line: lineno,
                            msg: "more entries than the array shape holds".into(),
                        });
                    }
                    let v = parse_value::<S>(&mut tokens, field)
                        .map_err(|msg| LineError { line: lineno, msg })?;
                    if v.norm_sqr() > S::zero() {
                        triplets.push((array_row, array_col, v));
                    }
                    array_count += 1;
                    array_row += 1;
                    if array_row == nrows {
                        array_col += 1;
                        array_row = match symmetry {
                            MmSymmetry::General => 0,
                            MmSymmetry::SkewSymmetric => array_col + 1,
                            _ => array_col,
                        };
                    }
                }
            }
        }
        Ok(())
    })();
    result.map_err(|e| err(path, e.line, e.msg))?;

    if !size_seen {
        return Err(err(path, 0, "missing size line"));
    }
    if format == MmFormat::Coordinate && triplets.len() != declared_nnz {
        return Err(err(
            path,
            0,
            format!(
                "declared {} entries but found {}",
                declared_nnz,
                triplets.len()
            ),
        ));
    }
    if format == MmFormat::Array && array_count != array_total {
        return Err(err(
            path,
            0,
            format!("expected {array_total} array values, found {array_count}"),
        ));
    }

    expand_symmetry(&mut triplets, symmetry);
    SparseMatrix::from_triplets(nrows, ncols, triplets)
}

/// Reads a Matrix Market stream; `name` labels error messages.
pub fn read_matrix_market<S: Scalar, R: BufRead>(reader: R, name: &str) -> Result<SparseMatrix<S>> {
    read_inner(reader, name)
}

/// Loads a Matrix Market file.
pub fn load_matrix_market<S: Scalar>(path: impl AsRef<Path>) -> Result<SparseMatrix<S>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::Io {
        path: display.clone(),
        source: e,
    })?;
    read_inner(BufReader::new(file), &display)
}

/// Writes coordinate/complex/general Matrix Market, preserving every stored
/// entry (including explicit zeros) so load -> write -> load round-trips.
pub fn write_matrix_market<S: Scalar>(path: impl AsRef<Path>, m: &SparseMatrix<S>) -> Result<()> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut file = File::create(path).map_err(|e| Error::Io {
        path: display.clone(),
        source: e,
    })?;
    let body = format_matrix_market(m);
    file.write_all(body.as_bytes()).map_err(|e| Error::Io {
        path: display,
        source: e,
    })
}

pub fn format_matrix_market<S: Scalar>(m: &SparseMatrix<S>) -> String {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate complex general\n");
    out.push_str(&format!("{} {} {}\n", m.nrows(), m.ncols(), m.nnz()));
    for (i, j, v) in m.triplets() {
        out.push_str(&format!("{} {} {:e} {:e}\n", i + 1, j + 1, v.re, v.im));
    }
    out
}
