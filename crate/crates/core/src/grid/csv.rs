//! Plain-text grid exchange: a header `x[,y],value` followed by one row per
//! node in index order, floats written with 17 significant digits so that a
//! round trip is exact.

use std::io::{BufRead, Write};

use super::{GridError, GridFunction, Lattice};

const AXIS_NAMES: [&str; 2] = ["x", "y"];

pub fn write_grid_csv<W: Write>(grid: &GridFunction, mut out: W) -> Result<(), GridError> {
    let lat = grid.lattice();
    let dim = lat.dim();
    writeln!(out, "{},value", AXIS_NAMES[..dim].join(","))?;
    for (i, v) in grid.values().iter().enumerate() {
        let x = lat.point(i);
        for xk in &x[..dim] {
            write!(out, "{xk:.16e},")?;
        }
        writeln!(out, "{v:.16e}")?;
    }
    Ok(())
}

/// Reads a grid written by [`write_grid_csv`] onto `lattice`, checking that
/// the header dimension, row count and node coordinates agree.
pub fn read_grid_csv<R: BufRead>(lattice: Lattice, input: R) -> Result<GridFunction, GridError> {
    let dim = lattice.dim();
    let mut lines = input.lines();
    let header = lines.next().transpose()?.ok_or(GridError::Csv {
        line: 1,
        message: "missing header".into(),
    })?;
    let expected = format!("{},value", AXIS_NAMES[..dim].join(","));
    if header.trim() != expected {
        return Err(GridError::Csv {
            line: 1,
            message: format!("expected header `{expected}`, found `{}`", header.trim()),
        });
    }
    let tol = 1e-9 * lattice.spacing()[..dim].iter().cloned().fold(f64::INFINITY, f64::min);
    let mut values = Vec::with_capacity(lattice.len());
    for (row, line) in lines.enumerate() {
        let line_no = row + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let fields = fields.map_err(|e| GridError::Csv {
            line: line_no,
            message: e.to_string(),
        })?;
        if fields.len() != dim + 1 {
            return Err(GridError::Csv {
                line: line_no,
                message: format!("expected {} fields, found {}", dim + 1, fields.len()),
            });
        }
        let index = values.len();
        if index >= lattice.len() {
            return Err(GridError::ValueCount {
                expected: lattice.len(),
                found: index + 1,
            });
        }
        let x = lattice.point(index);
        if (0..dim).any(|k| (x[k] - fields[k]).abs() > tol) {
            return Err(GridError::Csv {
                line: line_no,
                message: format!("coordinates {:?} do not match node {:?}", &fields[..dim], &x[..dim]),
            });
        }
        values.push(fields[dim]);
    }
    GridFunction::new(lattice, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let lat = Lattice::from_bounds(&[-1.0, 0.0], &[1.0, 2.0], &[5, 4]).unwrap();
        let g = GridFunction::from_fn(lat, |x| (x[0] * 1.234567890123).sin() / 3.0 + x[1]);
        let mut buf = Vec::new();
        write_grid_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,y,value\n"));
        assert_eq!(text.lines().count(), 21);
        let back = read_grid_csv(lat, buf.as_slice()).unwrap();
        assert_eq!(back.values(), g.values());
    }

    #[test]
    fn wrong_header_and_count_rejected() {
        let lat = Lattice::from_bounds(&[0.0], &[1.0], &[3]).unwrap();
        assert!(matches!(
            read_grid_csv(lat, "x,y,value\n".as_bytes()),
            Err(GridError::Csv { line: 1, .. })
        ));
        assert!(matches!(
            read_grid_csv(lat, "x,value\n0,1\n0.5,2\n".as_bytes()),
            Err(GridError::ValueCount { .. })
        ));
        assert!(matches!(
            read_grid_csv(lat, "x,value\n0,1\n0.4,2\n1,3\n".as_bytes()),
            Err(GridError::Csv { line: 3, .. })
        ));
    }
}
