//! CSV artifacts: field snapshots and diagnostic series.
//!
//! Field snapshot: header `index_0[,index_1[,index_2]],re,im`, one row per
//! interior node in row-major order.
//!
//! Series: header `t,mass_l2_sq,l1_norm,h1_seminorm,sup_abs,forcing_work,boundary_frac`,
//! one row per output time.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::diagnostics::DiagSeries;
use crate::grid::{ComplexField, Grid, GridError};

pub const SERIES_HEADER: [&str; 7] = [
    "t",
    "mass_l2_sq",
    "l1_norm",
    "h1_seminorm",
    "sup_abs",
    "forcing_work",
    "boundary_frac",
];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn field_header(dim: usize) -> Vec<String> {
    (0..dim)
        .map(|d| format!("index_{d}"))
        .chain(["re".to_string(), "im".to_string()])
        .collect()
}

pub fn write_field_csv<W: Write>(field: &ComplexField, writer: W) -> Result<(), IoError> {
    let grid = field.grid();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(field_header(grid.dim()))?;
    for (i, z) in field.values().iter().enumerate() {
        let idx = grid.multi_index(i);
        let mut row: Vec<String> = idx[..grid.dim()].iter().map(|c| c.to_string()).collect();
        row.push(z.re.to_string());
        row.push(z.im.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_field_csv(field: &ComplexField, path: &Path) -> Result<(), IoError> {
    let file = std::fs::File::create(path)?;
    write_field_csv(field, std::io::BufWriter::new(file))
}

/// Raw rows of a field CSV: the number of index columns and the samples in
/// file order, keyed by their index tuple.
pub struct FieldRows {
    pub dim: usize,
    pub rows: Vec<([usize; 3], Complex64)>,
}

pub fn read_field_rows<R: Read>(reader: R) -> Result<FieldRows, IoError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let cols: Vec<&str> = headers.iter().map(str::trim).collect();
    let dim = cols.len().saturating_sub(2);
    if !(1..=3).contains(&dim) || cols != field_header(dim).iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(IoError::Format(format!(
            "expected header index_0[,index_1[,index_2]],re,im; got {}",
            cols.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let parse_err = |what: &str| IoError::Format(format!("row {}: bad {what}", line + 1));
        let mut idx = [0usize; 3];
        for (d, slot) in idx.iter_mut().enumerate().take(dim) {
            *slot = record[d].trim().parse().map_err(|_| parse_err("index"))?;
        }
        let re: f64 = record[dim].trim().parse().map_err(|_| parse_err("re"))?;
        let im: f64 = record[dim + 1].trim().parse().map_err(|_| parse_err("im"))?;
        rows.push((idx, Complex64::new(re, im)));
    }
    Ok(FieldRows { dim, rows })
}

/// Reads a field CSV onto `grid`. Every node must appear exactly once.
pub fn read_field_csv<R: Read>(reader: R, grid: Grid) -> Result<ComplexField, IoError> {
    let rows = read_field_rows(reader)?;
    if rows.dim != grid.dim() {
        return Err(IoError::Format(format!(
            "file has {} index columns, grid is {}-dimensional",
            rows.dim,
            grid.dim()
        )));
    }
    field_from_rows(&rows, grid)
}

pub fn field_from_rows(rows: &FieldRows, grid: Grid) -> Result<ComplexField, IoError> {
    if rows.rows.len() != grid.len() {
        return Err(IoError::Grid(GridError::ShapeMismatch {
            expected: grid.len(),
            got: rows.rows.len(),
        }));
    }
    let m = grid.points_per_dim();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut seen = vec![false; grid.len()];
    for (idx, z) in &rows.rows {
        if idx[..grid.dim()].iter().any(|&c| c >= m) {
            return Err(IoError::Format(format!("index {idx:?} outside the grid")));
        }
        let flat = grid.flat_index(idx);
        if std::mem::replace(&mut seen[flat], true) {
            return Err(IoError::Format(format!("duplicate index {idx:?}")));
        }
        values[flat] = *z;
    }
    Ok(ComplexField::from_values(grid, values)?)
}

pub fn load_field_csv(path: &Path, grid: Grid) -> Result<ComplexField, IoError> {
    let file = std::fs::File::open(path)?;
    read_field_csv(std::io::BufReader::new(file), grid)
}

fn coordinate_header(dim: usize) -> Vec<String> {
    (0..dim)
        .map(|d| format!("x_{d}"))
        .chain(["re".to_string(), "im".to_string()])
        .collect()
}

/// Writes a field with node coordinates instead of indices:
/// `x_0[,x_1[,x_2]],re,im`. The grid can be recovered from the file alone.
pub fn write_sampled_csv<W: Write>(field: &ComplexField, writer: W) -> Result<(), IoError> {
    let grid = field.grid();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(coordinate_header(grid.dim()))?;
    for (i, z) in field.values().iter().enumerate() {
        let pos = grid.position(i);
        let mut row: Vec<String> = pos[..grid.dim()].iter().map(|c| c.to_string()).collect();
        row.push(z.re.to_string());
        row.push(z.im.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Relative tolerance when matching coordinates to grid nodes.
const COORD_TOL: f64 = 1e-9;

/// Reads a sampled function in either the index format (which needs the box
/// half-width) or the coordinate format (which determines the grid; a given
/// half-width must then agree with it).
pub fn read_sampled_csv<R: Read>(reader: R, half_width: Option<f64>) -> Result<ComplexField, IoError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let cols: Vec<&str> = headers.iter().map(str::trim).collect();
    let dim = cols.len().saturating_sub(2);
    if !(1..=3).contains(&dim) {
        return Err(IoError::Format(format!("unrecognized header {}", cols.join(","))));
    }
    if cols == field_header(dim).iter().map(String::as_str).collect::<Vec<_>>() {
        let half_width = half_width.ok_or_else(|| {
            IoError::Format("index-format input needs the box half-width".into())
        })?;
        let mut text = Vec::new();
        let mut w = csv::Writer::from_writer(&mut text);
        w.write_record(&headers)?;
        for rec in r.records() {
            w.write_record(&rec?)?;
        }
        drop(w);
        let rows = read_field_rows(text.as_slice())?;
        let m = rows
            .rows
            .iter()
            .flat_map(|(idx, _)| idx[..dim].to_vec())
            .max()
            .map_or(0, |c| c + 1);
        return field_from_rows(&rows, Grid::new(dim, half_width, m)?);
    }
    if cols != coordinate_header(dim).iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(IoError::Format(format!(
            "expected header index_0[,...],re,im or x_0[,...],re,im; got {}",
            cols.join(",")
        )));
    }
    let mut samples = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let parse = |k: usize| -> Result<f64, IoError> {
            record[k]
                .trim()
                .parse()
                .map_err(|_| IoError::Format(format!("row {}: bad {}", line + 1, cols[k])))
        };
        let mut x = [0.0; 3];
        for (d, slot) in x.iter_mut().enumerate().take(dim) {
            *slot = parse(d)?;
        }
        samples.push((x, Complex64::new(parse(dim)?, parse(dim + 1)?)));
    }
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| {
        x[..dim].iter().fold((lo, hi), |(a, b), c| (a.min(*c), b.max(*c)))
    });
    let m = (samples.len() as f64).powf(1.0 / dim as f64).round() as usize;
    if m < 2 || m.pow(dim as u32) != samples.len() || !(hi > lo) {
        return Err(IoError::Format(format!(
            "{} samples do not form a square {dim}-dimensional grid",
            samples.len()
        )));
    }
    let h = (hi - lo) / (m - 1) as f64;
    let inferred = (hi - lo) / 2.0 + h;
    if (lo + hi).abs() > COORD_TOL * inferred {
        return Err(IoError::Format("grid is not centred at the origin".into()));
    }
    if let Some(l) = half_width {
        if (l - inferred).abs() > COORD_TOL * inferred {
            return Err(IoError::Format(format!(
                "coordinates imply half-width {inferred}, not {l}"
            )));
        }
    }
    let grid = Grid::new(dim, inferred, m)?;
    let mut rows = Vec::with_capacity(samples.len());
    for (x, z) in samples {
        let mut idx = [0usize; 3];
        for d in 0..dim {
            let j = (x[d] + inferred) / h - 1.0;
            let k = j.round();
            if (j - k).abs() > COORD_TOL * m as f64 || k < 0.0 {
                return Err(IoError::Format(format!("coordinate {} is off the grid", x[d])));
            }
            idx[d] = k as usize;
        }
        rows.push((idx, z));
    }
    field_from_rows(&FieldRows { dim, rows }, grid)
}

pub fn load_sampled_csv(path: &Path, half_width: Option<f64>) -> Result<ComplexField, IoError> {
    let file = std::fs::File::open(path)?;
    read_sampled_csv(std::io::BufReader::new(file), half_width)
}

pub fn write_series_csv<W: Write>(series: &DiagSeries, writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SERIES_HEADER)?;
    for i in 0..series.len() {
        w.write_record([
            series.times[i].to_string(),
            series.mass_sq[i].to_string(),
            series.l1[i].to_string(),
            series.h1semi[i].to_string(),
            series.sup_abs[i].to_string(),
            series.forcing_work[i].to_string(),
            series.boundary_frac[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_series_csv(series: &DiagSeries, path: &Path) -> Result<(), IoError> {
    let file = std::fs::File::create(path)?;
    write_series_csv(series, std::io::BufWriter::new(file))
}

pub fn read_series_csv<R: Read>(reader: R) -> Result<DiagSeries, IoError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let cols: Vec<&str> = headers.iter().map(str::trim).collect();
    if cols != SERIES_HEADER {
        return Err(IoError::Format(format!(
            "expected series header {}; got {}",
            SERIES_HEADER.join(","),
            cols.join(",")
        )));
    }
    let mut series = DiagSeries::default();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let mut vals = [0.0f64; 7];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = record[k]
                .trim()
                .parse()
                .map_err(|_| IoError::Format(format!("row {}: bad {}", line + 1, SERIES_HEADER[k])))?;
        }
        series.times.push(vals[0]);
        series.mass_sq.push(vals[1]);
        series.l1.push(vals[2]);
        series.h1semi.push(vals[3]);
        series.sup_abs.push(vals[4]);
        series.forcing_work.push(vals[5]);
        series.boundary_frac.push(vals[6]);
    }
    series
        .validate()
        .map_err(|e| IoError::Format(e.to_string()))?;
    Ok(series)
}

pub fn load_series_csv(path: &Path) -> Result<DiagSeries, IoError> {
    let file = std::fs::File::open(path)?;
    read_series_csv(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_csv_round_trip() {
        let grid = Grid::new(2, 1.0, 8).unwrap();
        let f = ComplexField::from_fn(grid, |x| Complex64::new(x[0], 0.1 + x[1] * x[1]));
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("index_0,index_1,re,im\n"));
        let back = read_field_csv(buf.as_slice(), grid).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn field_csv_errors() {
        let grid = Grid::new(1, 1.0, 8).unwrap();
        let missing = "index_0,re,im\n0,1,0\n";
        assert!(read_field_csv(missing.as_bytes(), grid).is_err());
        let bad_header = "i,re,im\n";
        assert!(matches!(
            read_field_csv(bad_header.as_bytes(), grid),
            Err(IoError::Format(_))
        ));
        let mut dup = String::from("index_0,re,im\n");
        for i in 0..8 {
            dup.push_str(&format!("{},0,0\n", i.min(6)));
        }
        assert!(matches!(read_field_csv(dup.as_bytes(), grid), Err(IoError::Format(_))));
    }

    #[test]
    fn series_csv_round_trip() {
        let mut s = DiagSeries::default();
        for k in 0..4 {
            let t = k as f64 * 0.1;
            s.times.push(t);
            s.mass_sq.push(1.0 / (1.0 + t));
            s.l1.push(0.5);
            s.h1semi.push(2.0);
            s.sup_abs.push(1.0);
            s.forcing_work.push(-0.25 * t);
            s.boundary_frac.push(1e-12);
        }
        let mut buf = Vec::new();
        write_series_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "t,mass_l2_sq,l1_norm,h1_seminorm,sup_abs,forcing_work,boundary_frac\n"
        ));
        assert_eq!(read_series_csv(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn sampled_csv_formats() {
        let grid = Grid::new(2, 1.5, 9).unwrap();
        let f = ComplexField::from_fn(grid, |x| Complex64::new(x[0] - x[1], x[0] * x[1]));
        let mut coords = Vec::new();
        write_sampled_csv(&f, &mut coords).unwrap();
        let back = read_sampled_csv(coords.as_slice(), None).unwrap();
        assert_eq!(back.grid().points_per_dim(), 9);
        assert!((back.grid().half_width() - 1.5).abs() < 1e-12);
        assert_eq!(back.values(), f.values());
        assert!(read_sampled_csv(coords.as_slice(), Some(2.0)).is_err());

        let mut indexed = Vec::new();
        write_field_csv(&f, &mut indexed).unwrap();
        assert!(read_sampled_csv(indexed.as_slice(), None).is_err());
        let back = read_sampled_csv(indexed.as_slice(), Some(1.5)).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn sampled_csv_rejects_ragged_grids() {
        let text = "x_0,re,im\n-0.5,1,0\n0.1,1,0\n0.5,1,0\n";
        assert!(read_sampled_csv(text.as_bytes(), None).is_err());
        let text = "x_0,re,im\n0.5,1,0\n1.5,1,0\n";
        assert!(read_sampled_csv(text.as_bytes(), None).is_err());
    }
}
