//! CSV readers and writers for kernels, grid functions and two-point fields.
//!
//! Numbers are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};
use crate::operators::TwoPointField;

pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path)?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn header(path: &Path, reader: &mut csv::Reader<File>) -> Result<Vec<String>> {
    let headers = reader
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    Ok(headers.iter().map(str::to_owned).collect())
}

fn expect_header(path: &Path, got: &[String], want: &[&str]) -> Result<()> {
    if got.len() == want.len() && got.iter().zip(want).all(|(g, w)| g == w) {
        Ok(())
    } else {
        Err(parse_err(
            path,
            1,
            format!("expected header `{}`, found `{}`", want.join(","), got.join(",")),
        ))
    }
}

/// Reads every data row as floats, checking the column count.
fn rows(path: &Path, reader: &mut csv::Reader<File>, columns: usize) -> Result<Vec<(u64, Vec<f64>)>> {
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != columns {
            return Err(parse_err(
                path,
                line,
                format!("expected {columns} fields, found {}", record.len()),
            ));
        }
        let mut vals = Vec::with_capacity(columns);
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, line, format!("`{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(path, line, format!("non-finite value `{field}`")));
            }
            vals.push(v);
        }
        out.push((line, vals));
    }
    Ok(out)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Reads a `z,mu` table.
pub fn read_kernel_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = open_reader(path)?;
    let head = header(path, &mut reader)?;
    expect_header(path, &head, &["z", "mu"])?;
    let data = rows(path, &mut reader, 2)?;
    Ok(data.into_iter().map(|(_, r)| (r[0], r[1])).unzip())
}

pub fn write_kernel_table(path: &Path, offsets: &[f64], values: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "z,mu")?;
    for (z, mu) in offsets.iter().zip(values) {
        writeln!(w, "{},{}", fmt_num(*z), fmt_num(*mu))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an `i,j,alpha` table into a row-major `m × m` array.
pub fn read_two_point_kernel(path: &Path, m: usize) -> Result<Vec<f64>> {
    let mut reader = open_reader(path)?;
    let head = header(path, &mut reader)?;
    expect_header(path, &head, &["i", "j", "alpha"])?;
    read_indexed(path, &mut reader, m)
}

fn read_indexed(path: &Path, reader: &mut csv::Reader<File>, m: usize) -> Result<Vec<f64>> {
    let mut values = vec![f64::NAN; m * m];
    for (line, r) in rows(path, reader, 3)? {
        let (i, j) = (r[0], r[1]);
        if i.fract() != 0.0 || j.fract() != 0.0 || i < 0.0 || j < 0.0 || i >= m as f64 || j >= m as f64 {
            return Err(parse_err(path, line, format!("index ({i}, {j}) outside 0..{m}")));
        }
        values[i as usize * m + j as usize] = r[2];
    }
    if let Some(k) = values.iter().position(|v| v.is_nan()) {
        return Err(parse_err(path, 0, format!("missing entry ({}, {})", k / m, k % m)));
    }
    Ok(values)
}

pub fn write_two_point_kernel(path: &Path, m: usize, values: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "i,j,alpha")?;
    for i in 0..m {
        for j in 0..m {
            writeln!(w, "{i},{j},{}", fmt_num(values[i * m + j]))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an `x,u1[,u2,…]` file; returns the node coordinates and the values.
pub fn read_grid_function(path: &Path) -> Result<(Vec<f64>, GridFunction)> {
    let mut reader = open_reader(path)?;
    let head = header(path, &mut reader)?;
    let ok = head.len() >= 2
        && head[0] == "x"
        && head[1..].iter().enumerate().all(|(c, name)| *name == format!("u{}", c + 1));
    if !ok {
        return Err(parse_err(path, 1, format!("expected header `x,u1[,u2,…]`, found `{}`", head.join(","))));
    }
    let n = head.len() - 1;
    let data = rows(path, &mut reader, n + 1)?;
    let xs = data.iter().map(|(_, r)| r[0]).collect();
    let values = data.iter().flat_map(|(_, r)| r[1..].to_vec()).collect();
    let u = GridFunction::new(data.len(), n, values)?;
    Ok((xs, u))
}

/// Reads a grid function and checks its `x` column against `domain`.
pub fn read_grid_function_on(path: &Path, domain: &Domain) -> Result<GridFunction> {
    let (xs, u) = read_grid_function(path)?;
    if xs.len() != domain.node_count() {
        return Err(parse_err(
            path,
            0,
            format!("{} rows, domain has {} nodes", xs.len(), domain.node_count()),
        ));
    }
    let tol = 1e-9 * domain.spacing();
    for (k, (&x, &node)) in xs.iter().zip(domain.nodes()).enumerate() {
        if (x - node).abs() > tol {
            return Err(parse_err(
                path,
                k as u64 + 2,
                format!("x = {x} does not match grid node {node}"),
            ));
        }
    }
    Ok(u)
}

pub fn write_grid_function(path: &Path, domain: &Domain, u: &GridFunction) -> Result<()> {
    domain.check_len(u.rows(), "grid function")?;
    let mut w = create(path)?;
    write!(w, "x")?;
    for c in 0..u.components() {
        write!(w, ",u{}", c + 1)?;
    }
    writeln!(w)?;
    for i in 0..u.rows() {
        write!(w, "{}", fmt_num(domain.x(i)))?;
        for &v in u.row(i) {
            write!(w, ",{}", fmt_num(v))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a scalar two-point field as `i,j,value`.
pub fn write_two_point_field(path: &Path, field: &TwoPointField) -> Result<()> {
    let m = field.node_count();
    let mut w = create(path)?;
    writeln!(w, "i,j,value")?;
    for i in 0..m {
        for j in 0..m {
            writeln!(w, "{i},{j},{}", fmt_num(field.get(i, j, 0)))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_two_point_field(path: &Path, m: usize) -> Result<TwoPointField> {
    let mut reader = open_reader(path)?;
    let head = header(path, &mut reader)?;
    expect_header(path, &head, &["i", "j", "value"])?;
    let values = read_indexed(path, &mut reader, m)?;
    TwoPointField::new(m, 1, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{sample_kernel, KernelSpec};

    #[test]
    fn kernel_table_reemits_identically() {
        let dir = tempfile::tempdir().unwrap();
        let d = Domain::new(-1.0, 1.0, 1.0, 31, &[]).unwrap();
        let mu = sample_kernel(&KernelSpec::Gaussian { sigma: 0.7 }, &d).unwrap();
        let first = dir.path().join("k1.csv");
        write_kernel_table(&first, mu.offsets().unwrap(), mu.values()).unwrap();
        let reread = sample_kernel(&KernelSpec::Table { file: first.clone() }, &d).unwrap();
        assert_eq!(reread.values(), mu.values());
        let second = dir.path().join("k2.csv");
        write_kernel_table(&second, reread.offsets().unwrap(), reread.values()).unwrap();
        assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    }

    #[test]
    fn parse_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.csv");
        std::fs::write(&p, "x,u1\n0.0,1.0\n0.5,abc\n").unwrap();
        match read_grid_function(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        std::fs::write(&p, "x,v\n0.0,1.0\n").unwrap();
        assert!(matches!(read_grid_function(&p), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn two_point_kernel_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = Domain::new(0.0, 1.0, 0.5, 5, &[]).unwrap();
        let values: Vec<f64> = (0..25).map(|k| (k as f64).sqrt()).collect();
        let p = dir.path().join("a.csv");
        write_two_point_kernel(&p, 5, &values).unwrap();
        let k = sample_kernel(&KernelSpec::TwoPoint { file: p }, &d).unwrap();
        assert_eq!(k.values(), values.as_slice());
    }

    #[test]
    fn grid_function_round_trip_checks_nodes() {
        let dir = tempfile::tempdir().unwrap();
        let d = Domain::new(0.0, 1.0, 0.5, 5, &[]).unwrap();
        let u = GridFunction::from_fn(&d, |x| x.sin()).unwrap();
        let p = dir.path().join("u.csv");
        write_grid_function(&p, &d, &u).unwrap();
        assert_eq!(read_grid_function_on(&p, &d).unwrap(), u);
        let other = Domain::new(0.0, 1.0, 0.5, 7, &[]).unwrap();
        assert!(read_grid_function_on(&p, &other).is_err());
    }
}
