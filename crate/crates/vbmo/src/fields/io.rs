//! Field file format: a single-line JSON header followed by a raw
//! little-endian f64 payload, row-major within each component, components
//! stored one after another. See docs/formats.md.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FieldError, Result};
use crate::grid::Grid;

use super::{ScalarField, VectorField};

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    n: usize,
    /// [x0, y0, side]
    r#box: [f64; 3],
    components: usize,
    dtype: String,
}

fn write_payload(w: &mut impl Write, comps: &[&[f64]]) -> std::io::Result<()> {
    for c in comps {
        for v in *c {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn write_field(path: &Path, grid: Grid, comps: &[&[f64]]) -> Result<()> {
    let err = |e: std::io::Error| FieldError::Io(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(err)?);
    let header = Header {
        n: grid.n,
        r#box: [grid.x0, grid.y0, grid.side],
        components: comps.len(),
        dtype: "f64-le".to_string(),
    };
    let mut line = serde_json::to_string(&header)
        .map_err(|e| FieldError::Io(e.to_string()))?;
    line.push('\n');
    w.write_all(line.as_bytes()).map_err(err)?;
    write_payload(&mut w, comps).map_err(err)?;
    Ok(())
}

fn read_field(path: &Path, want_components: usize) -> Result<(Grid, Vec<Vec<f64>>)> {
    let err = |e: std::io::Error| FieldError::Io(format!("{}: {e}", path.display()));
    let mut r = BufReader::new(File::open(path).map_err(err)?);
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte).map_err(err)?;
        if byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > 4096 {
            return Err(FieldError::Io("header line too long".into()).into());
        }
    }
    let header: Header = serde_json::from_slice(&line)
        .map_err(|e| FieldError::Io(format!("bad header: {e}")))?;
    if header.dtype != "f64-le" {
        return Err(FieldError::Io(format!("unsupported dtype {}", header.dtype)).into());
    }
    if header.components != want_components {
        return Err(FieldError::Io(format!(
            "expected {want_components} components, file has {}",
            header.components
        ))
        .into());
    }
    let grid = Grid::new(header.n, header.r#box[0], header.r#box[1], header.r#box[2]);
    let mut comps = Vec::with_capacity(header.components);
    for _ in 0..header.components {
        let mut buf = vec![0u8; grid.len() * 8];
        r.read_exact(&mut buf).map_err(err)?;
        let data = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        comps.push(data);
    }
    Ok((grid, comps))
}

pub fn save_scalar(path: &Path, f: &ScalarField) -> Result<()> {
    write_field(path, f.grid, &[&f.data])
}

pub fn load_scalar(path: &Path) -> Result<ScalarField> {
    let (grid, mut comps) = read_field(path, 1)?;
    Ok(ScalarField { grid, data: comps.remove(0) })
}

pub fn save_vector(path: &Path, v: &VectorField) -> Result<()> {
    write_field(path, v.grid, &[&v.x, &v.y])
}

pub fn load_vector(path: &Path) -> Result<VectorField> {
    let (grid, mut comps) = read_field(path, 2)?;
    let x = comps.remove(0);
    let y = comps.remove(0);
    Ok(VectorField { grid, x, y })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.field");
        let g = Grid::centered(16, 1.2);
        let v = VectorField::from_fn(g, |x, y| (x * y, x - y));
        save_vector(&path, &v).unwrap();
        let w = load_vector(&path).unwrap();
        assert_eq!(w.grid, g);
        assert_eq!(v.x, w.x);
        assert_eq!(v.y, w.y);
    }

    #[test]
    fn component_count_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.field");
        let f = ScalarField::zeros(Grid::centered(8, 1.0));
        save_scalar(&path, &f).unwrap();
        assert!(load_vector(&path).is_err());
    }
}
