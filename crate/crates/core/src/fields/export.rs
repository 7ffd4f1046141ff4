//! Legacy VTK and CSV writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{FieldError, Grid, QField, ScalarField, VectorField};

pub enum VtkArray<'a> {
    Scalar(&'a ScalarField),
    Vector(&'a VectorField),
    Tensor(&'a QField),
}

/// Writes an ASCII `STRUCTURED_POINTS` file with one point per cell centre.
pub fn write_vtk(path: &Path, grid: &Grid, arrays: &[(&str, VtkArray)]) -> Result<(), FieldError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "nematic colloid fields")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", grid.n[0], grid.n[1], grid.n[2])?;
    let h: Vec<f64> = (0..3).map(|a| if a < grid.dim { grid.h(a) } else { 1.0 }).collect();
    let origin: Vec<f64> = (0..3).map(|a| if a < grid.dim { 0.5 * h[a] } else { 0.0 }).collect();
    writeln!(w, "ORIGIN {:e} {:e} {:e}", origin[0], origin[1], origin[2])?;
    writeln!(w, "SPACING {:e} {:e} {:e}", h[0], h[1], h[2])?;
    writeln!(w, "POINT_DATA {}", grid.cells())?;
    for (name, array) in arrays {
        match array {
            VtkArray::Scalar(f) => {
                writeln!(w, "SCALARS {name} double 1")?;
                writeln!(w, "LOOKUP_TABLE default")?;
                for v in &f.data {
                    writeln!(w, "{v:.16e}")?;
                }
            }
            VtkArray::Vector(f) => {
                writeln!(w, "VECTORS {name} double")?;
                for v in &f.data {
                    writeln!(w, "{:.16e} {:.16e} {:.16e}", v[0], v[1], v[2])?;
                }
            }
            VtkArray::Tensor(f) => {
                writeln!(w, "TENSORS {name} double")?;
                for q in &f.data {
                    let m = q.to_mat();
                    for r in 0..3 {
                        writeln!(w, "{:.16e} {:.16e} {:.16e}", m[(r, 0)], m[(r, 1)], m[(r, 2)])?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Comma-separated table with a header row and 17 significant digits.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), FieldError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Boundary, Field};
    use crate::tensor::Vec3;

    #[test]
    fn vtk_header_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(&[8, 8], &[1.0, 1.0]).unwrap();
        let s = Field::from_fn(g, Boundary::Free, |x| x[0]);
        let v = Field::from_fn(g, Boundary::Free, |x| Vec3::new(x[0], x[1], 0.0));
        let q: QField = Field::zeros(g, Boundary::Free);
        let path = dir.path().join("f.vtk");
        write_vtk(
            &path,
            &g,
            &[("phi", VtkArray::Scalar(&s)), ("u", VtkArray::Vector(&v)), ("Q", VtkArray::Tensor(&q))],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("DIMENSIONS 8 8 1"));
        assert!(text.contains("POINT_DATA 64"));
        assert_eq!(text.lines().count(), 8 + 2 + 64 + 1 + 64 + 1 + 3 * 64);
    }

    #[test]
    fn csv_roundtrips_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let x = 0.1f64 + 0.2;
        write_csv(&path, &["t", "e"], &[vec![x, -1.0 / 3.0]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,e"));
        let vals: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(vals, vec![x, -1.0 / 3.0]);
    }
}
