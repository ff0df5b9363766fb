//! Nodal displacement fields on the full `(nx+1) x (ny+1) x (nz+1)` lattice
//! and their legacy-VTK dump.
//!
//! VTK layout, one line per item, `\n` line ends:
//!
//! ```text
//! # vtk DataFile Version 3.0
//! <title>
//! ASCII
//! DATASET STRUCTURED_POINTS
//! DIMENSIONS <nx+1> <ny+1> <nz+1>
//! ORIGIN 0 0 -0.5
//! SPACING <dx> <dy> <dz>
//! POINT_DATA <count>
//! VECTORS <name> double
//! <u1> <u2> <u3>        (one line per point, x fastest, then y, then z)
//! ```
//!
//! Numbers are written with Rust's `{:.16e}` format; spacings use `{}`.

use std::fmt::Write as _;
use std::path::Path;

use super::dofmap::DofMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub lx: f64,
    pub ly: f64,
    pub values: Vec<[f64; 3]>,
}

impl NodalField {
    pub fn zeros(nx: usize, ny: usize, nz: usize, lx: f64, ly: f64) -> Self {
        Self { nx, ny, nz, lx, ly, values: vec![[0.0; 3]; (nx + 1) * (ny + 1) * (nz + 1)] }
    }

    /// Samples `f(x1, x2, x3)` at the lattice points, `x3` in `[-1/2, 1/2]`.
    pub fn from_fn(nx: usize, ny: usize, nz: usize, lx: f64, ly: f64, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(nx, ny, nz, lx, ly);
        for k in 0..=nz {
            for j in 0..=ny {
                for i in 0..=nx {
                    let (x, y, z) = out.point(i, j, k);
                    let idx = out.index(i, j, k);
                    out.values[idx] = f(x, y, z);
                }
            }
        }
        out
    }

    /// Expands free-dof values to every lattice point; periodic images are
    /// copied in cell mode and constrained dofs are zero.
    pub fn from_dofs(map: &DofMap, u: &[f64]) -> Self {
        let nodal = map.to_nodal(u);
        let (dx, dy, _) = map.element_size();
        let mut out = Self::zeros(map.nx, map.ny, map.nz, dx * map.nx as f64, dy * map.ny as f64);
        for k in 0..=map.nz {
            for j in 0..=map.ny {
                for i in 0..=map.nx {
                    let idx = out.index(i, j, k);
                    out.values[idx] = nodal[map.node(i, j, k)];
                }
            }
        }
        out
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + (self.nx + 1) * (j + (self.ny + 1) * k)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        self.values[self.index(i, j, k)]
    }

    pub fn spacing(&self) -> (f64, f64, f64) {
        (self.lx / self.nx as f64, self.ly / self.ny as f64, 1.0 / self.nz as f64)
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> (f64, f64, f64) {
        let (dx, dy, dz) = self.spacing();
        (i as f64 * dx, j as f64 * dy, -0.5 + k as f64 * dz)
    }

    /// New field with `g(i, j, k, x3)` at every lattice point.
    pub fn map_nodes(&self, g: impl Fn(usize, usize, usize, f64) -> [f64; 3]) -> Self {
        let mut out = self.clone();
        for k in 0..=self.nz {
            for j in 0..=self.ny {
                for i in 0..=self.nx {
                    let idx = out.index(i, j, k);
                    out.values[idx] = g(i, j, k, self.point(i, j, k).2);
                }
            }
        }
        out
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| v.iter_mut().for_each(|x| *x *= t));
        out
    }

    pub fn to_vtk(&self, title: &str, name: &str) -> String {
        let (dx, dy, dz) = self.spacing();
        let mut s = String::new();
        s.push_str("# vtk DataFile Version 3.0\n");
        s.push_str(title.lines().next().unwrap_or(""));
        s.push('\n');
        s.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
        let _ = writeln!(s, "DIMENSIONS {} {} {}", self.nx + 1, self.ny + 1, self.nz + 1);
        s.push_str("ORIGIN 0 0 -0.5\n");
        let _ = writeln!(s, "SPACING {dx} {dy} {dz}");
        let _ = writeln!(s, "POINT_DATA {}", self.values.len());
        let _ = writeln!(s, "VECTORS {name} double");
        for v in &self.values {
            let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", v[0], v[1], v[2]);
        }
        s
    }

    pub fn write_vtk(&self, path: &Path, title: &str, name: &str) -> Result<()> {
        std::fs::write(path, self.to_vtk(title, name))?;
        Ok(())
    }

    /// Reads a file in the layout written by [`NodalField::to_vtk`].
    pub fn from_vtk(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parse(format!("vtk: {m}"));
        let mut lines = text.lines();
        let mut header = Vec::new();
        for _ in 0..9 {
            header.push(lines.next().ok_or_else(|| bad("truncated header"))?);
        }
        if !header[0].starts_with("# vtk DataFile") || header[2] != "ASCII" || header[3] != "DATASET STRUCTURED_POINTS"
        {
            return Err(bad("unsupported header"));
        }
        let nums = |line: &str, key: &str| -> Result<Vec<f64>> {
            let rest = line.strip_prefix(key).ok_or_else(|| bad(&format!("expected {key}")))?;
            rest.split_whitespace().map(|t| t.parse::<f64>().map_err(|e| bad(&e.to_string()))).collect()
        };
        let dims = nums(header[4], "DIMENSIONS")?;
        let spacing = nums(header[6], "SPACING")?;
        if dims.len() != 3 || spacing.len() != 3 || dims.iter().any(|&d| d < 2.0) {
            return Err(bad("bad DIMENSIONS or SPACING"));
        }
        let (nx, ny, nz) = (dims[0] as usize - 1, dims[1] as usize - 1, dims[2] as usize - 1);
        let mut field = Self::zeros(nx, ny, nz, spacing[0] * nx as f64, spacing[1] * ny as f64);
        for v in field.values.iter_mut() {
            let line = lines.next().ok_or_else(|| bad("truncated data"))?;
            let parts: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| bad(&e.to_string())))
                .collect::<Result<_>>()?;
            if parts.len() != 3 {
                return Err(bad("expected three components per point"));
            }
            *v = [parts[0], parts[1], parts[2]];
        }
        Ok(field)
    }
}
