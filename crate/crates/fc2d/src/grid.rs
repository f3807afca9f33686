//! Cartesian grids, grid functions and file export.

use crate::error::{FcError, Result};
use std::io::Write;
use std::path::Path;

/// Uniform Cartesian grid on the rectangle `[a1, b1] x [a2, b2]` with
/// `h = (b1 - a1)/(n_x - 1) = (b2 - a2)/(n_y - 1)`.
///
/// When the grid carries a periodic continuation, the periodicity lengths
/// are `n_x h` and `n_y h` (one mesh cell past the last node).
#[derive(Clone, Copy, Debug)]
pub struct CartesianGrid {
    pub a1: f64,
    pub a2: f64,
    pub h: f64,
    pub n_x: usize,
    pub n_y: usize,
}

impl CartesianGrid {
    pub fn new(a1: f64, a2: f64, h: f64, n_x: usize, n_y: usize) -> CartesianGrid {
        CartesianGrid { a1, a2, h, n_x, n_y }
    }

    /// Smallest grid with the given mesh size whose interior contains the
    /// rectangle `[x0, x1] x [y0, y1]` with one spare cell on each side.
    pub fn covering(x0: f64, x1: f64, y0: f64, y1: f64, h: f64) -> CartesianGrid {
        let a1 = x0 - 1.5 * h;
        let a2 = y0 - 1.5 * h;
        let n_x = (((x1 - a1) / h).ceil() as usize) + 2;
        let n_y = (((y1 - a2) / h).ceil() as usize) + 2;
        CartesianGrid { a1, a2, h, n_x, n_y }
    }

    pub fn b1(&self) -> f64 {
        self.a1 + (self.n_x as f64 - 1.0) * self.h
    }
    pub fn b2(&self) -> f64 {
        self.a2 + (self.n_y as f64 - 1.0) * self.h
    }
    pub fn x(&self, i: usize) -> f64 {
        self.a1 + i as f64 * self.h
    }
    pub fn y(&self, j: usize) -> f64 {
        self.a2 + j as f64 * self.h
    }
    /// Periodicity length in x used by the continuation.
    pub fn period_x(&self) -> f64 {
        self.n_x as f64 * self.h
    }
    pub fn period_y(&self) -> f64 {
        self.n_y as f64 * self.h
    }
    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Real values attached to a Cartesian grid, row-major (`j * n_x + i`).
#[derive(Clone, Debug)]
pub struct GridFn {
    pub grid: CartesianGrid,
    pub values: Vec<f64>,
}

impl GridFn {
    pub fn zeros(grid: CartesianGrid) -> GridFn {
        GridFn { values: vec![0.0; grid.len()], grid }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.n_x + i]
    }

    /// CSV export with an `x,y,value` header.
    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "x,y,value")?;
        for j in 0..self.grid.n_y {
            for i in 0..self.grid.n_x {
                writeln!(w, "{},{},{}", self.grid.x(i), self.grid.y(j), self.at(i, j))?;
            }
        }
        Ok(())
    }

    /// Raw little-endian f64 row-major dump plus a textual sidecar with the
    /// grid metadata (`<path>.meta`).
    pub fn export_raw(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        let meta = format!(
            "n_x = {}\nn_y = {}\na1 = {}\nb1 = {}\na2 = {}\nb2 = {}\nh = {}\n",
            self.grid.n_x,
            self.grid.n_y,
            self.grid.a1,
            self.grid.b1(),
            self.grid.a2,
            self.grid.b2(),
            self.grid.h
        );
        std::fs::write(path.with_extension("meta"), meta)?;
        Ok(())
    }

    pub fn import_raw(path: &Path, grid: CartesianGrid) -> Result<GridFn> {
        let bytes = std::fs::read(path)?;
        if bytes.len() != grid.len() * 8 {
            return Err(FcError::Format(format!(
                "raw grid size {} != {} nodes",
                bytes.len() / 8,
                grid.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(GridFn { grid, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covering_contains_rectangle() {
        let g = CartesianGrid::covering(-0.3, 2.1, -1.0, 1.0, 0.01);
        assert!(g.a1 < -0.3 && g.b1() > 2.1);
        assert!(g.a2 < -1.0 && g.b2() > 1.0);
    }

    #[test]
    fn raw_roundtrip() {
        let g = CartesianGrid::new(0.0, 0.0, 0.5, 4, 3);
        let f = GridFn { grid: g, values: (0..12).map(|i| i as f64 * 0.25).collect() };
        let dir = std::env::temp_dir().join("fc2d_grid_test");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("g.raw");
        f.export_raw(&p).unwrap();
        let back = GridFn::import_raw(&p, g).unwrap();
        assert_eq!(back.values, f.values);
    }
}
