//! Scanline interior masks over Cartesian grids.
//!
//! A polygon is rasterized by flagging, for every intersection of an edge
//! with a horizontal grid line, the grid point directly to the left of the
//! intersection (toggling, so coincident flags cancel), and then sweeping
//! each row with the even-odd rule.

use crate::error::{FcError, Result};
use crate::grid::CartesianGrid;

#[derive(Clone)]
pub struct Mask {
    pub n_x: usize,
    pub n_y: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[j * self.n_x + i]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn iter_true(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nx = self.n_x;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| (k % nx, k / nx))
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }
}

/// Interior mask of a closed polygon over the grid.
///
/// Intersections falling exactly on a grid node are perturbed by
/// `+h * 1e-12` in x, so on-edge nodes classify as exterior deterministically.
pub fn interior_mask(polygon: &[[f64; 2]], grid: &CartesianGrid) -> Result<Mask> {
    let (nx, ny, h) = (grid.n_x, grid.n_y, grid.h);
    let mut flags = vec![false; nx * ny];
    let m = polygon.len();
    if m >= 3 {
        for v in polygon {
            if v[0] <= grid.a1
                || v[0] >= grid.b1()
                || v[1] <= grid.a2
                || v[1] >= grid.b2()
            {
                return Err(FcError::MaskInconsistency(format!(
                    "polygon vertex ({}, {}) outside the open grid rectangle",
                    v[0], v[1]
                )));
            }
        }
        for k in 0..m {
            let mut p = polygon[k];
            let mut q = polygon[(k + 1) % m];
            if q[1] < p[1] {
                std::mem::swap(&mut p, &mut q);
            }
            let ty_p = (p[1] - grid.a2) / h;
            let ty_q = (q[1] - grid.a2) / h;
            let j_lo = ty_p.floor() as i64;
            let j_hi = ty_q.floor() as i64;
            for j in (j_lo + 1)..=j_hi {
                if j < 0 || j >= ny as i64 {
                    continue;
                }
                let y = grid.a2 + j as f64 * h;
                let x_hit = p[0] + (y - p[1]) / (q[1] - p[1]) * (q[0] - p[0]) + h * 1e-12;
                let i = ((x_hit - grid.a1) / h).floor() as i64;
                if i < 0 || i >= nx as i64 {
                    continue;
                }
                let idx = j as usize * nx + i as usize;
                flags[idx] = !flags[idx];
            }
        }
    }
    // Row sweep with the even-odd rule.
    for j in 0..ny {
        let mut interior = false;
        for i in 0..nx {
            let idx = j * nx + i;
            match (interior, flags[idx]) {
                (false, false) => {}
                (false, true) => {
                    // Left of an entering crossing: exterior.
                    flags[idx] = false;
                    interior = true;
                }
                (true, false) => flags[idx] = true,
                (true, true) => interior = false,
            }
        }
    }
    Ok(Mask { n_x: nx, n_y: ny, data: flags })
}
