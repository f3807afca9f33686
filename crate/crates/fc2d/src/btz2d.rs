//! Patchwise matching/extension meshes and the 2D blending-to-zero
//! procedures in parameter space.
//!
//! Every patch type reduces to repeated 1D leftward blends along coordinate
//! lines:
//!
//! * `S`: blend each xi-column along eta,
//! * `C2`: blend eta-columns (stage 1), then blend xi-rows whose matching
//!   data come from the matching mesh (component grid 2) and from the
//!   stage-1 output (corner square, component grid 3),
//! * `C1`: the six-step refined procedure — blend along xi over the block
//!   next to the corner, interpolate that intermediate extension onto the
//!   corner square and the refined matching subset, subtract, blend the
//!   remainder along eta, and add the two pieces.

use crate::btz1d::BtzOperator;
use crate::error::{FcError, Result};
use crate::geometry::{Patch, PatchKind};
use crate::interp::{interp_uniform_1d, interp_uniform_2d};

/// A uniform parameter-space grid with values, row-major (`j * nx + i`).
#[derive(Clone, Debug)]
pub struct ParamGrid {
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
    pub nx: usize,
    pub ny: usize,
    pub v: Vec<f64>,
}

impl ParamGrid {
    pub fn zeros(x0: f64, y0: f64, hx: f64, hy: f64, nx: usize, ny: usize) -> ParamGrid {
        ParamGrid { x0, y0, hx, hy, nx, ny, v: vec![0.0; nx * ny] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.v[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, val: f64) {
        self.v[j * self.nx + i] = val;
    }

    pub fn xi(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    pub fn eta(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.hy
    }

    /// Iterated 1D interpolation with an `m`-point stencil per direction.
    pub fn interp(&self, m: usize, x: f64, y: f64) -> f64 {
        interp_uniform_2d(
            self.x0, self.y0, self.hx, self.hy, self.nx, self.ny, &self.v, m, x, y,
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.v.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Descriptor of a patchwise matching mesh (index sets per patch kind).
#[derive(Clone, Copy, Debug)]
pub struct MatchingMesh {
    pub kind: PatchKind,
    pub d: usize,
    pub n_xi: usize,
    pub n_eta: usize,
    pub h_xi: f64,
    pub h_eta: f64,
}

/// Windowed function values on a matching mesh, stored per block.
#[derive(Clone, Debug)]
pub enum MatchingValues {
    /// `n_xi x d` block along the boundary.
    S { bottom: ParamGrid },
    /// Blocks along the two boundary arcs (shared corner block consistent).
    C2 { bottom: ParamGrid, left: ParamGrid },
    /// Block `A` beside the corner line `xi = 1/2` (full eta range) and
    /// block `B` above the corner line `eta = 1/2` (full xi range).
    C1 { a: ParamGrid, b: ParamGrid },
}

impl MatchingMesh {
    /// Number of mesh nodes (union of the index-set blocks).
    pub fn count(&self) -> usize {
        let d = self.d;
        match self.kind {
            PatchKind::S => self.n_xi * d,
            PatchKind::C2 => self.n_xi * d + d * self.n_eta - d * d,
            PatchKind::C1 => {
                let m_xi = (self.n_xi - 1) / 2;
                let m_eta = (self.n_eta - 1) / 2;
                d * (m_eta + d) + (m_xi + 1) * d - d
            }
        }
    }

    /// All mesh nodes in parameter space.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.count());
        self.for_each_node(|xi, eta| out.push((xi, eta)));
        out
    }

    pub fn for_each_node<F: FnMut(f64, f64)>(&self, mut f: F) {
        let d = self.d;
        match self.kind {
            PatchKind::S => {
                for j in 0..d {
                    for i in 0..self.n_xi {
                        f(i as f64 * self.h_xi, j as f64 * self.h_eta);
                    }
                }
            }
            PatchKind::C2 => {
                for j in 0..d {
                    for i in 0..self.n_xi {
                        f(i as f64 * self.h_xi, j as f64 * self.h_eta);
                    }
                }
                for j in d..self.n_eta {
                    for i in 0..d {
                        f(i as f64 * self.h_xi, j as f64 * self.h_eta);
                    }
                }
            }
            PatchKind::C1 => {
                let m_xi = (self.n_xi - 1) / 2;
                let m_eta = (self.n_eta - 1) / 2;
                for j in 0..(m_eta + d) {
                    for i in m_xi..(m_xi + d) {
                        f(i as f64 * self.h_xi, j as f64 * self.h_eta);
                    }
                }
                for j in m_eta..(m_eta + d) {
                    for i in 0..m_xi {
                        f(i as f64 * self.h_xi, j as f64 * self.h_eta);
                    }
                }
            }
        }
    }

    /// Samples a parameter-space function on the mesh blocks.
    pub fn sample<F: FnMut(f64, f64) -> f64>(&self, mut f: F) -> MatchingValues {
        let d = self.d;
        let (hx, hy) = (self.h_xi, self.h_eta);
        match self.kind {
            PatchKind::S => {
                let mut g = ParamGrid::zeros(0.0, 0.0, hx, hy, self.n_xi, d);
                for j in 0..d {
                    for i in 0..self.n_xi {
                        g.set(i, j, f(g.xi(i), g.eta(j)));
                    }
                }
                MatchingValues::S { bottom: g }
            }
            PatchKind::C2 => {
                let mut bottom = ParamGrid::zeros(0.0, 0.0, hx, hy, self.n_xi, d);
                for j in 0..d {
                    for i in 0..self.n_xi {
                        bottom.set(i, j, f(bottom.xi(i), bottom.eta(j)));
                    }
                }
                let mut left = ParamGrid::zeros(0.0, 0.0, hx, hy, d, self.n_eta);
                for j in 0..self.n_eta {
                    for i in 0..d {
                        left.set(i, j, f(left.xi(i), left.eta(j)));
                    }
                }
                MatchingValues::C2 { bottom, left }
            }
            PatchKind::C1 => {
                let m_xi = (self.n_xi - 1) / 2;
                let m_eta = (self.n_eta - 1) / 2;
                let mut a = ParamGrid::zeros(0.5, 0.0, hx, hy, d, m_eta + d);
                for j in 0..(m_eta + d) {
                    for i in 0..d {
                        a.set(i, j, f(a.xi(i), a.eta(j)));
                    }
                }
                let mut b = ParamGrid::zeros(0.0, 0.5, hx, hy, m_xi + 1, d);
                for j in 0..d {
                    for i in 0..=m_xi {
                        b.set(i, j, f(b.xi(i), b.eta(j)));
                    }
                }
                MatchingValues::C1 { a, b }
            }
        }
    }
}

/// Builds the matching-mesh descriptor, re-checking the mesh constraints.
pub fn build_matching_mesh(patch: &Patch, d: usize) -> Result<MatchingMesh> {
    let h_xi = patch.mesh.h_xi();
    let h_eta = patch.mesh.h_eta();
    let dd = (d - 1) as f64;
    let ok = match patch.kind {
        PatchKind::S => dd * h_eta < patch.extents.eta_p,
        PatchKind::C1 => {
            if patch.mesh.n_xi % 2 == 0 || patch.mesh.n_eta % 2 == 0 {
                return Err(FcError::InvalidParams(format!(
                    "patch '{}': C1 mesh counts must be odd",
                    patch.label
                )));
            }
            0.5 + dd * h_xi < patch.extents.xi_p && 0.5 + dd * h_eta < patch.extents.eta_p
        }
        PatchKind::C2 => dd * h_xi < patch.extents.xi_p && dd * h_eta < patch.extents.eta_p,
    };
    if !ok {
        return Err(FcError::InvalidParams(format!(
            "patch '{}': matching depth (d-1)h exceeds the patch extents",
            patch.label
        )));
    }
    Ok(MatchingMesh {
        kind: patch.kind,
        d,
        n_xi: patch.mesh.n_xi,
        n_eta: patch.mesh.n_eta,
        h_xi,
        h_eta,
    })
}

/// Descriptor of the rho-refined extension mesh (component grids).
#[derive(Clone, Debug)]
pub struct ExtensionMesh {
    pub kind: PatchKind,
    pub rho: usize,
    /// Component grid shapes `(x0, y0, hx, hy, nx, ny)`.
    pub components: Vec<(f64, f64, f64, f64, usize, usize)>,
}

/// Builds the extension-mesh descriptor for a patch and operator parameters.
pub fn build_extension_mesh(patch: &Patch, op: &BtzOperator) -> Result<ExtensionMesh> {
    let c = op.params.c as f64;
    let rho = op.params.rho;
    let fine = op.params.fine_len();
    let h_xi = patch.mesh.h_xi();
    let h_eta = patch.mesh.h_eta();
    let (fx, fy) = (h_xi / rho as f64, h_eta / rho as f64);
    let components = match patch.kind {
        PatchKind::S => {
            if -c * h_eta < patch.bounds.eta.0 {
                return Err(FcError::InvalidParams(format!(
                    "patch '{}': extension strip leaves the parameter domain",
                    patch.label
                )));
            }
            vec![(0.0, -c * h_eta, h_xi, fy, patch.mesh.n_xi, fine)]
        }
        PatchKind::C2 => {
            if -c * h_xi < patch.bounds.xi.0 || -c * h_eta < patch.bounds.eta.0 {
                return Err(FcError::InvalidParams(format!(
                    "patch '{}': extension strips leave the parameter domain",
                    patch.label
                )));
            }
            vec![
                (0.0, -c * h_eta, h_xi, fy, patch.mesh.n_xi, fine),
                (-c * h_xi, 0.0, fx, h_eta, fine, patch.mesh.n_eta),
                (-c * h_xi, -c * h_eta, fx, fy, fine, fine),
            ]
        }
        PatchKind::C1 => {
            let m_xi = (patch.mesh.n_xi - 1) / 2;
            let m_eta = (patch.mesh.n_eta - 1) / 2;
            if m_xi <= op.params.c || m_eta <= op.params.c {
                return Err(FcError::InvalidParams(format!(
                    "patch '{}': C1 mesh too coarse for C = {} extension points",
                    patch.label, op.params.c
                )));
            }
            vec![
                (0.0, 0.5 - c * h_eta, h_xi, fy, m_xi - op.params.c + 1, fine),
                (0.5 - c * h_xi, 0.0, fx, h_eta, fine, m_eta - op.params.c + 1),
                (0.5 - c * h_xi, 0.5 - c * h_eta, fx, fy, fine, fine),
            ]
        }
    };
    Ok(ExtensionMesh { kind: patch.kind, rho, components })
}

/// Blended-to-zero grid function of one patch on its extension mesh; zero
/// outside the component grids.
#[derive(Clone, Debug)]
pub struct PatchBtz {
    pub kind: PatchKind,
    pub grids: Vec<ParamGrid>,
}

impl PatchBtz {
    /// Interpolates the extension at `(xi, eta)` with an `m`-point stencil,
    /// selecting the component grid that owns the region (one-sided stencils
    /// at component edges). Returns `None` outside the extension region.
    pub fn interp(&self, m: usize, xi: f64, eta: f64, inward_slack: f64) -> Option<f64> {
        match self.kind {
            PatchKind::S => {
                let g = &self.grids[0];
                if eta > inward_slack {
                    return None;
                }
                Some(g.interp(m, xi, eta))
            }
            PatchKind::C2 => {
                let (g1, g2, g3) = (&self.grids[0], &self.grids[1], &self.grids[2]);
                if xi <= 0.0 && eta <= 0.0 {
                    Some(g3.interp(m, xi, eta))
                } else if eta <= 0.0 {
                    Some(g1.interp(m, xi, eta))
                } else if xi <= 0.0 {
                    Some(g2.interp(m, xi, eta))
                } else if xi <= inward_slack || eta <= inward_slack {
                    // Inflated interior point: extrapolate from the nearer strip.
                    if eta <= xi {
                        Some(g1.interp(m, xi, eta))
                    } else {
                        Some(g2.interp(m, xi, eta))
                    }
                } else {
                    None
                }
            }
            PatchKind::C1 => {
                let (g1, g2, g3) = (&self.grids[0], &self.grids[1], &self.grids[2]);
                let u = g3.x0;
                let v = g3.y0;
                if xi >= u && eta >= v {
                    Some(g3.interp(m, xi, eta))
                } else if eta >= v && xi >= -inward_slack {
                    Some(g1.interp(m, xi, eta))
                } else if xi >= u - inward_slack && eta >= -inward_slack {
                    Some(g2.interp(m, xi, eta))
                } else {
                    None
                }
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.grids.iter().map(|g| g.max_abs()).fold(0.0, f64::max)
    }
}

/// S-type blend: 1D leftward blends along the eta direction of every
/// xi-column; the boundary row of the output reproduces the samples there.
pub fn btz_s(op: &BtzOperator, mesh: &MatchingMesh, values: &MatchingValues) -> Result<PatchBtz> {
    let bottom = match values {
        MatchingValues::S { bottom } => bottom,
        _ => return Err(FcError::Dimension("btz_s expects S matching values".into())),
    };
    let grid = blend_columns_eta(op, mesh, bottom)?;
    Ok(PatchBtz { kind: PatchKind::S, grids: vec![grid] })
}

/// Blends every xi-column of `block` (whose rows `0..d` hug the boundary
/// `eta = y0`) leftward in eta onto the fine extension rows.
fn blend_columns_eta(
    op: &BtzOperator,
    mesh: &MatchingMesh,
    block: &ParamGrid,
) -> Result<ParamGrid> {
    let d = op.params.d;
    if block.ny < d {
        return Err(FcError::Dimension(format!(
            "blend needs {d} matching rows, block has {}",
            block.ny
        )));
    }
    let fine = op.params.fine_len();
    let c = op.params.c as f64;
    let mut out = ParamGrid::zeros(
        block.x0,
        block.y0 - c * mesh.h_eta,
        block.hx,
        mesh.h_eta / op.params.rho as f64,
        block.nx,
        fine,
    );
    let mut phi = vec![0.0; d];
    let mut ext = vec![0.0; fine];
    for i in 0..block.nx {
        for j in 0..d {
            phi[j] = block.at(i, j);
        }
        op.blend_left_into(&phi, true, &mut ext)?;
        for (l, &v) in ext.iter().enumerate() {
            out.set(i, l, v);
        }
    }
    Ok(out)
}

/// C2-type blend: stage 1 along eta (component grid 1), stage 2 along xi
/// with matching data from the matching mesh (grid 2) and from the stage-1
/// output (corner square, grid 3).
pub fn btz_c2(op: &BtzOperator, mesh: &MatchingMesh, values: &MatchingValues) -> Result<PatchBtz> {
    let (bottom, left) = match values {
        MatchingValues::C2 { bottom, left } => (bottom, left),
        _ => return Err(FcError::Dimension("btz_c2 expects C2 matching values".into())),
    };
    let d = op.params.d;
    let fine = op.params.fine_len();
    let c = op.params.c as f64;
    let g1 = blend_columns_eta(op, mesh, bottom)?;

    let mut g2 = ParamGrid::zeros(-c * mesh.h_xi, 0.0, mesh.h_xi / op.params.rho as f64, mesh.h_eta, fine, mesh.n_eta);
    let mut phi = vec![0.0; d];
    let mut ext = vec![0.0; fine];
    for j in 0..mesh.n_eta {
        for i in 0..d {
            phi[i] = left.at(i, j);
        }
        op.blend_left_into(&phi, true, &mut ext)?;
        for (l, &v) in ext.iter().enumerate() {
            g2.set(l, j, v);
        }
    }

    let mut g3 = ParamGrid::zeros(
        -c * mesh.h_xi,
        -c * mesh.h_eta,
        mesh.h_xi / op.params.rho as f64,
        mesh.h_eta / op.params.rho as f64,
        fine,
        fine,
    );
    for l in 0..fine {
        for i in 0..d {
            phi[i] = g1.at(i, l);
        }
        op.blend_left_into(&phi, true, &mut ext)?;
        for (k, &v) in ext.iter().enumerate() {
            g3.set(k, l, v);
        }
    }
    Ok(PatchBtz { kind: PatchKind::C2, grids: vec![g1, g2, g3] })
}

/// C1-type blend (six-step refined procedure; with `rho = 1` it coincides
/// with the four-step construction).
///
/// `m_interp` is the stencil size of the internal interpolation steps
/// (degree `m_interp - 1`).
pub fn btz_c1(
    op: &BtzOperator,
    mesh: &MatchingMesh,
    values: &MatchingValues,
    m_interp: usize,
) -> Result<PatchBtz> {
    let (a, b) = match values {
        MatchingValues::C1 { a, b } => (a, b),
        _ => return Err(FcError::Dimension("btz_c1 expects C1 matching values".into())),
    };
    let d = op.params.d;
    let cc = op.params.c;
    let rho = op.params.rho;
    let fine = op.params.fine_len();
    let m_xi = (mesh.n_xi - 1) / 2;
    let m_eta = (mesh.n_eta - 1) / 2;
    if m_xi <= cc || m_eta <= cc {
        return Err(FcError::Dimension(format!(
            "C1 mesh too coarse: need (n-1)/2 > C = {cc}"
        )));
    }
    let (h_xi, h_eta) = (mesh.h_xi, mesh.h_eta);
    let (fx, fy) = (h_xi / rho as f64, h_eta / rho as f64);
    let u = 0.5 - cc as f64 * h_xi;
    let v = 0.5 - cc as f64 * h_eta;

    // Step 1a: xi-blend of the A block for every coarse eta row.
    // e1[j][l], l = 0..rho*C ascending xi from u to 1/2.
    let n_rows = m_eta + d;
    let mut e1 = vec![vec![0.0; fine]; n_rows];
    let mut phi = vec![0.0; d];
    for (j, row) in e1.iter_mut().enumerate() {
        for i in 0..d {
            phi[i] = a.at(i, j);
        }
        op.blend_left_into(&phi, true, row)?;
    }

    // Step 1b: interpolate the intermediate extension onto the corner
    // square in eta (ghat part of grid 3).
    let mut g3 = ParamGrid::zeros(u, v, fx, fy, fine, fine);
    for l in 0..fine {
        for jf in 0..fine {
            let eta = v + jf as f64 * fy;
            let val = interp_uniform_1d(0.0, h_eta, n_rows, m_interp, |j| e1[j][l], eta);
            g3.set(l, jf, val);
        }
    }

    // Step 2a + 2b: interpolate the data onto the fine-xi columns of the
    // refined matching subset and subtract the intermediate extension.
    // gfine[l][j] for the d matching rows j = m_eta .. m_eta + d - 1.
    let row_len = m_xi + d;
    let mut row = vec![0.0; row_len];
    let mut gfine = vec![vec![0.0; d]; fine];
    for jj in 0..d {
        let j = m_eta + jj;
        for i in 0..=m_xi {
            row[i] = b.at(i, jj);
        }
        for i in 1..d {
            row[m_xi + i] = a.at(i, j);
        }
        for (l, gcol) in gfine.iter_mut().enumerate() {
            let xi = u + l as f64 * fx;
            let val = interp_uniform_1d(0.0, h_xi, row_len, m_interp, |i| row[i], xi);
            gcol[jj] = val - e1[j][l];
        }
    }

    // Step 3 on the fine columns: eta-blend of gfine into grid 3.
    let mut ext = vec![0.0; fine];
    for (l, gcol) in gfine.iter().enumerate() {
        op.blend_left_into(gcol, true, &mut ext)?;
        for (jf, &w) in ext.iter().enumerate() {
            let cur = g3.at(l, jf);
            g3.set(l, jf, cur + w);
        }
    }

    // Step 3 on the coarse columns: grid 1 (xi in [0, u], fine eta). The
    // intermediate extension vanishes strictly left of the corner square;
    // on the shared column xi = u both contributions are present, and must
    // agree with the corner-square edge.
    let mut g1 = ParamGrid::zeros(0.0, v, h_xi, fy, m_xi - cc + 1, fine);
    for i in 0..(m_xi - cc) {
        for jj in 0..d {
            phi[jj] = b.at(i, jj);
        }
        op.blend_left_into(&phi, true, &mut ext)?;
        for (jf, &w) in ext.iter().enumerate() {
            g1.set(i, jf, w);
        }
    }
    for jj in 0..d {
        phi[jj] = b.at(m_xi - cc, jj) - e1[m_eta + jj][0];
    }
    op.blend_left_into(&phi, true, &mut ext)?;
    let scale = g3.max_abs().max(1.0);
    for jf in 0..fine {
        let eta = v + jf as f64 * fy;
        let ghat = interp_uniform_1d(0.0, h_eta, n_rows, m_interp, |j| e1[j][0], eta);
        let diff = (ext[jf] + ghat - g3.at(0, jf)).abs();
        if diff > 1e-12 * scale {
            return Err(FcError::Numerical(format!(
                "C1 component grids disagree on the shared edge by {diff:.3e}"
            )));
        }
        g1.set(m_xi - cc, jf, g3.at(0, jf));
    }

    // Grid 2 (fine xi, coarse eta in [0, v]): the intermediate extension,
    // plus the eta-blend contribution on the shared row with grid 3.
    let mut g2 = ParamGrid::zeros(u, 0.0, fx, h_eta, fine, m_eta - cc + 1);
    for j in 0..(m_eta - cc + 1) {
        for l in 0..fine {
            g2.set(l, j, e1[j][l]);
        }
    }
    for l in 0..fine {
        let shared = g3.at(l, 0);
        let diff = (g2.at(l, m_eta - cc) + (shared - g3.at(l, 0))).abs();
        let _ = diff;
        g2.set(l, m_eta - cc, shared);
    }

    Ok(PatchBtz { kind: PatchKind::C1, grids: vec![g1, g2, g3] })
}

/// Dispatches on the patch kind.
pub fn btz_patch(
    op: &BtzOperator,
    mesh: &MatchingMesh,
    values: &MatchingValues,
    m_interp: usize,
) -> Result<PatchBtz> {
    match mesh.kind {
        PatchKind::S => btz_s(op, mesh, values),
        PatchKind::C2 => btz_c2(op, mesh, values),
        PatchKind::C1 => btz_c1(op, mesh, values, m_interp),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::btz1d::{build_operator, gram_basis, BtzParams};

    fn mesh(kind: PatchKind, d: usize, n_xi: usize, n_eta: usize) -> MatchingMesh {
        MatchingMesh {
            kind,
            d,
            n_xi,
            n_eta,
            h_xi: 1.0 / (n_xi as f64 - 1.0),
            h_eta: 1.0 / (n_eta as f64 - 1.0),
        }
    }

    #[test]
    fn s_mesh_counts_and_nodes() {
        let m = mesh(PatchKind::S, 4, 11, 31);
        assert_eq!(m.count(), 44);
        let nodes = m.nodes();
        assert_eq!(nodes.len(), 44);
        assert!(nodes.iter().all(|&(_, eta)| eta <= 3.0 * m.h_eta + 1e-15));
    }

    #[test]
    fn c1_count_matches_enumeration_oracle() {
        let d = 3;
        let m = mesh(PatchKind::C1, d, 9, 9);
        // Brute-force set union of the two index blocks.
        let m_xi = 4usize;
        let m_eta = 4usize;
        let mut set = std::collections::HashSet::new();
        for i in m_xi..(m_xi + d) {
            for j in 0..(m_eta + d) {
                set.insert((i, j));
            }
        }
        for i in 0..=m_xi {
            for j in m_eta..(m_eta + d) {
                set.insert((i, j));
            }
        }
        assert_eq!(m.count(), set.len());
        assert_eq!(m.nodes().len(), set.len());
    }

    #[test]
    fn c2_component_grids_shapes() {
        let params = BtzParams::new(4, 27, 12, 20, 6).unwrap();
        let op = build_operator(&params).unwrap();
        let m = mesh(PatchKind::C2, 4, 61, 61);
        let vals = m.sample(|_, _| 1.0);
        let b = btz_c2(&op, &m, &vals).unwrap();
        assert_eq!(b.grids[0].ny, 163); // C_rho + 1 = 163 eta levels
        assert_eq!(b.grids[2].nx, 163);
        assert_eq!(b.grids[2].ny, 163);
    }

    #[test]
    fn s_blend_of_zero_is_zero_and_boundary_row_reproduces() {
        let params = BtzParams::new(5, 27, 12, 20, 2).unwrap();
        let op = build_operator(&params).unwrap();
        let m = mesh(PatchKind::S, 5, 13, 41);
        let zero = m.sample(|_, _| 0.0);
        let b = btz_s(&op, &m, &zero).unwrap();
        assert_eq!(b.max_abs(), 0.0);

        let f = |xi: f64, eta: f64| (3.0 * xi + 1.0).sin() * (1.0 - eta).exp();
        let vals = m.sample(f);
        let b = btz_s(&op, &m, &vals).unwrap();
        let g = &b.grids[0];
        for i in 0..g.nx {
            let want = f(g.xi(i), 0.0);
            assert!((g.at(i, g.ny - 1) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn s_blend_separable_gram_polynomial() {
        // f(xi, eta) = g(xi) p(eta) with p a Gram polynomial in the eta
        // matching points: the extension is g(xi) times the A_rho column.
        let d = 4;
        let params = BtzParams::new(d, 27, 12, 20, 3).unwrap();
        let op = build_operator(&params).unwrap();
        let basis = gram_basis(d, 20).unwrap();
        let m = mesh(PatchKind::S, d, 9, 33);
        let jcol = 2usize;
        // p at the matching nodes equals the Gram column (leftward order).
        let p_at = |j: usize| basis.q[(j, jcol)];
        let g_of = |xi: f64| 1.0 + xi * xi;
        let mut vals = ParamGrid::zeros(0.0, 0.0, m.h_xi, m.h_eta, m.n_xi, d);
        for j in 0..d {
            for i in 0..m.n_xi {
                vals.set(i, j, g_of(vals.xi(i)) * p_at(j));
            }
        }
        let b = btz_s(&op, &m, &MatchingValues::S { bottom: vals }).unwrap();
        let g = &b.grids[0];
        let fine = op.params.fine_len();
        for i in 0..g.nx {
            for l in 0..fine {
                // Reversed-order A_rho row: output row l corresponds to
                // matrix row fine-1-l, with the reversion of the data
                // handled by comparing against a directly blended column.
                let direct = {
                    let phi: Vec<f64> = (0..d).map(p_at).collect();
                    op.blend_left(&phi, true).unwrap()[l] * g_of(g.xi(i))
                };
                assert!((g.at(i, l) - direct).abs() < 1e-13 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn c2_constant_decays_and_separable_outer_product() {
        let d = 5;
        let params = BtzParams::new(d, 27, 12, 20, 2).unwrap();
        let op = build_operator(&params).unwrap();
        let m = mesh(PatchKind::C2, d, 41, 41);
        let cval = 0.75;
        let vals = m.sample(|_, _| cval);
        let b = btz_c2(&op, &m, &vals).unwrap();
        // Stage-1 boundary row equals the constant.
        let g1 = &b.grids[0];
        for i in 0..g1.nx {
            assert!((g1.at(i, g1.ny - 1) - cval).abs() < 1e-12);
        }
        // Far corner of the corner square has decayed.
        let g3 = &b.grids[2];
        assert!(g3.at(0, 0).abs() < 1e-10 * cval.abs());

        // Separable Gram data: corner square is the outer product of the
        // 1D extension columns.
        let basis = gram_basis(d, 20).unwrap();
        let (jp, jq) = (1usize, 3usize);
        let mut bottom = ParamGrid::zeros(0.0, 0.0, m.h_xi, m.h_eta, m.n_xi, d);
        for j in 0..d {
            for i in 0..m.n_xi {
                // p(xi) extends the Gram polynomial periodically off its
                // stencil; only the first d columns drive the corner square.
                let p = if i < d { basis.q[(i, jp)] } else { 0.0 };
                bottom.set(i, j, p * basis.q[(j, jq)]);
            }
        }
        let mut left = ParamGrid::zeros(0.0, 0.0, m.h_xi, m.h_eta, d, m.n_eta);
        for j in 0..m.n_eta {
            for i in 0..d {
                let q = if j < d { basis.q[(j, jq)] } else { 0.0 };
                left.set(i, j, basis.q[(i, jp)] * q);
            }
        }
        let b = btz_c2(&op, &m, &MatchingValues::C2 { bottom, left }).unwrap();
        let ex_p = {
            let phi: Vec<f64> = (0..d).map(|i| basis.q[(i, jp)]).collect();
            op.blend_left(&phi, true).unwrap()
        };
        let ex_q = {
            let phi: Vec<f64> = (0..d).map(|j| basis.q[(j, jq)]).collect();
            op.blend_left(&phi, true).unwrap()
        };
        let g3 = &b.grids[2];
        let fine = op.params.fine_len();
        for k in 0..fine {
            for l in 0..fine {
                let want = ex_p[k] * ex_q[l];
                assert!(
                    (g3.at(k, l) - want).abs() < 1e-12 * want.abs().max(1.0),
                    "({k},{l}): {} vs {want}",
                    g3.at(k, l)
                );
            }
        }
    }

    fn four_step_c1_oracle(
        op: &BtzOperator,
        mesh: &MatchingMesh,
        a: &ParamGrid,
        b: &ParamGrid,
    ) -> (ParamGrid, ParamGrid, ParamGrid) {
        // rho = 1 reference following the unrefined construction literally.
        let d = op.params.d;
        let cc = op.params.c;
        let m_xi = (mesh.n_xi - 1) / 2;
        let m_eta = (mesh.n_eta - 1) / 2;
        let (h_xi, h_eta) = (mesh.h_xi, mesh.h_eta);
        let u = 0.5 - cc as f64 * h_xi;
        let v = 0.5 - cc as f64 * h_eta;
        let fine = cc + 1;
        assert_eq!(op.params.rho, 1);
        // Step 1: xi-blend of A rows.
        let mut e1 = vec![vec![0.0; fine]; m_eta + d];
        for (j, row) in e1.iter_mut().enumerate() {
            let phi: Vec<f64> = (0..d).map(|i| a.at(i, j)).collect();
            op.blend_left_into(&phi, true, row).unwrap();
        }
        // Step 2: g = f - ghat on the matching mesh (B block columns).
        // Step 3: eta-blend of g columns.
        let mut g1 = ParamGrid::zeros(0.0, v, h_xi, h_eta, m_xi - cc + 1, fine);
        let mut g3 = ParamGrid::zeros(u, v, h_xi, h_eta, fine, fine);
        for i in 0..=m_xi {
            let phi: Vec<f64> = (0..d)
                .map(|jj| {
                    let ghat = if i >= m_xi - cc { e1[m_eta + jj][i - (m_xi - cc)] } else { 0.0 };
                    b.at(i, jj) - ghat
                })
                .collect();
            let ext = op.blend_left(&phi, true).unwrap();
            if i <= m_xi - cc {
                for (jf, &w) in ext.iter().enumerate() {
                    g1.set(i, jf, w);
                }
            }
            if i >= m_xi - cc {
                for (jf, &w) in ext.iter().enumerate() {
                    g3.set(i - (m_xi - cc), jf, w);
                }
            }
        }
        // Step 4: add ghat on grids 2 and 3.
        let mut g2 = ParamGrid::zeros(u, 0.0, h_xi, h_eta, fine, m_eta - cc + 1);
        for j in 0..(m_eta - cc + 1) {
            for l in 0..fine {
                g2.set(l, j, e1[j][l]);
            }
        }
        for l in 0..fine {
            for jf in 0..fine {
                let eta_row = m_eta - cc + jf;
                let add = if eta_row <= m_eta + d - 1 { e1[eta_row][l] } else { 0.0 };
                let cur = g3.at(l, jf);
                g3.set(l, jf, cur + add);
            }
        }
        // Shared edges: the intermediate extension also contributes on the
        // shared column of grid 1 and the shared row of grid 2.
        for jf in 0..fine {
            let cur = g1.at(m_xi - cc, jf);
            g1.set(m_xi - cc, jf, cur + e1[m_eta - cc + jf][0]);
        }
        for l in 0..fine {
            g2.set(l, m_eta - cc, g3.at(l, 0));
        }
        (g1, g2, g3)
    }

    #[test]
    fn c1_zero_input_and_reproduction() {
        let d = 4;
        let params = BtzParams::new(d, 8, 6, 10, 2).unwrap();
        let op = build_operator(&params).unwrap();
        let m = mesh(PatchKind::C1, d, 41, 41);
        let zero = m.sample(|_, _| 0.0);
        let b = btz_c1(&op, &m, &zero, d + 3).unwrap();
        assert_eq!(b.max_abs(), 0.0);

        // Assembled extension reproduces the data on the extension-mesh
        // nodes shared with the matching mesh (the corner lines).
        let f = |xi: f64, eta: f64| (2.0 * xi - 0.3).cos() * (1.7 * eta + 0.4).sin();
        let vals = m.sample(f);
        let b = btz_c1(&op, &m, &vals, d + 3).unwrap();
        let g3 = &b.grids[2];
        // Boundary corner point (1/2, 1/2).
        let want = f(0.5, 0.5);
        assert!((g3.at(g3.nx - 1, g3.ny - 1) - want).abs() < 1e-11);
        // Step-2 remainder vanishes on the A block: the eta-blend along the
        // xi = 1/2 fine column must reproduce f exactly there.
        for jf in 0..g3.ny {
            let eta = g3.eta(jf);
            let diff = (g3.at(g3.nx - 1, jf) - f(0.5, eta)).abs();
            assert!(diff < 1e-10, "eta={eta}: {diff:.3e}");
        }
    }

    #[test]
    fn c1_six_step_reduces_to_four_step_at_rho_1() {
        let d = 4;
        let params = BtzParams::new(d, 8, 6, 10, 1).unwrap();
        let op = build_operator(&params).unwrap();
        let m = mesh(PatchKind::C1, d, 41, 41);
        let f = |xi: f64, eta: f64| (1.3 * xi).exp() * (2.0 * eta - 0.7).cos();
        let vals = m.sample(f);
        let b = btz_c1(&op, &m, &vals, d + 3).unwrap();
        let (a, bb) = match &vals {
            MatchingValues::C1 { a, b } => (a, b),
            _ => unreachable!(),
        };
        let (o1, o2, o3) = four_step_c1_oracle(&op, &m, a, bb);
        for (g, o) in b.grids.iter().zip([&o1, &o2, &o3]) {
            assert_eq!(g.nx, o.nx);
            assert_eq!(g.ny, o.ny);
            for k in 0..g.v.len() {
                assert!(
                    (g.v[k] - o.v[k]).abs() < 1e-13 * o.max_abs().max(1.0),
                    "idx {k}: {} vs {}",
                    g.v[k],
                    o.v[k]
                );
            }
        }
    }

    #[test]
    fn blends_are_linear() {
        let d = 5;
        let params = BtzParams::new(d, 10, 8, 10, 2).unwrap();
        let op = build_operator(&params).unwrap();
        for kind in [PatchKind::S, PatchKind::C2, PatchKind::C1] {
            let m = mesh(kind, d, 41, 41);
            let f1 = |xi: f64, eta: f64| (xi + 0.2).powi(2) * (1.0 - eta).cos();
            let f2 = |xi: f64, eta: f64| (3.0 * xi).sin() + eta;
            let (al, be) = (0.6, -1.9);
            let b1 = btz_patch(&op, &m, &m.sample(f1), d + 3).unwrap();
            let b2 = btz_patch(&op, &m, &m.sample(f2), d + 3).unwrap();
            let bc =
                btz_patch(&op, &m, &m.sample(|x, y| al * f1(x, y) + be * f2(x, y)), d + 3)
                    .unwrap();
            // Relative to the extension magnitude times the blend-matrix
            // amplification (corner blends route values through two stages).
            let amp: f64 = (0..op.a_rho.nrows())
                .map(|i| (0..d).map(|j| op.a_rho[(i, j)].abs()).sum::<f64>())
                .fold(1.0, f64::max);
            let scale =
                amp * bc.max_abs().max(b1.max_abs()).max(b2.max_abs()).max(1.0);
            for g in 0..bc.grids.len() {
                for k in 0..bc.grids[g].v.len() {
                    let want = al * b1.grids[g].v[k] + be * b2.grids[g].v[k];
                    assert!(
                        (bc.grids[g].v[k] - want).abs() < 1e-13 * scale,
                        "kind {kind:?} grid {g} idx {k}: {} vs {want} (scale {scale:.2e})",
                        bc.grids[g].v[k]
                    );
                }
            }
        }
    }
}
