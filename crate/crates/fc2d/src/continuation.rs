//! Transfer of patch extensions to the global Cartesian grid, assembly of
//! the blended field, the 2D Fourier continuation and error measurement.

use crate::btz2d::PatchBtz;
use crate::error::{FcError, Result};
use crate::fft;
use crate::geometry::{Patch, PatchKind};
use crate::grid::{CartesianGrid, GridFn};
use crate::mask::{interior_mask, Mask};
use num_complex::Complex64;
use rayon::prelude::*;

/// The biperiodic continuation: scaled Fourier coefficients on the padded
/// periodicity rectangle.
#[derive(Clone)]
pub struct Continuation {
    pub grid: CartesianGrid,
    pub coeffs: Vec<Complex64>,
}

impl Continuation {
    /// Largest deviation from conjugate symmetry (zero for the transform of
    /// a real field, up to roundoff).
    pub fn conjugate_symmetry_error(&self) -> f64 {
        let (nx, ny) = (self.grid.n_x, self.grid.n_y);
        let mut worst = 0.0f64;
        for j in 0..ny {
            for i in 0..nx {
                let c = self.coeffs[j * nx + i];
                let cc = self.coeffs[((ny - j) % ny) * nx + (nx - i) % nx];
                worst = worst.max((c - cc.conj()).norm());
            }
        }
        worst
    }

    /// Grid values of the continuation on its own grid.
    pub fn values(&self) -> GridFn {
        GridFn {
            grid: self.grid,
            values: fft::values_of_coeffs(&self.coeffs, self.grid.n_x, self.grid.n_y),
        }
    }

    /// Values on the `factor`-refined grid, via zero-padded inverse FFT.
    pub fn refine(&self, factor: usize) -> GridFn {
        let g = self.grid;
        let refined = CartesianGrid::new(
            g.a1,
            g.a2,
            g.h / factor as f64,
            g.n_x * factor,
            g.n_y * factor,
        );
        GridFn {
            grid: refined,
            values: fft::refine_values(&self.coeffs, g.n_x, g.n_y, factor),
        }
    }
}

/// Boundary polygon of a patch extension domain in physical space, with the
/// domain-side edges pushed one Cartesian cell toward the interior (the
/// parameter-space recheck later discards any overshoot).
pub fn extension_polygon(patch: &Patch, c_btz: usize, rho: usize, h_cart: f64) -> Vec<[f64; 2]> {
    let h_xi = patch.mesh.h_xi();
    let h_eta = patch.mesh.h_eta();
    let che = c_btz as f64 * h_eta;
    let chx = c_btz as f64 * h_xi;
    let mut pts: Vec<[f64; 2]> = Vec::new();
    // Push a parameter-space point, optionally offset one Cartesian cell
    // along the physical direction of increasing eta or xi.
    let mut push = |xi: f64, eta: f64, inflate: Option<usize>| {
        let p = patch.map(xi, eta);
        match inflate {
            None => pts.push(p),
            Some(axis) => {
                let j = patch.jacobian(xi, eta);
                let v = j[axis];
                let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
                pts.push([p[0] + h_cart * v[0] / n, p[1] + h_cart * v[1] / n]);
            }
        }
    };
    let n_line = ((patch.mesh.n_xi.max(patch.mesh.n_eta)) * rho).clamp(64, 4000);
    let line = |a: f64, b: f64, k: usize| a + (b - a) * k as f64 / n_line as f64;
    match patch.kind {
        PatchKind::S => {
            for k in 0..=n_line {
                push(line(0.0, 1.0, k), -che, None);
            }
            for k in 1..n_line {
                push(1.0, line(-che, 0.0, k), None);
            }
            for k in 0..=n_line {
                push(line(1.0, 0.0, k), 0.0, Some(1));
            }
            for k in 1..n_line {
                push(0.0, line(0.0, -che, k), None);
            }
        }
        PatchKind::C2 => {
            for k in 0..=n_line {
                push(line(1.0, -chx, k), -che, None);
            }
            for k in 1..=n_line {
                push(-chx, line(-che, 1.0, k), None);
            }
            for k in 0..=n_line {
                push(line(-chx, 0.0, k), 1.0, None);
            }
            // Inflated domain-side edges: down the eta arc, around the
            // corner, out the xi arc.
            for k in 1..n_line {
                push(0.0, line(1.0, 0.0, k), Some(0));
            }
            for k in 0..=n_line {
                push(line(0.0, 1.0, k), 0.0, Some(1));
            }
            for k in 1..n_line {
                push(1.0, line(0.0, -che, k), None);
            }
        }
        PatchKind::C1 => {
            let u = 0.5 - chx;
            let v = 0.5 - che;
            for k in 0..=n_line {
                push(line(0.0, u, k), v, None);
            }
            for k in 1..=n_line {
                push(u, line(v, 0.0, k), None);
            }
            for k in 0..=n_line {
                push(line(u, 0.5, k), 0.0, None);
            }
            // Inflated domain-side edges (beyond the corner lines).
            for k in 1..n_line {
                push(0.5, line(0.0, 0.5, k), Some(0));
            }
            push(0.5, 0.5, Some(0));
            for k in 1..=n_line {
                push(line(0.5, 0.0, k), 0.5, Some(1));
            }
            for k in 1..n_line {
                push(0.0, line(0.5, v, k), None);
            }
        }
    }
    pts
}

/// Inward acceptance slack, in parameter units per direction, equivalent to
/// about 1.5 Cartesian cells.
fn inward_slack(patch: &Patch, h_cart: f64) -> (f64, f64) {
    let mut speed_xi = f64::INFINITY;
    let mut speed_eta = f64::INFINITY;
    for k in 0..=16 {
        let s = k as f64 / 16.0;
        let j = patch.jacobian(s.min(1.0), 0.0);
        speed_xi = speed_xi.min((j[0][0].powi(2) + j[0][1].powi(2)).sqrt());
        speed_eta = speed_eta.min((j[1][0].powi(2) + j[1][1].powi(2)).sqrt());
    }
    (1.5 * h_cart / speed_xi, 1.5 * h_cart / speed_eta)
}

/// Parameter-space membership of an inverse image in the patch extension
/// region, with outer tolerance and inward slack.
fn in_extension_region(
    patch: &Patch,
    c_btz: usize,
    xi: f64,
    eta: f64,
    slack: (f64, f64),
) -> bool {
    let tol = 1e-9;
    let h_xi = patch.mesh.h_xi();
    let h_eta = patch.mesh.h_eta();
    let che = c_btz as f64 * h_eta;
    let chx = c_btz as f64 * h_xi;
    match patch.kind {
        PatchKind::S => {
            xi >= -tol && xi <= 1.0 + tol && eta >= -che - tol && eta <= slack.1
        }
        PatchKind::C2 => {
            let in_b = eta >= -che - tol && eta <= slack.1 && xi >= -chx - tol && xi <= 1.0 + tol;
            let in_l = xi >= -chx - tol && xi <= slack.0 && eta >= -che - tol && eta <= 1.0 + tol;
            in_b || in_l
        }
        PatchKind::C1 => {
            let u = 0.5 - chx;
            let v = 0.5 - che;
            let in_a = eta >= v - tol && eta <= 0.5 + slack.1 && xi >= -tol && xi <= 0.5 + slack.0;
            let in_b = xi >= u - tol && xi <= 0.5 + slack.0 && eta >= -tol && eta <= 0.5 + slack.1;
            in_a || in_b
        }
    }
}

/// Interpolates one patch extension onto the Cartesian grid points covered
/// by its (inflated) extension polygon and not claimed by the domain mask,
/// accumulating into `out`; `claimed` records the touched nodes and
/// `rejected_inward` the nodes whose inverse fell on the domain side.
#[allow(clippy::too_many_arguments)]
pub fn interp_patch_to_cartesian(
    patch: &Patch,
    btz: &PatchBtz,
    c_btz: usize,
    rho: usize,
    m: usize,
    grid: &CartesianGrid,
    omega: &Mask,
    out: &mut [f64],
    claimed: &mut [bool],
    rejected_inward: &mut [bool],
) -> Result<()> {
    let polygon = extension_polygon(patch, c_btz, rho, grid.h);
    let mask = interior_mask(&polygon, grid)?;
    let slack = inward_slack(patch, grid.h);
    let (nx, ny) = (grid.n_x, grid.n_y);

    // Bounding box of the polygon in grid indices.
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &polygon {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let i0 = (((x0 - grid.a1) / grid.h).floor() as isize - 1).max(0) as usize;
    let i1 = ((((x1 - grid.a1) / grid.h).ceil() as isize) + 1).min(nx as isize - 1) as usize;
    let j0 = (((y0 - grid.a2) / grid.h).floor() as isize - 1).max(0) as usize;
    let j1 = ((((y1 - grid.a2) / grid.h).ceil() as isize) + 1).min(ny as isize - 1) as usize;
    let (bw, bh) = (i1 - i0 + 1, j1 - j0 + 1);

    // Seed inverse coordinates from forward-mapped extension mesh nodes.
    let mut seeds: Vec<Option<(f64, f64)>> = vec![None; bw * bh];
    for g in &btz.grids {
        let step = rho.max(1);
        for jj in (0..g.ny).step_by(step) {
            for ii in (0..g.nx).step_by(step) {
                let (xi, eta) = (g.xi(ii), g.eta(jj));
                let p = patch.map(xi, eta);
                let ci = ((p[0] - grid.a1) / grid.h).floor() as isize;
                let cj = ((p[1] - grid.a2) / grid.h).floor() as isize;
                for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let (i, j) = (ci + di, cj + dj);
                    if i >= i0 as isize && i <= i1 as isize && j >= j0 as isize && j <= j1 as isize
                    {
                        let k = (j as usize - j0) * bw + (i as usize - i0);
                        if seeds[k].is_none() {
                            seeds[k] = Some((xi, eta));
                        }
                    }
                }
            }
        }
    }

    // Targets: masked nodes not owned by the domain interior.
    let mut inverse: Vec<Option<(f64, f64)>> = vec![None; bw * bh];
    let mut pending: Vec<(usize, usize)> = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            if mask.get(i, j) && !omega.get(i, j) {
                pending.push((i, j));
            }
        }
    }
    // Seeded pass, then neighbor-seeded sweeps until no progress.
    let mut unresolved: Vec<(usize, usize)> = Vec::new();
    for &(i, j) in &pending {
        let k = (j - j0) * bw + (i - i0);
        let x = [grid.x(i), grid.y(j)];
        if let Some(seed) = seeds[k] {
            if let Ok(p) = patch.invert(x, seed) {
                inverse[k] = Some(p);
                continue;
            }
        }
        unresolved.push((i, j));
    }
    for _ in 0..64 {
        if unresolved.is_empty() {
            break;
        }
        let mut still = Vec::new();
        let mut progress = false;
        for &(i, j) in &unresolved {
            let k = (j - j0) * bw + (i - i0);
            let x = [grid.x(i), grid.y(j)];
            let mut done = false;
            'nb: for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (pi, pj) = (i as i64 + di, j as i64 + dj);
                    if pi < i0 as i64 || pi > i1 as i64 || pj < j0 as i64 || pj > j1 as i64 {
                        continue;
                    }
                    let pk = (pj as usize - j0) * bw + (pi as usize - i0);
                    if let Some(seed) = inverse[pk] {
                        if let Ok(p) = patch.invert(x, seed) {
                            inverse[k] = Some(p);
                            done = true;
                            progress = true;
                            break 'nb;
                        }
                    }
                }
            }
            if !done {
                still.push((i, j));
            }
        }
        unresolved = still;
        if !progress {
            break;
        }
    }

    // Recheck in parameter space and interpolate.
    for &(i, j) in &pending {
        let k = (j - j0) * bw + (i - i0);
        let idx = j * nx + i;
        match inverse[k] {
            Some((xi, eta)) => {
                if in_extension_region(patch, c_btz, xi, eta, slack) {
                    if let Some(v) = btz.interp(m, xi, eta, slack.0.max(slack.1)) {
                        out[idx] += v;
                        claimed[idx] = true;
                    } else {
                        rejected_inward[idx] = true;
                    }
                } else {
                    // Outside the extension region proper: domain-side
                    // overshoot is suspicious, far-side overshoot is not.
                    let domain_side = match patch.kind {
                        PatchKind::S => eta > 0.0,
                        PatchKind::C2 => xi > 0.0 && eta > 0.0,
                        PatchKind::C1 => xi > 0.5 || eta > 0.5,
                    };
                    if domain_side {
                        rejected_inward[idx] = true;
                    }
                }
            }
            None => {
                rejected_inward[idx] = true;
            }
        }
    }
    Ok(())
}

/// Assembled blended field and the domain mask.
pub struct Assembled {
    pub fb: GridFn,
    pub omega: Mask,
}

/// Builds `f^b` on the grid: `f` on the domain interior, the summed patch
/// contributions on the extension collar, zero elsewhere.
#[allow(clippy::too_many_arguments)]
pub fn assemble_bt(
    grid: CartesianGrid,
    omega_polygon: &[[f64; 2]],
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    patches: &[Patch],
    btzs: &[PatchBtz],
    c_btz: usize,
    rho: usize,
    m: usize,
) -> Result<Assembled> {
    let omega = interior_mask(omega_polygon, &grid)?;
    let mut fb = GridFn::zeros(grid);
    let n = grid.len();
    let mut claimed = vec![false; n];
    let mut rejected_inward = vec![false; n];
    for (patch, btz) in patches.iter().zip(btzs) {
        interp_patch_to_cartesian(
            patch,
            btz,
            c_btz,
            rho,
            m,
            &grid,
            &omega,
            &mut fb.values,
            &mut claimed,
            &mut rejected_inward,
        )?;
    }
    // Interior values override everything.
    let nx = grid.n_x;
    fb.values
        .par_chunks_mut(nx)
        .enumerate()
        .for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                if omega.get(i, j) {
                    *v = f(grid.x(i), grid.y(j));
                }
            }
        });
    // A node flagged by a patch as domain-side but neither interior nor
    // claimed by any patch means the masks disagree.
    for j in 0..grid.n_y {
        for i in 0..grid.n_x {
            let idx = j * nx + i;
            if rejected_inward[idx] && !claimed[idx] && !omega.get(i, j) {
                return Err(FcError::MaskInconsistency(format!(
                    "grid point ({}, {}) lies between the domain mask and all \
                     patch extensions",
                    grid.x(i),
                    grid.y(j)
                )));
            }
        }
    }
    Ok(Assembled { fb, omega })
}

/// 2D Fourier continuation of the assembled field: pads each dimension to
/// the next 5-smooth size (appending zeros, which the decayed extension
/// tolerates) and takes the scaled DFT.
pub fn fourier_continuation(fb: &GridFn) -> Continuation {
    let g = fb.grid;
    let nx = fft::next_5_smooth(g.n_x);
    let ny = fft::next_5_smooth(g.n_y);
    let mut padded = vec![0.0; nx * ny];
    for j in 0..g.n_y {
        padded[j * nx..j * nx + g.n_x].copy_from_slice(&fb.values[j * g.n_x..(j + 1) * g.n_x]);
    }
    let coeffs = fft::coeffs_of_real(&padded, nx, ny);
    Continuation { grid: CartesianGrid::new(g.a1, g.a2, g.h, nx, ny), coeffs }
}

/// Error metrics of a continuation against `exact` on the restriction of
/// the `factor`-refined grid to the domain interior.
pub struct ErrorMetrics {
    pub rel_inf: f64,
    pub rel_2: f64,
    pub abs_inf: f64,
    pub nodes: usize,
}

pub fn error_metrics(
    cont: &Continuation,
    exact: &(dyn Fn(f64, f64) -> f64 + Sync),
    omega_polygon: &[[f64; 2]],
    factor: usize,
) -> Result<ErrorMetrics> {
    let g = cont.grid;
    let fine =
        CartesianGrid::new(g.a1, g.a2, g.h / factor as f64, g.n_x * factor, g.n_y * factor);
    let mask = interior_mask(omega_polygon, &fine)?;
    let mut max_f: f64 = 0.0;
    let mut sum_f2 = 0.0;
    let mut max_e: f64 = 0.0;
    let mut sum_e2 = 0.0;
    let mut nodes = 0usize;
    fft::refine_visit(&cont.coeffs, g.n_x, g.n_y, factor, |i, j, v| {
        if mask.get(i, j) {
            let fx = exact(fine.x(i), fine.y(j));
            let e = (v - fx).abs();
            max_f = max_f.max(fx.abs());
            sum_f2 += fx * fx;
            max_e = max_e.max(e);
            sum_e2 += e * e;
            nodes += 1;
        }
    });
    if nodes == 0 {
        return Err(FcError::MaskInconsistency(
            "no refined grid nodes fell inside the domain".into(),
        ));
    }
    Ok(ErrorMetrics {
        rel_inf: max_e / max_f.max(1e-300),
        rel_2: (sum_e2 / sum_f2.max(1e-300)).sqrt(),
        abs_inf: max_e,
        nodes,
    })
}
