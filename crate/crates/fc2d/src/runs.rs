//! High-level drivers shared by the examples, the command-line tool and the
//! acceptance tests.

use crate::btz1d::BtzOperator;
use crate::btz2d::{btz_patch, build_matching_mesh, PatchBtz};
use crate::continuation::{
    assemble_bt, error_metrics, extension_polygon, fourier_continuation, Continuation,
    ErrorMetrics,
};
use crate::domains::Domain;
use crate::error::{FcError, Result};
use crate::geometry::validate_decomposition;
use crate::grid::{CartesianGrid, GridFn};
use crate::mask::Mask;
use crate::pou::{windowed_samples, Pou};
use std::time::Instant;

/// Result of a 2D continuation run.
pub struct ContinuationRun {
    pub cont: Continuation,
    pub fb: GridFn,
    pub omega: Mask,
    pub omega_polygon: Vec<[f64; 2]>,
    /// Blending-to-zero stage time (windowing, blends, grid transfer), s.
    pub t_blend: f64,
    /// FFT stage time, s.
    pub t_fft: f64,
}

/// Builds the full 2D-FC continuation of `f` over a domain.
///
/// The interpolating degree is `d + 2` (stencils of `d + 3` points), and the
/// assembly grid is the smallest `h`-grid containing the domain and every
/// patch extension with one spare cell.
pub fn continuation_run(
    dom: &Domain,
    op: &BtzOperator,
    d: usize,
    h: f64,
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    validate: bool,
) -> Result<ContinuationRun> {
    if validate {
        let rep = validate_decomposition(&dom.dec, d)?;
        if !rep.is_ok() {
            return Err(FcError::Validation(rep.summary()));
        }
    }
    let c_btz = op.params.c;
    let rho = op.params.rho;
    let m = d + 3;

    let t0 = Instant::now();
    let pou = Pou::new(&dom.dec, d)?;
    let meshes: Vec<_> = dom
        .dec
        .patches
        .iter()
        .map(|p| build_matching_mesh(p, d))
        .collect::<Result<_>>()?;
    let windowed = windowed_samples(&pou, &meshes, &f)?;
    let btzs: Vec<PatchBtz> = meshes
        .iter()
        .zip(&windowed)
        .map(|(mesh, vals)| btz_patch(op, mesh, vals, m))
        .collect::<Result<_>>()?;

    // Assembly grid covering the domain and all extensions.
    let omega_polygon = dom.dec.boundary.polygon(0.7 * h);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    let mut grow = |pts: &[[f64; 2]]| {
        for p in pts {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
    };
    grow(&omega_polygon);
    for patch in &dom.dec.patches {
        grow(&extension_polygon(patch, c_btz, rho, h));
    }
    let grid = CartesianGrid::covering(x0, x1, y0, y1, h);

    let assembled = assemble_bt(
        grid,
        &omega_polygon,
        f,
        &dom.dec.patches,
        &btzs,
        c_btz,
        rho,
        m,
    )?;
    let t_blend = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let cont = fourier_continuation(&assembled.fb);
    let t_fft = t1.elapsed().as_secs_f64();

    Ok(ContinuationRun {
        cont,
        fb: assembled.fb,
        omega: assembled.omega,
        omega_polygon,
        t_blend,
        t_fft,
    })
}

/// One row of a continuation convergence table.
pub struct TableRow {
    pub h: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub metrics: ErrorMetrics,
    pub t_blend: f64,
    pub t_fft: f64,
}

/// Runs a continuation and measures errors on the half-mesh restriction to
/// the domain.
pub fn continuation_row(
    dom: &Domain,
    op: &BtzOperator,
    d: usize,
    h: f64,
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    validate: bool,
) -> Result<(ContinuationRun, TableRow)> {
    let run = continuation_run(dom, op, d, h, f, validate)?;
    let metrics = error_metrics(&run.cont, f, &run.omega_polygon, 2)?;
    let row = TableRow {
        h,
        n_x: run.cont.grid.n_x,
        n_y: run.cont.grid.n_y,
        metrics,
        t_blend: run.t_blend,
        t_fft: run.t_fft,
    };
    Ok((run, row))
}

/// Observed convergence orders between successive rows (log2 error ratios;
/// assumes successive mesh halvings).
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::btz1d::{build_operator, BtzParams};
    use crate::domains::{circle_two_patch, DomainOptions};

    #[test]
    fn smooth_circle_pipeline_is_accurate() {
        // A smooth domain exercises the full S-patch pipeline without
        // corner machinery.
        let d = 4;
        let h = 0.01;
        let dom = circle_two_patch(d, h, &DomainOptions::default()).unwrap();
        let op = build_operator(&BtzParams::new(d, 27, 12, 20, 6).unwrap()).unwrap();
        let f = |x: f64, y: f64| (2.0 * x).sin() * (1.5 * y).cos() + 0.5;
        let (run, row) = continuation_row(&dom, &op, d, h, &f, true).unwrap();
        // Interior exactness at original grid nodes.
        let vals = run.cont.values();
        let mut worst: f64 = 0.0;
        for (i, j) in run.omega.iter_true() {
            let g = run.fb.grid;
            let diff = (vals.at(i, j) - f(g.x(i), g.y(j))).abs();
            worst = worst.max(diff);
        }
        assert!(worst < 1e-12, "interior exactness {worst:.3e}");
        assert!(
            row.metrics.rel_inf < 1e-4,
            "circle rel_inf {:.3e}",
            row.metrics.rel_inf
        );
    }
}
