//! Iterated one-dimensional polynomial interpolation on tensor grids.
//!
//! All high-order interpolation in the crate goes through these routines: a
//! degree `m-1` Lagrange interpolant is evaluated from an `m`-point stencil in
//! each direction, one direction at a time. Stencils are centered on the
//! target and clipped one-sided at grid edges.

/// Maximum supported stencil width (degree 15).
pub const MAX_STENCIL: usize = 16;

/// First index of an `m`-point stencil in a grid of `n` nodes, centered as
/// well as possible on fractional position `t` (in node-index units).
#[inline]
pub fn stencil_start(t: f64, n: usize, m: usize) -> usize {
    debug_assert!(m <= n);
    let half = (m as i64 - 1) / 2;
    let i = t.floor() as i64 - half;
    i.clamp(0, n as i64 - m as i64) as usize
}

/// Lagrange interpolation through the nodes `xs` with values `ys`.
///
/// Exact node hits are returned directly, which keeps composite grids
/// consistent on shared edges.
pub fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let m = xs.len();
    let span = xs[m - 1] - xs[0];
    let hit_tol = 1e-14 * span.abs().max(1.0);
    for k in 0..m {
        if (x - xs[k]).abs() <= hit_tol {
            return ys[k];
        }
    }
    let mut sum = 0.0;
    for k in 0..m {
        let mut w = 1.0;
        for l in 0..m {
            if l != k {
                w *= (x - xs[l]) / (xs[k] - xs[l]);
            }
        }
        sum += w * ys[k];
    }
    sum
}

/// Lagrange interpolation on a uniform stencil starting at `x0` with step `h`.
pub fn lagrange_uniform(x0: f64, h: f64, ys: &[f64], x: f64) -> f64 {
    let m = ys.len();
    let t = (x - x0) / h;
    let hit_tol = 1e-12;
    let r = t.round();
    if (t - r).abs() <= hit_tol && r >= 0.0 && (r as usize) < m {
        return ys[r as usize];
    }
    // Lagrange weights for unit-spaced nodes 0..m-1 evaluated at t.
    let mut sum = 0.0;
    for k in 0..m {
        let mut w = 1.0;
        for l in 0..m {
            if l != k {
                w *= (t - l as f64) / (k as f64 - l as f64);
            }
        }
        sum += w * ys[k];
    }
    sum
}

/// Interpolate a 1D uniform grid (`n` nodes at `x0 + i*h`) at `x` with an
/// `m`-point clipped stencil. `value(i)` supplies the node data.
pub fn interp_uniform_1d<F: Fn(usize) -> f64>(
    x0: f64,
    h: f64,
    n: usize,
    m: usize,
    value: F,
    x: f64,
) -> f64 {
    let m = m.min(n);
    let i0 = stencil_start((x - x0) / h, n, m);
    let mut buf = [0.0f64; MAX_STENCIL];
    for k in 0..m {
        buf[k] = value(i0 + k);
    }
    lagrange_uniform(x0 + i0 as f64 * h, h, &buf[..m], x)
}

/// Iterated 1D interpolation of a row-major uniform 2D grid at `(x, y)`.
///
/// `values[j * nx + i]` holds the node `(x0 + i hx, y0 + j hy)`. The stencil
/// is `m` points per direction, clipped at the edges.
#[allow(clippy::too_many_arguments)]
pub fn interp_uniform_2d(
    x0: f64,
    y0: f64,
    hx: f64,
    hy: f64,
    nx: usize,
    ny: usize,
    values: &[f64],
    m: usize,
    x: f64,
    y: f64,
) -> f64 {
    debug_assert_eq!(values.len(), nx * ny);
    let mx = m.min(nx);
    let my = m.min(ny);
    let i0 = stencil_start((x - x0) / hx, nx, mx);
    let j0 = stencil_start((y - y0) / hy, ny, my);
    let mut col = [0.0f64; MAX_STENCIL];
    let mut res = [0.0f64; MAX_STENCIL];
    for k in 0..mx {
        let i = i0 + k;
        for l in 0..my {
            col[l] = values[(j0 + l) * nx + i];
        }
        res[k] = lagrange_uniform(y0 + j0 as f64 * hy, hy, &col[..my], y);
    }
    lagrange_uniform(x0 + i0 as f64 * hx, hx, &res[..mx], x)
}
