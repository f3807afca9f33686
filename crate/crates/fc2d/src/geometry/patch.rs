//! Boundary-fitted patches: smooth (`S`), concave-corner (`C1`) and
//! convex-corner (`C2`) parametrizations with their parameter domains,
//! Newton inversion and boundary projections.

use super::curve::CurveSegment;
use crate::error::{FcError, Result};

/// Newton tolerance for map inversion, in physical distance.
pub const NEWTON_TOL: f64 = 1e-13;
pub const NEWTON_MAX_ITER: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatchKind {
    S,
    C1,
    C2,
}

/// Uniform parameter-space mesh counts; `h = 1/(n-1)` in each direction.
#[derive(Clone, Copy, Debug)]
pub struct Mesh2 {
    pub n_xi: usize,
    pub n_eta: usize,
}

impl Mesh2 {
    pub fn h_xi(&self) -> f64 {
        1.0 / (self.n_xi as f64 - 1.0)
    }
    pub fn h_eta(&self) -> f64 {
        1.0 / (self.n_eta as f64 - 1.0)
    }
}

/// Boundary-window break parameters (meaning depends on the patch kind).
#[derive(Clone, Copy, Debug)]
pub enum Window {
    /// Transitions on `[0, xi_l]` and `[xi_r, 1]`, plateau between.
    S { xi_l: f64, xi_r: f64 },
    /// Transitions on the far ends of the two boundary pieces.
    C1 { xi_l: f64, eta_d: f64 },
    /// Transitions on `[xi_r, 1]` of the xi-arc and `[eta_u, 1]` of the
    /// eta-arc; plateau around the corner.
    C2 { xi_r: f64, eta_u: f64 },
}

/// Parameter-space patch extents defining the open patch region.
#[derive(Clone, Copy, Debug)]
pub struct Extents {
    /// `xi_p` (unused for `S`).
    pub xi_p: f64,
    /// `eta_p`.
    pub eta_p: f64,
}

/// Parameter domain of the map. For `C1` the rectangle minus the square
/// `[0, hole.0) x [0, hole.1)` (the far side of the exterior wedge).
#[derive(Clone, Copy, Debug)]
pub struct Bounds {
    pub xi: (f64, f64),
    pub eta: (f64, f64),
    pub c1_hole: Option<(f64, f64)>,
}

impl Bounds {
    pub fn contains(&self, xi: f64, eta: f64, tol: f64) -> bool {
        if xi < self.xi.0 - tol || xi > self.xi.1 + tol {
            return false;
        }
        if eta < self.eta.0 - tol || eta > self.eta.1 + tol {
            return false;
        }
        if let Some((a, b)) = self.c1_hole {
            if xi < a - tol && eta < b - tol {
                return false;
            }
        }
        true
    }
}

/// Location of the patch's boundary portion in the global boundary
/// parameter `t` (segment-chain coordinate, counterclockwise).
///
/// For corner patches the arcs are parameterized from the corner formulas:
/// `C2`: `l_xi(xi) = G(t_c - c_xi * xi)`, `l_eta(eta) = G(t_c + c_eta * eta)`;
/// `C1`: `l_xi(xi) = G(t_c - c_xi (1 - 2 xi))`, `l_eta(eta) = G(t_c + c_eta (1 - 2 eta))`,
/// where `G` is the raw segment formula (extended past the corner, not the
/// wrapped boundary).
#[derive(Clone, Copy, Debug)]
pub enum ArcSpan {
    S { t0: f64, t1: f64 },
    C1 { t_corner: f64, c_xi: f64, c_eta: f64 },
    C2 { t_corner: f64, c_xi: f64, c_eta: f64 },
}

impl ArcSpan {
    /// Global-parameter interval `[t_lo, t_hi]` of the covered boundary
    /// portion (not wrapped; `t_hi` may exceed the period).
    pub fn range(&self) -> (f64, f64) {
        match *self {
            ArcSpan::S { t0, t1 } => (t0, t1),
            ArcSpan::C1 { t_corner, c_xi, c_eta } | ArcSpan::C2 { t_corner, c_xi, c_eta } => {
                (t_corner - c_xi, t_corner + c_eta)
            }
        }
    }

    /// Boundary parameter point on the patch's parameter-space boundary
    /// portion for a global boundary parameter `dt` measured RELATIVE to
    /// `range().0` (so `dt` in `[0, t_hi - t_lo]`).
    pub fn param_at_offset(&self, dt: f64) -> (f64, f64) {
        match *self {
            ArcSpan::S { t0, t1 } => ((dt / (t1 - t0)).clamp(0.0, 1.0), 0.0),
            ArcSpan::C1 { t_corner, c_xi, c_eta } => {
                let (t_lo, _) = self.range();
                let t = t_lo + dt;
                if t <= t_corner {
                    // incoming arc, xi in [0, 1/2]
                    (0.5 * (1.0 - (t_corner - t) / c_xi).clamp(0.0, 1.0), 0.5)
                } else {
                    (0.5, 0.5 * (1.0 - (t - t_corner) / c_eta).clamp(0.0, 1.0))
                }
            }
            ArcSpan::C2 { t_corner, c_xi, c_eta } => {
                let (t_lo, _) = self.range();
                let t = t_lo + dt;
                if t <= t_corner {
                    (((t_corner - t) / c_xi).clamp(0.0, 1.0), 0.0)
                } else {
                    (0.0, ((t - t_corner) / c_eta).clamp(0.0, 1.0))
                }
            }
        }
    }
}

enum MapKind {
    S { seg: CurveSegment, h_ext: f64 },
    Corner { seg_xi: CurveSegment, seg_eta: CurveSegment, corner: [f64; 2] },
}

/// One boundary-fitted patch.
pub struct Patch {
    pub kind: PatchKind,
    pub label: String,
    map: MapKind,
    pub bounds: Bounds,
    pub extents: Extents,
    pub mesh: Mesh2,
    pub window: Window,
    pub arc: ArcSpan,
}

fn rot90(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

impl Patch {
    /// Patch parametrization.
    pub fn map(&self, xi: f64, eta: f64) -> [f64; 2] {
        match &self.map {
            MapKind::S { seg, h_ext } => {
                let p = seg.eval(xi);
                let n = seg.normal_in(xi);
                [p[0] + eta * h_ext * n[0], p[1] + eta * h_ext * n[1]]
            }
            MapKind::Corner { seg_xi, seg_eta, corner } => {
                let a = seg_xi.eval(xi);
                let b = seg_eta.eval(eta);
                [a[0] + b[0] - corner[0], a[1] + b[1] - corner[1]]
            }
        }
    }

    /// Jacobian columns `[dM/dxi, dM/deta]`.
    pub fn jacobian(&self, xi: f64, eta: f64) -> [[f64; 2]; 2] {
        match &self.map {
            MapKind::S { seg, h_ext } => {
                let d1 = seg.deriv(xi);
                let d2 = seg.deriv2(xi);
                let speed2 = d1[0] * d1[0] + d1[1] * d1[1];
                let speed = speed2.sqrt();
                let dot = d1[0] * d2[0] + d1[1] * d2[1];
                let r1 = rot90(d1);
                let r2 = rot90(d2);
                let nprime = [
                    r2[0] / speed - r1[0] * dot / (speed2 * speed),
                    r2[1] / speed - r1[1] * dot / (speed2 * speed),
                ];
                let col_xi = [
                    d1[0] + eta * h_ext * nprime[0],
                    d1[1] + eta * h_ext * nprime[1],
                ];
                let n = [r1[0] / speed, r1[1] / speed];
                let col_eta = [h_ext * n[0], h_ext * n[1]];
                [col_xi, col_eta]
            }
            MapKind::Corner { seg_xi, seg_eta, .. } => {
                [seg_xi.deriv(xi), seg_eta.deriv(eta)]
            }
        }
    }

    pub fn jacobian_det(&self, xi: f64, eta: f64) -> f64 {
        let j = self.jacobian(xi, eta);
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }

    /// Newton inversion of the patch map from `guess`. Returns the converged
    /// parameter point, which may lie outside the parameter domain; callers
    /// apply their own membership test.
    pub fn invert(&self, x: [f64; 2], guess: (f64, f64)) -> Result<(f64, f64)> {
        let mut xi = guess.0;
        let mut eta = guess.1;
        // A runaway iterate has left the basin; the guard box is generous.
        let guard = 1.5;
        for _ in 0..NEWTON_MAX_ITER {
            let p = self.map(xi, eta);
            let rx = p[0] - x[0];
            let ry = p[1] - x[1];
            if (rx * rx + ry * ry).sqrt() <= NEWTON_TOL {
                return Ok((xi, eta));
            }
            let j = self.jacobian(xi, eta);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.abs() < 1e-300 {
                return Err(FcError::NonConvergence(format!(
                    "singular Jacobian at ({xi}, {eta}) in patch '{}'",
                    self.label
                )));
            }
            let dxi = (rx * j[1][1] - ry * j[1][0]) / det;
            let deta = (ry * j[0][0] - rx * j[0][1]) / det;
            xi -= dxi;
            eta -= deta;
            if xi < self.bounds.xi.0 - guard
                || xi > self.bounds.xi.1 + guard
                || eta < self.bounds.eta.0 - guard
                || eta > self.bounds.eta.1 + guard
            {
                return Err(FcError::NonConvergence(format!(
                    "iterate left the parameter region of patch '{}'",
                    self.label
                )));
            }
        }
        Err(FcError::NonConvergence(format!(
            "no convergence after {NEWTON_MAX_ITER} iterations in patch '{}'",
            self.label
        )))
    }

    /// Inversion that must land inside the (slightly inflated) parameter
    /// domain; a converged point outside it is rejected.
    pub fn invert_in_domain(
        &self,
        x: [f64; 2],
        guess: (f64, f64),
        inflate: f64,
    ) -> Result<(f64, f64)> {
        let p = self.invert(x, guess)?;
        if !self.bounds.contains(p.0, p.1, inflate) {
            return Err(FcError::NonConvergence(format!(
                "inverse ({}, {}) outside the parameter domain of patch '{}'",
                p.0, p.1, self.label
            )));
        }
        Ok(p)
    }

    /// Inversion with a seed list and a coarse fallback seeding grid.
    /// Returns `None` when no seed converges.
    pub fn invert_robust(&self, x: [f64; 2], seeds: &[(f64, f64)]) -> Option<(f64, f64)> {
        for &s in seeds {
            if let Ok(p) = self.invert(x, s) {
                return Some(p);
            }
        }
        let (x0, x1) = self.bounds.xi;
        let (e0, e1) = self.bounds.eta;
        for i in 0..6 {
            for j in 0..6 {
                let s = (
                    x0 + (x1 - x0) * (i as f64 + 0.5) / 6.0,
                    e0 + (e1 - e0) * (j as f64 + 0.5) / 6.0,
                );
                if self.bounds.c1_hole.is_some() && !self.bounds.contains(s.0, s.1, 0.0) {
                    continue;
                }
                if let Ok(p) = self.invert(x, s) {
                    return Some(p);
                }
            }
        }
        None
    }

    /// Parameter-space boundary projection along coordinate lines.
    ///
    /// `S`: `(xi, 0)`. `C1`: points over the incoming arc project along eta,
    /// points beside the outgoing arc project along xi, and the quadrant
    /// diagonal to the corner projects onto the corner itself. `C2`:
    /// projection onto the nearer arc, discontinuous across `xi = eta`
    /// (ties go to the eta = 0 arc).
    pub fn boundary_projection(&self, xi: f64, eta: f64) -> (f64, f64) {
        match self.kind {
            PatchKind::S => (xi.clamp(0.0, 1.0), 0.0),
            PatchKind::C1 => {
                if xi >= 0.5 && eta >= 0.5 {
                    (0.5, 0.5)
                } else if xi < 0.5 && eta >= 0.5 {
                    (xi.clamp(0.0, 0.5), 0.5)
                } else if eta < 0.5 && xi >= 0.5 {
                    (0.5, eta.clamp(0.0, 0.5))
                } else {
                    // Exterior wedge (not part of the domain closure); total
                    // by projecting onto the closer piece.
                    if eta >= xi {
                        (xi.clamp(0.0, 0.5), 0.5)
                    } else {
                        (0.5, eta.clamp(0.0, 0.5))
                    }
                }
            }
            PatchKind::C2 => {
                if xi >= eta {
                    (xi.clamp(0.0, 1.0), 0.0)
                } else {
                    (0.0, eta.clamp(0.0, 1.0))
                }
            }
        }
    }
}

fn check_meets(seg: &CurveSegment, t: f64, corner: [f64; 2], label: &str) -> Result<()> {
    let p = seg.eval(t);
    let gap = ((p[0] - corner[0]).powi(2) + (p[1] - corner[1]).powi(2)).sqrt();
    if gap > 1e-12 {
        return Err(FcError::Geometry(format!(
            "{label}: curve misses the corner by {gap:.3e}"
        )));
    }
    Ok(())
}

fn sample_jacobian_sign(patch: &Patch, n_xi: usize, n_eta: usize) -> Result<()> {
    // The scan covers the region the method actually uses: the matching and
    // extension neighborhoods. For corner patches the far reaches of the
    // parameter domain may fold (the extended curves wander); those regions
    // are never consulted.
    let ((x0, x1), (e0, e1)) = match patch.kind {
        PatchKind::C1 => {
            let (a, b) = patch.bounds.c1_hole.unwrap();
            (
                ((a - 0.1).max(0.0), patch.extents.xi_p),
                ((b - 0.1).max(0.0), patch.extents.eta_p),
            )
        }
        _ => (patch.bounds.xi, patch.bounds.eta),
    };
    let mut sign = 0.0f64;
    for i in 0..=n_xi {
        for j in 0..=n_eta {
            let xi = x0 + (x1 - x0) * i as f64 / n_xi as f64;
            let eta = e0 + (e1 - e0) * j as f64 / n_eta as f64;
            if !patch.bounds.contains(xi, eta, 0.0) {
                continue;
            }
            let det = patch.jacobian_det(xi, eta);
            if det == 0.0 || (sign != 0.0 && det.signum() != sign) {
                return Err(FcError::Geometry(format!(
                    "patch '{}': Jacobian sign change at ({xi:.4}, {eta:.4}) \
                     (self-intersecting parametrization)",
                    patch.label
                )));
            }
            sign = det.signum();
        }
    }
    Ok(())
}

/// S-patch by inward normal extrusion: `M(xi, eta) = l(xi) + eta H nu(xi)`.
///
/// `c_btz` fixes the lower eta bound of the parameter domain so that the
/// blending-to-zero extension strip (depth `C h_eta`) fits with margin.
#[allow(clippy::too_many_arguments)]
pub fn build_s_patch(
    seg: CurveSegment,
    h_ext: f64,
    eta_p: f64,
    mesh: Mesh2,
    window: Window,
    arc: ArcSpan,
    c_btz: usize,
    label: impl Into<String>,
) -> Result<Patch> {
    if h_ext <= 0.0 || !(0.0 < eta_p && eta_p < 1.0) {
        return Err(FcError::InvalidParams("S patch: need H > 0 and 0 < eta_p < 1".into()));
    }
    match window {
        Window::S { xi_l, xi_r } => {
            if !(0.0 < xi_l && xi_l < xi_r && xi_r < 1.0) {
                return Err(FcError::InvalidParams(
                    "S patch window: need 0 < xi_l < xi_r < 1".into(),
                ));
            }
        }
        _ => return Err(FcError::InvalidParams("S patch needs an S window".into())),
    }
    let b_s = -((c_btz as f64 + 2.0) * mesh.h_eta());
    let patch = Patch {
        kind: PatchKind::S,
        label: label.into(),
        map: MapKind::S { seg, h_ext },
        bounds: Bounds { xi: (0.0, 1.0), eta: (b_s, 1.0), c1_hole: None },
        extents: Extents { xi_p: 1.0, eta_p },
        mesh,
        window,
        arc,
    };
    sample_jacobian_sign(&patch, 48, 16)?;
    Ok(patch)
}

/// Concave-corner patch `M(xi, eta) = l_xi(xi) + l_eta(eta) - corner`, with
/// the corner at `M(1/2, 1/2)` and both mesh counts odd.
#[allow(clippy::too_many_arguments)]
pub fn build_c1_patch(
    seg_xi: CurveSegment,
    seg_eta: CurveSegment,
    corner: [f64; 2],
    extents: Extents,
    mesh: Mesh2,
    window: Window,
    arc: ArcSpan,
    c_btz: usize,
    label: impl Into<String>,
) -> Result<Patch> {
    if mesh.n_xi % 2 == 0 || mesh.n_eta % 2 == 0 {
        return Err(FcError::InvalidParams(
            "C1 patch: n_xi and n_eta must be odd".into(),
        ));
    }
    if !(0.5 < extents.xi_p && extents.xi_p < 1.0 && 0.5 < extents.eta_p && extents.eta_p < 1.0)
    {
        return Err(FcError::InvalidParams(
            "C1 patch: extents must lie in (1/2, 1)".into(),
        ));
    }
    match window {
        Window::C1 { xi_l, eta_d } => {
            if !(0.0 < xi_l && xi_l < 0.5 && 0.0 < eta_d && eta_d < 0.5) {
                return Err(FcError::InvalidParams(
                    "C1 window: need 0 < xi_l, eta_d < 1/2".into(),
                ));
            }
        }
        _ => return Err(FcError::InvalidParams("C1 patch needs a C1 window".into())),
    }
    check_meets(&seg_xi, 0.5, corner, "C1 xi-curve")?;
    check_meets(&seg_eta, 0.5, corner, "C1 eta-curve")?;
    let a = 0.5 - (c_btz as f64 + 2.0) * mesh.h_xi();
    let b = 0.5 - (c_btz as f64 + 2.0) * mesh.h_eta();
    if a <= 0.0 || b <= 0.0 {
        return Err(FcError::InvalidParams(format!(
            "C1 patch: mesh too coarse for the C = {c_btz} extension \
             (need (n-1)/2 > C + 2)"
        )));
    }
    // Tangents parallel at the corner make the map singular there.
    let t1 = seg_xi.deriv(0.5);
    let t2 = seg_eta.deriv(0.5);
    let cross = t1[0] * t2[1] - t1[1] * t2[0];
    let scale = (t1[0].hypot(t1[1])) * (t2[0].hypot(t2[1]));
    if cross.abs() < 1e-10 * scale {
        return Err(FcError::Geometry(
            "C1 patch: parallel tangents at the corner (singular Jacobian)".into(),
        ));
    }
    let patch = Patch {
        kind: PatchKind::C1,
        label: label.into(),
        map: MapKind::Corner { seg_xi, seg_eta, corner },
        bounds: Bounds { xi: (0.0, 1.0), eta: (0.0, 1.0), c1_hole: Some((a, b)) },
        extents,
        mesh,
        window,
        arc,
    };
    sample_jacobian_sign(&patch, 24, 24)?;
    Ok(patch)
}

/// Convex-corner patch `M(xi, eta) = l_xi(xi) + l_eta(eta) - corner`, with
/// the corner at `M(0, 0)`.
#[allow(clippy::too_many_arguments)]
pub fn build_c2_patch(
    seg_xi: CurveSegment,
    seg_eta: CurveSegment,
    corner: [f64; 2],
    extents: Extents,
    mesh: Mesh2,
    window: Window,
    arc: ArcSpan,
    c_btz: usize,
    label: impl Into<String>,
) -> Result<Patch> {
    if !(0.0 < extents.xi_p && extents.xi_p < 1.0 && 0.0 < extents.eta_p && extents.eta_p < 1.0)
    {
        return Err(FcError::InvalidParams("C2 patch: extents must lie in (0, 1)".into()));
    }
    match window {
        Window::C2 { xi_r, eta_u } => {
            if !(0.0 < xi_r && xi_r < 1.0 && 0.0 < eta_u && eta_u < 1.0) {
                return Err(FcError::InvalidParams(
                    "C2 window: need 0 < xi_r, eta_u < 1".into(),
                ));
            }
        }
        _ => return Err(FcError::InvalidParams("C2 patch needs a C2 window".into())),
    }
    check_meets(&seg_xi, 0.0, corner, "C2 xi-curve")?;
    check_meets(&seg_eta, 0.0, corner, "C2 eta-curve")?;
    let t1 = seg_xi.deriv(0.0);
    let t2 = seg_eta.deriv(0.0);
    let cross = t1[0] * t2[1] - t1[1] * t2[0];
    let scale = (t1[0].hypot(t1[1])) * (t2[0].hypot(t2[1]));
    if cross.abs() < 1e-10 * scale {
        return Err(FcError::Geometry(
            "C2 patch: parallel tangents at the corner (singular Jacobian)".into(),
        ));
    }
    let a = -((c_btz as f64 + 2.0) * mesh.h_xi());
    let b = -((c_btz as f64 + 2.0) * mesh.h_eta());
    let patch = Patch {
        kind: PatchKind::C2,
        label: label.into(),
        map: MapKind::Corner { seg_xi, seg_eta, corner },
        bounds: Bounds { xi: (a, 1.0), eta: (b, 1.0), c1_hole: None },
        extents,
        mesh,
        window,
        arc,
    };
    sample_jacobian_sign(&patch, 24, 24)?;
    Ok(patch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::curve::{CircleArc, CurveSegment, Line, Teardrop};

    fn straight_s_patch(h: f64) -> Patch {
        let seg = CurveSegment::analytic(Line { p: [0.0, 0.0], q: [1.0, 0.0] }, "bottom");
        build_s_patch(
            seg,
            h,
            0.5,
            Mesh2 { n_xi: 21, n_eta: 11 },
            Window::S { xi_l: 0.2, xi_r: 0.8 },
            ArcSpan::S { t0: 0.0, t1: 1.0 },
            27,
            "s",
        )
        .unwrap()
    }

    #[test]
    fn straight_extrusion_is_affine() {
        // Interior of the upper half plane: inward normal is +y.
        let p = straight_s_patch(0.1);
        let x = p.map(0.5, 1.0);
        assert!((x[0] - 0.5).abs() < 1e-15 && (x[1] - 0.1).abs() < 1e-15);
        // Exact inversion in one or two Newton steps from a rough guess.
        let inv = p.invert([0.3, 0.05], (0.0, 0.0)).unwrap();
        assert!((inv.0 - 0.3).abs() < 1e-12 && (inv.1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn circle_extrusion_is_radial() {
        let seg = CurveSegment::analytic(
            CircleArc { center: [0.0, 0.0], radius: 1.0, a0: 0.0, a1: 1.0 },
            "arc",
        );
        let p = build_s_patch(
            seg,
            0.3,
            0.5,
            Mesh2 { n_xi: 21, n_eta: 11 },
            Window::S { xi_l: 0.2, xi_r: 0.8 },
            ArcSpan::S { t0: 0.0, t1: 1.0 },
            27,
            "s",
        )
        .unwrap();
        for &(xi, eta) in &[(0.25, 0.5), (0.7, 1.0), (0.1, -0.3)] {
            let x = p.map(xi, eta);
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            assert!((r - (1.0 - 0.3 * eta)).abs() < 1e-13);
        }
    }

    #[test]
    fn oversized_extrusion_is_rejected() {
        // Inward extrusion past the center of curvature folds the map.
        let seg = CurveSegment::analytic(
            CircleArc { center: [0.0, 0.0], radius: 0.2, a0: 0.0, a1: 1.0 },
            "tight-arc",
        );
        let r = build_s_patch(
            seg,
            0.5,
            0.9,
            Mesh2 { n_xi: 21, n_eta: 11 },
            Window::S { xi_l: 0.2, xi_r: 0.8 },
            ArcSpan::S { t0: 0.0, t1: 1.0 },
            27,
            "s",
        );
        assert!(r.is_err());
    }

    fn perpendicular_c2() -> Patch {
        // Corner at the origin, arcs along +x and +y.
        let sx = CurveSegment::analytic(Line { p: [0.0, 0.0], q: [1.0, 0.0] }, "x");
        let sy = CurveSegment::analytic(Line { p: [0.0, 0.0], q: [0.0, 1.0] }, "y");
        build_c2_patch(
            sx,
            sy,
            [0.0, 0.0],
            Extents { xi_p: 0.5, eta_p: 0.5 },
            Mesh2 { n_xi: 41, n_eta: 41 },
            Window::C2 { xi_r: 0.6, eta_u: 0.6 },
            ArcSpan::C2 { t_corner: 1.0, c_xi: 1.0, c_eta: 1.0 },
            27,
            "c2",
        )
        .unwrap()
    }

    #[test]
    fn perpendicular_c2_is_separable() {
        let p = perpendicular_c2();
        let x = p.map(0.3, 0.7);
        assert!((x[0] - 0.3).abs() < 1e-15 && (x[1] - 0.7).abs() < 1e-15);
        let inv = p.invert([0.12, 0.44], (0.5, 0.5)).unwrap();
        assert!((inv.0 - 0.12).abs() < 1e-13 && (inv.1 - 0.44).abs() < 1e-13);
    }

    #[test]
    fn teardrop_c2_corner_and_jacobian() {
        let alpha = 0.5;
        let tear = Teardrop::with_alpha(alpha);
        let c = 0.15;
        // xi-arc: pre-corner arc reversed through the formula; eta-arc:
        // post-corner arc (corner at t = 0 == 1).
        let sx = CurveSegment::analytic(Teardrop::with_alpha(alpha), "in")
            .subsegment(1.0, 1.0 - c, "in");
        let sy = CurveSegment::analytic(Teardrop::with_alpha(alpha), "out")
            .subsegment(0.0, c, "out");
        let p = build_c2_patch(
            sx,
            sy,
            [0.0, 0.0],
            Extents { xi_p: 0.5, eta_p: 0.5 },
            Mesh2 { n_xi: 61, n_eta: 61 },
            Window::C2 { xi_r: 0.6, eta_u: 0.6 },
            ArcSpan::C2 { t_corner: 1.0, c_xi: c, c_eta: c },
            27,
            "tear-c2",
        )
        .unwrap();
        let at_corner = p.map(0.0, 0.0);
        assert!(at_corner[0].abs() < 1e-14 && at_corner[1].abs() < 1e-14);
        // Jacobian at the corner equals the cross product of the edge
        // tangents (finite-difference check).
        let det = p.jacobian_det(0.0, 0.0);
        let e = 1e-6;
        let du = p.map(e, 0.0);
        let dv = p.map(0.0, e);
        let fd = ((du[0] - at_corner[0]) / e) * ((dv[1] - at_corner[1]) / e)
            - ((du[1] - at_corner[1]) / e) * ((dv[0] - at_corner[0]) / e);
        assert!((det - fd).abs() < 1e-3 * det.abs().max(1.0), "{det} vs {fd}");
        let _ = tear;
    }

    #[test]
    fn mismatched_corner_is_rejected() {
        let sx = CurveSegment::analytic(Line { p: [1e-3, 0.0], q: [1.0, 0.0] }, "x");
        let sy = CurveSegment::analytic(Line { p: [0.0, 0.0], q: [0.0, 1.0] }, "y");
        let r = build_c2_patch(
            sx,
            sy,
            [0.0, 0.0],
            Extents { xi_p: 0.5, eta_p: 0.5 },
            Mesh2 { n_xi: 41, n_eta: 41 },
            Window::C2 { xi_r: 0.6, eta_u: 0.6 },
            ArcSpan::C2 { t_corner: 0.0, c_xi: 1.0, c_eta: 1.0 },
            27,
            "c2",
        );
        assert!(r.is_err());
    }

    #[test]
    fn c1_even_mesh_rejected_and_perpendicular_works() {
        let sx = CurveSegment::analytic(Line { p: [-1.0, 0.0], q: [1.0, 0.0] }, "x");
        let sy = CurveSegment::analytic(Line { p: [0.0, 1.0], q: [0.0, -1.0] }, "y");
        let bad = build_c1_patch(
            sx.clone(),
            sy.clone(),
            [0.0, 0.0],
            Extents { xi_p: 0.8, eta_p: 0.8 },
            Mesh2 { n_xi: 80, n_eta: 81 },
            Window::C1 { xi_l: 0.2, eta_d: 0.2 },
            ArcSpan::C1 { t_corner: 0.0, c_xi: 0.5, c_eta: 0.5 },
            27,
            "c1",
        );
        assert!(bad.is_err());
        let p = build_c1_patch(
            sx,
            sy,
            [0.0, 0.0],
            Extents { xi_p: 0.8, eta_p: 0.8 },
            Mesh2 { n_xi: 81, n_eta: 81 },
            Window::C1 { xi_l: 0.2, eta_d: 0.2 },
            ArcSpan::C1 { t_corner: 0.0, c_xi: 0.5, c_eta: 0.5 },
            27,
            "c1",
        )
        .unwrap();
        let x = p.map(0.5, 0.5);
        assert!(x[0].abs() < 1e-15 && x[1].abs() < 1e-15);
    }

    #[test]
    fn projections_match_the_stated_cases() {
        let s = straight_s_patch(0.1);
        assert_eq!(s.boundary_projection(0.3, 0.7), (0.3, 0.0));

        let sx = CurveSegment::analytic(Line { p: [-1.0, 0.0], q: [1.0, 0.0] }, "x");
        let sy = CurveSegment::analytic(Line { p: [0.0, 1.0], q: [0.0, -1.0] }, "y");
        let c1 = build_c1_patch(
            sx,
            sy,
            [0.0, 0.0],
            Extents { xi_p: 0.8, eta_p: 0.8 },
            Mesh2 { n_xi: 81, n_eta: 81 },
            Window::C1 { xi_l: 0.2, eta_d: 0.2 },
            ArcSpan::C1 { t_corner: 0.0, c_xi: 0.5, c_eta: 0.5 },
            27,
            "c1",
        )
        .unwrap();
        assert_eq!(c1.boundary_projection(0.8, 0.9), (0.5, 0.5));
        assert_eq!(c1.boundary_projection(0.3, 0.8), (0.3, 0.5));
        assert_eq!(c1.boundary_projection(0.8, 0.3), (0.5, 0.3));

        let c2 = perpendicular_c2();
        // Tie on the diagonal goes to the eta = 0 arc.
        assert_eq!(c2.boundary_projection(0.4, 0.4), (0.4, 0.0));
        assert_eq!(c2.boundary_projection(0.2, 0.6), (0.0, 0.6));
        assert_eq!(c2.boundary_projection(0.6, 0.2), (0.6, 0.0));
    }

    #[test]
    fn projection_is_idempotent() {
        let c2 = perpendicular_c2();
        for &(xi, eta) in &[(0.4, 0.4), (0.2, 0.6), (0.9, 0.05), (0.0, 0.3)] {
            let p = c2.boundary_projection(xi, eta);
            assert_eq!(c2.boundary_projection(p.0, p.1), p);
        }
    }

    #[test]
    fn inversion_roundtrip_on_random_points() {
        use rand::{Rng, SeedableRng};
        let alpha = 0.5;
        let seg = CurveSegment::analytic(Teardrop::with_alpha(alpha), "tear")
            .subsegment(0.1, 0.9, "arc");
        let p = build_s_patch(
            seg,
            0.25,
            0.4,
            Mesh2 { n_xi: 101, n_eta: 21 },
            Window::S { xi_l: 0.1, xi_r: 0.9 },
            ArcSpan::S { t0: 0.1, t1: 0.9 },
            27,
            "tear-s",
        )
        .unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(42);
        for _ in 0..100 {
            let xi = rng.gen_range(0.05..0.95);
            let eta = rng.gen_range(-0.2..0.4);
            let x = p.map(xi, eta);
            let inv = p.invert(x, (xi + 0.02, eta + 0.05)).unwrap();
            let back = p.map(inv.0, inv.1);
            let err = ((back[0] - x[0]).powi(2) + (back[1] - x[1]).powi(2)).sqrt();
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn bad_seed_fails_then_neighbor_seed_succeeds() {
        let alpha = 0.5;
        let seg = CurveSegment::analytic(Teardrop::with_alpha(alpha), "tear")
            .subsegment(0.1, 0.9, "arc");
        let p = build_s_patch(
            seg,
            0.25,
            0.4,
            Mesh2 { n_xi: 101, n_eta: 21 },
            Window::S { xi_l: 0.1, xi_r: 0.9 },
            ArcSpan::S { t0: 0.1, t1: 0.9 },
            27,
            "tear-s",
        )
        .unwrap();
        let x = p.map(0.2, 0.1);
        // A seed on the far side of the curved patch diverges or converges
        // to a rejected point; a nearby seed succeeds.
        let far = p.invert_in_domain(x, (0.95, 0.95), 1e-12);
        assert!(far.is_err());
        let near = p.invert_in_domain(x, (0.25, 0.15), 1e-12).unwrap();
        assert!((near.0 - 0.2).abs() < 1e-10 && (near.1 - 0.1).abs() < 1e-10);
    }
}
