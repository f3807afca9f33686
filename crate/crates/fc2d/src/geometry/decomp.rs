//! Patch decompositions of a boundary neighborhood and their validation.

use super::curve::Boundary;
use super::patch::{ArcSpan, Patch, PatchKind};
use crate::error::{FcError, Result};

/// An ordered, cyclic cover of the boundary by overlapping patches.
///
/// Patches are stored in counterclockwise boundary order; each patch
/// overlaps exactly its two cyclic neighbors.
pub struct Decomposition {
    pub boundary: Boundary,
    pub patches: Vec<Patch>,
    /// Partition-of-unity neighborhood radius (physical): half the smallest
    /// overlap width between adjacent patches.
    pub eps: f64,
}

impl Decomposition {
    pub fn new(boundary: Boundary, patches: Vec<Patch>) -> Result<Decomposition> {
        if patches.len() < 2 {
            return Err(FcError::Geometry(
                "a closed boundary needs at least two patches".into(),
            ));
        }
        let mut dec = Decomposition { boundary, patches, eps: 0.0 };
        let mut min_width = f64::INFINITY;
        for p in 0..dec.patches.len() {
            let (t_lo, t_hi) = dec.overlap_with_next(p)?;
            min_width = min_width.min(dec.boundary.arclength(t_lo, t_hi));
        }
        dec.eps = 0.5 * min_width;
        Ok(dec)
    }

    pub fn neighbors(&self, p: usize) -> (usize, usize) {
        let n = self.patches.len();
        ((p + n - 1) % n, (p + 1) % n)
    }

    /// Global-parameter range of the boundary overlap between patch `p` and
    /// its successor (unwrapped: the end may exceed the period).
    pub fn overlap_with_next(&self, p: usize) -> Result<(f64, f64)> {
        let n = self.patches.len();
        let q = (p + 1) % n;
        let (lo_p, hi_p) = self.patches[p].arc.range();
        let (mut lo_q, _) = self.patches[q].arc.range();
        let period = self.boundary.period();
        while lo_q < lo_p - 1e-12 {
            lo_q += period;
        }
        while lo_q >= lo_p + period {
            lo_q -= period;
        }
        if hi_p <= lo_q + 1e-12 {
            return Err(FcError::Geometry(format!(
                "patches '{}' and '{}' do not overlap on the boundary",
                self.patches[p].label, self.patches[q].label
            )));
        }
        Ok((lo_q, hi_p))
    }

    /// Global boundary parameter of a point on patch `p`'s parameter-space
    /// boundary portion.
    pub fn global_of_boundary_param(&self, p: usize, xi: f64, eta: f64) -> f64 {
        match self.patches[p].arc {
            ArcSpan::S { t0, t1 } => t0 + xi * (t1 - t0),
            ArcSpan::C1 { t_corner, c_xi, c_eta } => {
                if (eta - 0.5).abs() < 1e-14 {
                    t_corner - c_xi * (1.0 - 2.0 * xi)
                } else {
                    t_corner + c_eta * (1.0 - 2.0 * eta)
                }
            }
            ArcSpan::C2 { t_corner, c_xi, c_eta } => {
                if eta == 0.0 {
                    t_corner - c_xi * xi
                } else {
                    t_corner + c_eta * eta
                }
            }
        }
    }

    /// Boundary-seeded inversion of physical point `x` into patch `q`,
    /// given that `x` is known at `(xi, eta)` of patch `p`. Returns the
    /// parameter point in `q` if Newton converges.
    pub fn invert_into_neighbor(
        &self,
        p: usize,
        xi: f64,
        eta: f64,
        q: usize,
        x: [f64; 2],
    ) -> Option<(f64, f64)> {
        let proj = self.patches[p].boundary_projection(xi, eta);
        let t = self.global_of_boundary_param(p, proj.0, proj.1);
        let (lo_q, hi_q) = self.patches[q].arc.range();
        let period = self.boundary.period();
        let len = hi_q - lo_q;
        // Representative of t (mod period) closest to the arc interval.
        let mut dt = (t - lo_q) % period;
        if dt < 0.0 {
            dt += period;
        }
        if dt > len && (period - dt) < dt - len {
            dt -= period;
        }
        let seed = self.patches[q].arc.param_at_offset(dt.clamp(0.0, len));
        self.patches[q].invert_robust(x, &[seed])
    }
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub patch: String,
    pub what: String,
    pub location: [f64; 2],
}

#[derive(Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Smallest |det J| over all matching/extension mesh nodes, per patch.
    pub jacobian_margins: Vec<(String, f64)>,
    /// Smallest physical distance from a patch closure sample to a
    /// neighboring C2 discontinuity curve.
    pub min_diagonal_clearance: f64,
    /// Smallest parameter clearance of closure samples to neighbor
    /// tangential edges.
    pub min_tangential_clearance: f64,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.is_ok() {
            "decomposition valid".to_string()
        } else {
            self.violations
                .iter()
                .map(|v| {
                    format!(
                        "[{}] {} at ({:.4}, {:.4})",
                        v.patch, v.what, v.location[0], v.location[1]
                    )
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
    }
}

/// Parameter-space closure of the patch region, as a sampling in (xi, eta).
fn closure_samples(patch: &Patch, n_tan: usize, n_nrm: usize) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    let mut rect = |x0: f64, x1: f64, e0: f64, e1: f64| {
        for i in 0..=n_tan {
            for j in 0..=n_nrm {
                pts.push((
                    x0 + (x1 - x0) * i as f64 / n_tan as f64,
                    e0 + (e1 - e0) * j as f64 / n_nrm as f64,
                ));
            }
        }
    };
    match patch.kind {
        PatchKind::S => rect(0.0, 1.0, 0.0, patch.extents.eta_p),
        PatchKind::C1 => {
            rect(0.0, 0.5, 0.5, patch.extents.eta_p);
            rect(0.5, patch.extents.xi_p, 0.0, 0.5);
            rect(0.5, patch.extents.xi_p, 0.5, patch.extents.eta_p);
        }
        PatchKind::C2 => {
            rect(0.0, 1.0, 0.0, patch.extents.eta_p);
            rect(0.0, patch.extents.xi_p, 0.0, 1.0);
        }
    }
    pts
}

/// Strict-interior membership of `x` in `Int(V_q /\ closure(Omega))`
/// relative to the domain closure, with parameter margin `margin`.
/// Returns the inverse coordinates when inside.
fn interior_membership(
    dec: &Decomposition,
    p: usize,
    xi: f64,
    eta: f64,
    q: usize,
    x: [f64; 2],
    margin: f64,
) -> Option<(f64, f64)> {
    let inv = if p == q {
        (xi, eta)
    } else {
        dec.invert_into_neighbor(p, xi, eta, q, x)?
    };
    let b = &dec.patches[q].bounds;
    let (qxi, qeta) = inv;
    // Transverse and tangential edges must be strictly avoided; the
    // boundary side (Gamma) is interior in the relative topology, and the
    // exterior-side bound never holds domain points.
    let ok = match dec.patches[q].kind {
        PatchKind::S => {
            qxi > margin && qxi < 1.0 - margin && qeta > b.eta.0 && qeta < 1.0 - margin
        }
        PatchKind::C1 => {
            let (a, bh) = b.c1_hole.unwrap();
            let in_l = qxi > a + margin || qeta > bh + margin;
            in_l
                && qxi > margin
                && qeta > margin
                && qxi < 1.0 - margin
                && qeta < 1.0 - margin
        }
        PatchKind::C2 => qxi < 1.0 - margin && qeta < 1.0 - margin,
    };
    if ok {
        Some(inv)
    } else {
        None
    }
}

/// Samples the decomposition conditions: boundary covering, containment of
/// each patch closure in the union of its own and its neighbors' interiors,
/// avoidance of neighbor tangential edges and of C2 discontinuity curves,
/// mesh-size constraints, extension containment, extension exteriority and
/// Jacobian margins at mesh nodes.
pub fn validate_decomposition(dec: &Decomposition, d: usize) -> Result<ValidationReport> {
    let mut rep = ValidationReport {
        min_diagonal_clearance: f64::INFINITY,
        min_tangential_clearance: f64::INFINITY,
        ..Default::default()
    };
    let n = dec.patches.len();

    // Boundary covering and window placement.
    for p in 0..n {
        match dec.overlap_with_next(p) {
            Ok((lo, hi)) => {
                if dec.boundary.arclength(lo, hi) <= 0.0 {
                    rep.violations.push(Violation {
                        patch: dec.patches[p].label.clone(),
                        what: "empty boundary overlap with successor".into(),
                        location: dec.boundary.eval(lo),
                    });
                }
            }
            Err(e) => rep.violations.push(Violation {
                patch: dec.patches[p].label.clone(),
                what: e.to_string(),
                location: [f64::NAN, f64::NAN],
            }),
        }
    }

    // Mesh-size constraints and extension containment.
    for patch in &dec.patches {
        let h_xi = patch.mesh.h_xi();
        let h_eta = patch.mesh.h_eta();
        let dd = (d - 1) as f64;
        let bad = match patch.kind {
            PatchKind::S => dd * h_eta >= patch.extents.eta_p,
            PatchKind::C1 => {
                0.5 + dd * h_xi >= patch.extents.xi_p || 0.5 + dd * h_eta >= patch.extents.eta_p
            }
            PatchKind::C2 => {
                dd * h_xi >= patch.extents.xi_p || dd * h_eta >= patch.extents.eta_p
            }
        };
        if bad {
            rep.violations.push(Violation {
                patch: patch.label.clone(),
                what: format!(
                    "matching depth (d-1)h exceeds the patch extent (d = {d}, \
                     h = ({h_xi:.3e}, {h_eta:.3e}), extents = ({}, {}))",
                    patch.extents.xi_p, patch.extents.eta_p
                ),
                location: patch.map(0.5, 0.0),
            });
        }
    }

    // Diagonal polylines of C2 patches, for clearance tests.
    let diagonals: Vec<Option<Vec<[f64; 2]>>> = dec
        .patches
        .iter()
        .map(|q| {
            (q.kind == PatchKind::C2).then(|| {
                (0..=200)
                    .map(|i| {
                        let s = i as f64 / 200.0;
                        q.map(s, s)
                    })
                    .collect()
            })
        })
        .collect();

    // Containment, tangential-edge and diagonal-clearance checks on
    // closure samples.
    for p in 0..n {
        let patch = &dec.patches[p];
        let (prev, next) = dec.neighbors(p);
        let n_tan = (4 * patch.mesh.n_xi).min(800);
        let n_nrm = (4 * d).min(48);
        for (xi, eta) in closure_samples(patch, n_tan, n_nrm) {
            let x = patch.map(xi, eta);
            let mut covered = false;
            for q in [p, prev, next] {
                if interior_membership(dec, p, xi, eta, q, x, 1e-9).is_some() {
                    covered = true;
                    break;
                }
            }
            if !covered {
                rep.violations.push(Violation {
                    patch: patch.label.clone(),
                    what: "closure sample not covered by own/neighbor interiors".into(),
                    location: x,
                });
                continue;
            }
            for q in [prev, next] {
                if q == p {
                    continue;
                }
                // Tangential-edge clearance in the neighbor's coordinates.
                if let Some((qxi, qeta)) = dec.invert_into_neighbor(p, xi, eta, q, x) {
                    let clear = match dec.patches[q].kind {
                        PatchKind::S => Some((qeta - 1.0).abs()),
                        PatchKind::C1 => Some((qxi - 1.0).abs().min((qeta - 1.0).abs())),
                        PatchKind::C2 => None,
                    };
                    if let Some(c) = clear {
                        if dec.patches[q].bounds.contains(qxi, qeta, 0.05) {
                            rep.min_tangential_clearance = rep.min_tangential_clearance.min(c);
                            if c < 1e-6 {
                                rep.violations.push(Violation {
                                    patch: patch.label.clone(),
                                    what: format!(
                                        "closure touches tangential edge of '{}'",
                                        dec.patches[q].label
                                    ),
                                    location: x,
                                });
                            }
                        }
                    }
                }
                // C2 discontinuity-curve clearance, physical.
                if let Some(diag) = &diagonals[q] {
                    let mut dist = f64::INFINITY;
                    for w in diag.windows(2) {
                        dist = dist.min(dist_point_segment(x, w[0], w[1]));
                    }
                    rep.min_diagonal_clearance = rep.min_diagonal_clearance.min(dist);
                    if dist < dec.eps.min(1e-3) {
                        rep.violations.push(Violation {
                            patch: patch.label.clone(),
                            what: format!(
                                "closure within {dist:.3e} of the discontinuity curve of '{}'",
                                dec.patches[q].label
                            ),
                            location: x,
                        });
                    }
                }
            }
        }
    }

    // Extension domains stay outside the domain: their parameter regions
    // have eta < 0 (or xi < 0, or beyond the C1 corner lines), so it
    // suffices to probe the extension rectangle corners and outer edges
    // against the boundary polygon.
    let polygon = dec.boundary.polygon(2e-3);
    for patch in &dec.patches {
        let c_h_xi = (patch.bounds.xi.0).min(0.0).abs();
        let c_h_eta = (patch.bounds.eta.0).min(0.0).abs();
        let probes: Vec<(f64, f64)> = match patch.kind {
            PatchKind::S => (0..=64)
                .map(|i| (i as f64 / 64.0, -0.9 * c_h_eta))
                .collect(),
            PatchKind::C2 => {
                let mut v: Vec<(f64, f64)> = (0..=64)
                    .map(|i| (i as f64 / 64.0, -0.9 * c_h_eta))
                    .collect();
                v.extend((0..=64).map(|i| (-0.9 * c_h_xi, i as f64 / 64.0)));
                v
            }
            PatchKind::C1 => {
                let (a, b) = patch.bounds.c1_hole.unwrap();
                let mut v: Vec<(f64, f64)> = (0..=64)
                    .map(|i| (0.02 + (0.48 - 0.02) * i as f64 / 64.0, 0.5 * (1.0 + 2.2 * (b - 0.5))))
                    .collect();
                v.extend(
                    (0..=64).map(|i| {
                        (0.5 * (1.0 + 2.2 * (a - 0.5)), 0.02 + (0.48 - 0.02) * i as f64 / 64.0)
                    }),
                );
                v
            }
        };
        for (xi, eta) in probes {
            let x = patch.map(xi, eta);
            if point_in_polygon(x, &polygon) {
                rep.violations.push(Violation {
                    patch: patch.label.clone(),
                    what: "extension domain reaches into the interior".into(),
                    location: x,
                });
            }
        }
    }

    // Jacobian margins at matching/extension mesh nodes.
    for patch in &dec.patches {
        let mut min_det = f64::INFINITY;
        let (x0, x1) = patch.bounds.xi;
        let (e0, _) = patch.bounds.eta;
        for i in 0..=32 {
            for j in 0..=16 {
                let xi = x0 + (x1 - x0) * i as f64 / 32.0;
                let eta = e0 + (patch.extents.eta_p - e0) * j as f64 / 16.0;
                if patch.bounds.contains(xi, eta, 0.0) {
                    min_det = min_det.min(patch.jacobian_det(xi, eta).abs());
                }
            }
        }
        if min_det < 1e-12 {
            rep.violations.push(Violation {
                patch: patch.label.clone(),
                what: format!("near-singular Jacobian (min |det| = {min_det:.3e})"),
                location: [f64::NAN, f64::NAN],
            });
        }
        rep.jacobian_margins.push((patch.label.clone(), min_det));
    }

    Ok(rep)
}

fn dist_point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Even-odd point-in-polygon test by ray casting (used by the validator
/// and as the brute-force mask oracle).
pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}
