//! Built-in domains with calibrated patch decompositions.
//!
//! Every builder takes the accuracy order `d` and the target Cartesian mesh
//! size `h` and sizes the patch meshes so their physical spacing is about
//! `mesh_ratio * h` (the Cartesian grid is then 1-6x finer than the patch
//! meshes). Extents and extrusion heights are derived from curvature, local
//! feature size and the clearance to convex-corner discontinuity curves; the
//! decomposition validator double-checks every constraint.

use crate::error::{FcError, Result};
use crate::geometry::{
    build_c1_patch, build_c2_patch, build_s_patch, ArcSpan, Bezier2, Boomerang, Boundary,
    CircleArc, CurveSegment, Decomposition, Extents, GuitarArc, Heart, Mesh2, Patch, PatchKind,
    Teardrop, Window,
};

pub struct Domain {
    pub name: String,
    pub dec: Decomposition,
}

#[derive(Clone, Copy, Debug)]
pub struct DomainOptions {
    /// Patch meshsize target as a multiple of the Cartesian h.
    pub mesh_ratio: f64,
    /// Fraction of each corner extent NOT overlapped by the S patches
    /// (smaller = wider overlaps).
    pub overlap_chi: f64,
    /// Blend-direction (normal) spacing as a fraction of h.
    pub normal_ratio: f64,
    /// Blending-to-zero extension point count the bounds must accommodate.
    pub c_btz: usize,
    /// Corner-patch half-extent as a physical arclength target.
    pub corner_extent: f64,
}

impl Default for DomainOptions {
    fn default() -> Self {
        DomainOptions { mesh_ratio: 1.0, overlap_chi: 0.25, normal_ratio: 1.0, c_btz: 27, corner_extent: 0.5 }
    }
}

/// Corner classification and half-extents at one segment junction.
struct CornerSpec {
    kind: PatchKind,
    c_in: f64,
    c_out: f64,
}

/// Builds the standard decomposition: one S patch per smooth segment middle
/// plus one corner patch per junction, in cyclic boundary order.
fn assemble(
    name: &str,
    boundary: Boundary,
    mut corners: Vec<CornerSpec>,
    d: usize,
    h: f64,
    opts: &DomainOptions,
) -> Result<Domain> {
    let n_seg = boundary.segments.len();
    if corners.len() != n_seg {
        return Err(FcError::Geometry("one corner spec per junction required".into()));
    }
    let ratio = opts.mesh_ratio;
    let c_btz = opts.c_btz;

    // Local feature size along the boundary, for thickness caps in pinched
    // geometries.
    let period = boundary.period();
    let n_poly = 600 * n_seg;
    let poly: Vec<(f64, [f64; 2])> = (0..n_poly)
        .map(|i| {
            let t = i as f64 * period / n_poly as f64;
            (t, boundary.eval(t))
        })
        .collect();
    let lfs_at = |t: f64| -> f64 {
        let x = boundary.eval(t);
        let mut best = f64::INFINITY;
        for &(s, p) in &poly {
            let mut dt = (s - t).abs() % period;
            if dt > period / 2.0 {
                dt = period - dt;
            }
            if dt > 0.12 {
                let dd = ((p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)).sqrt();
                best = best.min(dd);
            }
        }
        best
    };
    // Depth to which a normal extension may reach before re-entering the
    // domain through a pinched exterior (concave notches).
    let polygon: Vec<[f64; 2]> = poly.iter().map(|&(_, p)| p).collect();
    let outward_clear_at = |t: f64| -> f64 {
        let x = boundary.eval(t);
        let dvec = boundary.deriv(t);
        let sp = (dvec[0] * dvec[0] + dvec[1] * dvec[1]).sqrt();
        let nu_out = [dvec[1] / sp, -dvec[0] / sp];
        for k in 1..=96 {
            let s = 1.5 * k as f64 / 96.0;
            let p = [x[0] + s * nu_out[0], x[1] + s * nu_out[1]];
            if crate::geometry::point_in_polygon_oracle(p, &polygon) {
                return s;
            }
        }
        f64::INFINITY
    };
    let outward_min_over = |t0: f64, t1: f64| -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..=32 {
            best = best.min(outward_clear_at(t0 + (t1 - t0) * i as f64 / 32.0));
        }
        best
    };

    // Concave-corner maps image a region into the domain; their
    // tangential-edge curves must clear every consulted neighborhood. The
    // clearance is not monotone in the extent (the extended curves can
    // swing back across the boundary), so candidates are scanned and the
    // widest adequate extent kept. The corner arcs must also hold the
    // C-point blend depth at mesh spacing h.
    let blob_clearance = |j: usize, c_in: f64, c_out: f64| -> f64 {
        let seg_in = &boundary.segments[j];
        let seg_out = &boundary.segments[(j + 1) % n_seg];
        let corner_pt = seg_in.eval(1.0);
        let mut clear = f64::INFINITY;
        for k in 0..=64 {
            let s = k as f64 / 64.0;
            let d_pt = seg_in.eval(1.0 + c_in);
            let l2 = seg_out.eval(c_out * (1.0 - 2.0 * s));
            let p1 = [d_pt[0] + l2[0] - corner_pt[0], d_pt[1] + l2[1] - corner_pt[1]];
            let e_pt = seg_out.eval(-c_out);
            let l1 = seg_in.eval(1.0 - c_in * (1.0 - 2.0 * s));
            let p2 = [l1[0] + e_pt[0] - corner_pt[0], l1[1] + e_pt[1] - corner_pt[1]];
            for p in [p1, p2] {
                for q in &polygon {
                    let dd = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                    clear = clear.min(dd);
                }
            }
        }
        clear
    };
    let mut c1_clear = vec![f64::INFINITY; n_seg];
    for j in 0..n_seg {
        if corners[j].kind != PatchKind::C1 {
            continue;
        }
        let seg_in = &boundary.segments[j];
        let seg_out = &boundary.segments[(j + 1) % n_seg];
        let speed_in = {
            let v = seg_in.deriv(1.0);
            v[0].hypot(v[1])
        };
        let speed_out = {
            let v = seg_out.deriv(0.0);
            v[0].hypot(v[1])
        };
        // Blend depth of C points at spacing h must fit in each half-arc.
        let c_in_min = (c_btz + 4) as f64 * h / speed_in;
        let c_out_min = (c_btz + 4) as f64 * h / speed_out;
        let band_need = (2 * d + 6) as f64 * h;
        let (c_in0, c_out0) = (corners[j].c_in.max(c_in_min), corners[j].c_out.max(c_out_min));
        // Clearance is not monotone in the extent: the extended curves can
        // cross the boundary at intermediate extents and recover beyond.
        // Score candidates by clearance balanced against the overlap room
        // the extent provides for the window transitions.
        // The blend strips extend from the corner arcs along the (fixed)
        // reversed corner tangents; at large extents their far ends can
        // rotate into the domain. Candidates whose strips poke inside where
        // the window has not yet decayed are rejected.
        let tin = {
            let v = seg_in.deriv(1.0);
            let n = v[0].hypot(v[1]);
            [v[0] / n, v[1] / n]
        };
        let tout = {
            let v = seg_out.deriv(0.0);
            let n = v[0].hypot(v[1]);
            [v[0] / n, v[1] / n]
        };
        let aniso = {
            let cross = (tin[0] * tout[1] - tin[1] * tout[0]).abs();
            (0.65 / cross.max(1e-6)).clamp(1.0, 24.0)
        };
        // Values beyond ~60% of the blend depth have decayed to noise;
        // only the live part of the strips must stay exterior.
        let strip_depth = 0.55 * c_btz as f64 * opts.normal_ratio * h * aniso;
        let strips_stay_outside = |ci: f64, co: f64| -> bool {
            for k in 0..=41 {
                let sfrac = 0.85 * k as f64 / 41.0;
                // Strip hugging the outgoing arc, offset along -t_in.
                let p = seg_out.eval(co * sfrac);
                let q = [p[0] - strip_depth * tin[0], p[1] - strip_depth * tin[1]];
                if crate::geometry::point_in_polygon_oracle(q, &polygon) {
                    return false;
                }
                // Strip hugging the incoming arc, offset along +t_out.
                let p = seg_in.eval(1.0 - ci * sfrac);
                let q = [p[0] + strip_depth * tout[0], p[1] + strip_depth * tout[1]];
                if crate::geometry::point_in_polygon_oracle(q, &polygon) {
                    return false;
                }
            }
            true
        };
        // Prefer the widest admissible extent: wide corner windows keep the
        // transition interpolation accurate; the filters reject extents
        // whose strips or edge curves misbehave.
        let mut best: Option<(f64, f64, f64)> = None; // (scale, clearance, score)
        let mut chosen: Option<(f64, f64)> = None;
        for scale in [1.6, 1.45, 1.3, 1.15, 1.0, 0.85, 0.7, 0.55, 0.45, 0.35, 0.28] {
            let (ci, co) = (c_in0 * scale, c_out0 * scale);
            if ci < c_in_min || co < c_out_min || ci > 0.3 || co > 0.3 {
                continue;
            }
            if !strips_stay_outside(ci, co) {
                if std::env::var("FC2D_DEBUG_SIZING").is_ok() {
                    eprintln!("[c1scan] reject strips ci={ci:.4}");
                }
                continue;
            }
            let clear = blob_clearance(j, ci, co);
            let arc = (ci * speed_in).min(co * speed_out);
            let score = clear.min(0.5 * arc);
            if std::env::var("FC2D_DEBUG_SIZING").is_ok() {
                eprintln!("[c1scan] ci={ci:.4} clear={clear:.4} score={score:.4}");
            }
            if chosen.is_none() && clear >= 2.0 * band_need {
                chosen = Some((scale, clear));
            }
            if best.map_or(true, |(_, _, sc)| score > sc) {
                best = Some((scale, clear, score));
            }
        }
        let best = chosen.or(best.map(|(sc, cl, _)| (sc, cl)));
        // When every candidate trips the strip filter, fall back to the
        // best-scoring extent without it; the validator's exterior probes
        // remain the arbiter.
        let best = best.or_else(|| {
            let mut fb: Option<(f64, f64)> = None;
            for scale in [1.0f64, 0.85, 0.7, 0.55, 0.45, 0.35] {
                let (ci, co) = (c_in0 * scale, c_out0 * scale);
                if ci < c_in_min || co < c_out_min || ci > 0.3 || co > 0.3 {
                    continue;
                }
                let clear = blob_clearance(j, ci, co);
                if fb.map_or(true, |(_, c)| clear > c) {
                    fb = Some((scale, clear));
                }
            }
            fb
        });
        let (scale, clear) = best.ok_or_else(|| {
            FcError::Geometry(format!(
                "corner {j}: no admissible concave-corner extent at h = {h}"
            ))
        })?;
        if clear < band_need {
            return Err(FcError::Geometry(format!(
                "corner {j}: the concave-corner map image cannot clear the \
                 matching bands at h = {h} (clearance {clear:.3e}); use a \
                 finer mesh"
            )));
        }
        corners[j].c_in = c_in0 * scale;
        corners[j].c_out = c_out0 * scale;
        c1_clear[j] = clear;
    }

    // S-patch start offsets into each segment: past the corner by half the
    // corner extent, and far enough that the normal extension (depth ~ C h)
    // clears the exterior (concave notches pinch it near corners).
    // Distance from a boundary point to the discontinuity curve of a convex
    // corner's map.
    let diag_dist = |jc: usize, t: f64| -> f64 {
        let ck = &corners[jc];
        let seg_in = &boundary.segments[jc];
        let seg_out = &boundary.segments[(jc + 1) % n_seg];
        let corner_pt = seg_in.eval(1.0);
        let q = boundary.eval(t);
        let mut best = f64::INFINITY;
        for k in 0..=128 {
            let sc = k as f64 / 128.0;
            let pin = seg_in.eval(1.0 - ck.c_in * sc);
            let pout = seg_out.eval(ck.c_out * sc);
            let dg = [pin[0] + pout[0] - corner_pt[0], pin[1] + pout[1] - corner_pt[1]];
            best = best.min(((dg[0] - q[0]).powi(2) + (dg[1] - q[1]).powi(2)).sqrt());
        }
        best
    };
    // S patches start a fraction of the corner extent past each junction;
    // near sharp convex corners they move out until the discontinuity-curve
    // clearance can hold the matching depth at a resolvable blend spacing.
    let need_thick = 3.0 * d as f64 * h;
    let mut start_ofs = vec![0.0f64; n_seg]; // offset into segment j at its start
    let mut end_ofs = vec![0.0f64; n_seg]; // offset before the end of segment j
    for j in 0..n_seg {
        let prev = (j + n_seg - 1) % n_seg;
        let mut a = opts.overlap_chi * corners[prev].c_out;
        if corners[prev].kind == PatchKind::C2 {
            while a < 0.8 * corners[prev].c_out
                && 0.45 * diag_dist(prev, j as f64 + a) < need_thick
            {
                a *= 1.25;
            }
        }
        let mut b = opts.overlap_chi * corners[j].c_in;
        if corners[j].kind == PatchKind::C2 {
            while b < 0.8 * corners[j].c_in
                && 0.45 * diag_dist(j, (j + 1) as f64 - b) < need_thick
            {
                b *= 1.25;
            }
        }
        start_ofs[j] = a;
        end_ofs[j] = b;
    }

    // Split each segment's S region into spans where the curvature is
    // roughly homogeneous, so a far region of extreme curvature does not
    // pin the extrusion height of the whole arc. Spans overlap each other.
    let kappa_at = |seg: &CurveSegment, t: f64| -> f64 {
        let d1 = seg.deriv(t);
        let d2 = seg.deriv2(t);
        let sp = (d1[0] * d1[0] + d1[1] * d1[1]).sqrt();
        (d1[0] * d2[1] - d1[1] * d2[0]).abs() / sp.powi(3)
    };
    let mut s_spans: Vec<Vec<(f64, f64)>> = Vec::with_capacity(n_seg);
    for j in 0..n_seg {
        let seg = &boundary.segments[j];
        let (a, b) = (start_ofs[j], end_ofs[j]);
        // Curvature profile on 64 panels.
        let kap: Vec<f64> = (0..64)
            .map(|i| kappa_at(seg, a + (1.0 - b - a) * (i as f64 + 0.5) / 64.0))
            .collect();
        let mut cuts = vec![0usize];
        let mut piece_min = kap[0];
        let mut piece_max = kap[0];
        for (i, &k) in kap.iter().enumerate() {
            piece_min = piece_min.min(k);
            piece_max = piece_max.max(k);
            // Cut only when the extrusion heights across the piece differ
            // by over an order of magnitude (tight tips) and the remaining
            // piece is long enough to be useful.
            if piece_max.max(2.0) > 16.0 * piece_min.max(2.0)
                && i > cuts.last().unwrap() + 12
                && i < 52
                && cuts.len() < 4
            {
                cuts.push(i);
                piece_min = k;
                piece_max = k;
            }
        }
        cuts.push(64);
        let len = 1.0 - b - a;
        let mut spans = Vec::new();
        for w in cuts.windows(2) {
            let t0 = a + len * w[0] as f64 / 64.0;
            let t1 = a + len * w[1] as f64 / 64.0;
            // Overlap sized by the local speed at the cut so slow spots
            // (high-curvature tips) do not blow it up.
            let ov = |t: f64| {
                let v = seg.deriv(t);
                ((0.12 * len / cuts.len() as f64) * v[0].hypot(v[1])).max(60.0 * h)
                    / v[0].hypot(v[1]).max(1e-9)
            };
            let t0 = if w[0] == 0 { t0 } else { t0 - 0.5 * ov(t0).min(0.2 * (t1 - t0)) };
            let t1 = if w[1] == 64 { t1 } else { t1 + 0.5 * ov(t1).min(0.2 * (t1 - t0)) };
            spans.push((t0, t1));
        }
        s_spans.push(spans);
    }

    // Per-span extrusion heights and caps.
    // span_info[j][k] = (h_ext, eta_cap, lfs)
    let mut span_info: Vec<Vec<(f64, f64, f64)>> = Vec::with_capacity(n_seg);
    for j in 0..n_seg {
        let prev_corner = &corners[(j + n_seg - 1) % n_seg];
        let this_corner = &corners[j];
        let seg = &boundary.segments[j];
        let mut infos = Vec::new();
        for &(ta, tb) in &s_spans[j] {
            let t0 = j as f64 + ta;
            let t1 = j as f64 + tb;
            let mut kappa_max = 0.0f64;
            for i in 0..=200 {
                let t = ta + (tb - ta) * i as f64 / 200.0;
                kappa_max = kappa_max.max(kappa_at(seg, t));
            }
            let mut lfs = f64::INFINITY;
            for i in 0..=24 {
                let t = t0 + (t1 - t0) * i as f64 / 24.0;
                lfs = lfs.min(lfs_at(t));
            }
            // Clearance to the discontinuity curves of adjacent convex corners.
            let mut diag_clear = f64::INFINITY;
            for (ck, t_c) in [(prev_corner, j), (this_corner, j + 1)] {
                if ck.kind == PatchKind::C2 {
                    let seg_in = &boundary.segments[(t_c + n_seg - 1) % n_seg];
                    let seg_out = &boundary.segments[t_c % n_seg];
                    let corner_pt = seg_out.eval(0.0);
                    for i in 0..=100 {
                        let sc = i as f64 / 100.0;
                        let pin = seg_in.eval(1.0 - ck.c_in * sc);
                        let pout = seg_out.eval(ck.c_out * sc);
                        let diag =
                            [pin[0] + pout[0] - corner_pt[0], pin[1] + pout[1] - corner_pt[1]];
                        for k in 0..=20 {
                            let t = t0 + (t1 - t0) * (k as f64 / 20.0);
                            let q = boundary.eval(t);
                            let dd =
                                ((diag[0] - q[0]).powi(2) + (diag[1] - q[1]).powi(2)).sqrt();
                            diag_clear = diag_clear.min(dd);
                        }
                    }
                }
            }
            let c1_cap = 0.7 * c1_clear[j].min(c1_clear[(j + n_seg - 1) % n_seg]);
            let thickness_cap = (0.45 * lfs).min(0.6 * diag_clear).min(c1_cap);
            let h_ext = (0.35f64)
                .min(0.7 / kappa_max.max(1e-9))
                .min(2.0 * thickness_cap)
                .min(0.45 * lfs);
            let eta_cap = (thickness_cap / h_ext).min(0.85);
            if std::env::var("FC2D_DEBUG_SIZING").is_ok() {
                eprintln!(
                    "[sizing] seg {j} span [{ta:.4},{tb:.4}]: kappa_max={kappa_max:.3e} \
                     lfs={lfs:.3e} diag_clear={diag_clear:.3e} h_ext={h_ext:.3e} \
                     eta_cap={eta_cap:.3e}",
                );
            }
            infos.push((h_ext, eta_cap, lfs));
        }
        span_info.push(infos);
    }

    let mut patches: Vec<Patch> = Vec::new();
    for j in 0..n_seg {
        let prev_corner_idx = (j + n_seg - 1) % n_seg;
        let this_corner = &corners[j];
        let seg = &boundary.segments[j];
        let n_spans = s_spans[j].len();

        // --- S patches over the spans of segment j ---
        for (k, &(ta, tb)) in s_spans[j].iter().enumerate() {
            let t0 = j as f64 + ta;
            let t1 = j as f64 + tb;
            let arc_seg = seg.subsegment(ta, tb, format!("{name}-s{j}-{k}"));
            let arclen = seg.arclength(ta, tb);
            let (h_ext, eta_cap, lfs) = span_info[j][k];

            // Coverage limits of the neighboring patches along the boundary.
            let prev_end = if k == 0 {
                j as f64 + corners[prev_corner_idx].c_out
            } else {
                j as f64 + s_spans[j][k - 1].1
            };
            let next_start = if k + 1 == n_spans {
                (j + 1) as f64 - this_corner.c_in
            } else {
                j as f64 + s_spans[j][k + 1].0
            };

            let ext_budget = 0.6 * outward_min_over(t0, t1);
            let hn = opts.normal_ratio * h;
            let n_xi = ((arclen / (ratio * h)).ceil() as usize + 1).max(2 * d + 4);
            let mut n_eta = ((h_ext / hn).ceil() as usize + 1).max(d + 3);
            n_eta = n_eta.max((c_btz as f64 * h_ext / ext_budget).ceil() as usize + 1);
            n_eta = n_eta.max(((d as f64 - 0.5) / eta_cap).ceil() as usize + 1);
            // Blend content lives near 3.4x the mesh spacing; spacings much
            // below 0.55 h alias it on the Cartesian grid. The floor yields
            // to the d+3-row minimum when extreme curvature pins the
            // extrusion.
            let n_alias =
                ((h_ext / (0.5 * hn)).floor() as usize + 1).max(d + 3);
            n_eta = n_eta.min(n_alias);
            // A patch closure must sit inside its chain neighbors' images:
            // next to a thin span the extents shrink; the matching depth
            // then dictates the row count (sub-floor spacing is accepted in
            // these narrow hand-off zones).
            let prev_h = if k > 0 { span_info[j][k - 1].0 } else { f64::INFINITY };
            let next_h =
                if k + 1 < n_spans { span_info[j][k + 1].0 } else { f64::INFINITY };
            let eta_p = eta_cap.min(0.85 * prev_h.min(next_h) / h_ext).min(0.9);
            let matching_min = ((d - 1) as f64 + 1.2) / eta_p;
            n_eta = n_eta.max(matching_min.ceil() as usize + 1);

            let xi_l = (prev_end - t0) / (t1 - t0);
            let xi_r = (next_start - t0) / (t1 - t0);
            if std::env::var("FC2D_DEBUG_SIZING").is_ok() {
                eprintln!(
                    "[win] seg {j} span {k} [{ta:.4},{tb:.4}] prev_end={prev_end:.4} \
                     next_start={next_start:.4} xi_l={xi_l:.4} xi_r={xi_r:.4}"
                );
            }
            patches.push(build_s_patch(
                arc_seg,
                h_ext,
                eta_p,
                Mesh2 { n_xi, n_eta },
                Window::S { xi_l, xi_r },
                ArcSpan::S { t0, t1 },
                c_btz,
                format!("{name}-s{j}-{k}"),
            )?);
            let _ = lfs;
        }

        // --- corner patch at junction j (global t = j+1) ---
        let ck = &corners[j];
        let t_c = (j + 1) as f64;
        let seg_in = &boundary.segments[j];
        let seg_out = &boundary.segments[(j + 1) % n_seg];
        let corner_pt = seg_in.eval(1.0);
        let len_in = seg_in.arclength(1.0 - ck.c_in, 1.0);
        let len_out = seg_out.arclength(0.0, ck.c_out);
        // Feature size for the corner strips: distance from the corner arcs
        // to boundary portions beyond the patch's own coverage (the two arms
        // belong to the patch; the map follows them into the pinch).
        let lfs_c = {
            let reach = 1.3 * ck.c_in.max(ck.c_out);
            let mut best = f64::INFINITY;
            for k in 0..=32 {
                let sc = k as f64 / 32.0;
                for t_arc in [t_c - ck.c_in * sc, t_c + ck.c_out * sc] {
                    let p = boundary.eval(t_arc);
                    for &(tq, q) in &poly {
                        let mut dt = (tq - t_c).abs() % period;
                        if dt > period / 2.0 {
                            dt = period - dt;
                        }
                        if dt > reach {
                            let dd =
                                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                            best = best.min(dd);
                        }
                    }
                }
            }
            best
        };
        // Window break points: the transitions span the overlaps with the
        // S neighbors.
        let frac_in = end_ofs[j] / ck.c_in; // in (0, 1)
        let frac_out = start_ofs[(j + 1) % n_seg] / ck.c_out;
        // Sharp corners compress the corner-patch content physically by the
        // sine of the opening angle; a coarser patch mesh (the paper's
        // "larger refinement factors") keeps that content resolvable on the
        // Cartesian grid.
        let corner_aniso = {
            let tin = seg_in.deriv(1.0);
            let tout = seg_out.deriv(0.0);
            let cross = (tin[0] * tout[1] - tin[1] * tout[0]).abs()
                / (tin[0].hypot(tin[1]) * tout[0].hypot(tout[1]));
            (0.65 / cross.max(1e-6)).clamp(1.0, 24.0)
        };
        // Strips must hold the matching depth at the (possibly anisotropic)
        // corner spacing; they may overlap the opposite strips mid-domain
        // but never cross the opposite boundary.
        let h_in = span_info[j].last().unwrap().0;
        let h_out = span_info[(j + 1) % n_seg][0].0;
        let thick_c = (0.45 * lfs_c)
            .min(0.6 * h_in)
            .min(0.6 * h_out)
            .max(1.3 * (d - 1) as f64 * corner_aniso * opts.normal_ratio * h)
            .min(0.8 * lfs_c);
        match ck.kind {
            PatchKind::C2 => {
                let sxi = seg_in.subsegment(1.0, 1.0 - ck.c_in, format!("{name}-c{j}-xi"));
                let seta = seg_out.subsegment(0.0, ck.c_out, format!("{name}-c{j}-eta"));
                let xi_p = (thick_c / len_out).min(0.6);
                let eta_p = (thick_c / len_in).min(0.6);
                let sp = opts.normal_ratio * h * corner_aniso;
                let n_xi = ((len_in / sp).ceil() as usize + 1)
                    .max(2 * d + 6)
                    .max(((d as f64 - 0.5) / xi_p).ceil() as usize + 1);
                let n_eta = ((len_out / sp).ceil() as usize + 1)
                    .max(2 * d + 6)
                    .max(((d as f64 - 0.5) / eta_p).ceil() as usize + 1);
                let m = Mesh2 { n_xi, n_eta };
                patches.push(build_c2_patch(
                    sxi,
                    seta,
                    corner_pt,
                    Extents { xi_p, eta_p },
                    m,
                    Window::C2 { xi_r: frac_in, eta_u: frac_out },
                    ArcSpan::C2 { t_corner: t_c, c_xi: ck.c_in, c_eta: ck.c_out },
                    c_btz,
                    format!("{name}-c{j}"),
                )?);
            }
            PatchKind::C1 => {
                let sxi = seg_in.subsegment(
                    1.0 - ck.c_in,
                    1.0 + ck.c_in,
                    format!("{name}-c{j}-xi"),
                );
                let seta =
                    seg_out.subsegment(ck.c_out, -ck.c_out, format!("{name}-c{j}-eta"));
                let odd = |n: usize| if n % 2 == 0 { n + 1 } else { n };
                let xi_over = (thick_c / (2.0 * len_in)).min(0.45);
                let eta_over = (thick_c / (2.0 * len_out)).min(0.45);
                let sp = opts.normal_ratio * h * corner_aniso;
                let n_xi = odd(
                    ((2.0 * len_in / sp).ceil() as usize + 1)
                        .max(2 * (c_btz + d + 6) + 1)
                        .max(((d as f64 - 0.5) / xi_over).ceil() as usize + 1),
                );
                let n_eta = odd(
                    ((2.0 * len_out / sp).ceil() as usize + 1)
                        .max(2 * (c_btz + d + 6) + 1)
                        .max(((d as f64 - 0.5) / eta_over).ceil() as usize + 1),
                );
                let m = Mesh2 { n_xi, n_eta };
                patches.push(build_c1_patch(
                    sxi,
                    seta,
                    corner_pt,
                    Extents { xi_p: 0.5 + xi_over, eta_p: 0.5 + eta_over },
                    m,
                    Window::C1 {
                        xi_l: 0.5 * (1.0 - frac_in),
                        eta_d: 0.5 * (1.0 - frac_out),
                    },
                    ArcSpan::C1 { t_corner: t_c, c_xi: ck.c_in, c_eta: ck.c_out },
                    c_btz,
                    format!("{name}-c{j}"),
                )?);
            }
            PatchKind::S => unreachable!("corner patches are C1 or C2"),
        }
    }
    let mut dec = Decomposition::new(boundary, patches)?;
    // The POU neighborhood radius scales with the matching depth; the
    // half-overlap default is far larger than needed and would widen the
    // membership bands unnecessarily.
    dec.eps = dec.eps.min((d + 1) as f64 * h);
    Ok(Domain { name: name.to_string(), dec })
}

/// Parameter half-extent giving roughly the requested arclength on each
/// side of the junction at the end of `seg`.
fn extent_param(seg_in: &CurveSegment, seg_out: &CurveSegment, arclen: f64) -> (f64, f64) {
    let fit = |seg: &CurveSegment, from_end: bool| -> f64 {
        let mut c = 0.15f64;
        for _ in 0..20 {
            let l = if from_end {
                seg.arclength(1.0 - c, 1.0)
            } else {
                seg.arclength(0.0, c)
            };
            c *= (arclen / l).clamp(0.5, 2.0);
            c = c.clamp(1e-3, 0.3);
        }
        c
    };
    (fit(seg_in, true), fit(seg_out, false))
}

/// Teardrop domain (Ex. 5.1/5.4): one smooth arc, one convex corner of
/// interior angle `alpha*pi` at the origin.
pub fn teardrop(alpha: f64, d: usize, h: f64, opts: &DomainOptions) -> Result<Domain> {
    let seg = CurveSegment::analytic(Teardrop::with_alpha(alpha), "teardrop");
    let (c_in, c_out) = extent_param(&seg, &seg, opts.corner_extent.max(60.0 * h));
    let boundary = Boundary::new(vec![seg])?;
    assemble(
        "teardrop",
        boundary,
        vec![CornerSpec { kind: PatchKind::C2, c_in, c_out }],
        d,
        h,
        opts,
    )
}

/// Boomerang domain (Ex. 5.1): one smooth arc, one concave corner of
/// interior angle `alpha*pi` (`1 < alpha < 2`).
pub fn boomerang(alpha: f64, d: usize, h: f64, opts: &DomainOptions) -> Result<Domain> {
    let seg = CurveSegment::analytic(Boomerang::with_alpha(alpha), "boomerang");
    // Concave corners benefit from generous extents (the scan below only
    // shrinks them); target a healthy fraction of the perimeter.
    let perimeter = seg.arclength(0.0, 1.0);
    let target = opts.corner_extent.max(60.0 * h).max(0.12 * perimeter);
    let (c_in, c_out) = extent_param(&seg, &seg, target);
    let boundary = Boundary::new(vec![seg])?;
    assemble(
        "boomerang",
        boundary,
        vec![CornerSpec { kind: PatchKind::C1, c_in, c_out }],
        d,
        h,
        opts,
    )
}

/// Heart domain (Ex. 5.4): one smooth arc, one concave corner.
pub fn heart(alpha: f64, d: usize, h: f64, opts: &DomainOptions) -> Result<Domain> {
    let seg = CurveSegment::analytic(Heart::with_alpha(alpha), "heart");
    let perimeter = seg.arclength(0.0, 1.0);
    let target = opts.corner_extent.max(60.0 * h).max(0.12 * perimeter);
    let (c_in, c_out) = extent_param(&seg, &seg, target);
    let boundary = Boundary::new(vec![seg])?;
    assemble(
        "heart",
        boundary,
        vec![CornerSpec { kind: PatchKind::C1, c_in, c_out }],
        d,
        h,
        opts,
    )
}

/// Guitar-base domain (Ex. 5.2): four smooth segments, three convex corners
/// and one concave corner (at the waist).
pub fn guitar_base(d: usize, h: f64, opts: &DomainOptions) -> Result<Domain> {
    let r1 = CurveSegment::analytic(GuitarArc { shift: 0.0 }, "guitar-r1");
    let r4 = CurveSegment::analytic(GuitarArc { shift: 0.75 }, "guitar-r4");
    let a2 = r1.eval(1.0);
    let b2 = [1.0, 0.0];
    let a3 = [1.0, 0.0];
    let b3 = r4.eval(0.0);
    let nu = |a: [f64; 2], b: [f64; 2]| -> [f64; 2] {
        let v = [b[0] - a[0], b[1] - a[1]];
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        [-v[1] / n, v[0] / n]
    };
    let n2 = nu(a2, b2);
    let n3 = nu(a3, b3);
    let c2 = [
        0.5 * (a2[0] + b2[0]) + 0.01 * n2[0],
        0.5 * (a2[1] + b2[1]) + 0.01 * n2[1],
    ];
    let c3 = [
        0.5 * (a3[0] + b3[0]) - 0.01 * n3[0],
        0.5 * (a3[1] + b3[1]) - 0.01 * n3[1],
    ];
    let r2 = CurveSegment::analytic(Bezier2 { a: a2, c: c2, b: b2 }, "guitar-r2");
    let r3 = CurveSegment::analytic(Bezier2 { a: a3, c: c3, b: b3 }, "guitar-r3");
    let segs = [&r1, &r2, &r3, &r4];
    let kinds = [PatchKind::C2, PatchKind::C1, PatchKind::C2, PatchKind::C2];
    let corners = (0..4)
        .map(|j| {
            let (c_in, c_out) = extent_param(
                segs[j],
                segs[(j + 1) % 4],
                opts.corner_extent.max(60.0 * h),
            );
            CornerSpec { kind: kinds[j], c_in, c_out }
        })
        .collect();
    let boundary = Boundary::new(vec![r1, r2, r3, r4])?;
    assemble("guitar-base", boundary, corners, d, h, opts)
}

/// Smooth circle split into two overlapping S patches (no corners); used for
/// partition-of-unity and smooth-pipeline checks.
pub fn circle_two_patch(d: usize, h: f64, opts: &DomainOptions) -> Result<Domain> {
    const TAU: f64 = 2.0 * std::f64::consts::PI;
    let circle = CurveSegment::analytic(
        CircleArc { center: [0.0, 0.0], radius: 1.0, a0: -0.5 * TAU, a1: 0.5 * TAU },
        "circle",
    );
    let ratio = opts.mesh_ratio;
    let mk = |t0: f64, t1: f64, label: &str| -> Result<Patch> {
        let seg = circle.subsegment(t0, t1, label);
        let arclen = TAU * (t1 - t0);
        let n_xi = ((arclen / (ratio * h)).ceil() as usize + 1).max(2 * d + 4);
        let h_ext = 0.3;
        let n_eta = ((h_ext / h).ceil() as usize + 1).max(d + 3);
        build_s_patch(
            seg,
            h_ext,
            0.5,
            Mesh2 { n_xi, n_eta },
            // Plateau exactly over the part not covered by the other patch.
            Window::S { xi_l: 0.1 / (t1 - t0), xi_r: 1.0 - 0.1 / (t1 - t0) },
            ArcSpan::S { t0, t1 },
            opts.c_btz,
            label,
        )
    };
    // Arcs [-0.55, 0.05] and [-0.05, 0.55] of the wrapped parameter; each
    // pair of ends overlaps by 0.1.
    let p0 = mk(-0.55, 0.05, "circle-s0")?;
    let p1 = mk(-0.05, 0.55, "circle-s1")?;
    let dec = Decomposition::new(Boundary::new(vec![circle])?, vec![p0, p1])?;
    Ok(Domain { name: "circle".into(), dec })
}

/// Builds a named built-in domain.
pub fn by_name(name: &str, alpha: f64, d: usize, h: f64, opts: &DomainOptions) -> Result<Domain> {
    match name {
        "teardrop" => teardrop(alpha, d, h, opts),
        "boomerang" => boomerang(alpha, d, h, opts),
        "heart" => heart(alpha, d, h, opts),
        "guitar" | "guitar-base" => guitar_base(d, h, opts),
        "circle" => circle_two_patch(d, h, opts),
        other => Err(FcError::Config(format!("unknown domain '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::validate_decomposition;

    #[test]
    fn teardrop_decomposition_validates() {
        let d = 4;
        let dom = teardrop(0.5, d, 1e-2, &DomainOptions::default()).unwrap();
        assert_eq!(dom.dec.patches.len(), 2);
        let rep = validate_decomposition(&dom.dec, d).unwrap();
        assert!(rep.is_ok(), "{}", rep.summary());
    }

    #[test]
    fn boomerang_decomposition_validates() {
        let d = 5;
        let dom = boomerang(1.5, d, 1e-2, &DomainOptions::default()).unwrap();
        let rep = validate_decomposition(&dom.dec, d).unwrap();
        assert!(rep.is_ok(), "{}", rep.summary());
    }

    #[test]
    fn guitar_decomposition_validates() {
        let d = 5;
        let dom = guitar_base(d, 4e-3, &DomainOptions::default()).unwrap();
        assert_eq!(dom.dec.patches.len(), 8);
        let rep = validate_decomposition(&dom.dec, d).unwrap();
        assert!(rep.is_ok(), "{}", rep.summary());
    }

    #[test]
    fn undersized_extent_is_reported() {
        let d = 4;
        let mut dom = teardrop(0.5, d, 1e-2, &DomainOptions::default()).unwrap();
        dom.dec.patches[0].extents.eta_p =
            0.5 * (d - 1) as f64 * dom.dec.patches[0].mesh.h_eta();
        let rep = validate_decomposition(&dom.dec, d).unwrap();
        assert!(!rep.is_ok());
        assert!(rep.summary().contains("matching depth"));
    }
}
