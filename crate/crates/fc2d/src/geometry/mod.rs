//! Boundary curves, boundary-fitted patches and decompositions.

mod curve;
mod decomp;
mod patch;

pub use curve::{extend_curve, Boundary, Curve, CurveSegment, FcCurve, Side};
pub use curve::{Bezier2, Boomerang, CircleArc, GuitarArc, Heart, Line, Teardrop};
pub use decomp::{validate_decomposition, Decomposition, ValidationReport, Violation};
pub use decomp::point_in_polygon as point_in_polygon_oracle;
pub use patch::{
    build_c1_patch, build_c2_patch, build_s_patch, ArcSpan, Bounds, Extents, Mesh2, Patch,
    PatchKind, Window, NEWTON_MAX_ITER, NEWTON_TOL,
};
