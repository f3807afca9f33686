//! Boundary curve segments: built-in closed forms, quadratic Béziers and a
//! Fourier-continuation fallback for segments without a usable closed form.

use crate::btz1d::{build_operator, periodic_continuation, BtzParams};
use crate::error::{FcError, Result};
use num_complex::Complex64;
use std::sync::Arc;

/// A smooth plane curve. Implementations are expected to be evaluable on an
/// open superset of `[0, 1]` (analytic continuation of the defining formula).
pub trait Curve: Send + Sync {
    fn eval(&self, t: f64) -> [f64; 2];
    fn deriv(&self, t: f64) -> [f64; 2];
    fn deriv2(&self, t: f64) -> [f64; 2] {
        // Central difference of `deriv`; closed forms override this.
        let h = 1e-6;
        let a = self.deriv(t + h);
        let b = self.deriv(t - h);
        [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
    }
}

const PI: f64 = std::f64::consts::PI;

/// Teardrop boundary `r(t) = (2 sin(pi t), -beta sin(2 pi t))`, corner of
/// interior angle `alpha*pi` at `t = 0` (`beta = tan(alpha*pi/2)`).
pub struct Teardrop {
    pub beta: f64,
}

impl Teardrop {
    pub fn with_alpha(alpha: f64) -> Self {
        Teardrop { beta: (alpha * PI / 2.0).tan() }
    }
}

impl Curve for Teardrop {
    fn eval(&self, t: f64) -> [f64; 2] {
        [2.0 * (PI * t).sin(), -self.beta * (2.0 * PI * t).sin()]
    }
    fn deriv(&self, t: f64) -> [f64; 2] {
        [2.0 * PI * (PI * t).cos(), -2.0 * PI * self.beta * (2.0 * PI * t).cos()]
    }
    fn deriv2(&self, t: f64) -> [f64; 2] {
        [
            -2.0 * PI * PI * (PI * t).sin(),
            4.0 * PI * PI * self.beta * (2.0 * PI * t).sin(),
        ]
    }
}

/// Boomerang boundary `r(t) = (-2/3 sin(3 pi t), beta sin(2 pi t))`, concave
/// corner of interior angle `alpha*pi` at `t = 0` (`1 < alpha < 2`).
pub struct Boomerang {
    pub beta: f64,
}

impl Boomerang {
    pub fn with_alpha(alpha: f64) -> Self {
        Boomerang { beta: (alpha * PI / 2.0).tan() }
    }
}

impl Curve for Boomerang {
    fn eval(&self, t: f64) -> [f64; 2] {
        [-2.0 / 3.0 * (3.0 * PI * t).sin(), self.beta * (2.0 * PI * t).sin()]
    }
    fn deriv(&self, t: f64) -> [f64; 2] {
        [-2.0 * PI * (3.0 * PI * t).cos(), 2.0 * PI * self.beta * (2.0 * PI * t).cos()]
    }
    fn deriv2(&self, t: f64) -> [f64; 2] {
        [
            6.0 * PI * PI * (3.0 * PI * t).sin(),
            -4.0 * PI * PI * self.beta * (2.0 * PI * t).sin(),
        ]
    }
}

/// Heart boundary: rotation form with concave corner at `t = 0` of interior
/// angle `alpha*pi` (`1 < alpha < 2`).
pub struct Heart {
    pub alpha: f64,
    pub beta: f64,
}

impl Heart {
    pub fn with_alpha(alpha: f64) -> Self {
        Heart { alpha, beta: (alpha * PI / 2.0).tan() }
    }
    fn omega(&self) -> f64 {
        (1.0 + self.alpha) * PI
    }
}

impl Curve for Heart {
    fn eval(&self, t: f64) -> [f64; 2] {
        let w = self.omega() * t;
        let (s, c) = w.sin_cos();
        [c * self.beta - s, s * self.beta + c - (PI * t).cos()]
    }
    fn deriv(&self, t: f64) -> [f64; 2] {
        let om = self.omega();
        let w = om * t;
        let (s, c) = w.sin_cos();
        [om * (-s * self.beta - c), om * (c * self.beta - s) + PI * (PI * t).sin()]
    }
    fn deriv2(&self, t: f64) -> [f64; 2] {
        let om = self.omega();
        let w = om * t;
        let (s, c) = w.sin_cos();
        [
            om * om * (-c * self.beta + s),
            om * om * (-s * self.beta - c) + PI * PI * (PI * t).cos(),
        ]
    }
}

/// Smooth guitar-base arcs `r(t) = (2 sin(pi(t/4 + shift)), -sin(2 pi(t/4 + shift)))`.
pub struct GuitarArc {
    pub shift: f64,
}

impl Curve for GuitarArc {
    fn eval(&self, t: f64) -> [f64; 2] {
        let u = 0.25 * t + self.shift;
        [2.0 * (PI * u).sin(), -(2.0 * PI * u).sin()]
    }
    fn deriv(&self, t: f64) -> [f64; 2] {
        let u = 0.25 * t + self.shift;
        [0.5 * PI * (PI * u).cos(), -0.5 * PI * (2.0 * PI * u).cos()]
    }
    fn deriv2(&self, t: f64) -> [f64; 2] {
        let u = 0.25 * t + self.shift;
        [-0.125 * PI * PI * (PI * u).sin(), 0.25 * PI * PI * (2.0 * PI * u).sin()]
    }
}

/// Quadratic Bézier with endpoints `a`, `b` and control point `c`.
pub struct Bezier2 {
    pub a: [f64; 2],
    pub c: [f64; 2],
    pub b: [f64; 2],
}

impl Curve for Bezier2 {
    fn eval(&self, t: f64) -> [f64; 2] {
        let u = 1.0 - t;
        [
            u * u * self.a[0] + 2.0 * u * t * self.c[0] + t * t * self.b[0],
            u * u * self.a[1] + 2.0 * u * t * self.c[1] + t * t * self.b[1],
        ]
    }
    fn deriv(&self, t: f64) -> [f64; 2] {
        let u = 1.0 - t;
        [
            2.0 * (u * (self.c[0] - self.a[0]) + t * (self.b[0] - self.c[0])),
            2.0 * (u * (self.c[1] - self.a[1]) + t * (self.b[1] - self.c[1])),
        ]
    }
    fn deriv2(&self, _t: f64) -> [f64; 2] {
        [
            2.0 * (self.b[0] - 2.0 * self.c[0] + self.a[0]),
            2.0 * (self.b[1] - 2.0 * self.c[1] + self.a[1]),
        ]
    }
}

/// Straight line from `p` to `q`.
pub struct Line {
    pub p: [f64; 2],
    pub q: [f64; 2],
}

impl Curve for Line {
    fn eval(&self, t: f64) -> [f64; 2] {
        [
            self.p[0] + t * (self.q[0] - self.p[0]),
            self.p[1] + t * (self.q[1] - self.p[1]),
        ]
    }
    fn deriv(&self, _t: f64) -> [f64; 2] {
        [self.q[0] - self.p[0], self.q[1] - self.p[1]]
    }
    fn deriv2(&self, _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
}

/// Circle arc `center + radius (cos, sin)(a0 + t (a1 - a0))`.
pub struct CircleArc {
    pub center: [f64; 2],
    pub radius: f64,
    pub a0: f64,
    pub a1: f64,
}

impl Curve for CircleArc {
    fn eval(&self, t: f64) -> [f64; 2] {
        let a = self.a0 + t * (self.a1 - self.a0);
        [self.center[0] + self.radius * a.cos(), self.center[1] + self.radius * a.sin()]
    }
    fn deriv(&self, t: f64) -> [f64; 2] {
        let a = self.a0 + t * (self.a1 - self.a0);
        let da = self.a1 - self.a0;
        [-self.radius * da * a.sin(), self.radius * da * a.cos()]
    }
    fn deriv2(&self, t: f64) -> [f64; 2] {
        let a = self.a0 + t * (self.a1 - self.a0);
        let da = self.a1 - self.a0;
        [-self.radius * da * da * a.cos(), -self.radius * da * da * a.sin()]
    }
}

struct SubCurve {
    inner: Arc<dyn Curve>,
    t0: f64,
    t1: f64,
}

impl Curve for SubCurve {
    fn eval(&self, s: f64) -> [f64; 2] {
        self.inner.eval(self.t0 + s * (self.t1 - self.t0))
    }
    fn deriv(&self, s: f64) -> [f64; 2] {
        let dt = self.t1 - self.t0;
        let d = self.inner.deriv(self.t0 + s * dt);
        [d[0] * dt, d[1] * dt]
    }
    fn deriv2(&self, s: f64) -> [f64; 2] {
        let dt = self.t1 - self.t0;
        let d = self.inner.deriv2(self.t0 + s * dt);
        [d[0] * dt * dt, d[1] * dt * dt]
    }
}

/// A curve represented by the trigonometric series of a 1D Fourier
/// continuation of its coordinate functions. Used as the smooth-extension
/// fallback for segments without an analytic formula.
pub struct FcCurve {
    coeffs_x: Vec<Complex64>,
    coeffs_y: Vec<Complex64>,
    /// Period in the parameter of the original segment.
    period: f64,
}

impl FcCurve {
    /// Builds the continuation from `n` samples of `seg` on `[0, 1]`.
    pub fn from_segment(seg: &CurveSegment, n: usize, d: usize) -> Result<FcCurve> {
        Self::from_segment_with(seg, n, d)
    }

    #[doc(hidden)]
    pub fn from_segment_with(seg: &CurveSegment, n: usize, d: usize) -> Result<FcCurve> {
        let params = BtzParams::new(d, 27, 12, 20, 1)?;
        let op = build_operator(&params)?;
        let k = 1.0 / (n as f64 - 1.0);
        let xs: Vec<f64> = (0..n).map(|i| seg.eval(i as f64 * k)[0]).collect();
        let ys: Vec<f64> = (0..n).map(|i| seg.eval(i as f64 * k)[1]).collect();
        let cx = periodic_continuation(&xs, &op)?;
        let cy = periodic_continuation(&ys, &op)?;
        let m = cx.len();
        Ok(FcCurve {
            coeffs_x: crate::fft::coeffs_of_real(&cx, m, 1),
            coeffs_y: crate::fft::coeffs_of_real(&cy, m, 1),
            period: m as f64 * k,
        })
    }

    fn series(&self, coeffs: &[Complex64], t: f64, order: usize) -> f64 {
        let n = coeffs.len();
        let w = 2.0 * PI / self.period;
        let mut s = Complex64::default();
        for (i, &c) in coeffs.iter().enumerate() {
            let l = crate::fft::freq(i, n) as f64;
            let phase = Complex64::new(0.0, l * w * t).exp();
            let factor = Complex64::new(0.0, l * w).powu(order as u32);
            s += c * factor * phase;
        }
        s.re
    }
}

impl Curve for FcCurve {
    fn eval(&self, t: f64) -> [f64; 2] {
        [self.series(&self.coeffs_x, t, 0), self.series(&self.coeffs_y, t, 0)]
    }
    fn deriv(&self, t: f64) -> [f64; 2] {
        [self.series(&self.coeffs_x, t, 1), self.series(&self.coeffs_y, t, 1)]
    }
    fn deriv2(&self, t: f64) -> [f64; 2] {
        [self.series(&self.coeffs_x, t, 2), self.series(&self.coeffs_y, t, 2)]
    }
}

/// One smooth boundary segment with a trusted parameter window.
#[derive(Clone)]
pub struct CurveSegment {
    curve: Arc<dyn Curve>,
    pub label: String,
    /// Parameter window on which evaluations are trusted; a superset of
    /// `[0, 1]` for analytic formulas.
    pub domain: (f64, f64),
}

impl CurveSegment {
    /// Segment backed by a formula valid on all of the real line.
    pub fn analytic<C: Curve + 'static>(curve: C, label: impl Into<String>) -> CurveSegment {
        CurveSegment {
            curve: Arc::new(curve),
            label: label.into(),
            domain: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Segment trusted only on the given window.
    pub fn with_domain<C: Curve + 'static>(
        curve: C,
        label: impl Into<String>,
        domain: (f64, f64),
    ) -> CurveSegment {
        CurveSegment { curve: Arc::new(curve), label: label.into(), domain }
    }

    pub fn eval(&self, t: f64) -> [f64; 2] {
        self.curve.eval(t)
    }
    pub fn deriv(&self, t: f64) -> [f64; 2] {
        self.curve.deriv(t)
    }
    pub fn deriv2(&self, t: f64) -> [f64; 2] {
        self.curve.deriv2(t)
    }

    /// Unit tangent.
    pub fn tangent(&self, t: f64) -> [f64; 2] {
        let d = self.deriv(t);
        let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
        [d[0] / n, d[1] / n]
    }

    /// Inward unit normal for a counterclockwise-oriented boundary
    /// (interior on the left of travel).
    pub fn normal_in(&self, t: f64) -> [f64; 2] {
        let t = self.tangent(t);
        [-t[1], t[0]]
    }

    /// Reparametrized sub-segment: `s in [0,1]` maps onto `[t0, t1]`.
    pub fn subsegment(&self, t0: f64, t1: f64, label: impl Into<String>) -> CurveSegment {
        let span = (self.domain.0 - t0) / (t1 - t0);
        let span_hi = (self.domain.1 - t0) / (t1 - t0);
        let (lo, hi) = if span <= span_hi { (span, span_hi) } else { (span_hi, span) };
        CurveSegment {
            curve: Arc::new(SubCurve { inner: self.curve.clone(), t0, t1 }),
            label: label.into(),
            domain: (lo, hi),
        }
    }

    /// Arclength of `[t0, t1]` by composite Simpson quadrature.
    pub fn arclength(&self, t0: f64, t1: f64) -> f64 {
        let n = 200;
        let h = (t1 - t0) / n as f64;
        let speed = |t: f64| {
            let d = self.deriv(t);
            (d[0] * d[0] + d[1] * d[1]).sqrt()
        };
        let mut s = speed(t0) + speed(t1);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * speed(t0 + i as f64 * h);
        }
        s * h / 3.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Smooth extension of a segment by `amount` in parameter beyond `t = 0`
/// (left) or `t = 1` (right).
///
/// Analytic segments just widen their trusted window. Other segments fall
/// back to a 1D Fourier continuation of the coordinate functions, which
/// tracks the analytic extension only over a modest fraction of the
/// blend-to-zero zone; the sample count is chosen accordingly.
pub fn extend_curve(seg: &CurveSegment, side: Side, amount: f64) -> Result<CurveSegment> {
    if amount <= 0.0 {
        return Err(FcError::InvalidParams("extend_curve: amount must be > 0".into()));
    }
    let target = match side {
        Side::Left => (-amount, seg.domain.1.min(1.0).max(1.0)),
        Side::Right => (seg.domain.0.max(0.0).min(0.0), 1.0 + amount),
    };
    if seg.domain.0 <= target.0 && seg.domain.1 >= target.1 {
        let mut out = seg.clone();
        out.domain = (target.0.min(out.domain.0), target.1.max(out.domain.1));
        return Ok(out);
    }
    // FC fallback: the continuation tracks the analytic extension only a
    // couple of mesh widths past the interval ends, so the sample count is
    // chosen to place `amount` about two mesh widths deep. Large extension
    // amounts are out of reach of this route.
    if amount > 0.05 {
        return Err(FcError::Geometry(format!(
            "extend_curve: segment '{}' has no analytic formula over the \
             required window and the FC fallback only supports small \
             extensions (requested {amount})",
            seg.label
        )));
    }
    let d = 12;
    let n = ((2.0 / amount).ceil() as usize).clamp(64, 2048);
    let fc = FcCurve::from_segment(seg, n, d)?;
    Ok(CurveSegment {
        curve: Arc::new(fc),
        label: format!("{}+fc", seg.label),
        domain: (-amount.min(2.0 * amount), 1.0 + amount),
    })
}

/// Closed boundary: a cyclic chain of segments, each parameterized over
/// `[0, 1]`, traversed counterclockwise. The global parameter `t` runs over
/// `[0, n_segments)` with segment `i` covering `[i, i+1]`.
#[derive(Clone)]
pub struct Boundary {
    pub segments: Vec<CurveSegment>,
}

impl Boundary {
    pub fn new(segments: Vec<CurveSegment>) -> Result<Boundary> {
        if segments.is_empty() {
            return Err(FcError::Geometry("boundary needs at least one segment".into()));
        }
        // Consecutive segments must join.
        let n = segments.len();
        for i in 0..n {
            let a = segments[i].eval(1.0);
            let b = segments[(i + 1) % n].eval(0.0);
            let gap = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            if gap > 1e-10 {
                return Err(FcError::Geometry(format!(
                    "segments {i} and {} do not join (gap {gap:.3e})",
                    (i + 1) % n
                )));
            }
        }
        Ok(Boundary { segments })
    }

    pub fn period(&self) -> f64 {
        self.segments.len() as f64
    }

    /// Wraps a global parameter into `[0, period)`.
    pub fn wrap(&self, t: f64) -> f64 {
        let p = self.period();
        let mut t = t % p;
        if t < 0.0 {
            t += p;
        }
        t
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let t = self.wrap(t);
        let mut i = t.floor() as usize;
        if i >= self.segments.len() {
            i = self.segments.len() - 1;
        }
        (i, t - i as f64)
    }

    pub fn eval(&self, t: f64) -> [f64; 2] {
        let (i, s) = self.locate(t);
        self.segments[i].eval(s)
    }

    pub fn deriv(&self, t: f64) -> [f64; 2] {
        let (i, s) = self.locate(t);
        self.segments[i].deriv(s)
    }

    /// Arclength between two global parameters (`t1 >= t0`, possibly
    /// wrapping).
    pub fn arclength(&self, t0: f64, t1: f64) -> f64 {
        let n = 400;
        let h = (t1 - t0) / n as f64;
        let speed = |t: f64| {
            let d = self.deriv(t);
            (d[0] * d[0] + d[1] * d[1]).sqrt()
        };
        let mut s = speed(t0) + speed(t1);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * speed(t0 + i as f64 * h);
        }
        s * h / 3.0
    }

    /// Polygonal sampling of the whole boundary with roughly `spacing`
    /// physical distance between vertices.
    pub fn polygon(&self, spacing: f64) -> Vec<[f64; 2]> {
        let total = self.arclength(0.0, self.period());
        let n = ((total / spacing).ceil() as usize).max(16);
        (0..n).map(|i| self.eval(i as f64 * self.period() / n as f64)).collect()
    }
}
