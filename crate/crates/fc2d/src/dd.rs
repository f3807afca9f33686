//! Double-double arithmetic and a one-sided Jacobi SVD least-squares solver.
//!
//! The blending-to-zero fit is rank deficient at double precision: the
//! small-singular-value components that keep the extension values tame are
//! lost to roundoff, inflating the extension matrices by orders of
//! magnitude. Carrying the solve in ~31-digit double-double arithmetic
//! recovers the true minimum-norm solution.

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn from(a: f64) -> Dd {
        Dd { hi: a, lo: 0.0 }
    }

    #[inline]
    pub fn add(self, other: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, other.hi);
        let s2 = s2 + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s1, s2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn mul(self, other: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, other.hi);
        let p2 = p2 + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul(Dd::from(q1)));
        let q2 = r.hi / other.hi;
        let r = r.sub(other.mul(Dd::from(q2)));
        let q3 = r.hi / other.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::from(q3))
    }

    #[inline]
    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::ZERO;
        }
        let x = self.hi.sqrt();
        // One Newton step in double-double.
        let x_dd = Dd::from(x);
        let r = self.div(x_dd);
        let s = x_dd.add(r);
        Dd { hi: 0.5 * s.hi, lo: 0.5 * s.lo }
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            self.neg()
        } else {
            self
        }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Minimum-norm least-squares solution of `B x = rhs` (multiple right-hand
/// sides) by one-sided Jacobi SVD in double-double arithmetic, truncating
/// singular values below `rel_cutoff * sigma_max`.
///
/// Returns `(x, kept, total)` in double precision.
pub fn svd_lstsq_dd(
    b: &[Vec<f64>],     // rows
    rhs: &[Vec<f64>],   // rows, same row count
    rel_cutoff: f64,
) -> (Vec<Vec<f64>>, usize, usize) {
    let m = b.len();
    let n = b[0].len();
    let k = rhs[0].len();
    // Column-major working copy of B (columns get orthogonalized in place)
    // and the accumulated right-rotation matrix V.
    let mut u: Vec<Vec<Dd>> = (0..n)
        .map(|j| (0..m).map(|i| Dd::from(b[i][j])).collect())
        .collect();
    let mut v: Vec<Vec<Dd>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| if i == j { Dd::from(1.0) } else { Dd::ZERO })
                .collect()
        })
        .collect();

    let dot = |a: &[Dd], c: &[Dd]| -> Dd {
        let mut s = Dd::ZERO;
        for i in 0..a.len() {
            s = s.add(a[i].mul(c[i]));
        }
        s
    };

    // One-sided Jacobi sweeps: orthogonalize all column pairs.
    let tol = Dd::from(1e-30);
    for _sweep in 0..30 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let app = dot(&u[p], &u[p]);
                let aqq = dot(&u[q], &u[q]);
                let apq = dot(&u[p], &u[q]);
                if apq.abs().to_f64() <= tol.to_f64() * (app.to_f64() * aqq.to_f64()).sqrt() {
                    continue;
                }
                off = off.max(
                    apq.abs().to_f64() / (app.to_f64() * aqq.to_f64()).sqrt().max(1e-300),
                );
                // Jacobi rotation that annihilates apq.
                let tau = aqq.sub(app).div(apq.mul(Dd::from(2.0)));
                let t = {
                    // t = sign(tau) / (|tau| + sqrt(1 + tau^2))
                    let denom = Dd::from(1.0).add(tau.mul(tau)).sqrt().add(tau.abs());
                    let t = Dd::from(1.0).div(denom);
                    if tau.hi < 0.0 {
                        t.neg()
                    } else {
                        t
                    }
                };
                let c = Dd::from(1.0).div(Dd::from(1.0).add(t.mul(t)).sqrt());
                let s = c.mul(t);
                for i in 0..m {
                    let up = u[p][i];
                    let uq = u[q][i];
                    u[p][i] = c.mul(up).sub(s.mul(uq));
                    u[q][i] = s.mul(up).add(c.mul(uq));
                }
                for i in 0..n {
                    let vp = v[p][i];
                    let vq = v[q][i];
                    v[p][i] = c.mul(vp).sub(s.mul(vq));
                    v[q][i] = s.mul(vp).add(c.mul(vq));
                }
            }
        }
        if off < 1e-28 {
            break;
        }
    }

    // Singular values and normalized left vectors.
    let mut sigma: Vec<Dd> = Vec::with_capacity(n);
    for uj in u.iter() {
        sigma.push(dot(uj, uj).sqrt());
    }
    let smax = sigma.iter().map(|s| s.to_f64()).fold(0.0f64, f64::max);
    let cutoff = rel_cutoff * smax;

    // x = V diag(1/sigma) U^T rhs, truncated.
    let mut kept = 0usize;
    let mut x = vec![vec![Dd::ZERO; k]; n];
    for j in 0..n {
        let s = sigma[j];
        if s.to_f64() <= cutoff {
            continue;
        }
        kept += 1;
        // coeff_r = (u_j / sigma_j^2) . rhs_col_r  (u_j unnormalized)
        let inv_s2 = Dd::from(1.0).div(s.mul(s));
        for r in 0..k {
            let mut acc = Dd::ZERO;
            for i in 0..m {
                acc = acc.add(u[j][i].mul(Dd::from(rhs[i][r])));
            }
            let coeff = acc.mul(inv_s2);
            for i in 0..n {
                x[i][r] = x[i][r].add(v[j][i].mul(coeff));
            }
        }
    }
    let x = x
        .into_iter()
        .map(|row| row.into_iter().map(|d| d.to_f64()).collect())
        .collect();
    (x, kept, n)
}
