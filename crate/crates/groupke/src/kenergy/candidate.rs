//! Smooth candidates u = u0 + f: the analytic Guillemin part plus a
//! polynomial perturbation with precomputed partial derivatives up to
//! fourth order, evaluated in floating point.

use num_rational::BigRational;

use crate::linalg::{to_f64, Q, QMat};
use crate::poly::Polynomial;
use crate::polytope::Polytope;
use crate::rootdata::RootSystem;

use super::guillemin::GuilleminFunction;

/// A float-coefficient view of a polynomial, for fast repeated
/// evaluation at quadrature nodes.
#[derive(Debug, Clone, Default)]
pub struct FPoly {
    pub terms: Vec<(Vec<u32>, f64)>,
}

impl FPoly {
    pub fn from_poly(p: &Polynomial) -> Self {
        FPoly {
            terms: p
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), to_f64(c)))
                .collect(),
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(y)
                    .map(|(&k, &yi)| yi.powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct SmoothCandidate {
    pub dim: usize,
    pub u0: Option<GuilleminFunction>,
    /// Polynomial part f and its partials, in float form.
    pub f: FPoly,
    f_grad: Vec<FPoly>,
    f_hess: Vec<Vec<FPoly>>,
    f_d3: Vec<Vec<Vec<FPoly>>>,
    f_d4: Vec<Vec<Vec<Vec<FPoly>>>>,
    /// Affine correction subtracted from the candidate (normalization):
    /// reported value is u0 + f - aff_lin . y - aff_const.
    pub aff_lin: Vec<f64>,
    pub aff_const: f64,
}

impl SmoothCandidate {
    pub fn from_parts(dim: usize, u0: Option<GuilleminFunction>, f: &Polynomial) -> Self {
        assert_eq!(f.nvars, dim);
        let grad_q: Vec<Polynomial> = (0..dim).map(|i| f.partial(i)).collect();
        let hess_q: Vec<Vec<Polynomial>> = grad_q
            .iter()
            .map(|g| (0..dim).map(|j| g.partial(j)).collect())
            .collect();
        let d3_q: Vec<Vec<Vec<Polynomial>>> = hess_q
            .iter()
            .map(|row| {
                row.iter()
                    .map(|h| (0..dim).map(|k| h.partial(k)).collect())
                    .collect()
            })
            .collect();
        let fp = |p: &Polynomial| FPoly::from_poly(p);
        SmoothCandidate {
            dim,
            u0,
            f: fp(f),
            f_grad: grad_q.iter().map(fp).collect(),
            f_hess: hess_q.iter().map(|r| r.iter().map(fp).collect()).collect(),
            f_d4: d3_q
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|rr| {
                            rr.iter()
                                .map(|p| {
                                    (0..dim).map(|l| fp(&p.partial(l))).collect()
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect(),
            f_d3: d3_q
                .iter()
                .map(|r| r.iter().map(|rr| rr.iter().map(fp).collect()).collect())
                .collect(),
            aff_lin: vec![0.0; dim],
            aff_const: 0.0,
        }
    }

    /// The canonical candidate u0 of the polytope (f = 0).
    pub fn guillemin(p: &Polytope) -> Self {
        Self::from_parts(p.dim, Some(GuilleminFunction::new(p)), &Polynomial::zero(p.dim))
    }

    /// Purely polynomial candidate (no Guillemin part); used by the
    /// toric cross-checks where u is itself smooth up to the boundary.
    pub fn pure_poly(f: &Polynomial) -> Self {
        Self::from_parts(f.nvars, None, f)
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let base = self.u0.as_ref().map_or(0.0, |g| g.value(y));
        base + self.f.eval(y)
            - self.aff_lin.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
            - self.aff_const
    }

    pub fn grad(&self, y: &[f64]) -> Vec<f64> {
        let mut g = self
            .u0
            .as_ref()
            .map_or_else(|| vec![0.0; self.dim], |u| u.grad(y));
        for (i, gi) in g.iter_mut().enumerate() {
            *gi += self.f_grad[i].eval(y) - self.aff_lin[i];
        }
        g
    }

    pub fn hess(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let mut h = self
            .u0
            .as_ref()
            .map_or_else(|| vec![vec![0.0; self.dim]; self.dim], |u| u.hess(y));
        for i in 0..self.dim {
            for j in 0..self.dim {
                h[i][j] += self.f_hess[i][j].eval(y);
            }
        }
        h
    }

    pub fn d3(&self, y: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let r = self.dim;
        let mut t = self
            .u0
            .as_ref()
            .map_or_else(|| vec![vec![vec![0.0; r]; r]; r], |u| u.d3(y));
        for i in 0..r {
            for j in 0..r {
                for k in 0..r {
                    t[i][j][k] += self.f_d3[i][j][k].eval(y);
                }
            }
        }
        t
    }

    pub fn d4(&self, y: &[f64]) -> Vec<Vec<Vec<Vec<f64>>>> {
        let r = self.dim;
        let mut t = self
            .u0
            .as_ref()
            .map_or_else(|| vec![vec![vec![vec![0.0; r]; r]; r]; r], |u| u.d4(y));
        for i in 0..r {
            for j in 0..r {
                for k in 0..r {
                    for l in 0..r {
                        t[i][j][k][l] += self.f_d4[i][j][k][l].eval(y);
                    }
                }
            }
        }
        t
    }

    /// Normalize per tilde u(y) = u(y) - <grad u(O), y> - u(O), so the
    /// supporting affine function at the origin is subtracted off.
    pub fn normalize_at_origin(&mut self) {
        let origin = vec![0.0; self.dim];
        let g = self.grad(&origin);
        let v = self.value(&origin);
        for (a, gi) in self.aff_lin.iter_mut().zip(&g) {
            *a += gi;
        }
        self.aff_const += v;
    }
}

/// W-symmetrization of a polynomial: (1/|W|) sum_w p(w y).
pub fn symmetrize(rs: &RootSystem, p: &Polynomial) -> Polynomial {
    let mut total = Polynomial::zero(p.nvars);
    for w in &rs.weyl_group {
        total = total.add(&p.compose_linear(w));
    }
    let inv: Q = BigRational::new(1.into(), (rs.weyl_group.len() as i64).into());
    total.scale(&inv)
}

/// Cholesky test for positive definiteness of a small symmetric matrix.
pub fn is_pd(h: &[Vec<f64>]) -> bool {
    cholesky(h).is_some()
}

/// Cholesky factor L with h = L L^T, or None if not positive definite.
pub fn cholesky(h: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = h.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = h[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// log det of a symmetric positive definite matrix via Cholesky.
pub fn log_det_pd(h: &[Vec<f64>]) -> Option<f64> {
    cholesky(h).map(|l| 2.0 * l.iter().enumerate().map(|(i, r)| r[i].ln()).sum::<f64>())
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn inverse_pd(h: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = h.len();
    let l = cholesky(h)?;
    // solve L L^T X = I column by column
    let mut inv = vec![vec![0.0; n]; n];
    for c in 0..n {
        // forward substitution L z = e_c
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[i][k] * z[k];
            }
            z[i] = s / l[i][i];
        }
        // back substitution L^T x = z
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= l[k][i] * inv[k][c];
            }
            inv[i][c] = s / l[i][i];
        }
    }
    let finite = inv.iter().all(|r| r.iter().all(|v| v.is_finite()));
    finite.then_some(inv)
}

/// Weyl-group action matrix applied to a float point (for node checks).
pub fn apply_qmat(m: &QMat, y: &[f64]) -> Vec<f64> {
    (0..y.len())
        .map(|i| {
            (0..y.len())
                .map(|j| to_f64(m.at(i, j)) * y[j])
                .sum::<f64>()
        })
        .collect()
}
