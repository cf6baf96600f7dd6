//! Exact integration of rational polynomials over the chamber polytope,
//! its cones E_A over outer facets, and the weighted facet integrals
//! int_{F_A} <y, nu_A> f dsigma_0.
//!
//! Surface measure convention: dsigma_0 and nu_A are the coordinate
//! Euclidean ones, so that the divergence identity
//!   int_{F_A} <y, nu_A> f dsigma_0 = (r + d) int_{E_A} f dy
//! holds exactly for f homogeneous of degree d. In these terms the
//! weighted facet integral over a facet simplex with vertices w_1..w_r is
//! |det(w_1 ... w_r)| times the parametric integral over the standard
//! simplex, which keeps everything rational.

use crate::linalg::{Q, QMat, QVec};
use crate::poly::Polynomial;
use crate::polytope::{ChamberPolytope, Simplex};
use crate::rootdata::RootSystem;
use num_bigint::BigInt;
use num_traits::{One, Zero};

/// int over the standard k-simplex {t_i >= 0, sum t_i <= 1} of a
/// polynomial in k variables, via int t^a dt = prod a_i! / (k + |a|)!.
pub fn std_simplex_integral(p: &Polynomial) -> Q {
    let k = p.nvars;
    let mut total = Q::zero();
    for (e, c) in &p.terms {
        let mut num = BigInt::one();
        let mut s: u64 = 0;
        for &a in e {
            num *= factorial(a as u64);
            s += a as u64;
        }
        let den = factorial(k as u64 + s);
        total += c * Q::new(num, den);
    }
    total
}

fn factorial(n: u64) -> BigInt {
    let mut f = BigInt::one();
    for i in 2..=n {
        f *= BigInt::from(i);
    }
    f
}

/// Lebesgue integral of f over a full-dimensional r-simplex.
pub fn integrate_simplex(f: &Polynomial, s: &Simplex) -> Q {
    let r = s[0].len();
    assert_eq!(s.len(), r + 1, "need a full-dimensional simplex");
    let cols: Vec<QVec> = (1..=r)
        .map(|i| crate::linalg::sub(&s[i], &s[0]))
        .collect();
    let m = QMat::from_rows(&cols).transpose(); // columns v_i - v_0
    let jac = m.det();
    if jac.is_zero() {
        return Q::zero();
    }
    let g = f.compose_affine(&m, &s[0]);
    std_simplex_integral(&g) * abs(jac)
}

fn abs(q: Q) -> Q {
    if q < Q::zero() {
        -q
    } else {
        q
    }
}

/// The anticanonical-type weight pi(y) = prod_{alpha in Phi+} <alpha, y>^2.
pub fn weight_pi(rs: &RootSystem) -> Polynomial {
    let r = rs.rank;
    let mut p = Polynomial::one(r);
    for alpha in &rs.positive_roots {
        let cov = rs.gram.matvec(alpha);
        let l = Polynomial::linear(&cov);
        p = p.mul(&l).mul(&l);
    }
    p
}

/// int over the whole chamber polytope 2P_+.
pub fn integrate_chamber(cp: &ChamberPolytope, f: &Polynomial) -> Q {
    cp.interior_simplices()
        .map(|s| integrate_simplex(f, s))
        .sum()
}

/// int over the cone E_A (outer facet index `a`).
pub fn integrate_cone(cp: &ChamberPolytope, a: usize, f: &Polynomial) -> Q {
    cp.cone_simplices
        .iter()
        .filter(|(i, _)| *i == a)
        .map(|(_, s)| integrate_simplex(f, s))
        .sum()
}

/// Weighted facet integral int_{F_A} <y, nu_A> f dsigma_0 (coordinate
/// Euclidean surface measure and unit normal).
pub fn integrate_facet_weighted(cp: &ChamberPolytope, a: usize, f: &Polynomial) -> Q {
    let r = cp.dim;
    let mut total = Q::zero();
    for s in &cp.outer_facets[a].triangulation {
        assert_eq!(s.len(), r);
        // matrix with the facet-simplex vertices as columns
        let w = QMat::from_rows(s).transpose();
        let det = abs(w.det());
        if det.is_zero() {
            continue;
        }
        // parametrize y = w_1 + sum_i t_i (w_{i+1} - w_1)
        let cols: Vec<QVec> = (1..r).map(|i| crate::linalg::sub(&s[i], &s[0])).collect();
        let m = if cols.is_empty() {
            QMat::zero(r, 0)
        } else {
            QMat::from_rows(&cols).transpose()
        };
        let g = f.compose_affine(&m, &s[0]);
        total += std_simplex_integral(&g) * det;
    }
    total
}

/// Barycenter of the chamber polytope with respect to f dy.
pub fn barycenter(cp: &ChamberPolytope, f: &Polynomial) -> Option<QVec> {
    let mass = integrate_chamber(cp, f);
    if mass.is_zero() {
        return None;
    }
    let r = cp.dim;
    Some(
        (0..r)
            .map(|i| {
                let yi = Polynomial::var(r, i).mul(f);
                integrate_chamber(cp, &yi) / &mass
            })
            .collect(),
    )
}

/// Residual of the divergence identity on each outer facet:
/// int_{F_A} <y,nu> pi dsigma_0 - n int_{E_A} pi dy, exactly.
pub fn divergence_residuals(cp: &ChamberPolytope, rs: &RootSystem) -> Vec<Q> {
    let pi = weight_pi(rs);
    let n = Q::from_integer((rs.complex_dim() as i64).into());
    (0..cp.outer_facets.len())
        .map(|a| {
            integrate_facet_weighted(cp, a, &pi) - &n * integrate_cone(cp, a, &pi)
        })
        .collect()
}
