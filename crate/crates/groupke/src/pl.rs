//! Convex piecewise-linear functions u(y) = max_k (w_k . y + b_k) and
//! exact integration of PL integrands by max-region decomposition.

use crate::linalg::{self, dot, Q, QMat, QVec};
use crate::poly::Polynomial;
use crate::polytope::{triangulate_face, ChamberPolytope, Facet, Simplex};
use crate::rootdata::RootSystem;
use num_traits::{Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PLError {
    #[error("a PL function needs at least one affine piece")]
    NoPieces,
}

/// u(y) = max over pieces of (w . y + b). Pieces use coordinate covectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PLConvexFunction {
    pub nvars: usize,
    pub pieces: Vec<(QVec, Q)>,
    pub w_invariant: bool,
}

impl PLConvexFunction {
    pub fn new(nvars: usize, mut pieces: Vec<(QVec, Q)>) -> Result<Self, PLError> {
        pieces.sort();
        pieces.dedup();
        if pieces.is_empty() {
            return Err(PLError::NoPieces);
        }
        Ok(PLConvexFunction { nvars, pieces, w_invariant: false })
    }

    /// Single affine piece w . y + b.
    pub fn affine(w: QVec, b: Q) -> Self {
        PLConvexFunction { nvars: w.len(), pieces: vec![(w, b)], w_invariant: false }
    }

    /// l_v(y) = <v, y> for a weight vector v: the coordinate covector is Gv.
    pub fn from_weight(rs: &RootSystem, v: &[Q]) -> Self {
        Self::affine(rs.gram.matvec(v), Q::zero())
    }

    /// max_w <w . v, y> over the Weyl orbit of the weight vector v;
    /// W-invariant by construction.
    pub fn weyl_orbit_max(rs: &RootSystem, v: &[Q]) -> Self {
        let mut pieces = Vec::new();
        for w in &rs.weyl_group {
            let wv = w.matvec(v);
            pieces.push((rs.gram.matvec(&wv), Q::zero()));
        }
        let mut u = Self::new(rs.rank, pieces).expect("orbit is nonempty");
        u.w_invariant = true;
        u
    }

    pub fn add_constant(&self, c: &Q) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|(w, b)| (w.clone(), b + c))
            .collect();
        PLConvexFunction { nvars: self.nvars, pieces, w_invariant: self.w_invariant }
    }

    pub fn eval(&self, y: &[Q]) -> Q {
        self.pieces
            .iter()
            .map(|(w, b)| dot(w, y) + b)
            .max()
            .expect("nonempty pieces")
    }

    pub fn eval_f64(&self, y: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|(w, b)| {
                w.iter()
                    .zip(y)
                    .map(|(wi, yi)| linalg::to_f64(wi) * yi)
                    .sum::<f64>()
                    + linalg::to_f64(b)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Exact check of u(w y) = u(y) on a sample set.
    pub fn check_w_invariance(&self, rs: &RootSystem, samples: &[QVec]) -> bool {
        rs.weyl_group.iter().all(|w| {
            samples
                .iter()
                .all(|y| self.eval(&w.matvec(y)) == self.eval(y))
        })
    }

    /// Decompose an H-polytope (given by `hs` with vertex set `verts`) into
    /// full-dimensional simplices on which one piece attains the max.
    /// Returns (piece index, simplices); ties are measure zero and ignored.
    pub fn max_region_decomposition(
        &self,
        hs: &[Facet],
        dim: usize,
    ) -> Vec<(usize, Vec<Simplex>)> {
        let mut out = Vec::new();
        for (i, (wi, bi)) in self.pieces.iter().enumerate() {
            let mut hs2 = hs.to_vec();
            for (j, (wj, bj)) in self.pieces.iter().enumerate() {
                if j == i {
                    continue;
                }
                // region where piece i dominates: (wj - wi) . y <= bi - bj
                hs2.push(Facet { u: linalg::sub(wj, wi), lambda: bi - bj });
            }
            let verts = crate::polytope::enumerate_vertices(dim, &hs2);
            if crate::linalg::affine_dim(&verts) != dim {
                continue;
            }
            let tri = triangulate_face(&hs2, &verts, dim, &[]);
            out.push((i, tri));
        }
        out
    }
}

/// H-representation of a full-dimensional simplex.
pub fn simplex_halfspaces(s: &Simplex) -> Vec<Facet> {
    let r = s[0].len();
    assert_eq!(s.len(), r + 1);
    let mut hs = Vec::with_capacity(r + 1);
    for drop in 0..=r {
        let kept: Vec<&QVec> = s
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != drop)
            .map(|(_, v)| v)
            .collect();
        let rows: Vec<QVec> = (1..r)
            .map(|i| linalg::sub(kept[i], kept[0]))
            .collect();
        let m = if rows.is_empty() {
            QMat::zero(0, r)
        } else {
            QMat::from_rows(&rows)
        };
        let n = m
            .kernel()
            .into_iter()
            .next()
            .expect("simplex facet hyperplane has a normal");
        let lam = dot(&n, kept[0]);
        // orient so the dropped vertex satisfies n . y <= lam
        if dot(&n, &s[drop]) > lam {
            hs.push(Facet { u: linalg::scale(&n, &-Q::from_integer(1.into())), lambda: -lam });
        } else {
            hs.push(Facet { u: n, lambda: lam });
        }
    }
    hs
}

/// Sum over cone simplices of the chamber polytope of the integral of
/// `integrand(facet index, piece gradient, piece offset)` over the subset
/// where that piece attains the max of u.
pub fn integrate_cones_piecewise<F>(cp: &ChamberPolytope, u: &PLConvexFunction, mut integrand: F) -> Q
where
    F: FnMut(usize, &QVec, &Q) -> Polynomial,
{
    let r = cp.dim;
    let mut total = Q::zero();
    for (a, s) in &cp.cone_simplices {
        let hs = simplex_halfspaces(s);
        for (i, simplices) in u.max_region_decomposition(&hs, r) {
            let (w, b) = &u.pieces[i];
            let g = integrand(*a, w, b);
            for t in &simplices {
                total += crate::integrate::integrate_simplex(&g, t);
            }
        }
    }
    total
}

/// int over 2P_+ of u . g dy, exactly.
pub fn integrate_pl_times_poly(cp: &ChamberPolytope, u: &PLConvexFunction, g: &Polynomial) -> Q {
    integrate_cones_piecewise(cp, u, |_, w, b| Polynomial::affine(w, b).mul(g))
}

/// Weighted facet integral int_{F_A} <y,nu_A> u g dsigma_0 for outer facet
/// `a`, exactly, by pulling u and g back to the facet parameter domain.
pub fn integrate_facet_weighted_pl(
    cp: &ChamberPolytope,
    a: usize,
    u: &PLConvexFunction,
    g: &Polynomial,
) -> Q {
    let r = cp.dim;
    let mut total = Q::zero();
    for s in &cp.outer_facets[a].triangulation {
        let w = QMat::from_rows(s).transpose();
        let det = w.det();
        let det = if det.is_negative() { -det } else { det };
        if det.is_zero() {
            continue;
        }
        // parameter domain: standard (r-1)-simplex
        let k = r - 1;
        let cols: Vec<QVec> = (1..r).map(|i| linalg::sub(&s[i], &s[0])).collect();
        let m = if cols.is_empty() {
            QMat::zero(r, 0)
        } else {
            QMat::from_rows(&cols).transpose()
        };
        // pull back u: piece value (w.y + b) with y = s0 + M t
        let pulled: Vec<(QVec, Q)> = u
            .pieces
            .iter()
            .map(|(wv, b)| {
                let wt: QVec = (0..k).map(|j| dot(wv, &m.col(j))).collect();
                (wt, dot(wv, &s[0]) + b)
            })
            .collect();
        let up = PLConvexFunction { nvars: k, pieces: pulled, w_invariant: false };
        let gp = g.compose_affine(&m, &s[0]);
        // standard simplex H-rep in k variables
        let mut hs = Vec::new();
        for i in 0..k {
            let mut e = linalg::zeros(k);
            e[i] = -Q::from_integer(1.into());
            hs.push(Facet { u: e, lambda: Q::zero() });
        }
        hs.push(Facet { u: vec![Q::from_integer(1.into()); k], lambda: Q::from_integer(1.into()) });
        if k == 0 {
            // point facet: value is u(s0) g(s0) det
            total += up.eval(&[]) * gp.eval(&[]) * &det;
            continue;
        }
        for (i, simplices) in up.max_region_decomposition(&hs, k) {
            let (wt, bt) = &up.pieces[i];
            let integrand = Polynomial::affine(wt, bt).mul(&gp);
            for t in &simplices {
                total += crate::integrate::integrate_simplex(&integrand, t) * &det;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{qi, qr, qvec};
    use crate::polytope::{restrict_to_chamber, Polytope};
    use crate::rootdata::{RootSystem, DEFAULT_WEYL_CAP};

    fn torus_square() -> (RootSystem, ChamberPolytope) {
        let rs = RootSystem::build(2, QMat::identity(2), vec![], DEFAULT_WEYL_CAP).unwrap();
        let facets = [[1i64, 0], [-1, 0], [0, 1], [0, -1]]
            .iter()
            .map(|u| Facet { u: qvec(u), lambda: qi(1) })
            .collect();
        let p = Polytope::new(2, facets).unwrap();
        let cp = restrict_to_chamber(&p, &rs).unwrap();
        (rs, cp)
    }

    #[test]
    fn abs_value_integral_on_square() {
        // int over [-1,1]^2 of |y1| dy = 2
        let (_, cp) = torus_square();
        let u = PLConvexFunction::new(
            2,
            vec![(qvec(&[1, 0]), qi(0)), (qvec(&[-1, 0]), qi(0))],
        )
        .unwrap();
        let v = integrate_pl_times_poly(&cp, &u, &Polynomial::one(2));
        assert_eq!(v, qi(2));
    }

    #[test]
    fn single_piece_matches_polynomial_integral() {
        let (_, cp) = torus_square();
        let u = PLConvexFunction::affine(qvec(&[2, 3]), qr(1, 2));
        let g = Polynomial::var(2, 0).mul(&Polynomial::var(2, 0)); // y1^2
        let direct = crate::integrate::integrate_chamber(
            &cp,
            &Polynomial::affine(&qvec(&[2, 3]), &qr(1, 2)).mul(&g),
        );
        assert_eq!(integrate_pl_times_poly(&cp, &u, &g), direct);
    }

    #[test]
    fn facet_weighted_pl_consistent_with_divergence() {
        // for u = constant 1, R_A(1 * pi) must equal n int_{E_A} pi
        let rs = RootSystem::from_cartan_type("A2").unwrap();
        let mut facets = Vec::new();
        for u in [[1i64, 0], [-1, 0], [0, 1], [0, -1], [1, -1], [-1, 1]] {
            facets.push(Facet { u: qvec(&u), lambda: qi(6) });
        }
        let p = Polytope::new(2, facets).unwrap();
        let cp = restrict_to_chamber(&p, &rs).unwrap();
        let pi = crate::integrate::weight_pi(&rs);
        let one = PLConvexFunction::affine(qvec(&[0, 0]), qi(1));
        let n = qi(rs.complex_dim() as i64);
        for a in 0..cp.outer_facets.len() {
            let lhs = integrate_facet_weighted_pl(&cp, a, &one, &pi);
            let rhs = &n * crate::integrate::integrate_cone(&cp, a, &pi);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn weyl_orbit_max_is_invariant() {
        let rs = RootSystem::from_cartan_type("A2").unwrap();
        let v = rs.fundamental_weight(0);
        let u = PLConvexFunction::weyl_orbit_max(&rs, &v);
        let samples = vec![qvec(&[1, 2]), qvec(&[-3, 5]), qvec(&[2, -7])];
        assert!(u.check_w_invariance(&rs, &samples));
    }

    #[test]
    fn point_facet_case() {
        // A1 quadric: F = {6}, R(u pi) = u(6) * 6^2 * 6
        let gram = QMat::from_rows(&[vec![qr(1, 2)]]);
        let rs = RootSystem::build(1, gram, vec![qvec(&[2])], DEFAULT_WEYL_CAP).unwrap();
        let p = Polytope::new(
            1,
            vec![
                Facet { u: qvec(&[1]), lambda: qi(6) },
                Facet { u: qvec(&[-1]), lambda: qi(6) },
            ],
        )
        .unwrap();
        let cp = restrict_to_chamber(&p, &rs).unwrap();
        let pi = crate::integrate::weight_pi(&rs);
        let u = PLConvexFunction::affine(qvec(&[1]), qi(2)); // u(6) = 8
        let v = integrate_facet_weighted_pl(&cp, 0, &u, &pi);
        assert_eq!(v, qi(8 * 36 * 6));
    }
}
