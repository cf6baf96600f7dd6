//! W-invariant polytopes in half-space form, restriction to the positive
//! chamber, and exact triangulation into rational simplices.
//!
//! Facets encode l(y) = lambda - u . y >= 0 with u a primitive integer
//! covector in the canonical covector-vector pairing (no Gram matrix).

use crate::linalg::{self, affine_dim, dot, zeros, Q, QMat, QVec};
use crate::rootdata::RootSystem;
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolytopeError {
    #[error("facet {0} has nonpositive lambda; the origin must be strictly interior")]
    OriginNotInterior(usize),
    #[error("facet covector {0} is zero")]
    ZeroCovector(usize),
    #[error("polytope is unbounded (recession direction {0:?})")]
    Unbounded(Vec<String>),
    #[error("polytope is not full-dimensional")]
    NotFullDimensional,
    #[error("polytope is not W-invariant: image of facet {facet} under Weyl element {weyl} is not a facet")]
    NotWInvariant { facet: usize, weyl: usize },
    #[error("chamber region is empty")]
    RegionEmpty,
}

/// One half-space l(y) = lambda - u . y >= 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Facet {
    pub u: QVec,
    pub lambda: Q,
}

impl Facet {
    pub fn eval(&self, y: &[Q]) -> Q {
        &self.lambda - dot(&self.u, y)
    }
}

/// A k-simplex given by k+1 rational points (in ambient r-space).
pub type Simplex = Vec<QVec>;

/// The W-invariant polytope 2P.
#[derive(Debug, Clone)]
pub struct Polytope {
    pub dim: usize,
    pub facets: Vec<Facet>,
    pub vertices: Vec<QVec>,
}

impl Polytope {
    pub fn new(dim: usize, facets: Vec<Facet>) -> Result<Self, PolytopeError> {
        for (i, f) in facets.iter().enumerate() {
            if linalg::is_zero_vec(&f.u) {
                return Err(PolytopeError::ZeroCovector(i));
            }
            if !f.lambda.is_positive() {
                return Err(PolytopeError::OriginNotInterior(i));
            }
        }
        if let Some(dir) = recession_direction(dim, &facets) {
            return Err(PolytopeError::Unbounded(
                dir.iter().map(|q| q.to_string()).collect(),
            ));
        }
        let vertices = enumerate_vertices(dim, &facets);
        if affine_dim(&vertices) != dim {
            return Err(PolytopeError::NotFullDimensional);
        }
        Ok(Polytope { dim, facets, vertices })
    }

    /// Exact W-invariance: each transformed facet must again be a facet.
    pub fn check_w_invariant(&self, rs: &RootSystem) -> Result<(), PolytopeError> {
        for (wi, w) in rs.weyl_group.iter().enumerate() {
            let winv = w.inverse().expect("Weyl elements are invertible");
            for (fi, f) in self.facets.iter().enumerate() {
                // facet covector transforms by (w^{-1})^T
                let u2 = winv.transpose().matvec(&f.u);
                let found = self
                    .facets
                    .iter()
                    .any(|g| g.u == u2 && g.lambda == f.lambda);
                if !found {
                    return Err(PolytopeError::NotWInvariant { facet: fi, weyl: wi });
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, y: &[Q]) -> bool {
        self.facets.iter().all(|f| !f.eval(y).is_negative())
    }
}

/// Outer facet F_A of the chamber polytope: the part of a facet of 2P
/// meeting the positive chamber.
#[derive(Debug, Clone)]
pub struct OuterFacet {
    /// Index into the parent polytope's facet list.
    pub parent_facet: usize,
    pub u: QVec,
    pub lambda: Q,
    pub vertices: Vec<QVec>,
    /// (r-1)-simplices triangulating F_A.
    pub triangulation: Vec<Simplex>,
}

/// 2P_+ = 2P intersected with the closed positive Weyl chamber, with the
/// cone decomposition over its outer facets.
#[derive(Debug, Clone)]
pub struct ChamberPolytope {
    pub dim: usize,
    pub parent: Polytope,
    /// Wall half-spaces <alpha_i, y> >= 0, stored as covectors G alpha_i.
    pub wall_covectors: Vec<QVec>,
    pub vertices: Vec<QVec>,
    pub outer_facets: Vec<OuterFacet>,
    /// r-simplices (cones over the facet triangulations, apex at the
    /// origin), tagged with the outer-facet index they belong to.
    pub cone_simplices: Vec<(usize, Simplex)>,
}

impl ChamberPolytope {
    /// All interior simplices (the union of the cones E_A).
    pub fn interior_simplices(&self) -> impl Iterator<Item = &Simplex> {
        self.cone_simplices.iter().map(|(_, s)| s)
    }

    pub fn contains(&self, y: &[Q]) -> bool {
        self.parent.contains(y)
            && self.wall_covectors.iter().all(|a| !dot(a, y).is_negative())
    }

    /// Full H-representation as facet-form half-spaces (outer + walls).
    pub fn halfspaces(&self) -> Vec<Facet> {
        let mut hs = self.parent.facets.clone();
        for a in &self.wall_covectors {
            hs.push(Facet { u: linalg::scale(a, &-Q::from_integer(1.into())), lambda: Q::zero() });
        }
        hs
    }
}

/// Restrict a W-invariant polytope to the positive chamber.
pub fn restrict_to_chamber(
    p: &Polytope,
    rs: &RootSystem,
) -> Result<ChamberPolytope, PolytopeError> {
    p.check_w_invariant(rs)?;
    let r = p.dim;
    let wall_covectors: Vec<QVec> = rs
        .simple_roots
        .iter()
        .map(|a| rs.gram.matvec(a))
        .collect();

    let mut halfspaces = p.facets.clone();
    for a in &wall_covectors {
        halfspaces.push(Facet {
            u: linalg::scale(a, &-Q::from_integer(1.into())),
            lambda: Q::zero(),
        });
    }
    let vertices = enumerate_vertices(r, &halfspaces);
    if vertices.is_empty() || affine_dim(&vertices) != r {
        return Err(PolytopeError::RegionEmpty);
    }

    let mut outer_facets = Vec::new();
    let mut cone_simplices = Vec::new();
    for (fi, f) in p.facets.iter().enumerate() {
        let on_facet: Vec<QVec> = vertices
            .iter()
            .filter(|v| f.eval(v).is_zero())
            .cloned()
            .collect();
        if on_facet.len() < r || affine_dim(&on_facet) != r.saturating_sub(1) {
            continue; // facet does not meet the chamber in codimension one
        }
        let tri = triangulate_face(&halfspaces, &on_facet, r - 1, &[fi]);
        let a_index = outer_facets.len();
        for s in &tri {
            let mut cone: Simplex = vec![zeros(r)];
            cone.extend(s.iter().cloned());
            cone_simplices.push((a_index, cone));
        }
        outer_facets.push(OuterFacet {
            parent_facet: fi,
            u: f.u.clone(),
            lambda: f.lambda.clone(),
            vertices: on_facet,
            triangulation: tri,
        });
    }
    if outer_facets.is_empty() {
        return Err(PolytopeError::RegionEmpty);
    }
    Ok(ChamberPolytope {
        dim: r,
        parent: p.clone(),
        wall_covectors,
        vertices,
        outer_facets,
        cone_simplices,
    })
}

/// Vertex enumeration by exhaustive r-subset intersection with
/// feasibility filtering; fine for r <= 4 and few dozen facets.
pub fn enumerate_vertices(dim: usize, halfspaces: &[Facet]) -> Vec<QVec> {
    let n = halfspaces.len();
    let mut found: BTreeSet<Vec<Q>> = BTreeSet::new();
    let mut idx: Vec<usize> = (0..dim).collect();
    if dim == 0 || n < dim {
        return vec![];
    }
    loop {
        let m = QMat::from_rows(
            &idx.iter().map(|&i| halfspaces[i].u.clone()).collect::<Vec<_>>(),
        );
        let b: QVec = idx.iter().map(|&i| halfspaces[i].lambda.clone()).collect();
        if let Some(y) = m.solve(&b) {
            if halfspaces.iter().all(|f| !f.eval(&y).is_negative()) {
                found.insert(y);
            }
        }
        // next combination
        let mut k = dim;
        loop {
            if k == 0 {
                return found.into_iter().collect();
            }
            k -= 1;
            if idx[k] + 1 <= n - (dim - k) {
                idx[k] += 1;
                for j in (k + 1)..dim {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// A nonzero recession direction of the polyhedron, if one exists.
fn recession_direction(dim: usize, halfspaces: &[Facet]) -> Option<QVec> {
    let covs: Vec<QVec> = halfspaces.iter().map(|f| f.u.clone()).collect();
    if covs.is_empty() {
        return Some({
            let mut e = zeros(dim.max(1));
            e[0] = Q::from_integer(1.into());
            e
        });
    }
    let full = QMat::from_rows(&covs);
    if full.rank() < dim {
        // recession cone contains a line
        let k = full.kernel();
        return k.into_iter().next();
    }
    // pointed case: any extreme ray is active on dim-1 independent covectors
    if dim == 1 {
        for sign in [1i64, -1] {
            let d = vec![Q::from_integer(sign.into())];
            if covs.iter().all(|u| !dot(u, &d).is_positive()) {
                return Some(d);
            }
        }
        return None;
    }
    let n = covs.len();
    let mut idx: Vec<usize> = (0..dim - 1).collect();
    loop {
        let m = QMat::from_rows(
            &idx.iter().map(|&i| covs[i].clone()).collect::<Vec<_>>(),
        );
        if m.rank() == dim - 1 {
            for d in m.kernel() {
                for cand in [d.clone(), linalg::scale(&d, &-Q::from_integer(1.into()))] {
                    if covs.iter().all(|u| !dot(u, &cand).is_positive()) {
                        return Some(cand);
                    }
                }
            }
        }
        let mut k = dim - 1;
        loop {
            if k == 0 {
                return None;
            }
            k -= 1;
            if idx[k] + 1 <= n - (dim - 1 - k) {
                idx[k] += 1;
                for j in (k + 1)..(dim - 1) {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Triangulate a k-dimensional face of an H-polytope by recursive fans
/// from the face barycenter. `tight` lists the half-space indices that are
/// tight on the whole face; `verts` are the face's vertices.
pub fn triangulate_face(
    halfspaces: &[Facet],
    verts: &[QVec],
    k: usize,
    tight: &[usize],
) -> Vec<Simplex> {
    let mut verts: Vec<QVec> = verts.to_vec();
    verts.sort();
    verts.dedup();
    if k == 0 {
        return vec![vec![verts[0].clone()]];
    }
    if verts.len() == k + 1 {
        return vec![verts];
    }
    // barycenter of the face's vertices: a rational relative-interior point
    let nq = Q::from_integer((verts.len() as i64).into());
    let mut b = zeros(verts[0].len());
    for v in &verts {
        b = linalg::add(&b, v);
    }
    b = b.iter().map(|x| x / &nq).collect();

    // sub-faces: add one more tight inequality
    let mut subfaces: BTreeMap<Vec<QVec>, usize> = BTreeMap::new();
    for (i, f) in halfspaces.iter().enumerate() {
        if tight.contains(&i) {
            continue;
        }
        let mut sub: Vec<QVec> = verts
            .iter()
            .filter(|v| f.eval(v).is_zero())
            .cloned()
            .collect();
        sub.sort();
        if sub.len() == verts.len() || sub.is_empty() {
            continue; // inequality tight on whole face, or disjoint
        }
        if affine_dim(&sub) != k - 1 {
            continue;
        }
        subfaces.entry(sub).or_insert(i);
    }
    let mut out = Vec::new();
    for (sub, i) in subfaces {
        let mut t2 = tight.to_vec();
        t2.push(i);
        for s in triangulate_face(halfspaces, &sub, k - 1, &t2) {
            let mut simplex = vec![b.clone()];
            simplex.extend(s);
            out.push(simplex);
        }
    }
    out
}

/// k!-normalized coordinate volume of a full-dimensional simplex:
/// |det(v_1-v_0, ..., v_r-v_0)| / r!.
pub fn simplex_volume(s: &Simplex) -> Q {
    let r = s.len() - 1;
    let rows: Vec<QVec> = (1..=r).map(|i| linalg::sub(&s[i], &s[0])).collect();
    let d = QMat::from_rows(&rows).det();
    let mut fact = Q::from_integer(1.into());
    for i in 2..=r {
        fact *= Q::from_integer((i as i64).into());
    }
    d.abs() / fact
}
