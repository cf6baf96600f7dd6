//! Desk-scale minimization of the reduced K-energy over candidates
//! u = u0 + f, with f ranging over a finite-dimensional W-invariant
//! polynomial family. This is a heuristic surrogate: it finds a local
//! minimizer of the discretized functional in that family and makes no
//! claim about the true infinite-dimensional minimizer.

use num_rational::BigRational;

use crate::poly::Polynomial;
use crate::polytope::ChamberPolytope;
use crate::rootdata::RootSystem;

use super::candidate::{symmetrize, SmoothCandidate};
use super::functional::kenergy_value;
use super::guillemin::GuilleminFunction;
use super::{KEnergyError, QuadConfig};

pub const MINIMIZE_LABEL: &str =
    "desk-scale heuristic: local minimizer of the discretized K-energy in a \
     finite-dimensional candidate family";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimizeStatus {
    /// Coefficient-gradient norm fell below the tolerance.
    Converged,
    /// Iteration cap reached with descent still in progress.
    IterationCap,
    /// No decreasing step could be found.
    NoDescent,
}

#[derive(Debug, Clone)]
pub struct TraceStep {
    pub iter: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug)]
pub struct MinimizeResult {
    pub candidate: SmoothCandidate,
    pub coefficients: Vec<f64>,
    pub value: f64,
    pub trace: Vec<TraceStep>,
    pub status: MinimizeStatus,
    /// Honest labeling of what the result is.
    pub label: &'static str,
}

/// W-invariant polynomial basis: symmetrized monomials of total degree
/// 2..=degree, deduplicated.
pub fn invariant_basis(rs: &RootSystem, dim: usize, degree: u32) -> Vec<Polynomial> {
    let mut basis: Vec<Polynomial> = Vec::new();
    let mut exps: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::new();
        for e in &exps {
            let used: u32 = e.iter().sum();
            for k in 0..=(degree - used) {
                let mut f = e.clone();
                f.push(k);
                next.push(f);
            }
        }
        exps = next;
    }
    for e in exps {
        let total: u32 = e.iter().sum();
        if total < 2 {
            continue;
        }
        let mut m = Polynomial::one(dim);
        for (i, &k) in e.iter().enumerate() {
            for _ in 0..k {
                m = m.mul(&Polynomial::var(dim, i));
            }
        }
        let s = symmetrize(rs, &m);
        if s.is_zero() {
            continue;
        }
        // normalize so the lexicographically first term has coefficient 1
        let lead = s.terms.values().next().unwrap().clone();
        let s = s.scale(&lead.recip());
        if !basis.contains(&s) {
            basis.push(s);
        }
    }
    basis
}

fn assemble(
    dim: usize,
    u0: &GuilleminFunction,
    basis: &[Polynomial],
    coeffs: &[f64],
) -> SmoothCandidate {
    let mut f = Polynomial::zero(dim);
    for (b, &c) in basis.iter().zip(coeffs) {
        let q: BigRational =
            BigRational::from_float(c).unwrap_or_else(|| BigRational::from_integer(0.into()));
        f = f.add(&b.scale(&q));
    }
    SmoothCandidate::from_parts(dim, Some(u0.clone()), &f)
}

/// Quasi-Newton (finite-difference gradient, backtracking line search)
/// descent of K over the coefficients of f. The trace is non-increasing
/// by construction of the acceptance rule.
pub fn minimize_kenergy(
    cp: &ChamberPolytope,
    rs: &RootSystem,
    degree: u32,
    tol: f64,
    max_iters: usize,
    cfg: &QuadConfig,
) -> Result<MinimizeResult, KEnergyError> {
    let dim = cp.dim;
    let u0 = GuilleminFunction::new(&cp.parent);
    let basis = invariant_basis(rs, dim, degree);
    let nb = basis.len();

    let eval = |coeffs: &[f64]| -> Option<f64> {
        let cand = assemble(dim, &u0, &basis, coeffs);
        kenergy_value(cp, rs, &cand, cfg).ok().map(|k| k.total)
    };

    let mut coeffs = vec![0.0; nb];
    let Some(mut value) = eval(&coeffs) else {
        return Err(KEnergyError::NotConvexAtNodes);
    };
    let mut trace = vec![TraceStep { iter: 0, value, grad_norm: f64::NAN, step: 0.0 }];
    let mut step = 0.05;
    let fd = 1e-4;
    let mut status = MinimizeStatus::IterationCap;
    for iter in 1..=max_iters {
        // finite-difference coefficient gradient; candidates that leave
        // the admissible (node-convex, in-chamber) set act as a barrier
        let mut grad = vec![0.0; nb];
        for k in 0..nb {
            let mut cp_ = coeffs.clone();
            let mut cm = coeffs.clone();
            cp_[k] += fd;
            cm[k] -= fd;
            let vp = eval(&cp_).unwrap_or(f64::INFINITY);
            let vm = eval(&cm).unwrap_or(f64::INFINITY);
            grad[k] = if vp.is_finite() && vm.is_finite() {
                (vp - vm) / (2.0 * fd)
            } else if vp.is_finite() {
                (vp - value) / fd
            } else if vm.is_finite() {
                (value - vm) / fd
            } else {
                0.0
            };
        }
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm < tol {
            status = MinimizeStatus::Converged;
            break;
        }
        // backtracking line search along -grad
        let mut accepted = false;
        let mut s = step;
        for _ in 0..40 {
            let trial: Vec<f64> = coeffs
                .iter()
                .zip(&grad)
                .map(|(c, g)| c - s * g / grad_norm.max(1e-300))
                .collect();
            if let Some(v) = eval(&trial) {
                if v < value - 1e-14 * value.abs().max(1.0) {
                    coeffs = trial;
                    value = v;
                    accepted = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if !accepted {
            status = if iter == 1 {
                MinimizeStatus::NoDescent
            } else {
                MinimizeStatus::Converged
            };
            break;
        }
        step = (s * 1.5).min(1.0);
        trace.push(TraceStep { iter, value, grad_norm, step: s });
    }

    let mut candidate = assemble(dim, &u0, &basis, &coeffs);
    candidate.normalize_at_origin();
    Ok(MinimizeResult {
        candidate,
        coefficients: coeffs,
        value,
        trace,
        status,
        label: MINIMIZE_LABEL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{qi, qvec, QMat};
    use crate::polytope::{restrict_to_chamber, Facet, Polytope};
    use crate::rootdata::DEFAULT_WEYL_CAP;

    fn torus_square() -> (RootSystem, ChamberPolytope) {
        let rs = RootSystem::build(2, QMat::identity(2), vec![], DEFAULT_WEYL_CAP).unwrap();
        let mut facets = Vec::new();
        for u in [[1i64, 0], [-1, 0], [0, 1], [0, -1]] {
            facets.push(Facet { u: qvec(&u), lambda: qi(2) });
        }
        let p = Polytope::new(2, facets).unwrap();
        let cp = restrict_to_chamber(&p, &rs).unwrap();
        (rs, cp)
    }

    fn coarse() -> QuadConfig {
        QuadConfig {
            quad_s: 3,
            refine_rel: 1e-5,
            max_refine_splits: 200,
            ..Default::default()
        }
    }

    #[test]
    fn invariant_basis_is_symmetric_and_nonempty() {
        let (rs, _) = torus_square();
        let basis = invariant_basis(&rs, 2, 3);
        assert!(!basis.is_empty());
        // torus Weyl group is trivial, so all monomials of degree 2..3 appear
        assert_eq!(basis.len(), 3 + 4);
    }

    #[test]
    fn descent_trace_is_non_increasing_and_improves_on_u0() {
        let (rs, cp) = torus_square();
        let cfg = coarse();
        let res = minimize_kenergy(&cp, &rs, 2, 1e-3, 12, &cfg).unwrap();
        for w in res.trace.windows(2) {
            assert!(w[1].value <= w[0].value + 1e-12, "{:?}", res.trace);
        }
        let initial = res.trace[0].value;
        assert!(res.value <= initial + 1e-12);
        assert_eq!(res.label, MINIMIZE_LABEL);
        // normalization: value and gradient vanish at the origin
        let o = [0.0, 0.0];
        assert!(res.candidate.value(&o).abs() < 1e-12);
        assert!(res.candidate.grad(&o).iter().all(|g| g.abs() < 1e-12));
    }
}
