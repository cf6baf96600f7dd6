//! Stability invariants of the polarized compactification: facet
//! constants, average scalar curvature, barycenters, the linear part of
//! the K-energy on PL functions, Futaki invariant, and the existence /
//! properness verdicts.

use crate::integrate::{integrate_chamber, integrate_cone, weight_pi};
use crate::linalg::{self, dot, is_zero_vec, Q, QVec};
use crate::pl::{
    integrate_cones_piecewise, integrate_facet_weighted_pl, integrate_pl_times_poly,
    PLConvexFunction,
};
use crate::poly::Polynomial;
use crate::polytope::ChamberPolytope;
use crate::rootdata::{Certificate, MembershipMode, RootSystem};
use num_traits::{Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CriteriaError {
    #[error("direction has a nonzero semisimple component; only toric directions carry a Futaki invariant")]
    NotToricDirection,
    #[error("weight polynomial has zero mass on the chamber")]
    ZeroVolume,
}

/// Evaluation route for the linear functional L(u).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Interior form: sum_A int_{E_A} [<Lambda_A y - 4 rho, grad u> +
    /// (Lambda_A n - Sbar) u] pi dy.
    Condensed,
    /// Boundary form: sum_A (2/lambda_A) int_{F_A} <y,nu> u pi dsigma_0
    /// - Sbar int u pi + 4 int <rho, grad pi> u.
    FacetForm,
}

/// Lambda_A = (2/lambda_A)(1 + <2 rho, u_A>), coordinate pairing.
pub fn lambdas(cp: &ChamberPolytope, rs: &RootSystem) -> Vec<Q> {
    cp.outer_facets
        .iter()
        .map(|f| {
            let two_rho_u = Q::from_integer(2.into()) * dot(&f.u, &rs.rho);
            Q::from_integer(2.into()) / &f.lambda * (Q::from_integer(1.into()) + two_rho_u)
        })
        .collect()
}

pub fn volume(cp: &ChamberPolytope, rs: &RootSystem) -> Q {
    integrate_chamber(cp, &weight_pi(rs))
}

fn weighted_cone_mass(cp: &ChamberPolytope, rs: &RootSystem, lam: &[Q]) -> Q {
    let pi = weight_pi(rs);
    (0..cp.outer_facets.len())
        .map(|a| &lam[a] * integrate_cone(cp, a, &pi))
        .sum()
}

/// Sbar = n sum_A Lambda_A int_{E_A} pi / int_{2P_+} pi.
pub fn sbar(cp: &ChamberPolytope, rs: &RootSystem) -> Q {
    let lam = lambdas(cp, rs);
    let n = Q::from_integer((rs.complex_dim() as i64).into());
    n * weighted_cone_mass(cp, rs, &lam) / volume(cp, rs)
}

/// (bar, bar_tilde): the pi-weighted barycenter of 2P_+ and the
/// Lambda-weighted cone barycenter.
pub fn barycenters(cp: &ChamberPolytope, rs: &RootSystem) -> Result<(QVec, QVec), CriteriaError> {
    let pi = weight_pi(rs);
    let mass = integrate_chamber(cp, &pi);
    if mass.is_zero() {
        return Err(CriteriaError::ZeroVolume);
    }
    let r = cp.dim;
    let bar: QVec = (0..r)
        .map(|i| integrate_chamber(cp, &Polynomial::var(r, i).mul(&pi)) / &mass)
        .collect();
    let lam = lambdas(cp, rs);
    let wmass = weighted_cone_mass(cp, rs, &lam);
    if wmass.is_zero() {
        return Err(CriteriaError::ZeroVolume);
    }
    let bar_tilde: QVec = (0..r)
        .map(|i| {
            let yi_pi = Polynomial::var(r, i).mul(&pi);
            let num: Q = (0..cp.outer_facets.len())
                .map(|a| &lam[a] * integrate_cone(cp, a, &yi_pi))
                .sum();
            num / &wmass
        })
        .collect();
    Ok((bar, bar_tilde))
}

/// L(u), exactly, by either route; the two must agree.
pub fn linear_functional(
    cp: &ChamberPolytope,
    rs: &RootSystem,
    u: &PLConvexFunction,
    route: Route,
) -> Q {
    let pi = weight_pi(rs);
    let lam = lambdas(cp, rs);
    let s_bar = sbar(cp, rs);
    let n = Q::from_integer((rs.complex_dim() as i64).into());
    let four_rho = linalg::scale(&rs.rho, &Q::from_integer(4.into()));
    match route {
        Route::Condensed => integrate_cones_piecewise(cp, u, |a, w, b| {
            // <Lambda_A y - 4 rho, grad u> = Lambda_A (w . y) - 4 rho . w
            let lin = Polynomial::affine(&linalg::scale(w, &lam[a]), &-dot(&four_rho, w));
            let coef = &lam[a] * &n - &s_bar;
            let upoly = Polynomial::affine(w, b).scale(&coef);
            lin.add(&upoly).mul(&pi)
        }),
        Route::FacetForm => {
            let mut total = Q::zero();
            for (a, f) in cp.outer_facets.iter().enumerate() {
                let c = Q::from_integer(2.into()) / &f.lambda;
                total += c * integrate_facet_weighted_pl(cp, a, u, &pi);
            }
            total -= &s_bar * integrate_pl_times_poly(cp, u, &pi);
            let mut rho_dpi = Polynomial::zero(cp.dim);
            for i in 0..cp.dim {
                rho_dpi = rho_dpi.add(&pi.partial(i).scale(&(&four_rho[i]).clone()));
            }
            total += integrate_pl_times_poly(cp, u, &rho_dpi);
            total
        }
    }
}

/// The toric component of bar_tilde - (n/(n+1)) bar; the Futaki invariant
/// vanishes for all toric directions iff this is zero.
pub fn futaki_toric_vector(cp: &ChamberPolytope, rs: &RootSystem) -> Result<QVec, CriteriaError> {
    let (bar, bar_tilde) = barycenters(cp, rs)?;
    let n = Q::from_integer((rs.complex_dim() as i64).into());
    let frac = &n / (&n + Q::from_integer(1.into()));
    let d = linalg::sub(&bar_tilde, &linalg::scale(&bar, &frac));
    Ok(rs.split(&d).0)
}

/// F(v) = L(l_v)/V for a toric direction v (a weight vector in a*_t).
pub fn futaki(cp: &ChamberPolytope, rs: &RootSystem, v: &[Q]) -> Result<Q, CriteriaError> {
    let (_, v_ss) = rs.split(v);
    if !is_zero_vec(&v_ss) {
        return Err(CriteriaError::NotToricDirection);
    }
    let (bar, bar_tilde) = barycenters(cp, rs)?;
    let n = Q::from_integer((rs.complex_dim() as i64).into());
    let np1 = &n + Q::from_integer(1.into());
    let lam = lambdas(cp, rs);
    let wmass = weighted_cone_mass(cp, rs, &lam);
    let shift = linalg::sub(&bar_tilde, &linalg::scale(&bar, &(&n / &np1)));
    Ok(np1 * wmass * rs.pairing(&shift, v) / volume(cp, rs))
}

/// Exact Fano normalization check lambda_A = 2(1 + <2 rho, u_A>) on the
/// outer facets.
pub fn is_fano_normalized(cp: &ChamberPolytope, rs: &RootSystem) -> bool {
    cp.outer_facets.iter().all(|f| {
        let two_rho_u = Q::from_integer(2.into()) * dot(&f.u, &rs.rho);
        f.lambda == Q::from_integer(2.into()) * (Q::from_integer(1.into()) + two_rho_u)
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KEVerdict {
    Yes,
    No,
    NotApplicable,
}

#[derive(Debug, Clone)]
pub struct KEReport {
    pub verdict: KEVerdict,
    /// Membership certificate for bar - 4 rho against the interior of Xi.
    pub certificate: Option<Certificate>,
    pub destabilizer: Option<(PLConvexFunction, Q)>,
}

/// Theorem-1.1-style test: Fano-normalized polytope admits KE iff
/// bar - 4 rho lies in the relative interior of the positive-root cone
/// (with zero toric component; for a torus this degenerates to bar = 0).
pub fn verdict_ke_fano(cp: &ChamberPolytope, rs: &RootSystem) -> Result<KEReport, CriteriaError> {
    if !is_fano_normalized(cp, rs) {
        return Ok(KEReport { verdict: KEVerdict::NotApplicable, certificate: None, destabilizer: None });
    }
    let (bar, _) = barycenters(cp, rs)?;
    let shifted = linalg::sub(&bar, &linalg::scale(&rs.rho, &Q::from_integer(4.into())));
    let cert = rs.chamber_membership(&shifted, MembershipMode::InteriorXi);
    if cert.holds() {
        Ok(KEReport { verdict: KEVerdict::Yes, certificate: Some(cert), destabilizer: None })
    } else {
        let d = destabilizer(cp, rs)?;
        Ok(KEReport { verdict: KEVerdict::No, certificate: Some(cert), destabilizer: d })
    }
}

/// Witness of instability when bar - 4 rho is outside Xi: the first
/// fundamental weight (in simple-root order) whose coefficient fails, as
/// a W-orbit max, or +-l_v for a nonzero toric component.
pub fn destabilizer(
    cp: &ChamberPolytope,
    rs: &RootSystem,
) -> Result<Option<(PLConvexFunction, Q)>, CriteriaError> {
    let (bar, _) = barycenters(cp, rs)?;
    let shifted = linalg::sub(&bar, &linalg::scale(&rs.rho, &Q::from_integer(4.into())));
    match rs.chamber_membership(&shifted, MembershipMode::InteriorXi) {
        Certificate::InXi { .. } | Certificate::Dominant => Ok(None),
        Certificate::NegativeCoefficient { .. } | Certificate::NegativePairing { .. } => {
            // find first failing simple-root coefficient deterministically
            let (_, v_ss) = rs.split(&shifted);
            let solver_coeffs = simple_coeffs(rs, &v_ss);
            let i = solver_coeffs
                .iter()
                .position(|c| !c.is_positive())
                .expect("a nonpositive coefficient triggered this branch");
            let u = PLConvexFunction::weyl_orbit_max(rs, &rs.fundamental_weight(i));
            let l = linear_functional(cp, rs, &u, Route::Condensed);
            Ok(Some((u, l)))
        }
        Certificate::NonzeroToricComponent { component } => {
            let up = PLConvexFunction::from_weight(rs, &component);
            let un = PLConvexFunction::from_weight(rs, &linalg::scale(&component, &-Q::from_integer(1.into())));
            let lp = linear_functional(cp, rs, &up, Route::Condensed);
            if !lp.is_positive() {
                Ok(Some((up, lp)))
            } else {
                let ln = linear_functional(cp, rs, &un, Route::Condensed);
                Ok(Some((un, ln)))
            }
        }
    }
}

fn simple_coeffs(rs: &RootSystem, v_ss: &[Q]) -> Vec<Q> {
    if rs.simple_roots.is_empty() {
        return vec![];
    }
    // v_ss = sum c_i alpha_i; solve the gram normal equations
    let k = rs.simple_roots.len();
    let mut m = crate::linalg::QMat::zero(k, k);
    let mut rhs = linalg::zeros(k);
    for i in 0..k {
        for j in 0..k {
            *m.at_mut(i, j) = rs.pairing(&rs.simple_roots[i], &rs.simple_roots[j]);
        }
        rhs[i] = rs.pairing(&rs.simple_roots[i], v_ss);
    }
    m.solve(&rhs).expect("simple roots are independent")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropernessFlags {
    /// (min_A Lambda_A . bar_tilde_ss - 4 rho) in Xi.
    pub tildebar1: bool,
    /// (bar_tilde_ss - bar_ss) in the closure of Xi.
    pub tildebar2: bool,
    /// (n+1) min_A Lambda_A - Sbar > 0.
    pub bar_s: bool,
    pub futaki_vanishes: bool,
    /// Phi_+ empty: Xi = {0} and the first condition degenerates to
    /// bar_tilde_ss = 0.
    pub torus_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropernessVerdict {
    Proper,
    /// The criterion is sufficient only; failure of a flag proves nothing.
    Inconclusive,
}

pub fn verdict_properness(
    cp: &ChamberPolytope,
    rs: &RootSystem,
) -> Result<(PropernessFlags, PropernessVerdict), CriteriaError> {
    let (bar, bar_tilde) = barycenters(cp, rs)?;
    let lam = lambdas(cp, rs);
    let min_lam = lam.iter().min().expect("at least one outer facet").clone();
    let (_, bt_ss) = rs.split(&bar_tilde);
    let (_, b_ss) = rs.split(&bar);

    let v1 = linalg::sub(
        &linalg::scale(&bt_ss, &min_lam),
        &linalg::scale(&rs.rho, &Q::from_integer(4.into())),
    );
    let tildebar1 = rs.chamber_membership(&v1, MembershipMode::InteriorXi).holds();
    let v2 = linalg::sub(&bt_ss, &b_ss);
    let tildebar2 = rs.chamber_membership(&v2, MembershipMode::ClosureXi).holds();
    let n = Q::from_integer((rs.complex_dim() as i64).into());
    let bar_s = ((&n + Q::from_integer(1.into())) * &min_lam - sbar(cp, rs)).is_positive();
    let futaki_vanishes = is_zero_vec(&futaki_toric_vector(cp, rs)?);
    let flags = PropernessFlags {
        tildebar1,
        tildebar2,
        bar_s,
        futaki_vanishes,
        torus_degenerate: rs.positive_roots.is_empty(),
    };
    let verdict = if tildebar1 && tildebar2 && bar_s && futaki_vanishes {
        PropernessVerdict::Proper
    } else {
        PropernessVerdict::Inconclusive
    };
    Ok((flags, verdict))
}
