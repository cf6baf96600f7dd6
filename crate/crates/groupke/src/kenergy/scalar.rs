//! Pointwise scalar curvature of a smooth candidate and the Q
//! diagnostic of the Guillemin potential, each via two independent
//! algebraic routes.

use crate::linalg::{self, to_f64};
use crate::polytope::ChamberPolytope;
use crate::rootdata::RootSystem;

use super::candidate::{inverse_pd, SmoothCandidate};
use super::chi::ChiFunction;
use super::{KEnergyError, QuadConfig};

/// The five groups of terms in the scalar-curvature formula
/// S = -u^{ij}_{,ij} - 2u^{ij}_{,j} pi_{,i}/pi - u^{ij} pi_{,ij}/pi
///     - u_{,ik} (d2chi)_{ik}|_{grad u} - (dchi)_i|_{grad u} pi_{,i}/pi.
#[derive(Debug, Clone, Copy)]
pub struct ScalarTerms {
    /// -u^{ij}_{,ij} (the Abreu expression).
    pub abreu: f64,
    /// -2 u^{ij}_{,j} pi_{,i}/pi.
    pub pi_first: f64,
    /// -u^{ij} pi_{,ij}/pi.
    pub pi_second: f64,
    /// -u_{,ik} (d2 chi)_{ik} at grad u.
    pub chi_second: f64,
    /// -(d chi)_i at grad u times pi_{,i}/pi.
    pub chi_first: f64,
}

impl ScalarTerms {
    pub fn total(&self) -> f64 {
        self.abreu + self.pi_first + self.pi_second + self.chi_second + self.chi_first
    }
}

/// Logarithmic derivatives of pi: (pi_{,i}/pi) and (pi_{,ij}/pi).
/// With pi = prod (c_alpha . y)^2 and c_alpha = G alpha:
///   pi_{,i}/pi = 2 sum c_i / (c.y),
///   pi_{,ij}/pi = (pi_{,i}/pi)(pi_{,j}/pi) - 2 sum c_i c_j / (c.y)^2.
fn pi_log_derivs(rs: &RootSystem, y: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let r = y.len();
    let mut d1 = vec![0.0; r];
    let mut corr = vec![vec![0.0; r]; r];
    for alpha in &rs.positive_roots {
        let c = linalg::vec_to_f64(&rs.gram.matvec(alpha));
        let a: f64 = c.iter().zip(y).map(|(ci, yi)| ci * yi).sum();
        for i in 0..r {
            d1[i] += 2.0 * c[i] / a;
            for j in 0..r {
                corr[i][j] += 2.0 * c[i] * c[j] / (a * a);
            }
        }
    }
    let mut d2 = vec![vec![0.0; r]; r];
    for i in 0..r {
        for j in 0..r {
            d2[i][j] = d1[i] * d1[j] - corr[i][j];
        }
    }
    (d1, d2)
}

/// Distance of y to the nearest Weyl wall or outer facet.
fn boundary_distance(cp: &ChamberPolytope, y: &[f64]) -> f64 {
    let mut dist = f64::INFINITY;
    for c in &cp.wall_covectors {
        let cf = linalg::vec_to_f64(c);
        let norm = cf.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v: f64 = cf.iter().zip(y).map(|(ci, yi)| ci * yi).sum();
        dist = dist.min(v.abs() / norm);
    }
    for f in &cp.outer_facets {
        let uf = linalg::vec_to_f64(&f.u);
        let norm = uf.iter().map(|x| x * x).sum::<f64>().sqrt();
        let l = to_f64(&f.lambda) - uf.iter().zip(y).map(|(ui, yi)| ui * yi).sum::<f64>();
        dist = dist.min(l.abs() / norm);
    }
    dist
}

fn check_margin(cp: &ChamberPolytope, cfg: &QuadConfig, y: &[f64]) -> Result<(), KEnergyError> {
    let vs: Vec<Vec<f64>> = cp.parent.vertices.iter().map(|v| linalg::vec_to_f64(v)).collect();
    let mut diam: f64 = 0.0;
    for (i, a) in vs.iter().enumerate() {
        for b in &vs[i + 1..] {
            let d = a.iter().zip(b).map(|(x, z)| (x - z) * (x - z)).sum::<f64>().sqrt();
            diam = diam.max(d);
        }
    }
    if boundary_distance(cp, y) < cfg.wall_margin_rel * diam {
        return Err(KEnergyError::WallTooClose);
    }
    Ok(())
}

/// Scalar curvature at an interior point, split into its term groups.
pub fn scalar_curvature_terms(
    cp: &ChamberPolytope,
    rs: &RootSystem,
    u: &SmoothCandidate,
    y: &[f64],
    cfg: &QuadConfig,
) -> Result<ScalarTerms, KEnergyError> {
    check_margin(cp, cfg, y)?;
    let r = y.len();
    let h = u.hess(y);
    let Some(inv) = inverse_pd(&h) else {
        return Err(KEnergyError::SingularHessian);
    };
    let d3 = u.d3(y);
    let d4 = u.d4(y);

    // A_{,k}[p][q] = d3[p][q][k]; d(A^{-1})/dy_k = -inv A_{,k} inv
    let mut dinv = vec![vec![vec![0.0; r]; r]; r]; // dinv[k][i][j]
    for k in 0..r {
        for i in 0..r {
            for j in 0..r {
                let mut s = 0.0;
                for p in 0..r {
                    for q in 0..r {
                        s += inv[i][p] * d3[p][q][k] * inv[q][j];
                    }
                }
                dinv[k][i][j] = -s;
            }
        }
    }
    // u^{ij}_{,j}, as a vector over i
    let mut div_inv = vec![0.0; r];
    for i in 0..r {
        for j in 0..r {
            div_inv[i] += dinv[j][i][j];
        }
    }
    // u^{ij}_{,ij} = sum_{ij} [ inv A_i inv A_j inv + inv A_j inv A_i inv
    //                           - inv A_{ij} inv ]_{ij}
    let mut abreu = 0.0;
    for i in 0..r {
        for j in 0..r {
            // [d_i d_j A^{-1}]_{ij}
            let mut s = 0.0;
            for p in 0..r {
                for q in 0..r {
                    // -inv A_{ij} inv
                    s -= inv[i][p] * d4[p][q][i][j] * inv[q][j];
                    // -(d_i inv) A_j inv - inv A_j (d_i inv) gives the
                    // two product terms; expand via dinv for clarity
                    s -= dinv[i][i][p] * d3[p][q][j] * inv[q][j];
                    s -= inv[i][p] * d3[p][q][j] * dinv[i][q][j];
                }
            }
            abreu -= s; // term is -u^{ij}_{,ij}
        }
    }

    let (pi1, pi2) = if rs.positive_roots.is_empty() {
        (vec![0.0; r], vec![vec![0.0; r]; r])
    } else {
        pi_log_derivs(rs, y)
    };
    let mut pi_first = 0.0;
    let mut pi_second = 0.0;
    for i in 0..r {
        pi_first -= 2.0 * div_inv[i] * pi1[i];
        for j in 0..r {
            pi_second -= inv[i][j] * pi2[i][j];
        }
    }

    let (chi_second, chi_first) = if rs.positive_roots.is_empty() {
        (0.0, 0.0)
    } else {
        let chi = ChiFunction::new(rs);
        let x = u.grad(y);
        if !chi.in_chamber(&x) {
            return Err(KEnergyError::WallTooClose);
        }
        let cg = chi.grad(&x);
        let ch = chi.hess(&x);
        let mut second = 0.0;
        let mut first = 0.0;
        for i in 0..r {
            first -= cg[i] * pi1[i];
            for k in 0..r {
                second -= h[i][k] * ch[i][k];
            }
        }
        (second, first)
    };

    Ok(ScalarTerms { abreu, pi_first, pi_second, chi_second, chi_first })
}

/// Scalar curvature S at an interior point.
pub fn scalar_curvature_at(
    cp: &ChamberPolytope,
    rs: &RootSystem,
    u: &SmoothCandidate,
    y: &[f64],
    cfg: &QuadConfig,
) -> Result<f64, KEnergyError> {
    scalar_curvature_terms(cp, rs, u, y, cfg).map(|t| t.total())
}

/// Q at y via the contracted formula
/// Q = -(dchi)_i|_{grad u0} pi_{,i}/pi - (d2chi)_{ik}|_{grad u0} u_{0,ik}
///     - u_0^{ij} pi_{,ij}/pi.
pub fn q_diagnostic(
    cp: &ChamberPolytope,
    rs: &RootSystem,
    y: &[f64],
    cfg: &QuadConfig,
) -> Result<f64, KEnergyError> {
    check_margin(cp, cfg, y)?;
    if rs.positive_roots.is_empty() {
        return Ok(0.0);
    }
    let u0 = SmoothCandidate::guillemin(&cp.parent);
    let h = u0.hess(y);
    let Some(inv) = inverse_pd(&h) else {
        return Err(KEnergyError::SingularHessian);
    };
    let chi = ChiFunction::new(rs);
    let x = u0.grad(y);
    if !chi.in_chamber(&x) {
        return Err(KEnergyError::WallTooClose);
    }
    let cg = chi.grad(&x);
    let ch = chi.hess(&x);
    let (pi1, pi2) = pi_log_derivs(rs, y);
    let r = y.len();
    let mut q = 0.0;
    for i in 0..r {
        q -= cg[i] * pi1[i];
        for k in 0..r {
            q -= ch[i][k] * h[i][k];
            q -= inv[i][k] * pi2[i][k];
        }
    }
    Ok(q)
}

/// Q at y via the expanded per-root form (the I_alpha and I_{alpha,beta}
/// terms), an algebraically independent route.
pub fn q_diagnostic_expanded(
    cp: &ChamberPolytope,
    rs: &RootSystem,
    y: &[f64],
    cfg: &QuadConfig,
) -> Result<f64, KEnergyError> {
    check_margin(cp, cfg, y)?;
    if rs.positive_roots.is_empty() {
        return Ok(0.0);
    }
    let u0 = SmoothCandidate::guillemin(&cp.parent);
    let h = u0.hess(y);
    let Some(inv) = inverse_pd(&h) else {
        return Err(KEnergyError::SingularHessian);
    };
    let x = u0.grad(y);
    let r = y.len();
    let roots: Vec<(Vec<f64>, Vec<f64>, f64, f64)> = rs
        .positive_roots
        .iter()
        .map(|alpha| {
            let aw = linalg::vec_to_f64(alpha); // weight coordinates
            let cg = linalg::vec_to_f64(&rs.gram.matvec(alpha)); // G alpha
            let pair_x: f64 = aw.iter().zip(&x).map(|(ai, xi)| ai * xi).sum();
            let of_y: f64 = cg.iter().zip(y).map(|(ci, yi)| ci * yi).sum();
            (aw, cg, pair_x, of_y)
        })
        .collect();
    if roots.iter().any(|(_, _, px, oy)| *px <= 0.0 || *oy == 0.0) {
        return Err(KEnergyError::WallTooClose);
    }
    let contract = |m: &[Vec<f64>], a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..r {
            for j in 0..r {
                s += m[i][j] * a[i] * b[j];
            }
        }
        s
    };
    let mut q = 0.0;
    for (aw, cg, px, oy) in &roots {
        let norm_sq: f64 = aw.iter().zip(cg).map(|(ai, ci)| ai * ci).sum();
        q += 4.0 * norm_sq / (px.tanh() * oy);
        q -= 2.0 * contract(&h, aw, aw) / px.sinh().powi(2);
        q -= 2.0 * contract(&inv, cg, cg) / (oy * oy);
    }
    for (i, (aw, cga, pxa, oya)) in roots.iter().enumerate() {
        for (j, (_bw, cgb, pxb, oyb)) in roots.iter().enumerate() {
            if i == j {
                continue;
            }
            let ab: f64 = aw.iter().zip(cgb).map(|(ai, ci)| ai * ci).sum();
            q += 2.0 * (ab / (pxa.tanh() * oyb) + ab / (pxb.tanh() * oya));
            q -= 4.0 * contract(&inv, cga, cgb) / (oya * oyb);
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{qi, qr, qvec, QMat};
    use crate::poly::Polynomial;
    use crate::polytope::{restrict_to_chamber, Facet, Polytope};
    use crate::rootdata::{RootSystem, DEFAULT_WEYL_CAP};

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

    fn quadric() -> (RootSystem, ChamberPolytope) {
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
        (rs, cp)
    }

    fn half_norm_sq(dim: usize) -> Polynomial {
        let mut p = Polynomial::zero(dim);
        for i in 0..dim {
            let v = Polynomial::var(dim, i);
            p = p.add(&v.mul(&v).scale(&qr(1, 2)));
        }
        p
    }

    #[test]
    fn flat_toric_metric_has_zero_scalar_curvature() {
        let (rs, cp) = torus_square();
        let u = SmoothCandidate::pure_poly(&half_norm_sq(2));
        let cfg = QuadConfig::default();
        for y in [[0.1, 0.2], [-1.0, 0.5], [1.5, -1.5]] {
            let t = scalar_curvature_terms(&cp, &rs, &u, &y, &cfg).unwrap();
            assert_eq!(t.abreu, 0.0);
            // chi and pi groups are identically zero in the toric case
            assert_eq!(t.pi_first, 0.0);
            assert_eq!(t.pi_second, 0.0);
            assert_eq!(t.chi_first, 0.0);
            assert_eq!(t.chi_second, 0.0);
            assert_eq!(t.total(), 0.0);
        }
    }

    #[test]
    fn toric_scalar_curvature_is_pure_abreu() {
        // with a non-quadratic candidate, S still equals -sum u^{ij}_{,ij}
        let (rs, cp) = torus_square();
        let x4 = Polynomial::var(2, 0);
        let quartic = x4.mul(&x4).mul(&x4).mul(&x4).scale(&qr(1, 100));
        let u = SmoothCandidate::pure_poly(&half_norm_sq(2).add(&quartic));
        let t = scalar_curvature_terms(&cp, &rs, &u, &[0.7, -0.3], &QuadConfig::default())
            .unwrap();
        assert_eq!(t.pi_first + t.pi_second + t.chi_first + t.chi_second, 0.0);
        assert!(t.abreu != 0.0);
        assert!((t.total() - t.abreu).abs() < 1e-15);
    }

    #[test]
    fn abreu_term_matches_finite_differences() {
        // cross-check the inverse-matrix derivative assembly against a
        // nested finite-difference evaluation of u^{ij}_{,ij}
        let (rs, cp) = torus_square();
        let x = Polynomial::var(2, 0);
        let ymon = Polynomial::var(2, 1);
        let mix = x.mul(&x).mul(&ymon).mul(&ymon).scale(&qr(1, 50));
        let u = SmoothCandidate::pure_poly(&half_norm_sq(2).add(&mix));
        let y0 = [0.4, -0.6];
        let t = scalar_curvature_terms(&cp, &rs, &u, &y0, &QuadConfig::default()).unwrap();
        let h = 1e-4;
        let invij = |y: &[f64]| inverse_pd(&u.hess(y)).unwrap();
        let mut fd = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut ypp = y0.to_vec();
                let mut ypm = y0.to_vec();
                let mut ymp = y0.to_vec();
                let mut ymm = y0.to_vec();
                ypp[i] += h;
                ypp[j] += h;
                ypm[i] += h;
                ypm[j] -= h;
                ymp[i] -= h;
                ymp[j] += h;
                ymm[i] -= h;
                ymm[j] -= h;
                fd += (invij(&ypp)[i][j] - invij(&ypm)[i][j] - invij(&ymp)[i][j]
                    + invij(&ymm)[i][j])
                    / (4.0 * h * h);
            }
        }
        assert!((t.abreu + fd).abs() < 1e-5, "{} vs {}", t.abreu, -fd);
    }

    #[test]
    fn q_routes_agree_on_the_quadric() {
        let (rs, cp) = quadric();
        let cfg = QuadConfig::default();
        for y in [[3.0], [1.0], [5.0], [0.25]] {
            let a = q_diagnostic(&cp, &rs, &y, &cfg).unwrap();
            let b = q_diagnostic_expanded(&cp, &rs, &y, &cfg).unwrap();
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{a} vs {b} at {y:?}");
        }
    }

    #[test]
    fn q_near_wall_stays_integrable() {
        // |Q(eps)| * eps bounded as eps -> 0 (Q has at most a first-order pole)
        let (rs, cp) = quadric();
        let cfg = QuadConfig::default();
        let samples: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| q_diagnostic(&cp, &rs, &[e], &cfg).unwrap().abs() * e)
            .collect();
        let bound = samples[0].max(1.0) * 10.0;
        assert!(samples.iter().all(|s| *s < bound), "{samples:?}");
    }

    #[test]
    fn wall_margin_is_enforced() {
        let (rs, cp) = quadric();
        let cfg = QuadConfig { wall_margin_rel: 1e-3, ..Default::default() };
        assert!(matches!(
            q_diagnostic(&cp, &rs, &[1e-6], &cfg),
            Err(KEnergyError::WallTooClose)
        ));
        assert!(matches!(
            scalar_curvature_at(&cp, &rs, &SmoothCandidate::guillemin(&cp.parent), &[5.9999], &cfg),
            Err(KEnergyError::WallTooClose)
        ));
    }

    #[test]
    fn quadric_scalar_curvature_matches_legendre_route() {
        // Independent oracle: pointwise Legendre transform to psi(x),
        // then the radial Ricci route
        //   S = -tr(Hess(psi)^{-1} Hess(psi~))
        //       - 2 sum_alpha <alpha, grad psi~>/<alpha, grad psi>
        // with psi~ = log det Hess(psi) + 2 sum log alpha(grad psi) + chi(x);
        // the minus is Ric = -Hess(log det ...) and the factor 2 is the
        // pair of complex coordinates each positive root contributes.
        // All derivatives of psi~ are central finite differences in x.
        let (rs, cp) = quadric();
        let cfg = QuadConfig::default();
        let quad = Polynomial::var(1, 0).mul(&Polynomial::var(1, 0)).scale(&qr(1, 40));
        let u = SmoothCandidate::from_parts(
            1,
            Some(super::super::guillemin::GuilleminFunction::new(&cp.parent)),
            &quad,
        );
        let chi = ChiFunction::new(&rs);
        let galpha = to_f64(rs.gram.matvec(&rs.positive_roots[0]).first().unwrap());
        // invert grad u by bisection/Newton: find y with u'(y) = x
        let solve_y = |x: f64| -> f64 {
            let mut y = 0.0f64;
            for _ in 0..200 {
                let g = u.grad(&[y])[0] - x;
                let h = u.hess(&[y])[0][0];
                let step = g / h;
                y -= step.clamp(-0.5, 0.5);
                y = y.clamp(-5.9999, 5.9999);
            }
            y
        };
        let psi_tilde = |x: f64| -> f64 {
            let ystar = solve_y(x);
            // Hess psi = (Hess u)^{-1} at y*
            let hpsi = 1.0 / u.hess(&[ystar])[0][0];
            hpsi.ln() + 2.0 * (galpha * ystar).ln() + chi.value(&[x])
        };
        for ystar in [1.0, 2.0, 3.0, 4.0, 4.5] {
            let x = u.grad(&[ystar])[0];
            let h = 1e-4;
            let d1 = (psi_tilde(x + h) - psi_tilde(x - h)) / (2.0 * h);
            let d2 = (psi_tilde(x + h) - 2.0 * psi_tilde(x) + psi_tilde(x - h)) / (h * h);
            let hpsi = 1.0 / u.hess(&[ystar])[0][0];
            let oracle = -d2 / hpsi - 2.0 * (galpha * d1) / (galpha * ystar);
            let s = scalar_curvature_at(&cp, &rs, &u, &[ystar], &cfg).unwrap();
            let rel = (s - oracle).abs() / s.abs().max(1.0);
            assert!(rel < 1e-4, "y={ystar}: {s} vs {oracle}");
        }
    }
}
